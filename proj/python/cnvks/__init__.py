"""Kernel-aggregated marker-level CNV association testing.

The heavy lifting lives in the compiled `_core` extension; this package just
re-exports its surface.
"""

from ._core import (
    CnvksError,
    MarkerTrack,
    NullDistribution,
    Phenotype,
    ScanResult,
    aggregate,
    global_p,
    load_phenotype,
    load_track,
    monte_carlo_null,
    permutation_null,
    run_marker_tests,
    scan,
    simulate_dataset,
    threshold,
    write_track,
)

__all__ = [
    "CnvksError",
    "MarkerTrack",
    "NullDistribution",
    "Phenotype",
    "ScanResult",
    "aggregate",
    "global_p",
    "load_phenotype",
    "load_track",
    "monte_carlo_null",
    "permutation_null",
    "run_marker_tests",
    "scan",
    "simulate_dataset",
    "threshold",
    "write_track",
]
