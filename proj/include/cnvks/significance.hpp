#pragma once

#include <cstdint>
#include <vector>

#include "cnvks/genomic_data.hpp"
#include "cnvks/kernel_agg.hpp"

namespace cnvks {

enum class NullMethod { permutation, monte_carlo };

/// Empirical null distribution of the scan maximum.
struct NullDistribution {
  std::vector<double> draws;  // sorted ascending
  NullMethod method = NullMethod::permutation;
  std::uint64_t seed = 0;
  bool exhaustive = false;

  std::size_t B() const { return draws.size(); }
};

struct ScanResult {
  AggregationProfile profile;
  NullDistribution null;
  double observed_t_max = 0.0;
  double global_p = 0.0;
  double threshold = 0.0;
  double alpha = 0.0;
  std::vector<std::size_t> significant_markers;
};

/// Null draws of the scan maximum obtained by rerunning every marker test
/// against freshly permuted phenotypes while the intensity matrix, and with
/// it the correlation structure across markers, stays fixed. Permutation b
/// comes from its own (seed, b)-keyed stream, so the draw vector is
/// bit-identical for any worker count.
NullDistribution permutation_null(const MarkerTrack& track, const Phenotype& phen,
                                  const KernelSpec& kspec, const TransformSpec& tspec,
                                  std::size_t B, std::uint64_t seed, int workers = 1);

/// All n! phenotype orderings, enumerated once each (n <= 8).
NullDistribution exhaustive_permutation_null(const MarkerTrack& track,
                                             const Phenotype& phen,
                                             const KernelSpec& kspec,
                                             const TransformSpec& tspec,
                                             int workers = 1);

/// Null draws assuming independent Uniform(0,1) marker p-values on the given
/// geometry (signs equiprobable when the transform is signed). Valid only
/// when the marker tests really are independent; kept as the diagnostic
/// comparator that the permutation approach corrects.
NullDistribution monte_carlo_null(const std::vector<std::int64_t>& locations,
                                  const KernelSpec& kspec, const TransformSpec& tspec,
                                  std::size_t B, std::uint64_t seed, int workers = 1);

/// Add-one permutation p-value, (1 + #{draws >= t}) / (B + 1); always in
/// (0, 1].
double global_p(double t_max_value, const NullDistribution& null);

/// Empirical (1 - alpha) quantile of the draws: the order statistic of rank
/// ceil((1-alpha)(B+1)), clipped to [1, B].
double threshold(const NullDistribution& null, double alpha);

/// Full scan: observed pipeline, permutation null, global p-value, per-marker
/// significance calls at the FWER threshold.
ScanResult scan(const MarkerTrack& track, const Phenotype& phen,
                const KernelSpec& kspec, const TransformSpec& tspec, std::size_t B,
                double alpha, std::uint64_t seed, int workers = 1,
                bool exhaustive = false);

}  // namespace cnvks
