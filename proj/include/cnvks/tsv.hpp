#pragma once

#include <string>
#include <utility>
#include <vector>

#include "cnvks/significance.hpp"
#include "cnvks/spikein.hpp"

namespace cnvks::tsv {

using Metadata = std::vector<std::pair<std::string, std::string>>;

/// Shortest round-trip decimal representation; keeps reruns byte-identical
/// and files losslessly reloadable.
std::string format_double(double v);

/// `marker_id<TAB>position<TAB>p<TAB>s`; the s column is blank for unsigned
/// test tracks.
void write_marker_tests(const std::string& path, const Metadata& meta,
                        const MarkerTrack& track, const MarkerTestTrack& tests);

/// `position<TAB>T<TAB>valid`.
void write_profile(const std::string& path, const Metadata& meta,
                   const AggregationProfile& profile);

/// Profile columns plus the FWER threshold and per-marker significance flag.
void write_scan(const std::string& path, const Metadata& meta,
                const ScanResult& result);

/// One draw per line; method, draw count and seed go into the header comment.
void write_null_draws(const std::string& path, const Metadata& meta,
                      const NullDistribution& null);

/// `t_max<TAB>global_p<TAB>alpha<TAB>threshold`.
void write_scan_summary(const std::string& path, const Metadata& meta,
                        const ScanResult& result);

void write_null_check(const std::string& path, const Metadata& meta,
                      const std::vector<sim::NullCheckSetting>& settings);

/// One row per grid cell: every scenario/method key, then power, se,
/// replicates and the error column.
void write_power_table(const std::string& path, const Metadata& meta,
                       const std::vector<sim::PowerCell>& cells);

/// Per-subject carrier truth for a simulated dataset; the CNV span goes into
/// the metadata header.
void write_truth(const std::string& path, const Metadata& meta,
                 const sim::SimDataset& dataset);

void write_phenotype(const std::string& path, const Phenotype& phen);

}  // namespace cnvks::tsv
