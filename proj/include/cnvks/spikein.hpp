#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cnvks/genomic_data.hpp"
#include "cnvks/significance.hpp"

namespace cnvks::sim {

enum class NoiseModel { gaussian, student_t, skew, file };

struct NoiseSpec {
  NoiseModel model = NoiseModel::gaussian;
  int student_df = 3;         // integer df >= 3 keeps the variance finite
  std::string residual_path;  // NoiseModel::file
};

enum class SpacingModel { equal, from_file };

struct SpacingSpec {
  SpacingModel model = SpacingModel::equal;
  std::int64_t spacing_bp = 1500;
  std::string locations_path;  // SpacingModel::from_file
};

/// Spike-in design: a contiguous CNV carried by a Bernoulli(gamma) fraction
/// of subjects, an SNR-scaled intensity shift over the spanned markers, and
/// a phenotype whose distribution depends only on carrier status.
struct SimScenario {
  std::size_t n = 1000;
  std::size_t J = 200;
  std::size_t cnv_markers = 30;
  std::optional<std::size_t> cnv_offset;  // first spanned marker; default centered
  double gamma = 0.1;
  double snr = 0.8;
  double effect = 0.4;
  PhenotypeKind phenotype_kind = PhenotypeKind::continuous;
  double case_fraction = 0.5;  // binary arm only
  NoiseSpec noise;
  SpacingSpec spacing;

  void validate() const;
  std::size_t cnv_begin() const;  // inclusive marker index
  std::size_t cnv_end() const;    // exclusive marker index
};

struct NoiseMatrix {
  std::vector<double> data;   // column-major n x J, like MarkerTrack
  std::vector<double> sigma;  // per-marker noise scale
};

struct Cohort {
  std::vector<std::uint8_t> carrier;
  Phenotype phen;
};

struct SimDataset {
  MarkerTrack track;
  Phenotype phen;
  std::vector<std::uint8_t> carrier;
  std::size_t cnv_begin = 0;
  std::size_t cnv_end = 0;
};

/// Residual matrix plus the scale of each marker's measurement error. In
/// file mode, J distinct columns of the user-supplied residual matrix are
/// drawn per dataset and each subject copies a randomly chosen row.
NoiseMatrix sample_noise(const SimScenario& scenario, std::uint64_t seed);

/// Carrier indicators z_i ~ Bernoulli(gamma) and the conditional phenotype:
/// continuous y|z ~ Normal(effect*z, 1); binary y|z ~ Bernoulli of a logistic
/// carrier risk calibrated to hit `case_fraction` marginally.
Cohort generate_cohort(const SimScenario& scenario, std::uint64_t seed);

/// Full dataset: noise + carrier signal, so that
///   intensity(i, j) = residual(i, j) + z_i * snr * sigma_j   for spanned j.
SimDataset build_dataset(const SimScenario& scenario, std::uint64_t seed);

/// Bandwidth policy for simulation studies. `matched` resolves per dataset
/// to k = CNV marker count (constant marker) or h = half the CNV's base-pair
/// span (constant width); matching the unknown CNV is the power ceiling, not
/// something achievable in practice.
enum class BandwidthSetting { markers, width, matched_markers, matched_width };

struct MethodConfig {
  KernelShape shape = KernelShape::flat;
  BandwidthSetting bandwidth = BandwidthSetting::matched_markers;
  std::size_t k = 0;
  double width_bp = 0.0;
  TransformSpec transform{TransformKind::z, true};
  NullMethod null_method = NullMethod::permutation;
  std::size_t B = 1000;
  double alpha = 0.05;

  KernelSpec resolve_kernel(const SimDataset& dataset) const;
};

struct TrialResult {
  bool rejected = false;
  double global_p = 1.0;
};

/// One simulated dataset pushed through the configured scan.
TrialResult run_trial(const SimScenario& scenario, const MethodConfig& method,
                      std::uint64_t seed);

struct PowerCell {
  SimScenario scenario;
  MethodConfig method;
  double power = 0.0;
  double se = 0.0;
  std::size_t replicates = 0;
  std::string error;  // first failure, empty when the cell completed
};

using PowerGrid = std::vector<std::pair<SimScenario, MethodConfig>>;

/// Rejection rate with binomial standard error per grid cell. Each trial's
/// stream is keyed by (master seed, cell index, replicate), so any cell is
/// reproducible in isolation and results do not depend on scheduling.
std::vector<PowerCell> power_study(const PowerGrid& grid, std::size_t replicates,
                                   std::uint64_t master_seed, int workers = 1);

/// Error-rate harness covering the two ways the global null can hold:
/// no CNV at all, and a CNV present but unlinked to the phenotype. Each
/// replicate is evaluated by both the permutation and the Monte Carlo null.
struct NullCheckConfig {
  SimScenario base;           // geometry and noise; gamma/snr/effect overridden
  double no_assoc_gamma = 0.5;
  double no_assoc_snr = 1.6;  // deliberately strong coupling between markers
  MethodConfig method;
  std::size_t replicates = 500;
};

struct NullCheckSetting {
  std::string name;            // "no_cnv" or "no_association"
  std::vector<double> p_perm;  // per-replicate global p-values
  std::vector<double> p_mc;
  double rate_perm = 0.0, se_perm = 0.0;
  double rate_mc = 0.0, se_mc = 0.0;
};

std::vector<NullCheckSetting> null_check_study(const NullCheckConfig& config,
                                               std::uint64_t seed, int workers = 1);

/// key = value scenario/method parsing ('#' comments, unknown keys rejected).
/// Returns leftover study-level keys (e.g. replicates) via `extras`.
std::pair<SimScenario, MethodConfig> parse_scenario_config(
    const std::map<std::string, std::string>& keys);

std::map<std::string, std::string> read_config_file(const std::string& path);

/// Grid file: same schema, but selected keys accept comma-separated lists
/// that expand into the cartesian product of cells.
struct GridFile {
  PowerGrid cells;
  std::size_t replicates = 200;
};

GridFile parse_grid_file(const std::string& path);

/// Scenario file convenience wrapper; `replicates` key is permitted and
/// returned alongside.
struct ScenarioFile {
  SimScenario scenario;
  MethodConfig method;
  std::size_t replicates = 1;
};

ScenarioFile parse_scenario_file(const std::string& path);

}  // namespace cnvks::sim
