// cnvks: marker-level CNV association scans with kernel aggregation and
// permutation-based FWER control, plus the spike-in simulation harness.
//
// Exit codes: 0 success, 2 invalid options or configuration, 3 data or
// computation errors. Progress goes to stderr; stdout carries only the
// command's summary lines.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "cnvks/errors.hpp"
#include "cnvks/parallel.hpp"
#include "cnvks/significance.hpp"
#include "cnvks/spikein.hpp"
#include "cnvks/tsv.hpp"

namespace fs = std::filesystem;
using namespace cnvks;

namespace {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Collects files created by a command so a failing run leaves no partial
/// outputs behind.
class OutputDir {
 public:
  explicit OutputDir(const std::string& dir) : dir_(dir) {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) throw ConfigError("cannot create output directory '" + dir + "'");
  }

  std::string file(const std::string& name) {
    const fs::path p = dir_ / name;
    created_.push_back(p);
    return p.string();
  }

  void discard_partial() {
    for (const auto& p : created_) {
      std::error_code ec;
      fs::remove(p, ec);
    }
  }

 private:
  fs::path dir_;
  std::vector<fs::path> created_;
};

struct CommonOptions {
  std::string kernel = "flat";
  std::optional<std::size_t> bandwidth_markers;
  std::optional<double> bandwidth_bp;
  std::string transform = "z";
  bool is_signed = true;
  double alpha = 0.05;
  std::size_t permutations = 1000;
  std::uint64_t seed = 1;
  int workers = 0;
  std::string out_dir = "cnvks_out";
};

void add_method_flags(CLI::App* cmd, CommonOptions& opt, bool with_bandwidth) {
  cmd->add_option("--kernel", opt.kernel, "Kernel shape")
      ->check(CLI::IsMember({"flat", "epanechnikov"}));
  if (with_bandwidth) {
    cmd->add_option("--bandwidth-markers", opt.bandwidth_markers,
                    "Constant-marker bandwidth: k nearest markers");
    cmd->add_option("--bandwidth-bp", opt.bandwidth_bp,
                    "Constant-width bandwidth in base pairs");
  }
  cmd->add_option("--transform", opt.transform, "p-value transformation")
      ->check(CLI::IsMember({"p", "z", "log"}));
  cmd->add_flag("--signed,!--unsigned", opt.is_signed,
                "Use the direction of association (default: signed)");
  cmd->add_option("--alpha", opt.alpha, "FWER level")->capture_default_str();
  cmd->add_option("--permutations", opt.permutations, "Null draws B")
      ->capture_default_str();
}

void add_run_flags(CLI::App* cmd, CommonOptions& opt) {
  cmd->add_option("--seed", opt.seed, "RNG seed")->capture_default_str();
  cmd->add_option("--workers", opt.workers,
                  "Worker threads (0 = CNVKS_WORKERS or all cores)")
      ->capture_default_str();
  cmd->add_option("--out", opt.out_dir, "Output directory")->capture_default_str();
}

int resolve_cli_workers(int flag_value) {
  if (flag_value >= 1) return flag_value;
  if (const char* env = std::getenv("CNVKS_WORKERS")) {
    const int parsed = std::atoi(env);
    if (parsed >= 1) return parsed;
  }
  return resolve_workers(0);
}

KernelShape parse_shape(const std::string& name) {
  return name == "flat" ? KernelShape::flat : KernelShape::epanechnikov;
}

TransformSpec parse_transform(const CommonOptions& opt) {
  TransformSpec spec;
  spec.is_signed = opt.is_signed;
  if (opt.transform == "p") {
    spec.kind = TransformKind::p;
  } else if (opt.transform == "z") {
    spec.kind = TransformKind::z;
  } else {
    spec.kind = TransformKind::log;
  }
  return spec;
}

KernelSpec parse_kernel(const CommonOptions& opt, bool required) {
  const bool has_k = opt.bandwidth_markers.has_value();
  const bool has_h = opt.bandwidth_bp.has_value();
  if (has_k && has_h) {
    throw ConfigError("use exactly one of --bandwidth-markers and --bandwidth-bp");
  }
  if (!has_k && !has_h) {
    if (required) {
      throw ConfigError("one of --bandwidth-markers or --bandwidth-bp is required");
    }
    return KernelSpec::constant_marker(parse_shape(opt.kernel), 30);
  }
  if (has_k) {
    if (*opt.bandwidth_markers < 1) throw ConfigError("--bandwidth-markers must be >= 1");
    return KernelSpec::constant_marker(parse_shape(opt.kernel), *opt.bandwidth_markers);
  }
  if (!(*opt.bandwidth_bp > 0.0)) throw ConfigError("--bandwidth-bp must be positive");
  return KernelSpec::constant_width(parse_shape(opt.kernel), *opt.bandwidth_bp);
}

void validate_common(const CommonOptions& opt) {
  if (!(opt.alpha > 0.0 && opt.alpha < 1.0)) {
    throw ConfigError("--alpha must be in (0,1)");
  }
  if (opt.permutations < 1) throw ConfigError("--permutations must be >= 1");
}

tsv::Metadata base_metadata(const std::string& command, const CommonOptions& opt,
                            const KernelSpec& kspec, const TransformSpec& tspec) {
  tsv::Metadata meta;
  meta.emplace_back("command", command);
  meta.emplace_back("kernel", to_string(kspec.shape));
  if (kspec.mode == BandwidthMode::constant_marker) {
    meta.emplace_back("bandwidth_markers", std::to_string(kspec.k));
  } else {
    meta.emplace_back("bandwidth_bp", tsv::format_double(kspec.width_bp));
  }
  meta.emplace_back("transform", to_string(tspec.kind));
  meta.emplace_back("signed", tspec.is_signed ? "true" : "false");
  meta.emplace_back("alpha", tsv::format_double(opt.alpha));
  meta.emplace_back("permutations", std::to_string(opt.permutations));
  meta.emplace_back("seed", std::to_string(opt.seed));
  return meta;
}

// ---------------------------------------------------------------------------
// scan
// ---------------------------------------------------------------------------

struct ScanOptions {
  CommonOptions common;
  std::string intensity_path;
  std::string location_path;
  std::string phenotype_path;
  std::string phenotype_kind = "continuous";
  bool exhaustive = false;
};

int cmd_scan(const ScanOptions& opt) {
  validate_common(opt.common);
  const KernelSpec kspec = parse_kernel(opt.common, /*required=*/true);
  const TransformSpec tspec = parse_transform(opt.common);
  const int workers = resolve_cli_workers(opt.common.workers);

  const MarkerTrack track =
      opt.location_path.empty()
          ? load_track(opt.intensity_path)
          : load_track(opt.intensity_path, opt.location_path);
  const PhenotypeKind kind = opt.phenotype_kind == "binary"
                                 ? PhenotypeKind::binary
                                 : PhenotypeKind::continuous;
  const Phenotype phen =
      load_phenotype(opt.phenotype_path, kind, track.n_subjects());

  std::cerr << "scan: " << track.n_subjects() << " subjects x "
            << track.n_markers() << " markers, B=" << opt.common.permutations
            << "\n";
  const ScanResult result =
      scan(track, phen, kspec, tspec, opt.common.permutations, opt.common.alpha,
           opt.common.seed, workers, opt.exhaustive);

  tsv::Metadata meta = base_metadata("scan", opt.common, kspec, tspec);
  meta.emplace_back("intensities", opt.intensity_path);
  if (!opt.location_path.empty()) meta.emplace_back("locations", opt.location_path);
  meta.emplace_back("phenotype", opt.phenotype_path);
  meta.emplace_back("phenotype_kind", opt.phenotype_kind);
  if (opt.exhaustive) meta.emplace_back("exhaustive", "true");

  OutputDir out(opt.common.out_dir);
  try {
    const MarkerTestTrack tests = run_marker_tests(track, phen);
    tsv::write_marker_tests(out.file("marker_tests.tsv"), meta, track, tests);
    tsv::write_profile(out.file("profile.tsv"), meta, result.profile);
    tsv::write_scan(out.file("scan.tsv"), meta, result);
    tsv::write_null_draws(out.file("null_draws.tsv"), meta, result.null);
    tsv::write_scan_summary(out.file("summary.tsv"), meta, result);
  } catch (...) {
    out.discard_partial();
    throw;
  }
  std::cout << tsv::format_double(result.observed_t_max) << '\t'
            << tsv::format_double(result.global_p) << '\n';
  return 0;
}

// ---------------------------------------------------------------------------
// null-check
// ---------------------------------------------------------------------------

struct NullCheckOptions {
  CommonOptions common;
  std::size_t replicates = 500;
  std::size_t n = 200;
  std::size_t markers = 200;
  std::size_t cnv_markers = 30;
  double no_assoc_gamma = 0.5;
  double no_assoc_snr = 1.6;
};

int cmd_null_check(const NullCheckOptions& opt) {
  validate_common(opt.common);
  if (opt.replicates < 1) throw ConfigError("--replicates must be >= 1");
  const KernelSpec kspec = parse_kernel(opt.common, /*required=*/false);
  const TransformSpec tspec = parse_transform(opt.common);
  const int workers = resolve_cli_workers(opt.common.workers);

  sim::NullCheckConfig config;
  config.base.n = opt.n;
  config.base.J = opt.markers;
  config.base.cnv_markers = opt.cnv_markers;
  config.no_assoc_gamma = opt.no_assoc_gamma;
  config.no_assoc_snr = opt.no_assoc_snr;
  config.replicates = opt.replicates;
  config.method.shape = kspec.shape;
  if (kspec.mode == BandwidthMode::constant_marker) {
    config.method.bandwidth = sim::BandwidthSetting::markers;
    config.method.k = kspec.k;
  } else {
    config.method.bandwidth = sim::BandwidthSetting::width;
    config.method.width_bp = kspec.width_bp;
  }
  config.method.transform = tspec;
  config.method.B = opt.common.permutations;
  config.method.alpha = opt.common.alpha;
  try {
    config.base.validate();
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }

  std::cerr << "null-check: " << opt.replicates << " replicates per setting, n="
            << opt.n << ", J=" << opt.markers << ", B=" << opt.common.permutations
            << "\n";
  const auto settings = sim::null_check_study(config, opt.common.seed, workers);

  tsv::Metadata meta = base_metadata("null-check", opt.common, kspec, tspec);
  meta.emplace_back("replicates", std::to_string(opt.replicates));
  meta.emplace_back("n", std::to_string(opt.n));
  meta.emplace_back("markers", std::to_string(opt.markers));
  meta.emplace_back("cnv_markers", std::to_string(opt.cnv_markers));
  meta.emplace_back("no_assoc_gamma", tsv::format_double(opt.no_assoc_gamma));
  meta.emplace_back("no_assoc_snr", tsv::format_double(opt.no_assoc_snr));

  OutputDir out(opt.common.out_dir);
  try {
    tsv::write_null_check(out.file("null_check.tsv"), meta, settings);
  } catch (...) {
    out.discard_partial();
    throw;
  }
  for (const auto& s : settings) {
    std::cout << s.name << "\tpermutation\t" << tsv::format_double(s.rate_perm)
              << "\tmonte_carlo\t" << tsv::format_double(s.rate_mc) << '\n';
  }
  return 0;
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

struct SimulateOptions {
  CommonOptions common;
  std::string scenario_path;
  std::optional<std::size_t> n, markers, cnv_markers;
  std::optional<double> gamma, snr, effect;
};

int cmd_simulate(const SimulateOptions& opt) {
  sim::SimScenario scenario;
  if (!opt.scenario_path.empty()) {
    scenario = sim::parse_scenario_file(opt.scenario_path).scenario;
  }
  if (opt.n) scenario.n = *opt.n;
  if (opt.markers) scenario.J = *opt.markers;
  if (opt.cnv_markers) scenario.cnv_markers = *opt.cnv_markers;
  if (opt.gamma) scenario.gamma = *opt.gamma;
  if (opt.snr) scenario.snr = *opt.snr;
  if (opt.effect) scenario.effect = *opt.effect;
  try {
    scenario.validate();
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }

  const sim::SimDataset dataset = sim::build_dataset(scenario, opt.common.seed);

  tsv::Metadata meta;
  meta.emplace_back("command", "simulate");
  meta.emplace_back("seed", std::to_string(opt.common.seed));
  meta.emplace_back("n", std::to_string(scenario.n));
  meta.emplace_back("markers", std::to_string(scenario.J));
  meta.emplace_back("cnv_markers", std::to_string(scenario.cnv_markers));
  meta.emplace_back("gamma", tsv::format_double(scenario.gamma));
  meta.emplace_back("snr", tsv::format_double(scenario.snr));
  meta.emplace_back("effect", tsv::format_double(scenario.effect));

  OutputDir out(opt.common.out_dir);
  try {
    write_track(dataset.track, out.file("intensities.tsv"));
    tsv::write_phenotype(out.file("phenotype.txt"), dataset.phen);
    tsv::write_truth(out.file("truth.tsv"), meta, dataset);
  } catch (...) {
    out.discard_partial();
    throw;
  }
  std::size_t carriers = 0;
  for (auto z : dataset.carrier) carriers += z;
  std::cout << scenario.n << '\t' << scenario.J << '\t' << carriers << '\n';
  return 0;
}

// ---------------------------------------------------------------------------
// power
// ---------------------------------------------------------------------------

struct PowerOptions {
  CommonOptions common;
  std::string grid_path;
  std::optional<std::size_t> replicates;
};

int cmd_power(const PowerOptions& opt) {
  sim::GridFile grid;
  try {
    grid = sim::parse_grid_file(opt.grid_path);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::InvalidScenario) throw ConfigError(e.what());
    throw;
  }
  if (opt.replicates) grid.replicates = *opt.replicates;
  if (grid.cells.empty()) throw ConfigError("grid file defines no cells");
  if (grid.replicates < 1) throw ConfigError("replicates must be >= 1");
  const int workers = resolve_cli_workers(opt.common.workers);

  std::cerr << "power: " << grid.cells.size() << " cells x " << grid.replicates
            << " replicates\n";
  const auto cells =
      sim::power_study(grid.cells, grid.replicates, opt.common.seed, workers);

  tsv::Metadata meta;
  meta.emplace_back("command", "power");
  meta.emplace_back("grid", opt.grid_path);
  meta.emplace_back("replicates", std::to_string(grid.replicates));
  meta.emplace_back("seed", std::to_string(opt.common.seed));

  OutputDir out(opt.common.out_dir);
  try {
    tsv::write_power_table(out.file("power.tsv"), meta, cells);
  } catch (...) {
    out.discard_partial();
    throw;
  }
  for (const auto& cell : cells) {
    std::cout << "cnv=" << cell.scenario.cnv_markers
              << " gamma=" << tsv::format_double(cell.scenario.gamma)
              << " kernel=" << to_string(cell.method.shape)
              << " transform=" << to_string(cell.method.transform.kind)
              << (cell.method.transform.is_signed ? " signed" : " unsigned")
              << " method="
              << (cell.method.null_method == NullMethod::permutation ? "permutation"
                                                                     : "monte-carlo");
    if (cell.error.empty()) {
      std::cout << "\tpower=" << tsv::format_double(cell.power) << " +/- "
                << tsv::format_double(cell.se);
    } else {
      std::cout << "\tFAILED: " << cell.error;
    }
    std::cout << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Kernel-aggregated marker-level CNV association testing"};
  app.require_subcommand(1);

  ScanOptions scan_opt;
  auto* scan_cmd = app.add_subcommand(
      "scan", "Scan a marker track for phenotype-associated regions");
  scan_cmd->add_option("--intensities", scan_opt.intensity_path,
                       "Intensity TSV (marker_id, position, subjects...)")
      ->required();
  scan_cmd->add_option("--locations", scan_opt.location_path,
                       "Optional separate locations TSV (marker_id, position)");
  scan_cmd->add_option("--phenotype", scan_opt.phenotype_path,
                       "Phenotype file, one value per line")
      ->required();
  scan_cmd->add_option("--phenotype-kind", scan_opt.phenotype_kind,
                       "Phenotype type")
      ->check(CLI::IsMember({"continuous", "binary"}));
  scan_cmd->add_flag("--exhaustive", scan_opt.exhaustive,
                     "Enumerate all n! permutations (n <= 8)");
  add_method_flags(scan_cmd, scan_opt.common, /*with_bandwidth=*/true);
  add_run_flags(scan_cmd, scan_opt.common);

  NullCheckOptions null_opt;
  auto* null_cmd = app.add_subcommand(
      "null-check",
      "Error-rate table for the no-CNV and CNV-without-association settings");
  null_cmd->add_option("--replicates", null_opt.replicates,
                       "Simulated datasets per setting")->capture_default_str();
  null_cmd->add_option("--n", null_opt.n, "Subjects per dataset")->capture_default_str();
  null_cmd->add_option("--markers", null_opt.markers, "Markers per dataset")->capture_default_str();
  null_cmd->add_option("--cnv-markers", null_opt.cnv_markers,
                       "Markers spanned by the simulated CNV")->capture_default_str();
  null_cmd->add_option("--no-assoc-gamma", null_opt.no_assoc_gamma,
                       "CNV frequency in the no-association setting")
      ->capture_default_str();
  null_cmd->add_option("--no-assoc-snr", null_opt.no_assoc_snr,
                       "Signal-to-noise ratio in the no-association setting")
      ->capture_default_str();
  add_method_flags(null_cmd, null_opt.common, /*with_bandwidth=*/true);
  add_run_flags(null_cmd, null_opt.common);

  SimulateOptions sim_opt;
  auto* sim_cmd =
      app.add_subcommand("simulate", "Write one spike-in dataset to disk");
  sim_cmd->add_option("--scenario", sim_opt.scenario_path,
                      "Scenario config file (key = value)");
  sim_cmd->add_option("--n", sim_opt.n, "Subjects");
  sim_cmd->add_option("--markers", sim_opt.markers, "Markers");
  sim_cmd->add_option("--cnv-markers", sim_opt.cnv_markers, "CNV span in markers");
  sim_cmd->add_option("--gamma", sim_opt.gamma, "Population CNV frequency");
  sim_cmd->add_option("--snr", sim_opt.snr, "Signal-to-noise ratio");
  sim_cmd->add_option("--effect", sim_opt.effect, "Phenotype effect size");
  add_run_flags(sim_cmd, sim_opt.common);

  PowerOptions power_opt;
  auto* power_cmd =
      app.add_subcommand("power", "Rejection-rate study over a scenario grid");
  power_cmd->add_option("--grid", power_opt.grid_path, "Grid config file")
      ->required();
  power_cmd->add_option("--replicates", power_opt.replicates,
                        "Override the grid file's replicate count");
  add_run_flags(power_cmd, power_opt.common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (scan_cmd->parsed()) return cmd_scan(scan_opt);
    if (null_cmd->parsed()) return cmd_null_check(null_opt);
    if (sim_cmd->parsed()) return cmd_simulate(sim_opt);
    if (power_cmd->parsed()) return cmd_power(power_opt);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 2;
}
