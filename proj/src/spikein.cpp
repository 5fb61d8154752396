#include "cnvks/spikein.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <memory>
#include <mutex>
#include <sstream>
#include <unordered_map>

#include "cnvks/errors.hpp"
#include "cnvks/parallel.hpp"
#include "cnvks/rng.hpp"

namespace cnvks::sim {

namespace {

// ---------------------------------------------------------------------------
// Resampling pools, loaded once per path and shared across trials.
// ---------------------------------------------------------------------------

struct ResidualPool {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;  // row-major
  std::vector<double> col_sd;

  double at(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
};

std::shared_ptr<const ResidualPool> load_residual_pool(const std::string& path) {
  static std::mutex mutex;
  static std::unordered_map<std::string, std::shared_ptr<const ResidualPool>> cache;
  {
    std::lock_guard<std::mutex> lock(mutex);
    if (auto it = cache.find(path); it != cache.end()) return it->second;
  }
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoError, "cannot open residual file '" + path + "'");
  auto pool = std::make_shared<ResidualPool>();
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream fields(line);
    std::vector<double> row;
    double v;
    while (fields >> v) row.push_back(v);
    if (row.empty()) continue;
    if (pool->cols == 0) {
      pool->cols = row.size();
    } else if (row.size() != pool->cols) {
      fail(ErrorCode::DimensionMismatch,
           "residual file line " + std::to_string(line_no) + ": expected " +
               std::to_string(pool->cols) + " columns, got " +
               std::to_string(row.size()));
    }
    for (double x : row) {
      if (!std::isfinite(x)) {
        fail(ErrorCode::NonFiniteValue,
             "residual file line " + std::to_string(line_no));
      }
    }
    pool->values.insert(pool->values.end(), row.begin(), row.end());
    ++pool->rows;
  }
  if (pool->rows < 2 || pool->cols < 1) {
    fail(ErrorCode::DimensionMismatch, "residual file needs at least 2 rows");
  }
  pool->col_sd.resize(pool->cols);
  for (std::size_t c = 0; c < pool->cols; ++c) {
    double mean = 0.0;
    for (std::size_t r = 0; r < pool->rows; ++r) mean += pool->at(r, c);
    mean /= static_cast<double>(pool->rows);
    double ss = 0.0;
    for (std::size_t r = 0; r < pool->rows; ++r) {
      const double d = pool->at(r, c) - mean;
      ss += d * d;
    }
    pool->col_sd[c] = std::sqrt(ss / static_cast<double>(pool->rows - 1));
  }
  std::lock_guard<std::mutex> lock(mutex);
  cache[path] = pool;
  return pool;
}

std::shared_ptr<const std::vector<std::int64_t>> load_location_pool(
    const std::string& path) {
  static std::mutex mutex;
  static std::unordered_map<std::string,
                            std::shared_ptr<const std::vector<std::int64_t>>>
      cache;
  {
    std::lock_guard<std::mutex> lock(mutex);
    if (auto it = cache.find(path); it != cache.end()) return it->second;
  }
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoError, "cannot open locations file '" + path + "'");
  auto pool = std::make_shared<std::vector<std::int64_t>>();
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#' || line == "position") continue;
    try {
      pool->push_back(std::stoll(line));
    } catch (const std::exception&) {
      fail(ErrorCode::MalformedRow,
           "locations file line " + std::to_string(line_no) + ": '" + line + "'");
    }
    if (pool->back() < 0) {
      fail(ErrorCode::MalformedRow,
           "locations file line " + std::to_string(line_no) + ": negative position");
    }
  }
  std::sort(pool->begin(), pool->end());
  if (std::adjacent_find(pool->begin(), pool->end()) != pool->end()) {
    fail(ErrorCode::DuplicateLocation, "locations file has duplicate positions");
  }
  if (pool->empty()) fail(ErrorCode::MalformedRow, "locations file is empty");
  std::lock_guard<std::mutex> lock(mutex);
  cache[path] = pool;
  return pool;
}

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Intercept such that the marginal case fraction hits the target.
double solve_intercept(double gamma, double beta_z, double target) {
  double lo = -40.0, hi = 40.0;
  for (int iter = 0; iter < 200; ++iter) {
    const double mid = 0.5 * (lo + hi);
    const double f = gamma * logistic(mid + beta_z) + (1.0 - gamma) * logistic(mid);
    if (f < target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

std::vector<std::int64_t> make_locations(const SimScenario& scenario,
                                         std::uint64_t seed) {
  std::vector<std::int64_t> locations(scenario.J);
  if (scenario.spacing.model == SpacingModel::equal) {
    for (std::size_t j = 0; j < scenario.J; ++j) {
      locations[j] = static_cast<std::int64_t>(j) * scenario.spacing.spacing_bp;
    }
    return locations;
  }
  const auto pool = load_location_pool(scenario.spacing.locations_path);
  if (pool->size() < scenario.J) {
    fail(ErrorCode::DimensionMismatch, "location pool smaller than requested markers");
  }
  // A random contiguous window of the pool, one per dataset.
  rng::Stream stream(seed, {3});
  const std::size_t start =
      static_cast<std::size_t>(stream.below(pool->size() - scenario.J + 1));
  std::copy(pool->begin() + start, pool->begin() + start + scenario.J,
            locations.begin());
  return locations;
}

}  // namespace

void SimScenario::validate() const {
  if (n < 2) fail(ErrorCode::InvalidScenario, "n must be >= 2");
  if (J < 1) fail(ErrorCode::InvalidScenario, "J must be >= 1");
  if (cnv_markers < 1 || cnv_markers > J) {
    fail(ErrorCode::InvalidScenario, "cnv_markers must be in [1, J]");
  }
  if (cnv_offset && *cnv_offset + cnv_markers > J) {
    fail(ErrorCode::InvalidScenario, "CNV span extends past the last marker");
  }
  if (!(gamma >= 0.0 && gamma <= 1.0)) {
    fail(ErrorCode::InvalidScenario, "gamma must be in [0,1]");
  }
  if (!(snr >= 0.0)) fail(ErrorCode::InvalidScenario, "snr must be >= 0");
  if (!std::isfinite(effect)) fail(ErrorCode::InvalidScenario, "effect must be finite");
  if (phenotype_kind == PhenotypeKind::binary &&
      !(case_fraction > 0.0 && case_fraction < 1.0)) {
    fail(ErrorCode::InvalidScenario, "case_fraction must be in (0,1)");
  }
  if (noise.model == NoiseModel::student_t && noise.student_df < 3) {
    fail(ErrorCode::InvalidScenario, "student-t noise needs df >= 3");
  }
  if (noise.model == NoiseModel::file && noise.residual_path.empty()) {
    fail(ErrorCode::InvalidScenario, "file noise needs residual_file");
  }
  if (spacing.model == SpacingModel::equal && spacing.spacing_bp < 1) {
    fail(ErrorCode::InvalidScenario, "spacing_bp must be >= 1");
  }
  if (spacing.model == SpacingModel::from_file && spacing.locations_path.empty()) {
    fail(ErrorCode::InvalidScenario, "file spacing needs locations_file");
  }
}

std::size_t SimScenario::cnv_begin() const {
  return cnv_offset ? *cnv_offset : (J - cnv_markers) / 2;
}

std::size_t SimScenario::cnv_end() const { return cnv_begin() + cnv_markers; }

NoiseMatrix sample_noise(const SimScenario& scenario, std::uint64_t seed) {
  scenario.validate();
  const std::size_t n = scenario.n;
  const std::size_t J = scenario.J;
  NoiseMatrix noise;
  noise.data.resize(n * J);
  noise.sigma.assign(J, 1.0);
  rng::Stream stream(seed, {0});
  switch (scenario.noise.model) {
    case NoiseModel::gaussian:
      for (double& v : noise.data) v = stream.normal();
      break;
    case NoiseModel::student_t: {
      const int df = scenario.noise.student_df;
      const double scale = std::sqrt(static_cast<double>(df) / (df - 2.0));
      for (double& v : noise.data) {
        const double z = stream.normal();
        double chi2 = 0.0;
        for (int d = 0; d < df; ++d) {
          const double g = stream.normal();
          chi2 += g * g;
        }
        v = z / std::sqrt(chi2 / static_cast<double>(df));
      }
      noise.sigma.assign(J, scale);
      break;
    }
    case NoiseModel::skew:
      // Equal mixture of a standard normal and a centered exponential; unit
      // variance, positive skew.
      for (double& v : noise.data) {
        v = stream.bernoulli(0.5) ? stream.normal() : stream.exponential() - 1.0;
      }
      break;
    case NoiseModel::file: {
      const auto pool = load_residual_pool(scenario.noise.residual_path);
      if (pool->cols < J) {
        fail(ErrorCode::DimensionMismatch,
             "residual file has " + std::to_string(pool->cols) +
                 " markers, scenario needs " + std::to_string(J));
      }
      const auto cols = stream.sample_without_replacement(pool->cols, J);
      std::vector<std::uint32_t> row(n);
      for (std::size_t i = 0; i < n; ++i) {
        row[i] = static_cast<std::uint32_t>(stream.below(pool->rows));
      }
      for (std::size_t j = 0; j < J; ++j) {
        noise.sigma[j] = pool->col_sd[cols[j]];
        double* out = noise.data.data() + j * n;
        for (std::size_t i = 0; i < n; ++i) out[i] = pool->at(row[i], cols[j]);
      }
      break;
    }
  }
  return noise;
}

Cohort generate_cohort(const SimScenario& scenario, std::uint64_t seed) {
  scenario.validate();
  Cohort cohort;
  cohort.carrier.resize(scenario.n);
  rng::Stream z_stream(seed, {1});
  for (auto& z : cohort.carrier) z = z_stream.bernoulli(scenario.gamma) ? 1 : 0;
  rng::Stream y_stream(seed, {2});
  std::vector<double> y(scenario.n);
  if (scenario.phenotype_kind == PhenotypeKind::continuous) {
    for (std::size_t i = 0; i < scenario.n; ++i) {
      y[i] = scenario.effect * cohort.carrier[i] + y_stream.normal();
    }
    cohort.phen = Phenotype::continuous(std::move(y));
  } else {
    const double beta0 =
        solve_intercept(scenario.gamma, scenario.effect, scenario.case_fraction);
    for (std::size_t i = 0; i < scenario.n; ++i) {
      const double risk = logistic(beta0 + scenario.effect * cohort.carrier[i]);
      y[i] = y_stream.bernoulli(risk) ? 1.0 : 0.0;
    }
    cohort.phen = Phenotype::binary(std::move(y));
  }
  return cohort;
}

SimDataset build_dataset(const SimScenario& scenario, std::uint64_t seed) {
  scenario.validate();
  NoiseMatrix noise = sample_noise(scenario, seed);
  Cohort cohort = generate_cohort(scenario, seed);
  const std::size_t n = scenario.n;
  const std::size_t begin = scenario.cnv_begin();
  const std::size_t end = scenario.cnv_end();
  for (std::size_t j = begin; j < end; ++j) {
    const double shift = scenario.snr * noise.sigma[j];
    double* col = noise.data.data() + j * n;
    for (std::size_t i = 0; i < n; ++i) {
      if (cohort.carrier[i]) col[i] += shift;
    }
  }
  SimDataset dataset;
  dataset.track = MarkerTrack::create(make_locations(scenario, seed), {},
                                      std::move(noise.data), n);
  dataset.phen = std::move(cohort.phen);
  dataset.carrier = std::move(cohort.carrier);
  dataset.cnv_begin = begin;
  dataset.cnv_end = end;
  return dataset;
}

KernelSpec MethodConfig::resolve_kernel(const SimDataset& dataset) const {
  switch (bandwidth) {
    case BandwidthSetting::markers:
      return KernelSpec::constant_marker(shape, k);
    case BandwidthSetting::width:
      return KernelSpec::constant_width(shape, width_bp);
    case BandwidthSetting::matched_markers:
      return KernelSpec::constant_marker(shape, dataset.cnv_end - dataset.cnv_begin);
    case BandwidthSetting::matched_width: {
      const auto& loc = dataset.track.locations();
      const double span = static_cast<double>(loc[dataset.cnv_end - 1] -
                                              loc[dataset.cnv_begin]);
      return KernelSpec::constant_width(shape, std::max(span / 2.0, 1.0));
    }
  }
  fail(ErrorCode::InvalidSpec, "unknown bandwidth setting");
}

TrialResult run_trial(const SimScenario& scenario, const MethodConfig& method,
                      std::uint64_t seed) {
  const SimDataset dataset = build_dataset(scenario, rng::derive(seed, 1));
  const KernelSpec kernel = method.resolve_kernel(dataset);
  const std::uint64_t null_seed = rng::derive(seed, 2);
  TrialResult trial;
  if (method.null_method == NullMethod::permutation) {
    const ScanResult result =
        scan(dataset.track, dataset.phen, kernel, method.transform, method.B,
             method.alpha, null_seed, /*workers=*/1);
    trial.global_p = result.global_p;
  } else {
    const MarkerTestTrack tests = run_marker_tests(dataset.track, dataset.phen);
    const AggregationProfile profile =
        aggregate(tests, dataset.track, kernel, method.transform);
    const double observed = t_max(profile);
    const NullDistribution null = monte_carlo_null(
        dataset.track.locations(), kernel, method.transform, method.B, null_seed);
    trial.global_p = global_p(observed, null);
  }
  trial.rejected = trial.global_p <= method.alpha;
  return trial;
}

std::vector<PowerCell> power_study(const PowerGrid& grid, std::size_t replicates,
                                   std::uint64_t master_seed, int workers) {
  if (grid.empty()) fail(ErrorCode::InvalidScenario, "empty study grid");
  if (replicates < 1) fail(ErrorCode::InvalidScenario, "replicates must be >= 1");
  for (const auto& [scenario, method] : grid) scenario.validate();
  const std::size_t n_cells = grid.size();
  std::vector<std::uint8_t> rejected(n_cells * replicates, 0);
  std::vector<std::string> task_error(n_cells * replicates);
  parallel_for(n_cells * replicates, workers, [&](std::size_t task) {
    const std::size_t cell = task / replicates;
    const std::size_t rep = task % replicates;
    const std::uint64_t seed = rng::derive(master_seed, cell, rep);
    try {
      const TrialResult trial = run_trial(grid[cell].first, grid[cell].second, seed);
      rejected[task] = trial.rejected ? 1 : 0;
    } catch (const std::exception& e) {
      task_error[task] = e.what();
    }
  });
  std::vector<PowerCell> cells(n_cells);
  for (std::size_t c = 0; c < n_cells; ++c) {
    PowerCell& cell = cells[c];
    cell.scenario = grid[c].first;
    cell.method = grid[c].second;
    cell.replicates = replicates;
    for (std::size_t r = 0; r < replicates; ++r) {
      if (!task_error[c * replicates + r].empty() && cell.error.empty()) {
        cell.error = "replicate " + std::to_string(r) + ": " +
                     task_error[c * replicates + r];
      }
    }
    if (!cell.error.empty()) {
      cell.power = std::numeric_limits<double>::quiet_NaN();
      cell.se = std::numeric_limits<double>::quiet_NaN();
      continue;
    }
    std::size_t hits = 0;
    for (std::size_t r = 0; r < replicates; ++r) hits += rejected[c * replicates + r];
    cell.power = static_cast<double>(hits) / static_cast<double>(replicates);
    cell.se = std::sqrt(cell.power * (1.0 - cell.power) /
                        static_cast<double>(replicates));
  }
  return cells;
}

std::vector<NullCheckSetting> null_check_study(const NullCheckConfig& config,
                                               std::uint64_t seed, int workers) {
  if (config.replicates < 1) {
    fail(ErrorCode::InvalidScenario, "replicates must be >= 1");
  }
  std::vector<NullCheckSetting> settings(2);
  settings[0].name = "no_cnv";
  settings[1].name = "no_association";
  for (std::size_t s = 0; s < 2; ++s) {
    SimScenario scenario = config.base;
    scenario.effect = 0.0;  // the global null holds in both settings
    if (s == 0) {
      scenario.gamma = 0.0;
    } else {
      scenario.gamma = config.no_assoc_gamma;
      scenario.snr = config.no_assoc_snr;
    }
    scenario.validate();
    NullCheckSetting& setting = settings[s];
    setting.p_perm.resize(config.replicates);
    setting.p_mc.resize(config.replicates);
    parallel_for(config.replicates, workers, [&](std::size_t rep) {
      const std::uint64_t rep_seed = rng::derive(seed, s, rep);
      const SimDataset dataset = build_dataset(scenario, rng::derive(rep_seed, 1));
      const KernelSpec kernel = config.method.resolve_kernel(dataset);
      const MarkerTestTrack tests = run_marker_tests(dataset.track, dataset.phen);
      const AggregationProfile profile =
          aggregate(tests, dataset.track, kernel, config.method.transform);
      const double observed = t_max(profile);
      const NullDistribution perm_null = permutation_null(
          dataset.track, dataset.phen, kernel, config.method.transform,
          config.method.B, rng::derive(rep_seed, 2), /*workers=*/1);
      const NullDistribution mc_null = monte_carlo_null(
          dataset.track.locations(), kernel, config.method.transform,
          config.method.B, rng::derive(rep_seed, 3), /*workers=*/1);
      setting.p_perm[rep] = global_p(observed, perm_null);
      setting.p_mc[rep] = global_p(observed, mc_null);
    });
    const auto rate = [&](const std::vector<double>& pvals) {
      std::size_t hits = 0;
      for (double p : pvals) hits += (p <= config.method.alpha);
      return static_cast<double>(hits) / static_cast<double>(pvals.size());
    };
    const auto se_of = [&](double r) {
      if (config.replicates < 2) return std::numeric_limits<double>::quiet_NaN();
      return std::sqrt(r * (1.0 - r) / static_cast<double>(config.replicates));
    };
    setting.rate_perm = rate(setting.p_perm);
    setting.se_perm = se_of(setting.rate_perm);
    setting.rate_mc = rate(setting.p_mc);
    setting.se_mc = se_of(setting.rate_mc);
  }
  return settings;
}

// ---------------------------------------------------------------------------
// key = value configuration
// ---------------------------------------------------------------------------

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

double to_double(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    fail(ErrorCode::InvalidScenario, "key '" + key + "': bad number '" + value + "'");
  }
}

std::size_t to_size(const std::string& key, const std::string& value) {
  const double v = to_double(key, value);
  if (v < 0 || v != std::floor(v)) {
    fail(ErrorCode::InvalidScenario, "key '" + key + "': expected integer");
  }
  return static_cast<std::size_t>(v);
}

bool to_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  fail(ErrorCode::InvalidScenario, "key '" + key + "': expected true/false");
}

const std::vector<std::string> kKnownKeys = {
    "n",          "markers",        "cnv_markers",   "cnv_offset",
    "gamma",      "snr",            "effect",        "phenotype",
    "case_fraction", "noise",       "noise_df",      "residual_file",
    "spacing",    "spacing_bp",     "locations_file", "kernel",
    "bandwidth_markers", "bandwidth_bp", "bandwidth", "transform",
    "signed",     "method",         "permutations",  "alpha",
    "replicates"};

// Keys whose comma-separated values expand a grid file into cells.
const std::vector<std::string> kGridKeys = {
    "n",      "cnv_markers", "gamma",   "snr",      "effect",
    "kernel", "bandwidth_markers", "bandwidth_bp", "transform", "signed",
    "method"};

void apply_key(SimScenario& scenario, MethodConfig& method, bool& saw_bandwidth,
               const std::string& key, const std::string& value) {
  if (key == "n") {
    scenario.n = to_size(key, value);
  } else if (key == "markers") {
    scenario.J = to_size(key, value);
  } else if (key == "cnv_markers") {
    scenario.cnv_markers = to_size(key, value);
  } else if (key == "cnv_offset") {
    scenario.cnv_offset = to_size(key, value);
  } else if (key == "gamma") {
    scenario.gamma = to_double(key, value);
  } else if (key == "snr") {
    scenario.snr = to_double(key, value);
  } else if (key == "effect") {
    scenario.effect = to_double(key, value);
  } else if (key == "phenotype") {
    if (value == "continuous") {
      scenario.phenotype_kind = PhenotypeKind::continuous;
    } else if (value == "binary") {
      scenario.phenotype_kind = PhenotypeKind::binary;
    } else {
      fail(ErrorCode::InvalidScenario, "phenotype must be continuous|binary");
    }
  } else if (key == "case_fraction") {
    scenario.case_fraction = to_double(key, value);
  } else if (key == "noise") {
    if (value == "gaussian") {
      scenario.noise.model = NoiseModel::gaussian;
    } else if (value == "student-t") {
      scenario.noise.model = NoiseModel::student_t;
    } else if (value == "skew") {
      scenario.noise.model = NoiseModel::skew;
    } else if (value == "file") {
      scenario.noise.model = NoiseModel::file;
    } else {
      fail(ErrorCode::InvalidScenario, "noise must be gaussian|student-t|skew|file");
    }
  } else if (key == "noise_df") {
    scenario.noise.student_df = static_cast<int>(to_size(key, value));
  } else if (key == "residual_file") {
    scenario.noise.residual_path = value;
  } else if (key == "spacing") {
    if (value == "equal") {
      scenario.spacing.model = SpacingModel::equal;
    } else if (value == "file") {
      scenario.spacing.model = SpacingModel::from_file;
    } else {
      fail(ErrorCode::InvalidScenario, "spacing must be equal|file");
    }
  } else if (key == "spacing_bp") {
    scenario.spacing.spacing_bp = static_cast<std::int64_t>(to_size(key, value));
  } else if (key == "locations_file") {
    scenario.spacing.locations_path = value;
  } else if (key == "kernel") {
    if (value == "flat") {
      method.shape = KernelShape::flat;
    } else if (value == "epanechnikov") {
      method.shape = KernelShape::epanechnikov;
    } else {
      fail(ErrorCode::InvalidScenario, "kernel must be flat|epanechnikov");
    }
  } else if (key == "bandwidth_markers") {
    method.bandwidth = BandwidthSetting::markers;
    method.k = to_size(key, value);
    saw_bandwidth = true;
  } else if (key == "bandwidth_bp") {
    method.bandwidth = BandwidthSetting::width;
    method.width_bp = to_double(key, value);
    saw_bandwidth = true;
  } else if (key == "bandwidth") {
    if (value == "matched") {
      method.bandwidth = BandwidthSetting::matched_markers;
    } else if (value == "matched-width") {
      method.bandwidth = BandwidthSetting::matched_width;
    } else {
      fail(ErrorCode::InvalidScenario, "bandwidth must be matched|matched-width");
    }
    saw_bandwidth = true;
  } else if (key == "transform") {
    if (value == "p") {
      method.transform.kind = TransformKind::p;
    } else if (value == "z") {
      method.transform.kind = TransformKind::z;
    } else if (value == "log") {
      method.transform.kind = TransformKind::log;
    } else {
      fail(ErrorCode::InvalidScenario, "transform must be p|z|log");
    }
  } else if (key == "signed") {
    method.transform.is_signed = to_bool(key, value);
  } else if (key == "method") {
    if (value == "permutation") {
      method.null_method = NullMethod::permutation;
    } else if (value == "monte-carlo") {
      method.null_method = NullMethod::monte_carlo;
    } else {
      fail(ErrorCode::InvalidScenario, "method must be permutation|monte-carlo");
    }
  } else if (key == "permutations") {
    method.B = to_size(key, value);
  } else if (key == "alpha") {
    method.alpha = to_double(key, value);
  } else if (key == "replicates") {
    // handled by the callers
  } else {
    fail(ErrorCode::InvalidScenario, "unknown configuration key '" + key + "'");
  }
}

}  // namespace

std::map<std::string, std::string> read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoError, "cannot open config '" + path + "'");
  std::map<std::string, std::string> keys;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    const std::string entry = trim(line);
    if (entry.empty()) continue;
    const auto eq = entry.find('=');
    if (eq == std::string::npos) {
      fail(ErrorCode::InvalidScenario,
           "config line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = trim(entry.substr(0, eq));
    const std::string value = trim(entry.substr(eq + 1));
    if (key.empty() || value.empty()) {
      fail(ErrorCode::InvalidScenario,
           "config line " + std::to_string(line_no) + ": empty key or value");
    }
    if (std::find(kKnownKeys.begin(), kKnownKeys.end(), key) == kKnownKeys.end()) {
      fail(ErrorCode::InvalidScenario, "unknown configuration key '" + key + "'");
    }
    keys[key] = value;
  }
  return keys;
}

std::pair<SimScenario, MethodConfig> parse_scenario_config(
    const std::map<std::string, std::string>& keys) {
  SimScenario scenario;
  MethodConfig method;
  bool saw_bandwidth = false;
  for (const auto& [key, value] : keys) {
    apply_key(scenario, method, saw_bandwidth, key, value);
  }
  scenario.validate();
  return {scenario, method};
}

ScenarioFile parse_scenario_file(const std::string& path) {
  const auto keys = read_config_file(path);
  ScenarioFile file;
  std::tie(file.scenario, file.method) = parse_scenario_config(keys);
  if (auto it = keys.find("replicates"); it != keys.end()) {
    file.replicates = to_size("replicates", it->second);
  }
  return file;
}

GridFile parse_grid_file(const std::string& path) {
  const auto keys = read_config_file(path);
  if (keys.empty()) {
    fail(ErrorCode::InvalidScenario, "grid file '" + path + "' defines no cells");
  }
  GridFile grid;
  if (auto it = keys.find("replicates"); it != keys.end()) {
    grid.replicates = to_size("replicates", it->second);
  }
  // Split list-valued grid keys; everything else stays scalar.
  std::vector<std::pair<std::string, std::vector<std::string>>> axes;
  std::map<std::string, std::string> scalars;
  for (const auto& [key, value] : keys) {
    if (key == "replicates") continue;
    const bool grid_key =
        std::find(kGridKeys.begin(), kGridKeys.end(), key) != kGridKeys.end();
    if (grid_key && value.find(',') != std::string::npos) {
      std::vector<std::string> values;
      std::stringstream parts(value);
      std::string part;
      while (std::getline(parts, part, ',')) {
        const std::string v = trim(part);
        if (!v.empty()) values.push_back(v);
      }
      if (values.empty()) {
        fail(ErrorCode::InvalidScenario, "key '" + key + "': empty list");
      }
      axes.emplace_back(key, std::move(values));
    } else {
      scalars[key] = value;
    }
  }
  // Cartesian product in the (sorted) axis order read_config_file produced.
  std::vector<std::size_t> index(axes.size(), 0);
  for (;;) {
    auto cell_keys = scalars;
    for (std::size_t a = 0; a < axes.size(); ++a) {
      cell_keys[axes[a].first] = axes[a].second[index[a]];
    }
    grid.cells.push_back(parse_scenario_config(cell_keys));
    std::size_t a = axes.size();
    for (; a > 0; --a) {
      if (++index[a - 1] < axes[a - 1].second.size()) break;
      index[a - 1] = 0;
    }
    if (a == 0) break;
  }
  return grid;
}

}  // namespace cnvks::sim
