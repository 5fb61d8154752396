#include "cnvks/marker_tests.hpp"

#include <cmath>
#include <string>

#include "cnvks/errors.hpp"
#include "cnvks/math.hpp"

namespace cnvks {

namespace {

// Two-sided OLS slope p-value from centered sums of squares. Uses the
// identity df/(df + t^2) = (sxx*syy - sxy^2)/(sxx*syy), the incomplete-beta
// argument, so no explicit t is formed.
double slope_p(double sxy, double sxx, double syy, double df) {
  const double total = sxx * syy;
  if (total <= 0.0) return 0.0;  // constant response: exact fit by convention
  double x = (total - sxy * sxy) / total;
  if (x <= 0.0) return 0.0;  // exact fit, residual variance 0
  if (x > 1.0) x = 1.0;
  return math::inc_beta(0.5 * df, 0.5, x);
}

struct WelchStat {
  double p;
  double sign;
};

WelchStat welch_from_moments(double m1, double v1, double n1, double m0, double v0,
                             double n0) {
  const double a = v1 / n1;
  const double b = v0 / n0;
  const double se2 = a + b;
  if (se2 <= 0.0) {
    fail(ErrorCode::ZeroVariance, "both groups have zero variance");
  }
  const double diff = m1 - m0;
  const double t = diff / std::sqrt(se2);
  const double df = se2 * se2 / (a * a / (n1 - 1.0) + b * b / (n0 - 1.0));
  return {math::student_t_two_sided_p(t, df), diff >= 0.0 ? 1.0 : -1.0};
}

}  // namespace

TestResult regression_test(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  if (y.size() != n) fail(ErrorCode::LengthMismatch, "x and y lengths differ");
  if (n < 3) fail(ErrorCode::DimensionMismatch, "regression_test requires n >= 3");
  double xm = 0.0, ym = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    xm += x[i];
    ym += y[i];
  }
  xm /= static_cast<double>(n);
  ym /= static_cast<double>(n);
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = x[i] - xm;
    const double dy = y[i] - ym;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (sxx <= 0.0) {
    fail(ErrorCode::ZeroVariancePredictor, "predictor has zero variance");
  }
  TestResult r;
  r.p = slope_p(sxy, sxx, syy, static_cast<double>(n - 2));
  r.s = sxy >= 0.0 ? 1 : -1;
  return r;
}

TestResult two_sample_test(std::span<const double> x, std::span<const double> groups) {
  const std::size_t n = x.size();
  if (groups.size() != n) fail(ErrorCode::LengthMismatch, "x and groups lengths differ");
  double s1 = 0.0, s0 = 0.0;
  std::size_t n1 = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (groups[i] == 1.0) {
      s1 += x[i];
      ++n1;
    } else if (groups[i] == 0.0) {
      s0 += x[i];
    } else {
      fail(ErrorCode::NonBinaryValue, "group labels must be 0 or 1");
    }
  }
  const std::size_t n0 = n - n1;
  if (n1 < 2 || n0 < 2) {
    fail(ErrorCode::DegenerateGroups, "each group needs at least two subjects");
  }
  const double m1 = s1 / static_cast<double>(n1);
  const double m0 = s0 / static_cast<double>(n0);
  double q1 = 0.0, q0 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (groups[i] == 1.0) {
      const double d = x[i] - m1;
      q1 += d * d;
    } else {
      const double d = x[i] - m0;
      q0 += d * d;
    }
  }
  const double v1 = q1 / static_cast<double>(n1 - 1);
  const double v0 = q0 / static_cast<double>(n0 - 1);
  const auto w = welch_from_moments(m1, v1, static_cast<double>(n1), m0, v0,
                                    static_cast<double>(n0));
  TestResult r;
  r.p = w.p;
  r.s = w.sign > 0 ? 1 : -1;
  return r;
}

MarkerTestEngine::MarkerTestEngine(const MarkerTrack& track, const Phenotype& phen)
    : track_(track), y_(phen.values), kind_(phen.kind), n_(track.n_subjects()),
      J_(track.n_markers()) {
  if (phen.size() != n_) {
    fail(ErrorCode::LengthMismatch, "phenotype has " + std::to_string(phen.size()) +
                                        " values for " + std::to_string(n_) +
                                        " subjects");
  }
  if (kind_ == PhenotypeKind::continuous) {
    if (n_ < 3) fail(ErrorCode::DimensionMismatch, "continuous tests require n >= 3");
    double sum = 0.0;
    for (double v : y_) sum += v;
    y_mean_ = sum / static_cast<double>(n_);
    syy_ = 0.0;
    for (double v : y_) {
      const double d = v - y_mean_;
      syy_ += d * d;
    }
    sxx_.resize(J_);
    for (std::size_t j = 0; j < J_; ++j) {
      const auto col = track_.column(j);
      double m = 0.0;
      for (double v : col) m += v;
      m /= static_cast<double>(n_);
      double sxx = 0.0;
      for (double v : col) {
        const double d = v - m;
        sxx += d * d;
      }
      if (sxx <= 0.0) {
        fail(ErrorCode::ZeroVariancePredictor,
             "marker " + std::to_string(j) + " has zero intensity variance");
      }
      sxx_[j] = sxx;
    }
  } else {
    n_ones_ = 0;
    for (double v : y_) n_ones_ += (v == 1.0);
    if (n_ones_ < 2 || n_ - n_ones_ < 2) {
      fail(ErrorCode::DegenerateGroups, "each phenotype class needs >= 2 subjects");
    }
    col_sum_.resize(J_);
    col_sumsq_.resize(J_);
    for (std::size_t j = 0; j < J_; ++j) {
      const auto col = track_.column(j);
      double s = 0.0, q = 0.0;
      for (double v : col) {
        s += v;
        q += v * v;
      }
      col_sum_[j] = s;
      col_sumsq_[j] = q;
    }
  }
}

void MarkerTestEngine::test_permuted(std::span<const std::uint32_t> perm,
                                     std::span<double> p_out,
                                     std::span<double> s_out) const {
  if (!perm.empty() && perm.size() != n_) {
    fail(ErrorCode::LengthMismatch, "permutation length mismatch");
  }
  if (p_out.size() != J_ || s_out.size() != J_) {
    fail(ErrorCode::LengthMismatch, "output buffer length mismatch");
  }
  if (kind_ == PhenotypeKind::continuous) {
    test_continuous(perm, p_out, s_out);
  } else {
    test_binary(perm, p_out, s_out);
  }
}

void MarkerTestEngine::test_continuous(std::span<const std::uint32_t> perm,
                                       std::span<double> p_out,
                                       std::span<double> s_out) const {
  // Centered permuted response; Sxy_j then reduces to one dot product per
  // marker, the O(nJ) inner loop of the permutation null.
  std::vector<double> cy(n_);
  if (perm.empty()) {
    for (std::size_t i = 0; i < n_; ++i) cy[i] = y_[i] - y_mean_;
  } else {
    for (std::size_t i = 0; i < n_; ++i) cy[i] = y_[perm[i]] - y_mean_;
  }
  const double df = static_cast<double>(n_ - 2);
  for (std::size_t j = 0; j < J_; ++j) {
    const double* col = track_.column(j).data();
    double sxy = 0.0;
    for (std::size_t i = 0; i < n_; ++i) sxy += col[i] * cy[i];
    p_out[j] = slope_p(sxy, sxx_[j], syy_, df);
    s_out[j] = sxy >= 0.0 ? 1.0 : -1.0;
  }
}

void MarkerTestEngine::test_binary(std::span<const std::uint32_t> perm,
                                   std::span<double> p_out,
                                   std::span<double> s_out) const {
  std::vector<std::uint32_t> ones;
  ones.reserve(n_ones_);
  if (perm.empty()) {
    for (std::size_t i = 0; i < n_; ++i) {
      if (y_[i] == 1.0) ones.push_back(static_cast<std::uint32_t>(i));
    }
  } else {
    for (std::size_t i = 0; i < n_; ++i) {
      if (y_[perm[i]] == 1.0) ones.push_back(static_cast<std::uint32_t>(i));
    }
  }
  const double n1 = static_cast<double>(n_ones_);
  const double n0 = static_cast<double>(n_ - n_ones_);
  for (std::size_t j = 0; j < J_; ++j) {
    const double* col = track_.column(j).data();
    double s1 = 0.0, q1 = 0.0;
    for (const std::uint32_t i : ones) {
      const double v = col[i];
      s1 += v;
      q1 += v * v;
    }
    const double m1 = s1 / n1;
    const double m0 = (col_sum_[j] - s1) / n0;
    double v1 = (q1 - s1 * m1) / (n1 - 1.0);
    double v0 = ((col_sumsq_[j] - q1) - (col_sum_[j] - s1) * m0) / (n0 - 1.0);
    if (v1 < 0.0) v1 = 0.0;
    if (v0 < 0.0) v0 = 0.0;
    WelchStat w{};
    try {
      w = welch_from_moments(m1, v1, n1, m0, v0, n0);
    } catch (const Error& e) {
      fail(e.code(), "marker " + std::to_string(j) + ": " + e.what());
    }
    p_out[j] = w.p;
    s_out[j] = w.sign;
  }
}

MarkerTestTrack run_marker_tests(const MarkerTrack& track, const Phenotype& phen) {
  MarkerTestEngine engine(track, phen);
  std::vector<double> p(track.n_markers());
  std::vector<double> s(track.n_markers());
  engine.test_permuted({}, p, s);
  MarkerTestTrack out;
  out.is_signed = true;
  out.results.resize(track.n_markers());
  for (std::size_t j = 0; j < track.n_markers(); ++j) {
    out.results[j].p = p[j];
    out.results[j].s = s[j] > 0 ? 1 : -1;
  }
  return out;
}

}  // namespace cnvks
