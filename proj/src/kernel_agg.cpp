#include "cnvks/kernel_agg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>

#include "cnvks/errors.hpp"
#include "cnvks/math.hpp"

namespace cnvks {

namespace {

constexpr double kPClamp = 1e-15;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double clamp_p(double p) {
  if (p < kPClamp) return kPClamp;
  if (p > 1.0 - kPClamp) return 1.0 - kPClamp;
  return p;
}

}  // namespace

KernelSpec KernelSpec::constant_width(KernelShape shape, double h) {
  KernelSpec spec;
  spec.shape = shape;
  spec.mode = BandwidthMode::constant_width;
  spec.width_bp = h;
  return spec;
}

KernelSpec KernelSpec::constant_marker(KernelShape shape, std::size_t k) {
  KernelSpec spec;
  spec.shape = shape;
  spec.mode = BandwidthMode::constant_marker;
  spec.k = k;
  return spec;
}

void validate_kernel_spec(const KernelSpec& spec, std::size_t n_markers) {
  if (spec.mode == BandwidthMode::constant_width) {
    if (!(spec.width_bp > 0.0)) {
      fail(ErrorCode::InvalidSpec, "constant-width bandwidth must be positive");
    }
  } else {
    if (spec.k < 1) fail(ErrorCode::InvalidSpec, "constant-marker k must be >= 1");
    if (spec.k > n_markers) {
      fail(ErrorCode::KTooLarge, "k = " + std::to_string(spec.k) + " exceeds " +
                                     std::to_string(n_markers) + " markers");
    }
  }
}

double kernel_weight(std::int64_t lj, std::int64_t l0, double h, KernelShape shape) {
  const double d = std::abs(static_cast<double>(lj - l0));
  if (d > h) return 0.0;
  if (shape == KernelShape::flat) return 1.0;
  const double u = d / h;
  return 0.75 * (1.0 - u * u);
}

AdaptiveBandwidth adaptive_bandwidth(std::span<const std::int64_t> locations,
                                     std::int64_t l0, std::size_t k) {
  const std::size_t J = locations.size();
  if (k < 1) fail(ErrorCode::InvalidSpec, "k must be >= 1");
  if (k > J) fail(ErrorCode::KTooLarge, "k exceeds marker count");
  // Seed the window at the marker nearest l0, then grow toward whichever
  // side is closer until k markers are inside.
  const auto it = std::lower_bound(locations.begin(), locations.end(), l0);
  std::size_t lo, hi;
  if (it == locations.end()) {
    lo = hi = J - 1;
  } else if (it == locations.begin()) {
    lo = hi = 0;
  } else {
    const std::size_t right = static_cast<std::size_t>(it - locations.begin());
    const std::size_t left = right - 1;
    lo = hi = (l0 - locations[left] <= locations[right] - l0) ? left : right;
  }
  std::size_t included = 1;
  while (included < k) {
    const std::int64_t dl =
        lo > 0 ? std::abs(l0 - locations[lo - 1]) : std::numeric_limits<std::int64_t>::max();
    const std::int64_t dr = hi + 1 < J ? std::abs(locations[hi + 1] - l0)
                                       : std::numeric_limits<std::int64_t>::max();
    if (dl <= dr) {
      --lo;
    } else {
      ++hi;
    }
    ++included;
  }
  const std::int64_t h =
      std::max(std::abs(l0 - locations[lo]), std::abs(locations[hi] - l0));
  // Include every marker tied at the boundary distance.
  while (lo > 0 && std::abs(l0 - locations[lo - 1]) == h) --lo;
  while (hi + 1 < J && std::abs(locations[hi + 1] - l0) == h) ++hi;
  return {static_cast<double>(h), lo, hi};
}

double transform_value(double p, double s, const TransformSpec& spec) {
  switch (spec.kind) {
    case TransformKind::p:
      return spec.is_signed ? s * (1.0 - p) : 1.0 - p;
    case TransformKind::z: {
      const double pc = clamp_p(p);
      return spec.is_signed ? math::normal_quantile(0.5 * (1.0 + s * (1.0 - pc)))
                            : math::normal_quantile(1.0 - pc);
    }
    case TransformKind::log: {
      const double lp = std::log(clamp_p(p));
      return spec.is_signed ? -s * lp : -lp;
    }
  }
  fail(ErrorCode::InvalidSpec, "unknown transform");
}

double transform_value(const TestResult& result, const TransformSpec& spec) {
  if (spec.is_signed && !result.s.has_value()) {
    fail(ErrorCode::MissingSign, "signed transform needs a direction of association");
  }
  const double s = result.s.has_value() ? static_cast<double>(*result.s) : 1.0;
  return transform_value(result.p, s, spec);
}

std::vector<double> transform_track(const MarkerTestTrack& tests,
                                    const TransformSpec& spec) {
  if (spec.is_signed && !tests.is_signed) {
    fail(ErrorCode::MissingSign, "signed transform applied to an unsigned test track");
  }
  std::vector<double> t(tests.size());
  for (std::size_t j = 0; j < tests.size(); ++j) {
    t[j] = transform_value(tests.results[j], spec);
  }
  return t;
}

KernelPlan::KernelPlan(std::span<const std::int64_t> locations, const KernelSpec& spec) {
  const std::size_t J = locations.size();
  validate_kernel_spec(spec, J);
  targets_.resize(J);
  valid_.assign(J, 0);
  const std::int64_t first = locations.front();
  const std::int64_t last = locations.back();
  for (std::size_t j0 = 0; j0 < J; ++j0) {
    const std::int64_t l0 = locations[j0];
    Target target;
    std::size_t lo, hi;
    double eval_h;
    bool valid;
    if (spec.mode == BandwidthMode::constant_width) {
      const double h = spec.width_bp;
      // Masked where the window would extend past the span of the track.
      valid = static_cast<double>(l0 - first) >= h && static_cast<double>(last - l0) >= h;
      if (!valid) {
        targets_[j0] = target;
        continue;
      }
      const auto begin = std::lower_bound(locations.begin(), locations.end(),
                                          static_cast<std::int64_t>(std::ceil(l0 - h)));
      auto end = std::upper_bound(locations.begin(), locations.end(),
                                  static_cast<std::int64_t>(std::floor(l0 + h)));
      lo = static_cast<std::size_t>(begin - locations.begin());
      hi = static_cast<std::size_t>(end - locations.begin()) - 1;
      eval_h = h;
    } else {
      const auto ab = adaptive_bandwidth(locations, l0, spec.k);
      // Masking uses the uninflated bandwidth for both shapes, so flat and
      // Epanechnikov profiles share a validity mask.
      valid = static_cast<double>(l0 - first) >= ab.h &&
              static_cast<double>(last - l0) >= ab.h;
      if (!valid) {
        targets_[j0] = target;
        continue;
      }
      lo = ab.lo;
      hi = ab.hi;
      // With a quadratic kernel the k-th marker sits exactly on the support
      // boundary and would get weight zero; widen by one base pair.
      eval_h = spec.shape == KernelShape::epanechnikov ? ab.h + 1.0 : ab.h;
    }
    const std::size_t count = hi - lo + 1;
    std::vector<double> w(count);
    double sum = 0.0;
    for (std::size_t m = 0; m < count; ++m) {
      w[m] = kernel_weight(locations[lo + m], l0, eval_h, spec.shape);
      sum += w[m];
    }
    if (!(sum > 0.0)) {
      fail(ErrorCode::EmptySupport,
           "no marker receives positive weight at position " + std::to_string(l0));
    }
    target.lo = static_cast<std::uint32_t>(lo);
    target.count = static_cast<std::uint32_t>(count);
    target.weight_offset = static_cast<std::uint32_t>(weights_.size());
    target.valid = true;
    for (std::size_t m = 0; m < count; ++m) weights_.push_back(w[m] / sum);
    targets_[j0] = target;
    valid_[j0] = 1;
    ++n_valid_;
  }
}

void KernelPlan::accumulate(std::span<const double> t, std::span<double> out) const {
  const std::size_t J = targets_.size();
  if (t.size() != J || out.size() != J) {
    fail(ErrorCode::LengthMismatch, "score vector length mismatch");
  }
  for (std::size_t j0 = 0; j0 < J; ++j0) {
    const Target& target = targets_[j0];
    if (!target.valid) {
      out[j0] = kNaN;
      continue;
    }
    const double* w = weights_.data() + target.weight_offset;
    const double* tj = t.data() + target.lo;
    double acc = 0.0;
    for (std::uint32_t m = 0; m < target.count; ++m) acc += w[m] * tj[m];
    out[j0] = acc;
  }
}

double KernelPlan::t_max(std::span<const double> t, bool use_abs) const {
  if (n_valid_ == 0) fail(ErrorCode::AllMasked, "every aggregation target is masked");
  double best = -std::numeric_limits<double>::infinity();
  for (const Target& target : targets_) {
    if (!target.valid) continue;
    const double* w = weights_.data() + target.weight_offset;
    const double* tj = t.data() + target.lo;
    double acc = 0.0;
    for (std::uint32_t m = 0; m < target.count; ++m) acc += w[m] * tj[m];
    if (use_abs) acc = std::fabs(acc);
    if (acc > best) best = acc;
  }
  return best;
}

AggregationProfile aggregate(const MarkerTestTrack& tests, const MarkerTrack& track,
                             const KernelSpec& kspec, const TransformSpec& tspec) {
  if (tests.size() != track.n_markers()) {
    fail(ErrorCode::LengthMismatch, "test track and marker track lengths differ");
  }
  const KernelPlan plan(track.locations(), kspec);
  const std::vector<double> t = transform_track(tests, tspec);
  AggregationProfile profile;
  profile.values.resize(track.n_markers());
  profile.valid = plan.valid_mask();
  profile.locations = track.locations();
  profile.kernel = kspec;
  profile.transform = tspec;
  plan.accumulate(t, profile.values);
  return profile;
}

double t_max(const AggregationProfile& profile) {
  double best = -std::numeric_limits<double>::infinity();
  bool any = false;
  for (std::size_t j = 0; j < profile.values.size(); ++j) {
    if (!profile.valid[j]) continue;
    any = true;
    const double v =
        profile.transform.is_signed ? std::fabs(profile.values[j]) : profile.values[j];
    if (v > best) best = v;
  }
  if (!any) fail(ErrorCode::AllMasked, "every aggregation target is masked");
  return best;
}

std::string to_string(KernelShape shape) {
  return shape == KernelShape::flat ? "flat" : "epanechnikov";
}

std::string to_string(TransformKind kind) {
  switch (kind) {
    case TransformKind::p: return "p";
    case TransformKind::z: return "z";
    case TransformKind::log: return "log";
  }
  return "?";
}

}  // namespace cnvks
