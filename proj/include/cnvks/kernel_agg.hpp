#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cnvks/marker_tests.hpp"

namespace cnvks {

enum class KernelShape { flat, epanechnikov };
enum class BandwidthMode { constant_width, constant_marker };

struct KernelSpec {
  KernelShape shape = KernelShape::flat;
  BandwidthMode mode = BandwidthMode::constant_marker;
  double width_bp = 0.0;  // constant_width: h > 0, in base pairs
  std::size_t k = 0;      // constant_marker: 1 <= k <= J

  static KernelSpec constant_width(KernelShape shape, double h);
  static KernelSpec constant_marker(KernelShape shape, std::size_t k);
};

enum class TransformKind { p, z, log };

struct TransformSpec {
  TransformKind kind = TransformKind::z;
  bool is_signed = true;
};

/// Per-marker aggregated statistics T_j; masked boundary targets carry NaN
/// and a false validity flag.
struct AggregationProfile {
  std::vector<double> values;
  std::vector<std::uint8_t> valid;
  std::vector<std::int64_t> locations;
  KernelSpec kernel;
  TransformSpec transform;
};

/// Kernel weight of a marker at `lj` for a target at `l0`. Flat: 1 inside
/// |lj-l0| <= h; Epanechnikov: (3/4)(1 - ((lj-l0)/h)^2) on the same support.
double kernel_weight(std::int64_t lj, std::int64_t l0, double h, KernelShape shape);

struct AdaptiveBandwidth {
  double h = 0.0;      // distance to the k-th closest marker
  std::size_t lo = 0;  // support is the index range [lo, hi], inclusive
  std::size_t hi = 0;
};

/// Distance to the k-th closest marker plus the supporting index range.
/// Ties at the boundary distance are all included, enlarging the support.
AdaptiveBandwidth adaptive_bandwidth(std::span<const std::int64_t> locations,
                                     std::int64_t l0, std::size_t k);

/// p-value transformation; the signed variants fold in the direction of
/// association so consistent directions accumulate and mixed ones cancel.
/// p is clamped to [1e-15, 1-1e-15] ahead of the z and log transforms.
double transform_value(double p, double s, const TransformSpec& spec);
double transform_value(const TestResult& result, const TransformSpec& spec);

/// Transforms a whole test track into the aggregation scale.
std::vector<double> transform_track(const MarkerTestTrack& tests,
                                    const TransformSpec& spec);

/// Precomputed weights for aggregating at every marker of a fixed geometry.
/// Building the plan once and reusing it across permutations is what keeps
/// the null loops cheap.
class KernelPlan {
 public:
  KernelPlan(std::span<const std::int64_t> locations, const KernelSpec& spec);

  std::size_t n_targets() const { return targets_.size(); }
  std::size_t n_valid() const { return n_valid_; }
  const std::vector<std::uint8_t>& valid_mask() const { return valid_; }

  /// Weighted means of the transformed scores; masked targets get NaN.
  void accumulate(std::span<const double> t, std::span<double> out) const;

  /// Fused profile maximum: max T_j, or max |T_j| when `use_abs` is set.
  double t_max(std::span<const double> t, bool use_abs) const;

 private:
  struct Target {
    std::uint32_t lo = 0;
    std::uint32_t count = 0;
    std::uint32_t weight_offset = 0;
    bool valid = false;
  };

  std::vector<Target> targets_;
  std::vector<double> weights_;  // normalized, flattened per-target
  std::vector<std::uint8_t> valid_;
  std::size_t n_valid_ = 0;
};

/// Validates a kernel spec against a geometry; throws on h <= 0 or k out of
/// range.
void validate_kernel_spec(const KernelSpec& spec, std::size_t n_markers);

/// Eq.-style kernel aggregation of transformed marker tests evaluated at
/// every (unmasked) marker location.
AggregationProfile aggregate(const MarkerTestTrack& tests, const MarkerTrack& track,
                             const KernelSpec& kspec, const TransformSpec& tspec);

/// Maximum aggregated statistic over valid targets (absolute value in the
/// signed pipeline). Throws AllMasked when no target survives masking.
double t_max(const AggregationProfile& profile);

std::string to_string(KernelShape shape);
std::string to_string(TransformKind kind);

}  // namespace cnvks
