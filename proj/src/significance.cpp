#include "cnvks/significance.hpp"

#include <algorithm>
#include <cmath>

#include "cnvks/errors.hpp"
#include "cnvks/parallel.hpp"
#include "cnvks/rng.hpp"

namespace cnvks {

namespace {

std::uint64_t factorial(std::size_t n) {
  std::uint64_t f = 1;
  for (std::size_t i = 2; i <= n; ++i) f *= i;
  return f;
}

NullDistribution finish(std::vector<double> draws, NullMethod method,
                        std::uint64_t seed, bool exhaustive) {
  std::sort(draws.begin(), draws.end());
  NullDistribution null;
  null.draws = std::move(draws);
  null.method = method;
  null.seed = seed;
  null.exhaustive = exhaustive;
  return null;
}

// One permutation draw: marker tests against the permuted phenotype,
// transform, aggregate, take the profile maximum.
double permutation_draw(const MarkerTestEngine& engine, const KernelPlan& plan,
                        const TransformSpec& tspec,
                        std::span<const std::uint32_t> perm) {
  const std::size_t J = engine.n_markers();
  std::vector<double> p(J), s(J), t(J);
  engine.test_permuted(perm, p, s);
  for (std::size_t j = 0; j < J; ++j) t[j] = transform_value(p[j], s[j], tspec);
  return plan.t_max(t, tspec.is_signed);
}

}  // namespace

NullDistribution permutation_null(const MarkerTrack& track, const Phenotype& phen,
                                  const KernelSpec& kspec, const TransformSpec& tspec,
                                  std::size_t B, std::uint64_t seed, int workers) {
  if (B < 1) fail(ErrorCode::InvalidB, "permutation count must be >= 1");
  const MarkerTestEngine engine(track, phen);
  const KernelPlan plan(track.locations(), kspec);
  if (plan.n_valid() == 0) fail(ErrorCode::AllMasked, "no valid aggregation target");
  const std::size_t n = track.n_subjects();
  std::vector<double> draws(B);
  parallel_for(B, workers, [&](std::size_t b) {
    rng::Stream stream(seed, {b});
    const auto perm = stream.permutation(n);
    draws[b] = permutation_draw(engine, plan, tspec, perm);
  });
  return finish(std::move(draws), NullMethod::permutation, seed, false);
}

NullDistribution exhaustive_permutation_null(const MarkerTrack& track,
                                             const Phenotype& phen,
                                             const KernelSpec& kspec,
                                             const TransformSpec& tspec, int workers) {
  const std::size_t n = track.n_subjects();
  if (n > 8) {
    fail(ErrorCode::InvalidB, "exhaustive mode supports at most 8 subjects");
  }
  const MarkerTestEngine engine(track, phen);
  const KernelPlan plan(track.locations(), kspec);
  if (plan.n_valid() == 0) fail(ErrorCode::AllMasked, "no valid aggregation target");
  const std::uint64_t count = factorial(n);
  // Materialize every ordering once, in lexicographic order.
  std::vector<std::vector<std::uint32_t>> perms;
  perms.reserve(count);
  std::vector<std::uint32_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = static_cast<std::uint32_t>(i);
  do {
    perms.push_back(perm);
  } while (std::next_permutation(perm.begin(), perm.end()));
  std::vector<double> draws(perms.size());
  parallel_for(perms.size(), workers, [&](std::size_t b) {
    draws[b] = permutation_draw(engine, plan, tspec, perms[b]);
  });
  return finish(std::move(draws), NullMethod::permutation, 0, true);
}

NullDistribution monte_carlo_null(const std::vector<std::int64_t>& locations,
                                  const KernelSpec& kspec, const TransformSpec& tspec,
                                  std::size_t B, std::uint64_t seed, int workers) {
  if (B < 1) fail(ErrorCode::InvalidB, "draw count must be >= 1");
  const KernelPlan plan(locations, kspec);
  if (plan.n_valid() == 0) fail(ErrorCode::AllMasked, "no valid aggregation target");
  const std::size_t J = locations.size();
  std::vector<double> draws(B);
  parallel_for(B, workers, [&](std::size_t b) {
    rng::Stream stream(seed, {b});
    std::vector<double> t(J);
    for (std::size_t j = 0; j < J; ++j) {
      const double p = stream.uniform_open();
      const double s = tspec.is_signed ? (stream.bernoulli(0.5) ? 1.0 : -1.0) : 1.0;
      t[j] = transform_value(p, s, tspec);
    }
    draws[b] = plan.t_max(t, tspec.is_signed);
  });
  return finish(std::move(draws), NullMethod::monte_carlo, seed, false);
}

double global_p(double t_max_value, const NullDistribution& null) {
  if (null.draws.empty()) fail(ErrorCode::InvalidB, "empty null distribution");
  const auto it =
      std::lower_bound(null.draws.begin(), null.draws.end(), t_max_value);
  const std::size_t count = static_cast<std::size_t>(null.draws.end() - it);
  return static_cast<double>(1 + count) / static_cast<double>(null.B() + 1);
}

double threshold(const NullDistribution& null, double alpha) {
  if (null.draws.empty()) fail(ErrorCode::InvalidB, "empty null distribution");
  if (!(alpha > 0.0 && alpha < 1.0)) {
    fail(ErrorCode::InvalidAlpha, "alpha must be in (0,1)");
  }
  const std::size_t B = null.B();
  const double raw = (1.0 - alpha) * static_cast<double>(B + 1);
  std::size_t rank = static_cast<std::size_t>(std::ceil(raw - 1e-9));
  rank = std::clamp<std::size_t>(rank, 1, B);
  return null.draws[rank - 1];
}

ScanResult scan(const MarkerTrack& track, const Phenotype& phen,
                const KernelSpec& kspec, const TransformSpec& tspec, std::size_t B,
                double alpha, std::uint64_t seed, int workers, bool exhaustive) {
  if (!exhaustive && B < 1) fail(ErrorCode::InvalidB, "permutation count must be >= 1");
  if (!(alpha > 0.0 && alpha < 1.0)) {
    fail(ErrorCode::InvalidAlpha, "alpha must be in (0,1)");
  }
  ScanResult result;
  result.alpha = alpha;
  const MarkerTestTrack tests = run_marker_tests(track, phen);
  result.profile = aggregate(tests, track, kspec, tspec);
  result.observed_t_max = t_max(result.profile);
  result.null = exhaustive
                    ? exhaustive_permutation_null(track, phen, kspec, tspec, workers)
                    : permutation_null(track, phen, kspec, tspec, B, seed, workers);
  result.global_p = global_p(result.observed_t_max, result.null);
  result.threshold = threshold(result.null, alpha);
  for (std::size_t j = 0; j < result.profile.values.size(); ++j) {
    if (!result.profile.valid[j]) continue;
    const double v = tspec.is_signed ? std::fabs(result.profile.values[j])
                                     : result.profile.values[j];
    if (v > result.threshold) result.significant_markers.push_back(j);
  }
  return result;
}

}  // namespace cnvks
