#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "cnvks/errors.hpp"
#include "cnvks/marker_tests.hpp"
#include "cnvks/rng.hpp"
#include "support/stats_ref.hpp"

using namespace cnvks;

namespace {

MarkerTrack random_track(std::size_t n, std::size_t J, std::uint64_t seed,
                         double mean_shift = 0.0) {
  rng::Stream stream(seed, {0});
  std::vector<double> data(n * J);
  for (double& v : data) v = mean_shift + stream.normal();
  std::vector<std::int64_t> locations(J);
  for (std::size_t j = 0; j < J; ++j) locations[j] = static_cast<std::int64_t>(j) * 1000;
  return MarkerTrack::create(std::move(locations), {}, std::move(data), n);
}

}  // namespace

TEST_CASE("OLS slope test matches the reference oracle on the worked example") {
  // Frozen via an independent statistics package: t = 7.5055535, df = 2.
  const std::vector<double> x{1, 2, 3, 4};
  const std::vector<double> y{1, 2, 3, 5};
  const TestResult r = regression_test(x, y);
  CHECK(r.p == doctest::Approx(0.017292370176009153).epsilon(1e-12));
  CHECK(r.s == 1);
}

TEST_CASE("reversing the response flips the sign but not the p-value") {
  const std::vector<double> x{1, 2, 3, 4};
  const std::vector<double> y{1, 2, 3, 5};
  std::vector<double> neg(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) neg[i] = -y[i];
  const TestResult a = regression_test(x, y);
  const TestResult b = regression_test(x, neg);
  CHECK(a.p == b.p);
  CHECK(*a.s == -*b.s);

  const std::vector<double> reversed{4, 3, 2, 1};
  const TestResult c = regression_test(x, std::vector<double>{1, 2, 3, 4});
  const TestResult d = regression_test(x, reversed);
  CHECK(c.p == doctest::Approx(d.p).epsilon(1e-14));
  CHECK(*c.s == 1);
  CHECK(*d.s == -1);
}

TEST_CASE("constant predictor is an error") {
  const std::vector<double> x{1, 1, 1, 1};
  const std::vector<double> y{1, 2, 3, 4};
  CHECK_THROWS_AS(regression_test(x, y), Error);
}

TEST_CASE("perfect fit returns p = 0 instead of erroring") {
  const std::vector<double> x{1, 2, 3, 4};
  const std::vector<double> y{2, 4, 6, 8};
  const TestResult r = regression_test(x, y);
  CHECK(r.p == 0.0);
  CHECK(r.s == 1);

  // Constant response: slope 0, zero residuals, sign by convention.
  const TestResult flat = regression_test(x, std::vector<double>{3, 3, 3, 3});
  CHECK(flat.p == 0.0);
  CHECK(flat.s == 1);
}

TEST_CASE("regression p agrees with the quadrature oracle on random data") {
  rng::Stream stream(314, {0});
  for (int rep = 0; rep < 200; ++rep) {
    const std::size_t n = 3 + stream.below(40);
    std::vector<double> x(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = stream.normal() * 2.0 + 1.0;
      y[i] = 0.3 * x[i] + stream.normal();
    }
    const TestResult got = regression_test(x, y);
    const auto want = stats_ref::ols_slope_test(x, y);
    CHECK(got.p == doctest::Approx(want.p).epsilon(1e-9));
    CHECK(*got.s == want.sign);
  }
}

TEST_CASE("p is invariant to affine rescaling of x and y") {
  rng::Stream stream(315, {0});
  std::vector<double> x(20), y(20);
  for (std::size_t i = 0; i < 20; ++i) {
    x[i] = stream.normal();
    y[i] = 0.5 * x[i] + stream.normal();
  }
  const TestResult base = regression_test(x, y);
  std::vector<double> xs(20), ys(20);
  for (std::size_t i = 0; i < 20; ++i) {
    xs[i] = 3.5 * x[i] - 7.0;
    ys[i] = -0.25 * y[i] + 2.0;
  }
  const TestResult scaled = regression_test(xs, ys);
  CHECK(scaled.p == doctest::Approx(base.p).epsilon(1e-10));
  CHECK(*scaled.s == -*base.s);
}

TEST_CASE("Welch test matches the frozen oracle value") {
  // Frozen via an independent statistics package: t = 6.5465367, df = 2.88235.
  const std::vector<double> x{1.1, 0.9, 2.2, 1.8, 2.0};
  const std::vector<double> groups{0, 0, 1, 1, 1};
  const TestResult r = two_sample_test(x, groups);
  CHECK(r.p == doctest::Approx(0.0081875780382883838).epsilon(1e-10));
  CHECK(r.s == 1);
}

TEST_CASE("equal group means give p = 1") {
  const std::vector<double> x{1, 2, 1, 2};
  const std::vector<double> groups{0, 0, 1, 1};
  const TestResult r = two_sample_test(x, groups);
  CHECK(r.p == doctest::Approx(1.0));
}

TEST_CASE("forced ordering gives a positive sign") {
  const std::vector<double> x{0, 0.01, 10, 10.01};
  const std::vector<double> groups{0, 0, 1, 1};
  CHECK(*two_sample_test(x, groups).s == 1);
}

TEST_CASE("degenerate groups and zero variance are errors") {
  const std::vector<double> x{1, 2, 3, 4};
  try {
    (void)two_sample_test(x, std::vector<double>{0, 1, 1, 1});
    FAIL("expected error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DegenerateGroups);
  }
  try {
    (void)two_sample_test(std::vector<double>{5, 5, 5, 5},
                          std::vector<double>{0, 0, 1, 1});
    FAIL("expected error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ZeroVariance);
  }
}

TEST_CASE("run_marker_tests matches per-column tests and keeps shape") {
  const std::size_t n = 30, J = 12;
  const MarkerTrack track = random_track(n, J, 41, 1.5);
  rng::Stream stream(42, {0});
  std::vector<double> y(n);
  for (double& v : y) v = stream.normal();
  const Phenotype phen = Phenotype::continuous(y);

  const MarkerTestTrack tests = run_marker_tests(track, phen);
  REQUIRE(tests.size() == J);
  CHECK(tests.is_signed);
  for (std::size_t j = 0; j < J; ++j) {
    const auto col = track.column(j);
    const TestResult direct =
        regression_test(std::vector<double>(col.begin(), col.end()), y);
    CHECK(tests.results[j].p == doctest::Approx(direct.p).epsilon(1e-10));
    CHECK(*tests.results[j].s == *direct.s);
  }
}

TEST_CASE("run_marker_tests with a binary phenotype uses the Welch test") {
  const std::size_t n = 24, J = 6;
  const MarkerTrack track = random_track(n, J, 7);
  std::vector<double> groups(n);
  for (std::size_t i = 0; i < n; ++i) groups[i] = i % 2 == 0 ? 1.0 : 0.0;
  const Phenotype phen = Phenotype::binary(groups);
  const MarkerTestTrack tests = run_marker_tests(track, phen);
  REQUIRE(tests.size() == J);
  for (std::size_t j = 0; j < J; ++j) {
    const auto col = track.column(j);
    const TestResult direct =
        two_sample_test(std::vector<double>(col.begin(), col.end()), groups);
    CHECK(tests.results[j].p == doctest::Approx(direct.p).epsilon(1e-10));
    CHECK(*tests.results[j].s == *direct.s);
  }
}

TEST_CASE("permuting the phenotype changes p-values but not the shape") {
  const std::size_t n = 40, J = 8;
  const MarkerTrack track = random_track(n, J, 9);
  rng::Stream stream(10, {0});
  std::vector<double> y(n);
  for (double& v : y) v = stream.normal();
  const MarkerTestTrack a = run_marker_tests(track, Phenotype::continuous(y));

  const auto perm = rng::Stream(11, {0}).permutation(n);
  std::vector<double> yp(n);
  for (std::size_t i = 0; i < n; ++i) yp[i] = y[perm[i]];
  const MarkerTestTrack b = run_marker_tests(track, Phenotype::continuous(yp));
  CHECK(a.size() == b.size());
  CHECK(a.is_signed == b.is_signed);
  bool any_changed = false;
  for (std::size_t j = 0; j < J; ++j) any_changed |= (a.results[j].p != b.results[j].p);
  CHECK(any_changed);
}

TEST_CASE("marker test errors carry the marker index") {
  const std::size_t n = 10;
  std::vector<double> data(n * 2, 0.0);
  rng::Stream stream(1, {0});
  for (std::size_t i = 0; i < n; ++i) data[i] = stream.normal();  // marker 0 varies
  const MarkerTrack track = MarkerTrack::create({100, 200}, {}, std::move(data), n);
  std::vector<double> y(n);
  for (double& v : y) v = stream.normal();
  try {
    (void)run_marker_tests(track, Phenotype::continuous(y));
    FAIL("expected error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ZeroVariancePredictor);
    CHECK(std::string(e.what()).find("marker 1") != std::string::npos);
  }
}

TEST_CASE("null p-values are uniform under independent Gaussian data") {
  // Monte Carlo oracle: with y independent of x the two-sided slope p-value
  // is exactly Uniform(0,1), testable by KS over many replicates.
  rng::Stream stream(2718, {0});
  const int reps = 4000;
  const std::size_t n = 25;
  std::vector<double> pvals;
  pvals.reserve(reps);
  for (int r = 0; r < reps; ++r) {
    std::vector<double> x(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = stream.normal();
      y[i] = stream.normal();
    }
    pvals.push_back(regression_test(x, y).p);
  }
  CHECK(stats_ref::ks_uniform_pvalue(pvals) > 0.001);
}

TEST_CASE("Welch null p-values are close to uniform") {
  rng::Stream stream(2719, {0});
  const int reps = 2000;
  const std::size_t n = 25;
  std::vector<double> groups(n);
  for (std::size_t i = 0; i < n; ++i) groups[i] = i < 12 ? 0.0 : 1.0;
  std::vector<double> pvals;
  pvals.reserve(reps);
  for (int r = 0; r < reps; ++r) {
    std::vector<double> x(n);
    for (double& v : x) v = stream.normal();
    pvals.push_back(two_sample_test(x, groups).p);
  }
  CHECK(stats_ref::ks_uniform_pvalue(pvals) > 0.001);
}
