#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "calreg/core.hpp"

using namespace calreg;

TEST_CASE("quantize routes probabilities to intervals") {
  CHECK(quantize(0.0, 10) == 1);
  CHECK(quantize(1.0, 10) == 10);
  // 0.25 lies in [5/20, 6/20)
  CHECK(quantize(0.25, 20) == 6);
  CHECK(quantize(0.999, 10) == 10);
  CHECK(quantize(0.1, 10) == 2);  // left endpoint belongs to the upper interval
  CHECK_THROWS_AS(quantize(-0.01, 10), DomainError);
  CHECK_THROWS_AS(quantize(1.01, 10), DomainError);
}

TEST_CASE("quantize agrees with enumerated interval bounds") {
  const int m = 20;
  for (int step = 0; step <= 400; ++step) {
    const double p = step / 400.0;
    const int j = quantize(p, m);
    CHECK(j >= 1);
    CHECK(j <= m);
    if (p < 1.0) {
      CHECK(p >= (j - 1) / static_cast<double>(m));
      CHECK(p < j / static_cast<double>(m));
    }
  }
}

TEST_CASE("gaussian cdf matches reference points") {
  CHECK(gaussian_cdf_eval(0, 1, 0) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(gaussian_cdf_eval(2, 3, 2) == doctest::Approx(0.5).epsilon(1e-14));
  // 97.5% point of the standard normal
  CHECK(std::abs(gaussian_cdf_eval(0, 1, 1.959964) - 0.975) < 1e-8);
  CHECK_THROWS_AS(gaussian_cdf_eval(0, 0.0, 1), DomainError);
  CHECK_THROWS_AS(gaussian_cdf_eval(0, -1.0, 1), DomainError);
}

TEST_CASE("predictive cdfs are monotone and bounded") {
  const PredictiveCDF g = PredictiveCDF::gaussian(0.3, 0.7);
  const PredictiveCDF s = PredictiveCDF::step({-1.0, 0.0, 2.0}, {0.2, 0.5, 1.0});
  for (const PredictiveCDF* f : {&g, &s}) {
    double prev = -1.0;
    for (double z = -6.0; z <= 6.0; z += 0.05) {
      const double v = (*f)(z);
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
      CHECK(v >= prev);
      prev = v;
    }
  }
  CHECK(s(-2.0) == 0.0);
  CHECK(s(-1.0) == doctest::Approx(0.2));
  CHECK(s(0.5) == doctest::Approx(0.5));
  CHECK(s(5.0) == doctest::Approx(1.0));
}

TEST_CASE("step cdf construction validates its invariants") {
  CHECK_THROWS_AS(PredictiveCDF::step({}, {}), DomainError);
  CHECK_THROWS_AS(PredictiveCDF::step({0.0, -1.0}, {0.1, 0.2}), DomainError);
  CHECK_THROWS_AS(PredictiveCDF::step({0.0, 1.0}, {0.5, 0.2}), DomainError);
  CHECK_THROWS_AS(PredictiveCDF::step({0.0}, {1.5}), DomainError);
}

TEST_CASE("gaussian quantile inverts the cdf") {
  const PredictiveCDF f = PredictiveCDF::gaussian(1.5, 2.0);
  for (double alpha : {0.05, 0.25, 0.5, 0.9}) {
    const auto q = f.quantile(alpha);
    CHECK(!q.saturated);
    CHECK(f(q.z) == doctest::Approx(alpha).epsilon(1e-9));
  }
  const PredictiveCDF s = PredictiveCDF::step({-1.0, 0.0, 1.0}, {0.2, 0.5, 1.0});
  CHECK(s.quantile(0.4).z == doctest::Approx(0.0));
  CHECK(s.quantile(0.2).z == doctest::Approx(-1.0));
  const PredictiveCDF low = PredictiveCDF::step({-1.0, 0.0}, {0.1, 0.3});
  CHECK(low.quantile(0.9).saturated);
  CHECK(low.quantile(0.9).z == doctest::Approx(0.0));
}

TEST_CASE("rng draws are reproducible per seed and label") {
  RngHandle a(42, "component");
  RngHandle b(42, "component");
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());

  // distinct labels give distinct streams
  RngHandle c(42, "component");
  RngHandle d(42, "other");
  bool differs = false;
  for (int i = 0; i < 16 && !differs; ++i) differs = c.next_u64() != d.next_u64();
  CHECK(differs);
}

TEST_CASE("rng substreams are independent of sibling components") {
  // a component's draws depend only on (root, label), not on what else drew
  RngHandle first(7, "alpha");
  std::vector<std::uint64_t> alone;
  for (int i = 0; i < 8; ++i) alone.push_back(first.next_u64());

  RngHandle other(7, "beta");
  (void)other.normal();
  RngHandle again(7, "alpha");
  for (int i = 0; i < 8; ++i) CHECK(again.next_u64() == alone[i]);
}

TEST_CASE("rng samplers stay in range") {
  RngHandle rng(9, "samplers");
  double mean = 0.0;
  for (int i = 0; i < 20000; ++i) {
    const double u = rng.uniform01();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    mean += rng.normal();
  }
  CHECK(std::abs(mean / 20000.0) < 0.05);
  for (int i = 0; i < 100; ++i) {
    const int v = rng.uniform_int(7);
    CHECK(v >= 0);
    CHECK(v < 7);
  }
}

TEST_CASE("outcome bound validates and checks containment") {
  CHECK_THROWS_AS(OutcomeBound(0.0), DomainError);
  CHECK_THROWS_AS(OutcomeBound(-2.0), DomainError);
  const OutcomeBound b(2.0);
  CHECK(b.contains(0.99));
  CHECK(!b.contains(1.0));
  CHECK(!b.contains(-1.3));
  CHECK(!b.contains(std::nan("")));
}

TEST_CASE("prob grid levels and index lookup") {
  const ProbGrid g(4);
  CHECK(g.size() == 5);
  CHECK(g.level(0) == 0.0);
  CHECK(g.level(4) == 1.0);
  CHECK(g.index_of(0.75) == 3);
  CHECK_THROWS_AS(g.index_of(0.3), DomainError);
  CHECK(g.nearest_index(0.3) == 1);
  CHECK(g.nearest_index(1.4) == 4);
  CHECK_THROWS_AS(ProbGrid(0), DomainError);
}
