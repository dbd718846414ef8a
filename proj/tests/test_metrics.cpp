#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "calreg/metrics.hpp"
#include "oracles.hpp"

using namespace calreg;

TEST_CASE("rho counts conditional frequencies") {
  CalibLedger ledger({0.0}, 2);
  CHECK(ledger.rho(0, 0.5) == 0.0);  // never predicted

  // predicted 0.5 three times, outcome <= y twice
  ledger.record(std::vector<double>{0.5}, -1.0);
  ledger.record(std::vector<double>{0.5}, -1.0);
  ledger.record(std::vector<double>{0.5}, 1.0);
  CHECK(ledger.rho(0, 0.5) == doctest::Approx(2.0 / 3.0));

  // all outcomes <= y when 1 is played
  ledger.record(std::vector<double>{1.0}, -2.0);
  ledger.record(std::vector<double>{1.0}, -2.0);
  CHECK(ledger.rho(0, 1.0) == doctest::Approx(1.0));
}

TEST_CASE("calibration error sums weighted level gaps") {
  CalibLedger empty({0.0}, 2);
  CHECK(empty.calib_error(0) == 0.0);

  // single round, played 0.5, outcome above y
  CalibLedger one({0.0}, 2);
  one.record(std::vector<double>{0.5}, 1.0);
  CHECK(one.calib_error(0) == doctest::Approx(0.5));

  // uniform plays over {0, 1/2, 1} with rho = (0, 1, 1):
  // 0 * 1/3 + 0.5 * 1/3 + 0 * 1/3 = 1/6
  CalibLedger uni({0.0}, 2);
  uni.record(std::vector<double>{0.0}, 1.0);
  uni.record(std::vector<double>{0.5}, -1.0);
  uni.record(std::vector<double>{1.0}, -1.0);
  CHECK(uni.calib_error(0) == doctest::Approx(1.0 / 6.0));

  // perfectly calibrated plays at 1/2
  CalibLedger cal({0.0}, 2);
  cal.record(std::vector<double>{0.5}, -1.0);
  cal.record(std::vector<double>{0.5}, 1.0);
  CHECK(cal.calib_error(0) == doctest::Approx(0.0));
}

TEST_CASE("incremental ledger equals a brute-force recount") {
  RngHandle rng(21, "test/ledger");
  const std::vector<double> probes{-0.5, 0.0, 0.5};
  const int resolution = 10;
  CalibLedger ledger(probes, resolution);

  const long long rounds = 1000;
  std::vector<std::vector<double>> g_log;
  std::vector<double> y_log;
  for (long long t = 0; t < rounds; ++t) {
    std::vector<double> g(probes.size());
    double base = rng.uniform01() * 0.7;
    for (std::size_t k = 0; k < probes.size(); ++k)
      g[k] = std::round(std::min(1.0, base + 0.15 * k) * resolution) / resolution;
    const double y = rng.uniform01() * 2.0 - 1.0;
    ledger.record(g, y);
    g_log.push_back(g);
    y_log.push_back(y);
  }

  for (std::size_t k = 0; k < probes.size(); ++k) {
    // recount from the raw round log
    double expected = 0.0;
    for (int i = 0; i <= resolution; ++i) {
      const double level = static_cast<double>(i) / resolution;
      long long plays = 0, hits = 0;
      for (long long t = 0; t < rounds; ++t) {
        if (std::abs(g_log[t][k] - level) > 1e-12) continue;
        plays += 1;
        if (y_log[t] <= probes[k]) hits += 1;
      }
      if (plays == 0) continue;
      expected += std::abs(static_cast<double>(hits) / plays - level) *
                  (static_cast<double>(plays) / rounds);
    }
    CHECK(ledger.calib_error(static_cast<int>(k)) == doctest::Approx(expected).epsilon(1e-14));
  }
}

TEST_CASE("crps of a step at the outcome is zero") {
  const std::vector<double> zgrid = uniform_grid(-1.0, 1.0, 201);
  const double y = zgrid[120];  // on-grid outcome
  const PredictiveCDF f = PredictiveCDF::step({y}, {1.0});
  CHECK(crps(y, f, zgrid) == doctest::Approx(0.0));
}

TEST_CASE("crps matches the closed-form gaussian value") {
  const double sigma = 1.0;
  const std::vector<double> zgrid = uniform_grid(-6.0 * sigma, 6.0 * sigma, 200);
  for (double y : {0.0, 0.3, -1.2, 2.5}) {
    const PredictiveCDF f = PredictiveCDF::gaussian(0.0, sigma);
    const double approx = crps(y, f, zgrid);
    const double exact = oracles::gaussian_crps(y, 0.0, sigma);
    CHECK(std::abs(approx - exact) / exact < 1e-3);
  }
  // refining the grid does not move the value (within 1e-3 relative)
  const std::vector<double> fine = uniform_grid(-6.0, 6.0, 1200);
  const PredictiveCDF f = PredictiveCDF::gaussian(0.0, 1.0);
  CHECK(crps(0.4, f, zgrid) == doctest::Approx(crps(0.4, f, fine)).epsilon(1e-3));
}

TEST_CASE("crps of the zero cdf integrates the indicator tail") {
  const double bound = 2.0;
  const std::vector<double> zgrid = uniform_grid(-bound / 2, bound / 2, 200);
  const PredictiveCDF f = PredictiveCDF::step({bound}, {0.0});  // identically 0 on the domain
  CHECK(crps(0.0, f, zgrid) == doctest::Approx(bound / 2));
  CHECK_THROWS_AS(crps(5.0, f, zgrid), DomainError);
}

TEST_CASE("crps is non-negative") {
  RngHandle rng(22, "test/crpspos");
  const std::vector<double> zgrid = uniform_grid(-1.0, 1.0, 200);
  for (int rep = 0; rep < 50; ++rep) {
    const double mu = rng.uniform(-0.5, 0.5);
    const double sd = rng.uniform(0.05, 1.0);
    const double y = rng.uniform(-1.0, 1.0);
    CHECK(crps(y, PredictiveCDF::gaussian(mu, sd), zgrid) >= 0.0);
  }
}

TEST_CASE("crps regret is the mean difference") {
  MetricTrace trace;
  CHECK(crps_regret(trace) == 0.0);
  TraceRow a;
  a.f_crps = 0.5;
  a.g_crps = 0.5;
  trace.rows.push_back(a);
  CHECK(crps_regret(trace) == doctest::Approx(0.0));  // G = F
  TraceRow b;
  b.f_crps = oracles::gaussian_crps(0.3, 0.0, 1.0);
  b.g_crps = oracles::gaussian_crps(0.3, 0.1, 1.0);
  trace.rows.push_back(b);
  CHECK(crps_regret(trace) == doctest::Approx((b.g_crps - b.f_crps) / 2.0));
}

TEST_CASE("pit calibration score on hand cases") {
  const std::vector<double> levels = default_pit_levels();
  CHECK(pit_calib_score(std::vector<double>{}, levels) == 0.0);

  // proportional occupancy of every bin scores zero
  std::vector<double> uniform;
  const std::vector<double> widths{0.2, 0.2, 0.1, 0.1, 0.2, 0.2};
  for (std::size_t j = 0; j < widths.size(); ++j) {
    const int copies = static_cast<int>(std::round(widths[j] * 10));
    for (int c = 0; c < copies; ++c)
      uniform.push_back(levels[j] + 0.5 * (levels[j + 1] - levels[j]));
  }
  CHECK(pit_calib_score(uniform, levels) == doctest::Approx(0.0));

  // everything in the first bin (width 0.2):
  // 0.64 + 0.04 + 0.01 + 0.01 + 0.04 + 0.04 = 0.78
  const std::vector<double> lumped(10, 0.1);
  CHECK(pit_calib_score(lumped, levels) == doctest::Approx(0.78));

  // single observation at 0.5 lands in bin (0.4, 0.5]
  const std::vector<double> single{0.5};
  double expected = 0.0;
  const std::vector<double> occupancy{0, 0, 1, 0, 0, 0};
  for (std::size_t j = 0; j < widths.size(); ++j)
    expected += (widths[j] - occupancy[j]) * (widths[j] - occupancy[j]);
  CHECK(pit_calib_score(single, levels) == doctest::Approx(expected));
  CHECK(pit_calib_score(single, levels) == doctest::Approx(0.98));
}

TEST_CASE("incremental pit histogram matches the batch score") {
  RngHandle rng(23, "test/pithist");
  PitHist hist(default_pit_levels());
  std::vector<double> seen;
  for (int t = 0; t < 500; ++t) {
    const double u = rng.uniform01();
    hist.add(u);
    seen.push_back(u);
    if (t % 50 == 0)
      CHECK(hist.score() == doctest::Approx(pit_calib_score(seen, default_pit_levels())));
  }
}

TEST_CASE("coverage check returns both sides of the interval limit") {
  MetricTrace empty;
  empty.probes = {-1.0, 1.0};
  CHECK(coverage_check(empty, -1.0, 1.0) == std::pair<double, double>{0.0, 0.0});

  MetricTrace trace;
  trace.probes = {-1.0, 1.0};
  const std::vector<std::pair<std::vector<double>, double>> rounds = {
      {{0.1, 0.9}, -2.0}, {{0.2, 0.8}, 0.0}, {{0.0, 1.0}, 0.5}, {{0.25, 0.75}, 3.0}};
  for (const auto& [g, y] : rounds) {
    TraceRow row;
    row.g_at_probe = g;
    row.y = y;
    trace.rows.push_back(row);
  }
  const auto [mass, freq] = coverage_check(trace, -1.0, 1.0);
  CHECK(mass == doctest::Approx((0.8 + 0.6 + 1.0 + 0.5) / 4.0));
  CHECK(freq == doctest::Approx(0.5));
  CHECK_THROWS_AS(coverage_check(trace, -0.5, 1.0), DomainError);
}

TEST_CASE("perfectly sharp correct forecasts have equal coverage sides") {
  MetricTrace trace;
  trace.probes = {-1.0, 1.0};
  for (int t = 0; t < 10; ++t) {
    TraceRow row;
    row.g_at_probe = {0.0, 1.0};  // all mass inside the interval
    row.y = 0.1 * t - 0.5;        // outcomes inside too
    trace.rows.push_back(row);
  }
  const auto [mass, freq] = coverage_check(trace, -1.0, 1.0);
  CHECK(mass == doctest::Approx(freq));
}

TEST_CASE("markov exceedance counts realized blowups") {
  const std::vector<std::pair<double, double>> equal(5, {1.0, 1.0});
  CHECK(markov_exceedance(equal, 2.0) == doctest::Approx(0.0));

  const std::vector<std::pair<double, double>> hand{
      {1.0, 1.0}, {1.0, 2.0}, {1.0, 4.0}, {2.0, 1.0}, {0.5, 3.0}};
  CHECK(markov_exceedance(hand, 2.0) == doctest::Approx(3.0 / 5.0));

  CHECK_THROWS_AS(markov_exceedance(hand, 1.0), DomainError);
  CHECK_THROWS_AS(markov_exceedance(hand, 0.5), DomainError);
}
