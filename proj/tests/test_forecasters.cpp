#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "calreg/forecasters.hpp"
#include "oracles.hpp"

using namespace calreg;

TEST_CASE("blr prior predictive") {
  const BayesLinReg model(2, 1.0, 0.25);
  const std::vector<double> x{0.5, -1.5};
  CHECK(model.predictive_mean(x) == doctest::Approx(0.0));
  const double norm2 = 0.25 + 2.25;
  CHECK(model.predictive_var(x) == doctest::Approx(1.0 * (1.0 + norm2) + 0.25));
}

TEST_CASE("blr one-observation posterior in closed form") {
  // x = [1], y = 2, tau^2 = 1, noise = 1: mean = (I + Phi^T Phi)^-1 Phi^T y
  BayesLinReg model(1, 1.0, 1.0);
  model.update(std::vector<double>{1.0}, 2.0);
  CHECK(model.predictive_mean(std::vector<double>{1.0}) == doctest::Approx(4.0 / 3.0));
}

TEST_CASE("blr incremental equals batch refit") {
  RngHandle rng(31, "test/blr");
  BayesLinReg incremental(3, 1.0, 0.5);
  BayesLinReg batch(3, 1.0, 0.5);

  Eigen::MatrixXd xs(40, 3);
  Eigen::VectorXd ys(40);
  for (int i = 0; i < 40; ++i) {
    for (int j = 0; j < 3; ++j) xs(i, j) = rng.normal();
    ys(i) = rng.normal();
  }
  // two batches vs one
  incremental.update_batch(xs.topRows(25), ys.head(25));
  incremental.update_batch(xs.bottomRows(15), ys.tail(15));
  batch.update_batch(xs, ys);

  for (int rep = 0; rep < 10; ++rep) {
    std::vector<double> q{rng.normal(), rng.normal(), rng.normal()};
    CHECK(incremental.predictive_mean(q) ==
          doctest::Approx(batch.predictive_mean(q)).epsilon(1e-10));
    CHECK(incremental.predictive_var(q) ==
          doctest::Approx(batch.predictive_var(q)).epsilon(1e-10));
  }
}

TEST_CASE("blr predictive variance never grows with data") {
  RngHandle rng(32, "test/blrvar");
  BayesLinReg model(2, 1.0, 1.0);
  const std::vector<std::vector<double>> queries{{0.0, 0.0}, {1.0, -1.0}, {2.5, 0.3}};
  std::vector<double> prev;
  for (const auto& q : queries) prev.push_back(model.predictive_var(q));
  for (int t = 0; t < 200; ++t) {
    model.update(std::vector<double>{rng.normal(), rng.normal()}, rng.normal());
    if (t % 20 != 0) continue;
    for (std::size_t k = 0; k < queries.size(); ++k) {
      const double v = model.predictive_var(queries[k]);
      CHECK(v <= prev[k] + 1e-12);
      prev[k] = v;
    }
  }
}

TEST_CASE("blr validates dimensions") {
  BayesLinReg model(2, 1.0, 1.0);
  CHECK_THROWS_AS(model.update(std::vector<double>{1.0}, 0.0), DomainError);
  CHECK_THROWS_AS(model.predictive_mean(std::vector<double>{1.0, 2.0, 3.0}), DomainError);
}

TEST_CASE("gp interpolates training points under tiny noise") {
  Eigen::MatrixXd x(3, 1);
  x << -1.0, 0.0, 2.0;
  Eigen::VectorXd y(3);
  y << 0.5, -0.2, 1.5;
  const GPState gp = gp_fit(x, y, {1.0, 1.0, 1e-8});
  for (int i = 0; i < 3; ++i) {
    const auto [mean, var] = gp_predict(gp, std::vector<double>{x(i, 0)});
    CHECK(std::abs(mean - y(i)) < 1e-3);
    CHECK(var >= 0.0);
  }
}

TEST_CASE("gp reverts to the prior far from data") {
  Eigen::MatrixXd x(1, 1);
  x << 0.0;
  Eigen::VectorXd y(1);
  y << 3.0;
  const GPHyper hyper{2.0, 0.5, 1e-4};
  const GPState gp = gp_fit(x, y, hyper);
  const auto [mean, var] = gp_predict(gp, std::vector<double>{50.0});
  CHECK(std::abs(mean) < 1e-6);
  CHECK(var == doctest::Approx(hyper.signal_var + hyper.noise_var));
}

TEST_CASE("gp predictions match a dense elimination oracle") {
  RngHandle rng(33, "test/gp");
  Eigen::MatrixXd x(5, 1);
  Eigen::VectorXd y(5);
  for (int i = 0; i < 5; ++i) {
    x(i, 0) = rng.uniform(-2.0, 2.0);
    y(i) = rng.normal();
  }
  const GPHyper hyper{1.3, 0.8, 1e-4};
  const GPState gp = gp_fit(x, y, hyper);

  // oracle: solve (K + noise I) alpha = y by partial-pivot elimination
  std::vector<std::vector<double>> kn(5, std::vector<double>(5));
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j) {
      kn[i][j] = rbf_kernel(hyper, x.row(i).transpose(), x.row(j).transpose());
      if (i == j) kn[i][j] += hyper.noise_var;
    }
  const auto solved = oracles::gaussian_elimination(kn, {y(0), y(1), y(2), y(3), y(4)});

  for (double q : {-1.5, -0.3, 0.4, 1.9}) {
    Eigen::VectorXd qv(1);
    qv << q;
    std::vector<double> ks(5);
    for (int i = 0; i < 5; ++i) ks[i] = rbf_kernel(hyper, x.row(i).transpose(), qv);
    double mean = 0.0;
    for (int i = 0; i < 5; ++i) mean += ks[i] * solved.solution[i];

    std::vector<std::vector<double>> kn2 = kn;
    const auto w = oracles::gaussian_elimination(kn2, ks);
    double quad = 0.0;
    for (int i = 0; i < 5; ++i) quad += ks[i] * w.solution[i];
    const double var = hyper.signal_var - quad + hyper.noise_var;

    const auto [gm, gv] = gp_predict(gp, std::vector<double>{q});
    CHECK(gm == doctest::Approx(mean).epsilon(1e-8));
    CHECK(gv == doctest::Approx(var).epsilon(1e-8));
  }

  // log marginal likelihood against the same oracle
  double quad_y = 0.0;
  for (int i = 0; i < 5; ++i) quad_y += y(i) * solved.solution[i];
  const double lml_oracle =
      -0.5 * quad_y - 0.5 * solved.log_det - 2.5 * std::log(2.0 * M_PI);
  CHECK(gp_log_marginal(gp) == doctest::Approx(lml_oracle).epsilon(1e-8));
}

TEST_CASE("gp hyper selection maximizes the log marginal likelihood") {
  RngHandle rng(34, "test/gphyper");
  Eigen::MatrixXd x(8, 1);
  Eigen::VectorXd y(8);
  for (int i = 0; i < 8; ++i) {
    x(i, 0) = rng.uniform(-3.0, 3.0);
    y(i) = std::sin(x(i, 0));
  }
  const std::vector<GPHyper> grid = {
      {0.5, 0.3, 1e-6}, {0.5, 1.0, 1e-6}, {1.0, 0.3, 1e-6},
      {1.0, 1.0, 1e-6}, {2.0, 3.0, 1e-6},
  };
  const GPHyper best = gp_select_hypers(x, y, grid);
  const double best_lml = gp_log_marginal(gp_fit(x, y, best));
  for (const GPHyper& h : grid)
    CHECK(best_lml >= gp_log_marginal(gp_fit(x, y, h)) - 1e-12);

  // singleton grid returns its element
  const std::vector<GPHyper> single{{0.7, 0.4, 1e-6}};
  const GPHyper chosen = gp_select_hypers(x, y, single);
  CHECK(chosen.signal_var == doctest::Approx(0.7));
  CHECK(chosen.lengthscale == doctest::Approx(0.4));

  CHECK_THROWS_AS(gp_select_hypers(x.topRows(1), y.head(1), grid), StateError);
}

TEST_CASE("zero targets prefer the smallest signal variance") {
  Eigen::MatrixXd x(6, 1);
  for (int i = 0; i < 6; ++i) x(i, 0) = i;
  const Eigen::VectorXd y = Eigen::VectorXd::Zero(6);
  std::vector<GPHyper> grid;
  for (double sf : {0.25, 1.0, 4.0}) grid.push_back({sf, 1.0, 1e-4});
  const GPHyper best = gp_select_hypers(x, y, grid);
  CHECK(best.signal_var == doctest::Approx(0.25));
}

TEST_CASE("gp ties break toward the smallest lengthscale") {
  // far-apart points at any of these lengthscales give identical diagonal
  // kernels, so the likelihoods tie exactly
  Eigen::MatrixXd x(2, 1);
  x << 0.0, 1e6;
  Eigen::VectorXd y(2);
  y << 0.3, -0.4;
  const std::vector<GPHyper> grid{{1.0, 5.0, 1e-4}, {1.0, 1.0, 1e-4}, {1.0, 3.0, 1e-4}};
  const GPHyper best = gp_select_hypers(x, y, grid);
  CHECK(best.lengthscale == doctest::Approx(1.0));
}

TEST_CASE("gp fit validates and reports failures") {
  Eigen::MatrixXd x(2, 1);
  x << 0.0, 0.0;  // duplicate points
  Eigen::VectorXd y(2);
  y << 1.0, -1.0;
  // duplicates with zero noise need the jitter path
  const GPState gp = gp_fit(x, y, {1.0, 1.0, 0.0});
  CHECK(gp.jitter > 0.0);
  CHECK_THROWS_AS(gp_fit(x, y, {-1.0, 1.0, 0.0}), DomainError);
  Eigen::MatrixXd empty(0, 1);
  Eigen::VectorXd ey(0);
  CHECK_THROWS_AS(gp_fit(empty, ey, {1.0, 1.0, 1e-6}), DomainError);
}
