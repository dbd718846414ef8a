// Bayesian optimization with LCB acquisition on standard benchmark
// functions, optionally with leave-one-out online recalibration of the GP
// predictive distributions.
#pragma once

#include <Eigen/Dense>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "calreg/core.hpp"
#include "calreg/forecasters.hpp"
#include "calreg/recalibrator.hpp"

namespace calreg {

enum class Benchmark { ackley2, ackley10, sixhumpcamel, beale, mccormick, alpine10 };

struct BenchmarkFn {
  Benchmark id;
  std::string name;
  int dim;
  std::vector<std::pair<double, double>> box;
};

BenchmarkFn benchmark_from_string(const std::string& name);
double benchmark_eval(const BenchmarkFn& fn, std::span<const double> x);

// mu(x) - kappa * sigma(x).
double lcb(const GPState& gp, std::span<const double> x, double kappa);

// The alpha-quantile of the recalibrated predictive at x (an open round on
// `bank`), computed on a grid of `grid_points` spanning mu +- `span` sigma.
double calibrated_lcb(const GPState& gp, const RecalibratorBank& bank,
                      std::span<const double> x, double alpha, double span = 4.0,
                      int grid_points = 257);

// Minimize `objective` over `budget` uniform box samples plus Gaussian
// jitters (1% box width) around the incumbent when one is given. First-seen
// tie rule.
std::vector<double> acquire(const std::function<double(std::span<const double>)>& objective,
                            const std::vector<std::pair<double, double>>& box,
                            std::span<const double> incumbent, int budget, int local_jitters,
                            double jitter_frac, RngHandle& rng);

// Leave-one-out recalibration: fit the GP on all-but-one point, record the
// held-out PIT value, and feed the PIT stream through the bank.
RecalibratorBank calibrate_loo(const GPHyper& hyper, const Eigen::MatrixXd& x,
                               const Eigen::VectorXd& y, int resolution, BankVariant variant,
                               RngHandle& rng);

struct BOOptions {
  int budget = 2048;
  int local_jitters = 32;
  double jitter_frac = 0.01;
  double kappa = 2.0;
  double alpha = 0.05;
  int init_points = 3;
  int bank_resolution = 10;
  double quantile_span = 4.0;  // zgrid half-width in predictive stddevs
  BankVariant variant = BankVariant::expected;
};

struct BOTrace {
  std::vector<std::vector<double>> xs;
  std::vector<double> ys;
  std::vector<double> best;  // incumbent best after each evaluation
  bool aborted = false;
};

// Plain or calibrated BO run: 3 random initial points, then per iteration
// hyper selection, (optionally) LOO recalibration, acquisition, evaluation.
BOTrace bo_run(const BenchmarkFn& fn, int iterations, std::uint64_t seed, bool calibrated,
               const BOOptions& options = {});

}  // namespace calreg
