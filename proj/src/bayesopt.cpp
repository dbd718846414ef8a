#include "calreg/bayesopt.hpp"

#include <algorithm>
#include <cmath>

#include "calreg/metrics.hpp"

namespace calreg {

namespace {

std::vector<std::pair<double, double>> square_box(double lo, double hi, int dim) {
  return std::vector<std::pair<double, double>>(static_cast<std::size_t>(dim), {lo, hi});
}

double ackley(std::span<const double> x) {
  const double d = static_cast<double>(x.size());
  double s2 = 0.0, sc = 0.0;
  static const double two_pi = 6.283185307179586477;
  for (double xi : x) {
    s2 += xi * xi;
    sc += std::cos(two_pi * xi);
  }
  return -20.0 * std::exp(-0.2 * std::sqrt(s2 / d)) - std::exp(sc / d) + 20.0 + std::exp(1.0);
}

double sixhump(double x1, double x2) {
  return (4.0 - 2.1 * x1 * x1 + x1 * x1 * x1 * x1 / 3.0) * x1 * x1 + x1 * x2 +
         (-4.0 + 4.0 * x2 * x2) * x2 * x2;
}

double beale(double x1, double x2) {
  const double a = 1.5 - x1 + x1 * x2;
  const double b = 2.25 - x1 + x1 * x2 * x2;
  const double c = 2.625 - x1 + x1 * x2 * x2 * x2;
  return a * a + b * b + c * c;
}

double mccormick(double x1, double x2) {
  return std::sin(x1 + x2) + (x1 - x2) * (x1 - x2) - 1.5 * x1 + 2.5 * x2 + 1.0;
}

double alpine1(std::span<const double> x) {
  double s = 0.0;
  for (double xi : x) s += std::abs(xi * std::sin(xi) + 0.1 * xi);
  return s;
}

}  // namespace

BenchmarkFn benchmark_from_string(const std::string& name) {
  if (name == "ackley2") return {Benchmark::ackley2, name, 2, square_box(-5, 5, 2)};
  if (name == "ackley10") return {Benchmark::ackley10, name, 10, square_box(-5, 5, 10)};
  if (name == "sixhumpcamel")
    return {Benchmark::sixhumpcamel, name, 2, {{-3.0, 3.0}, {-2.0, 2.0}}};
  if (name == "beale") return {Benchmark::beale, name, 2, square_box(-4.5, 4.5, 2)};
  if (name == "mccormick") return {Benchmark::mccormick, name, 2, {{-1.5, 4.0}, {-3.0, 4.0}}};
  if (name == "alpine10") return {Benchmark::alpine10, name, 10, square_box(-10, 10, 10)};
  throw DomainError("unknown benchmark: " + name);
}

double benchmark_eval(const BenchmarkFn& fn, std::span<const double> x) {
  if (static_cast<int>(x.size()) != fn.dim) throw DomainError("benchmark_eval: dimension mismatch");
  for (int i = 0; i < fn.dim; ++i)
    if (x[i] < fn.box[i].first - 1e-12 || x[i] > fn.box[i].second + 1e-12)
      throw DomainError("benchmark_eval: point outside search box");
  switch (fn.id) {
    case Benchmark::ackley2:
    case Benchmark::ackley10: return ackley(x);
    case Benchmark::sixhumpcamel: return sixhump(x[0], x[1]);
    case Benchmark::beale: return beale(x[0], x[1]);
    case Benchmark::mccormick: return mccormick(x[0], x[1]);
    case Benchmark::alpine10: return alpine1(x);
  }
  throw DomainError("benchmark_eval: unknown benchmark");
}

double lcb(const GPState& gp, std::span<const double> x, double kappa) {
  if (!(kappa >= 0.0)) throw DomainError("lcb: kappa must be non-negative");
  const auto [mean, var] = gp_predict(gp, x);
  return mean - kappa * std::sqrt(var);
}

double calibrated_lcb(const GPState& gp, const RecalibratorBank& bank,
                      std::span<const double> x, double alpha, double span, int grid_points) {
  const auto [mean, var] = gp_predict(gp, x);
  const double sd = std::sqrt(var);
  const PredictiveCDF f = PredictiveCDF::gaussian(mean, sd);
  const std::vector<double> zgrid =
      uniform_grid(mean - span * sd, mean + span * sd, grid_points);
  return bank.quantile(f, alpha, zgrid).z;
}

std::vector<double> acquire(const std::function<double(std::span<const double>)>& objective,
                            const std::vector<std::pair<double, double>>& box,
                            std::span<const double> incumbent, int budget, int local_jitters,
                            double jitter_frac, RngHandle& rng) {
  if (budget < 1) throw DomainError("acquire: budget must be >= 1");
  const std::size_t d = box.size();
  std::vector<double> best_x, cand(d);
  double best_v = 0.0;
  bool have = false;

  auto consider = [&](const std::vector<double>& point) {
    const double v = objective(point);
    if (!have || v < best_v) {
      have = true;
      best_v = v;
      best_x = point;
    }
  };

  for (int s = 0; s < budget; ++s) {
    for (std::size_t i = 0; i < d; ++i) cand[i] = rng.uniform(box[i].first, box[i].second);
    consider(cand);
  }
  if (incumbent.size() == d) {
    for (int s = 0; s < local_jitters; ++s) {
      for (std::size_t i = 0; i < d; ++i) {
        const double width = box[i].second - box[i].first;
        cand[i] = std::clamp(incumbent[i] + jitter_frac * width * rng.normal(), box[i].first,
                             box[i].second);
      }
      consider(cand);
    }
  }
  return best_x;
}

RecalibratorBank calibrate_loo(const GPHyper& hyper, const Eigen::MatrixXd& x,
                               const Eigen::VectorXd& y, int resolution, BankVariant variant,
                               RngHandle& rng) {
  const Eigen::Index n = x.rows();
  if (n < 2) throw StateError("calibrate_loo: need at least 2 points");
  RecalibratorBank bank(resolution, resolution, variant);
  Eigen::MatrixXd xr(n - 1, x.cols());
  Eigen::VectorXd yr(n - 1);
  for (Eigen::Index held = 0; held < n; ++held) {
    Eigen::Index r = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (i == held) continue;
      xr.row(r) = x.row(i);
      yr(r) = y(i);
      ++r;
    }
    const GPState gp = gp_fit(xr, yr, hyper);
    std::vector<double> q(x.cols());
    for (Eigen::Index c = 0; c < x.cols(); ++c) q[static_cast<std::size_t>(c)] = x(held, c);
    const auto [mean, var] = gp_predict(gp, q);
    const double u = gaussian_cdf_eval(mean, std::sqrt(var), y(held));
    bank.begin_round(rng);
    bank.observe_pit(u);
  }
  return bank;
}

BOTrace bo_run(const BenchmarkFn& fn, int iterations, std::uint64_t seed, bool calibrated,
               const BOOptions& options) {
  if (iterations < 1) throw DomainError("bo_run: need at least one iteration");

  RngHandle rng_init(seed, "bo/init");
  RngHandle rng_acq(seed, "bo/acquire");
  RngHandle rng_recal(seed, "bo/recal");

  BOTrace trace;
  auto record = [&](std::vector<double> x, double y) {
    trace.xs.push_back(std::move(x));
    trace.ys.push_back(y);
    trace.best.push_back(trace.best.empty() ? y : std::min(trace.best.back(), y));
  };

  for (int i = 0; i < options.init_points; ++i) {
    std::vector<double> x(fn.dim);
    for (int j = 0; j < fn.dim; ++j)
      x[j] = rng_init.uniform(fn.box[j].first, fn.box[j].second);
    const double y = benchmark_eval(fn, x);
    record(std::move(x), y);
  }

  for (int iter = 0; iter < iterations; ++iter) {
    const Eigen::Index n = static_cast<Eigen::Index>(trace.xs.size());
    Eigen::MatrixXd x(n, fn.dim);
    Eigen::VectorXd raw_y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (int j = 0; j < fn.dim; ++j) x(i, j) = trace.xs[static_cast<std::size_t>(i)][j];
      raw_y(i) = trace.ys[static_cast<std::size_t>(i)];
    }
    // standardize targets for the zero-mean GP; monotone, so the acquisition
    // argmin is unchanged
    const double y_mean = raw_y.mean();
    double y_sd = std::sqrt((raw_y.array() - y_mean).square().sum() /
                            std::max<double>(1.0, static_cast<double>(n - 1)));
    if (!(y_sd > 1e-9)) y_sd = 1.0;
    const Eigen::VectorXd y = (raw_y.array() - y_mean) / y_sd;

    try {
      const std::vector<GPHyper> grid = default_gp_grid(x, y);
      const GPHyper hyper = gp_select_hypers(x, y, grid);
      const GPState gp = gp_fit(x, y, hyper);

      RecalibratorBank bank =
          calibrated && n >= 2
              ? calibrate_loo(hyper, x, y, options.bank_resolution, options.variant, rng_recal)
              : RecalibratorBank(options.bank_resolution, options.bank_resolution,
                                 BankVariant::identity);
      bank.begin_round(rng_recal);

      const std::size_t best_idx = static_cast<std::size_t>(
          std::min_element(trace.ys.begin(), trace.ys.end()) - trace.ys.begin());
      const std::vector<double>& incumbent = trace.xs[best_idx];

      auto objective = [&](std::span<const double> cand) {
        return calibrated ? calibrated_lcb(gp, bank, cand, options.alpha, options.quantile_span)
                          : lcb(gp, cand, options.kappa);
      };
      std::vector<double> x_next = acquire(objective, fn.box, incumbent, options.budget,
                                           options.local_jitters, options.jitter_frac, rng_acq);
      bank.abort_round();
      const double y_next = benchmark_eval(fn, x_next);
      record(std::move(x_next), y_next);
    } catch (const NumericalError&) {
      trace.aborted = true;
      break;
    }
  }
  return trace;
}

}  // namespace calreg
