// Baseline probabilistic forecasters: online Bayesian linear regression with
// a conjugate Gaussian posterior, and exact Gaussian-process regression with
// an RBF kernel.
#pragma once

#include <Eigen/Dense>
#include <memory>
#include <span>
#include <vector>

#include "calreg/core.hpp"

namespace calreg {

// Online Bayesian ridge regression over [bias, x] features. Incremental
// updates equal a batch refit on all data seen (conjugacy).
class BayesLinReg {
 public:
  BayesLinReg(int dim, double prior_scale, double noise_var);

  int dim() const { return d_; }
  double noise_var() const { return noise_var_; }

  void update(std::span<const double> x, double y);
  void update_batch(const Eigen::MatrixXd& xs, const Eigen::VectorXd& ys);
  void refresh() const;  // refactor the posterior after a block of updates

  // Gaussian predictive with posterior-propagated variance plus noise.
  PredictiveCDF predict(std::span<const double> x) const;
  double predictive_mean(std::span<const double> x) const;
  double predictive_var(std::span<const double> x) const;

 private:
  Eigen::VectorXd features(std::span<const double> x) const;

  int d_;
  double noise_var_;
  Eigen::MatrixXd precision_;  // prior I/tau^2 plus Phi^T Phi / noise
  Eigen::VectorXd moment_;     // Phi^T y / noise
  mutable Eigen::LDLT<Eigen::MatrixXd> factor_;
  mutable Eigen::VectorXd mean_;
  mutable bool stale_ = true;
};

struct GPHyper {
  double signal_var = 1.0;
  double lengthscale = 1.0;
  double noise_var = 1e-6;
};

// Exact GP regression state: kernel Cholesky factor and solved weights.
struct GPState {
  Eigen::MatrixXd x;  // n x d training inputs
  Eigen::VectorXd y;
  GPHyper hyper;
  Eigen::MatrixXd chol;   // lower-triangular L with L L^T = K + noise I
  Eigen::VectorXd alpha;  // (K + noise I)^{-1} y
  double jitter = 0.0;    // extra diagonal added to reach positive definiteness
};

double rbf_kernel(const GPHyper& h, const Eigen::VectorXd& a, const Eigen::VectorXd& b);

// Fit with jitter escalation (1e-8 -> 1e-4 of the signal variance); throws
// NumericalError if the Gram matrix stays non-PD or the factor fails the
// reconstruction check (relative error <= 1e-8).
GPState gp_fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const GPHyper& hyper);

// Predictive mean and variance (includes noise; clamped at 1e-12).
std::pair<double, double> gp_predict(const GPState& state, std::span<const double> x);

double gp_log_marginal(const GPState& state);

// Exact log-marginal-likelihood maximization over a finite grid; ties broken
// toward the smallest lengthscale (grid scan order).
GPHyper gp_select_hypers(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                         std::span<const GPHyper> grid);

// Default hyper grid: lengthscales {0.1, 0.3, 1, 3} x input range, signal
// variances {0.5, 1, 2} x target variance, fixed small noise.
std::vector<GPHyper> default_gp_grid(const Eigen::MatrixXd& x, const Eigen::VectorXd& y);

}  // namespace calreg
