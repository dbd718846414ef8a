#include "calreg/forecasters.hpp"

#include <algorithm>
#include <cmath>

namespace calreg {

BayesLinReg::BayesLinReg(int dim, double prior_scale, double noise_var)
    : d_(dim), noise_var_(noise_var) {
  if (dim < 0) throw DomainError("BayesLinReg: negative dimension");
  if (!(prior_scale > 0.0) || !(noise_var > 0.0))
    throw DomainError("BayesLinReg: prior scale and noise variance must be positive");
  const int p = d_ + 1;
  precision_ = Eigen::MatrixXd::Identity(p, p) / prior_scale;
  moment_ = Eigen::VectorXd::Zero(p);
}

Eigen::VectorXd BayesLinReg::features(std::span<const double> x) const {
  if (static_cast<int>(x.size()) != d_)
    throw DomainError("BayesLinReg: feature dimension mismatch");
  Eigen::VectorXd phi(d_ + 1);
  phi(0) = 1.0;
  for (int i = 0; i < d_; ++i) phi(i + 1) = x[i];
  return phi;
}

void BayesLinReg::update(std::span<const double> x, double y) {
  const Eigen::VectorXd phi = features(x);
  precision_.noalias() += phi * phi.transpose() / noise_var_;
  moment_.noalias() += phi * (y / noise_var_);
  stale_ = true;
}

void BayesLinReg::update_batch(const Eigen::MatrixXd& xs, const Eigen::VectorXd& ys) {
  if (xs.rows() != ys.size()) throw DomainError("BayesLinReg: batch size mismatch");
  if (xs.cols() != d_) throw DomainError("BayesLinReg: feature dimension mismatch");
  for (Eigen::Index r = 0; r < xs.rows(); ++r) {
    Eigen::VectorXd phi(d_ + 1);
    phi(0) = 1.0;
    phi.tail(d_) = xs.row(r).transpose();
    precision_.noalias() += phi * phi.transpose() / noise_var_;
    moment_.noalias() += phi * (ys(r) / noise_var_);
  }
  stale_ = true;
}

void BayesLinReg::refresh() const {
  factor_ = precision_.ldlt();
  mean_ = factor_.solve(moment_);
  stale_ = false;
}

double BayesLinReg::predictive_mean(std::span<const double> x) const {
  if (stale_) refresh();
  return mean_.dot(features(x));
}

double BayesLinReg::predictive_var(std::span<const double> x) const {
  if (stale_) refresh();
  const Eigen::VectorXd phi = features(x);
  const double w = phi.dot(factor_.solve(phi));
  return std::max(w, 0.0) + noise_var_;
}

PredictiveCDF BayesLinReg::predict(std::span<const double> x) const {
  return PredictiveCDF::gaussian(predictive_mean(x), std::sqrt(predictive_var(x)));
}

double rbf_kernel(const GPHyper& h, const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const double d2 = (a - b).squaredNorm();
  return h.signal_var * std::exp(-d2 / (2.0 * h.lengthscale * h.lengthscale));
}

GPState gp_fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const GPHyper& hyper) {
  if (x.rows() < 1 || x.rows() != y.size()) throw DomainError("gp_fit: need |X| >= 1 matching y");
  if (!(hyper.signal_var > 0.0) || !(hyper.lengthscale > 0.0) || !(hyper.noise_var >= 0.0))
    throw DomainError("gp_fit: invalid hyperparameters");

  const Eigen::Index n = x.rows();
  Eigen::MatrixXd gram(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j <= i; ++j) {
      const double k = rbf_kernel(hyper, x.row(i).transpose(), x.row(j).transpose());
      gram(i, j) = k;
      gram(j, i) = k;
    }

  const double scale = hyper.signal_var;
  for (double rel_jitter : {0.0, 1e-8, 1e-6, 1e-4}) {
    Eigen::MatrixXd kn = gram;
    const double extra = rel_jitter * scale;
    kn.diagonal().array() += hyper.noise_var + extra;
    Eigen::LLT<Eigen::MatrixXd> llt(kn);
    if (llt.info() != Eigen::Success) continue;
    Eigen::MatrixXd l = llt.matrixL();
    const double recon = (l * l.transpose() - kn).norm() / std::max(kn.norm(), 1e-300);
    if (recon > 1e-8) continue;
    GPState state;
    state.x = x;
    state.y = y;
    state.hyper = hyper;
    state.chol = std::move(l);
    state.alpha = llt.solve(y);
    state.jitter = extra;
    return state;
  }
  throw NumericalError("gp_fit: Gram matrix not positive definite after jitter escalation");
}

std::pair<double, double> gp_predict(const GPState& state, std::span<const double> x) {
  if (static_cast<Eigen::Index>(x.size()) != state.x.cols())
    throw DomainError("gp_predict: input dimension mismatch");
  const Eigen::Index n = state.x.rows();
  Eigen::VectorXd q = Eigen::Map<const Eigen::VectorXd>(x.data(), x.size());
  Eigen::VectorXd ks(n);
  for (Eigen::Index i = 0; i < n; ++i)
    ks(i) = rbf_kernel(state.hyper, state.x.row(i).transpose(), q);
  const double mean = ks.dot(state.alpha);
  const Eigen::VectorXd v = state.chol.triangularView<Eigen::Lower>().solve(ks);
  double var = state.hyper.signal_var - v.squaredNorm() + state.hyper.noise_var;
  return {mean, std::max(var, 1e-12)};
}

double gp_log_marginal(const GPState& state) {
  const Eigen::Index n = state.x.rows();
  double logdet = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) logdet += std::log(state.chol(i, i));
  static const double log_2pi = 1.8378770664093454836;
  return -0.5 * state.y.dot(state.alpha) - logdet - 0.5 * static_cast<double>(n) * log_2pi;
}

GPHyper gp_select_hypers(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                         std::span<const GPHyper> grid) {
  if (x.rows() < 2) throw StateError("gp_select_hypers: need at least 2 points");
  if (grid.empty()) throw DomainError("gp_select_hypers: empty grid");
  std::vector<std::size_t> order(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return grid[a].lengthscale < grid[b].lengthscale;
  });
  bool have = false;
  double best_lml = 0.0;
  GPHyper best;
  for (std::size_t i : order) {
    double lml;
    try {
      lml = gp_log_marginal(gp_fit(x, y, grid[i]));
    } catch (const NumericalError&) {
      continue;
    }
    if (!have || lml > best_lml) {
      have = true;
      best_lml = lml;
      best = grid[i];
    }
  }
  if (!have) throw NumericalError("gp_select_hypers: no hyperparameter fit succeeded");
  return best;
}

std::vector<GPHyper> default_gp_grid(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  double range = 0.0;
  for (Eigen::Index c = 0; c < x.cols(); ++c)
    range = std::max(range, x.col(c).maxCoeff() - x.col(c).minCoeff());
  if (range <= 0.0) range = 1.0;
  const double mean = y.size() > 0 ? y.mean() : 0.0;
  double var = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i) var += (y(i) - mean) * (y(i) - mean);
  var = y.size() > 1 ? var / static_cast<double>(y.size() - 1) : 1.0;
  if (var <= 0.0) var = 1.0;
  std::vector<GPHyper> grid;
  for (double lf : {0.1, 0.3, 1.0, 3.0})
    for (double sf : {0.5, 1.0, 2.0})
      grid.push_back({sf * var, lf * range, std::max(1e-6 * var, 1e-10)});
  return grid;
}

}  // namespace calreg
