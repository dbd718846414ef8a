#include "calreg/recalibrator.hpp"

#include <algorithm>
#include <cmath>

namespace calreg {

BankVariant bank_variant_from_string(const std::string& name) {
  if (name == "randomized") return BankVariant::randomized;
  if (name == "expected") return BankVariant::expected;
  if (name == "kde") return BankVariant::kde;
  if (name == "identity") return BankVariant::identity;
  throw DomainError("unknown bank variant: " + name);
}

std::string to_string(BankVariant v) {
  switch (v) {
    case BankVariant::randomized: return "randomized";
    case BankVariant::expected: return "expected";
    case BankVariant::kde: return "kde";
    case BankVariant::identity: return "identity";
  }
  return "?";
}

std::vector<double> isotonic_fit(std::span<const double> values) {
  // Pool adjacent violators with unit weights. Blocks carry (mean, size).
  std::vector<double> mean;
  std::vector<std::size_t> size;
  mean.reserve(values.size());
  size.reserve(values.size());
  for (double v : values) {
    mean.push_back(v);
    size.push_back(1);
    while (mean.size() > 1 && mean[mean.size() - 2] > mean.back()) {
      const double m2 = mean.back();
      const std::size_t s2 = size.back();
      mean.pop_back();
      size.pop_back();
      const double m1 = mean.back();
      const std::size_t s1 = size.back();
      mean.back() = (m1 * static_cast<double>(s1) + m2 * static_cast<double>(s2)) /
                    static_cast<double>(s1 + s2);
      size.back() = s1 + s2;
    }
  }
  std::vector<double> out;
  out.reserve(values.size());
  for (std::size_t b = 0; b < mean.size(); ++b)
    out.insert(out.end(), size[b], mean[b]);
  return out;
}

RecalibratorBank::RecalibratorBank(int intervals, int resolution, BankVariant variant)
    : m_(intervals), n_(resolution), variant_(variant), freq_(std::max(1, intervals)) {
  if (intervals < 1) throw DomainError("RecalibratorBank: M must be >= 1");
  if (resolution < 1) throw DomainError("RecalibratorBank: N must be >= 1");
  if (variant == BankVariant::randomized || variant == BankVariant::expected) {
    subs_.reserve(static_cast<std::size_t>(m_));
    for (int j = 0; j < m_; ++j) subs_.emplace_back(n_);
  }
  cache_.assign(static_cast<std::size_t>(m_), 0.0);
}

const std::vector<double>& RecalibratorBank::begin_round(RngHandle& rng) {
  if (open_) throw StateError("begin_round: previous round still open");
  const double inv_m = 1.0 / static_cast<double>(m_);
  for (int j = 1; j <= m_; ++j) {
    const double midpoint = (static_cast<double>(j) - 0.5) * inv_m;
    double p = 0.0;
    switch (variant_) {
      case BankVariant::randomized: p = foster_forecast(subs_[j - 1], rng); break;
      case BankVariant::expected: p = foster_expected(subs_[j - 1]); break;
      case BankVariant::kde: p = kde_forecast(freq_, midpoint); break;
      case BankVariant::identity: p = midpoint; break;
    }
    cache_[j - 1] = p;
  }
  open_ = true;
  return cache_;
}

void RecalibratorBank::require_open(const char* op) const {
  if (!open_) throw StateError(std::string(op) + ": no open round");
}

double RecalibratorBank::eval_at_prob(double u) const {
  require_open("recal_eval");
  return cache_[quantize(u, m_) - 1];
}

double RecalibratorBank::eval(const PredictiveCDF& f, double z) const {
  require_open("recal_eval");
  if (!f.in_domain(z)) throw DomainError("recal_eval: z outside forecast domain");
  return cache_[quantize(f(z), m_) - 1];
}

const std::vector<double>& RecalibratorBank::cached() const {
  require_open("cached");
  return cache_;
}

void RecalibratorBank::observe(const PredictiveCDF& f, double y) {
  require_open("observe");
  if (!f.in_domain(y)) throw DomainError("observe: y outside forecast domain");
  observe_pit(f(y));
}

void RecalibratorBank::observe_pit(double u) {
  require_open("observe");
  if (!(u >= 0.0 && u <= 1.0)) throw DomainError("observe: PIT value outside [0,1]");
  const double inv_m = 1.0 / static_cast<double>(m_);
  int prev = 0;
  for (int j = 1; j <= m_; ++j) {
    const int o = u <= static_cast<double>(j) * inv_m ? 1 : 0;
    if (o < prev) throw StateError("observe: targets not nested");
    prev = o;
    switch (variant_) {
      case BankVariant::randomized:
        calib_update(subs_[j - 1], cache_[j - 1], o);
        break;
      case BankVariant::expected:
        calib_update_expected(subs_[j - 1], o);
        break;
      case BankVariant::kde:
        kde_update(freq_, (static_cast<double>(j) - 0.5) * inv_m, o);
        break;
      case BankVariant::identity:
        break;
    }
  }
  open_ = false;
  rounds_ += 1;
}

void RecalibratorBank::abort_round() {
  require_open("abort_round");
  open_ = false;
}

PredictiveCDF RecalibratorBank::export_cdf(const PredictiveCDF& f,
                                           std::span<const double> zgrid) const {
  require_open("export_cdf");
  if (zgrid.empty()) throw DomainError("export_cdf: empty zgrid");
  std::vector<double> raw(zgrid.size());
  for (std::size_t k = 0; k < zgrid.size(); ++k) raw[k] = cache_[quantize(f(zgrid[k]), m_) - 1];
  std::vector<double> mono = isotonic_fit(raw);
  for (double& v : mono) v = std::clamp(v, 0.0, 1.0);
  return PredictiveCDF::step(std::vector<double>(zgrid.begin(), zgrid.end()), std::move(mono));
}

RecalibratorBank::QuantileResult RecalibratorBank::quantile(
    const PredictiveCDF& f, double alpha, std::span<const double> zgrid) const {
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("recal_quantile: alpha outside (0,1)");
  const PredictiveCDF g = export_cdf(f, zgrid);
  const auto q = g.quantile(alpha);
  return {q.z, q.saturated};
}

const CalibState& RecalibratorBank::subroutine(int j) const {
  if (variant_ != BankVariant::randomized && variant_ != BankVariant::expected)
    throw StateError("subroutine: variant has no calibration states");
  if (j < 1 || j > m_) throw DomainError("subroutine: index outside {1..M}");
  return subs_[j - 1];
}

}  // namespace calreg
