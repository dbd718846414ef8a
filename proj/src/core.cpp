#include "calreg/core.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

namespace calreg {

ProbGrid::ProbGrid(int resolution) : n_(resolution) {
  if (resolution < 1) throw DomainError("ProbGrid: resolution must be >= 1");
}

int ProbGrid::index_of(double p) const {
  const double scaled = p * n_;
  const double rounded = std::round(scaled);
  if (std::abs(scaled - rounded) > 1e-9 || rounded < 0 || rounded > n_)
    throw DomainError("ProbGrid: value " + std::to_string(p) + " is not a grid level");
  return static_cast<int>(rounded);
}

int ProbGrid::nearest_index(double p) const {
  const double clamped = std::clamp(p, 0.0, 1.0);
  return static_cast<int>(std::round(clamped * n_));
}

OutcomeBound::OutcomeBound(double bound) : b(bound) {
  if (!(bound > 0.0)) throw DomainError("OutcomeBound: B must be positive");
}

bool OutcomeBound::contains(double y) const {
  return std::isfinite(y) && std::abs(y) < b / 2.0;
}

int quantize(double p, int m) {
  if (m < 1) throw DomainError("quantize: M must be >= 1");
  if (!(p >= 0.0 && p <= 1.0)) throw DomainError("quantize: p outside [0,1]");
  if (p >= 1.0) return m;
  const int j = static_cast<int>(p * m) + 1;
  return j > m ? m : j;
}

double gaussian_cdf_eval(double mu, double sigma, double z) {
  if (!(sigma > 0.0)) throw DomainError("gaussian_cdf_eval: sigma must be positive");
  static const double inv_sqrt2 = 0.7071067811865475244;
  return 0.5 * std::erfc(-(z - mu) / sigma * inv_sqrt2);
}

double gaussian_pdf(double mu, double sigma, double z) {
  if (!(sigma > 0.0)) throw DomainError("gaussian_pdf: sigma must be positive");
  static const double inv_sqrt2pi = 0.3989422804014326779;
  const double u = (z - mu) / sigma;
  return inv_sqrt2pi / sigma * std::exp(-0.5 * u * u);
}

PredictiveCDF PredictiveCDF::gaussian(double mu, double sigma) {
  if (!(sigma > 0.0)) throw DomainError("PredictiveCDF: sigma must be positive");
  PredictiveCDF f;
  f.kind_ = Kind::gaussian;
  f.mu_ = mu;
  f.sigma_ = sigma;
  return f;
}

PredictiveCDF PredictiveCDF::step(std::vector<double> knots, std::vector<double> probs) {
  if (knots.empty() || knots.size() != probs.size())
    throw DomainError("PredictiveCDF: step needs matching non-empty knots/probs");
  for (std::size_t k = 0; k < knots.size(); ++k) {
    if (k > 0 && knots[k] < knots[k - 1])
      throw DomainError("PredictiveCDF: step knots must be sorted");
    if (probs[k] < -1e-12 || probs[k] > 1.0 + 1e-12)
      throw DomainError("PredictiveCDF: step probabilities outside [0,1]");
    if (k > 0 && probs[k] < probs[k - 1] - 1e-12)
      throw DomainError("PredictiveCDF: step probabilities must be non-decreasing");
    probs[k] = std::clamp(probs[k], 0.0, 1.0);
  }
  PredictiveCDF f;
  f.kind_ = Kind::step;
  f.knots_ = std::move(knots);
  f.probs_ = std::move(probs);
  return f;
}

double PredictiveCDF::operator()(double z) const {
  if (kind_ == Kind::gaussian) return gaussian_cdf_eval(mu_, sigma_, z);
  // largest knot <= z
  auto it = std::upper_bound(knots_.begin(), knots_.end(), z);
  if (it == knots_.begin()) return 0.0;
  return probs_[static_cast<std::size_t>(it - knots_.begin()) - 1];
}

PredictiveCDF::QuantileResult PredictiveCDF::quantile(double alpha) const {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw DomainError("PredictiveCDF::quantile: alpha must be in (0,1)");
  if (kind_ == Kind::step) {
    for (std::size_t k = 0; k < knots_.size(); ++k)
      if (probs_[k] >= alpha) return {knots_[k], false};
    return {knots_.back(), true};
  }
  double lo = mu_ - 40.0 * sigma_, hi = mu_ + 40.0 * sigma_;
  for (int it = 0; it < 200 && hi - lo > 1e-14 * sigma_; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (gaussian_cdf_eval(mu_, sigma_, mid) >= alpha)
      hi = mid;
    else
      lo = mid;
  }
  return {0.5 * (lo + hi), false};
}

double PredictiveCDF::mean() const {
  if (kind_ != Kind::gaussian) throw StateError("PredictiveCDF: mean of non-gaussian");
  return mu_;
}

double PredictiveCDF::stddev() const {
  if (kind_ != Kind::gaussian) throw StateError("PredictiveCDF: stddev of non-gaussian");
  return sigma_;
}

PredictiveCDF PredictiveCDF::with_domain(double lo, double hi) const {
  if (!(lo < hi)) throw DomainError("PredictiveCDF: empty domain");
  PredictiveCDF f = *this;
  f.lo_ = lo;
  f.hi_ = hi;
  return f;
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t derive_seed(std::uint64_t root_seed, std::string_view label) {
  char buf[8];
  std::memcpy(buf, &root_seed, 8);
  std::uint64_t h = fnv1a64(std::string_view(buf, 8));
  for (unsigned char c : label) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return splitmix64(h);
}

RngHandle::RngHandle(std::uint64_t seed) : seed_(seed), gen_(splitmix64(seed)) {}

RngHandle::RngHandle(std::uint64_t root_seed, std::string_view label)
    : RngHandle(derive_seed(root_seed, label)) {}

std::uint64_t RngHandle::next_u64() { return gen_(); }

double RngHandle::uniform01() {
  // 53-bit mantissa; implementation-defined std distributions avoided so runs
  // are bit-reproducible across standard libraries.
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngHandle::uniform(double lo, double hi) {
  return lo + (hi - lo) * uniform01();
}

double RngHandle::normal() {
  const double u1 = 1.0 - uniform01();  // (0, 1]
  const double u2 = uniform01();
  static const double two_pi = 6.283185307179586477;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
}

int RngHandle::uniform_int(int n) {
  if (n <= 0) throw DomainError("uniform_int: n must be positive");
  // rejection sampling keeps the draw unbiased
  const std::uint64_t un = static_cast<std::uint64_t>(n);
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() / un * un;
  std::uint64_t x;
  do {
    x = next_u64();
  } while (x >= limit);
  return static_cast<int>(x % un);
}

}  // namespace calreg
