// Shared domain types: probability grids, predictive CDFs, bounded outcomes,
// seeded randomness with labeled substreams.
#pragma once

#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace calreg {

// Error taxonomy. Domain errors are bad argument values, state errors are
// protocol violations (wrong call order), data errors are ingestion problems,
// numerical errors are linear-algebra failures that survived retries.
struct DomainError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct StateError : std::logic_error {
  using std::logic_error::logic_error;
};
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// The discrete forecast grid {0, 1/N, ..., 1}.
class ProbGrid {
 public:
  explicit ProbGrid(int resolution);

  int resolution() const { return n_; }
  int size() const { return n_ + 1; }
  double level(int i) const { return static_cast<double>(i) / n_; }

  // Index of a grid level; throws DomainError when p is not (numerically) on
  // the grid.
  int index_of(double p) const;
  // Index of the grid level closest to p (p clamped into [0,1]).
  int nearest_index(double p) const;

 private:
  int n_;
};

// Outcome bound: all ingested outcomes satisfy |y| < B/2.
struct OutcomeBound {
  double b;
  explicit OutcomeBound(double bound);
  double half() const { return b / 2.0; }
  bool contains(double y) const;
};

// quantize(p, M): index j in {1..M} of the interval [(j-1)/M, j/M) containing
// p, with p = 1 assigned to interval M.
int quantize(double p, int m);

// Standard normal CDF/PDF helpers. cdf is accurate to ~1e-16 absolute
// (erfc-based), well inside the 1e-12 requirement.
double gaussian_cdf_eval(double mu, double sigma, double z);
double gaussian_pdf(double mu, double sigma, double z);

// A forecast CDF: Gaussian-parametric or a step function on sorted knots.
class PredictiveCDF {
 public:
  enum class Kind { gaussian, step };

  static PredictiveCDF gaussian(double mu, double sigma);
  static PredictiveCDF step(std::vector<double> knots, std::vector<double> probs);

  double operator()(double z) const;

  struct QuantileResult {
    double z;
    bool saturated;  // alpha above the largest attained CDF value
  };
  // Smallest z with F(z) >= alpha. Gaussian: bisection; step: knot scan.
  QuantileResult quantile(double alpha) const;

  Kind kind() const { return kind_; }
  bool is_gaussian() const { return kind_ == Kind::gaussian; }
  double mean() const;
  double stddev() const;
  const std::vector<double>& knots() const { return knots_; }
  const std::vector<double>& probs() const { return probs_; }

  // Evaluation domain [lo, hi]; unbounded by default.
  PredictiveCDF with_domain(double lo, double hi) const;
  bool has_domain() const { return lo_ > -std::numeric_limits<double>::infinity(); }
  bool in_domain(double z) const { return z >= lo_ && z <= hi_; }
  double domain_lo() const { return lo_; }
  double domain_hi() const { return hi_; }

 private:
  PredictiveCDF() = default;
  Kind kind_ = Kind::gaussian;
  double mu_ = 0.0, sigma_ = 1.0;
  std::vector<double> knots_, probs_;
  double lo_ = -std::numeric_limits<double>::infinity();
  double hi_ = std::numeric_limits<double>::infinity();
};

// Deterministic random stream. Identical seed and call sequence give
// bit-identical draws. Substreams are derived from (root seed, label) so
// adding a component never perturbs another component's draws.
class RngHandle {
 public:
  explicit RngHandle(std::uint64_t seed);
  RngHandle(std::uint64_t root_seed, std::string_view label);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t next_u64();
  double uniform01();                 // [0, 1)
  double uniform(double lo, double hi);
  double normal();                    // standard normal (Box-Muller)
  int uniform_int(int n);             // {0, ..., n-1}

 private:
  std::uint64_t seed_;
  std::mt19937_64 gen_;
};

// Stable 64-bit content hash (FNV-1a), used for run manifests.
std::uint64_t fnv1a64(std::string_view bytes);
std::uint64_t derive_seed(std::uint64_t root_seed, std::string_view label);

}  // namespace calreg
