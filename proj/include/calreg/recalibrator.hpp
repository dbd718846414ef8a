// Recalibrator bank: M online binary calibration subroutines that remap a
// baseline CDF value F(z) to a calibrated value G(z). Each round is
// begin_round -> eval/export queries -> observe (or abort).
#pragma once

#include <span>
#include <vector>

#include "calreg/binary_calib.hpp"
#include "calreg/core.hpp"

namespace calreg {

enum class BankVariant {
  randomized,  // sampled subroutine forecasts
  expected,    // deterministic mixture means
  kde,         // tophat running-frequency baseline
  identity,    // interval midpoints (untrained fallback)
};

BankVariant bank_variant_from_string(const std::string& name);
std::string to_string(BankVariant v);

// Squared-loss isotonic (non-decreasing) projection, pool-adjacent-violators.
std::vector<double> isotonic_fit(std::span<const double> values);

class RecalibratorBank {
 public:
  // `intervals` is M (one subroutine per interval of [0,1]); `resolution` is
  // the subroutines' grid N.
  RecalibratorBank(int intervals, int resolution, BankVariant variant);

  int intervals() const { return m_; }
  int resolution() const { return n_; }
  BankVariant variant() const { return variant_; }
  bool round_open() const { return open_; }
  long long completed_rounds() const { return rounds_; }

  // Draw and cache one forecast per subroutine. Repeated G queries within the
  // round see the same values. Calling again before observe/abort is an error.
  const std::vector<double>& begin_round(RngHandle& rng);

  // G(z) for the open round: the cached forecast of the subroutine owning the
  // interval that contains F(z).
  double eval(const PredictiveCDF& f, double z) const;
  double eval_at_prob(double u) const;
  const std::vector<double>& cached() const;

  // Close the round with outcome y: u = F(y), subroutine j gets target
  // 1{u <= j/M} together with its cached forecast.
  void observe(const PredictiveCDF& f, double y);
  void observe_pit(double u);
  // Close the round without updating (acquisition-only rounds).
  void abort_round();

  // Raw G sampled on zgrid, then isotonic projection and clamping to [0,1].
  // Metrics elsewhere use the raw values; this is the valid-CDF view.
  PredictiveCDF export_cdf(const PredictiveCDF& f, std::span<const double> zgrid) const;

  struct QuantileResult {
    double z;
    bool saturated;
  };
  // Smallest grid z whose exported CDF value reaches alpha.
  QuantileResult quantile(const PredictiveCDF& f, double alpha,
                          std::span<const double> zgrid) const;

  // Subroutine j in {1..M} (randomized/expected variants).
  const CalibState& subroutine(int j) const;

 private:
  void require_open(const char* op) const;

  int m_;
  int n_;
  BankVariant variant_;
  std::vector<CalibState> subs_;
  BinFreqState freq_;
  std::vector<double> cache_;
  bool open_ = false;
  long long rounds_ = 0;
};

}  // namespace calreg
