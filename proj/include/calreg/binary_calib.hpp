// Online binary calibration subroutines: a randomized approachability-based
// forecaster on the grid {0, 1/N, ..., 1}, its deterministic expectation
// variant, and a tophat running-frequency baseline.
#pragma once

#include <vector>

#include "calreg/core.hpp"

namespace calreg {

// State of one online binary calibrator: per-grid-level play counts and
// success sums. deficiency(i) = s_i - (i/N) * n_i is the signed calibration
// imbalance at level i/N. Counts are real-valued so the non-randomized
// variant can apply the exact expectation of the randomized update
// (fractional plays on the two bracket endpoints).
struct CalibState {
  ProbGrid grid;
  std::vector<double> plays;      // n_i
  std::vector<double> successes;  // s_i
  long long rounds = 0;           // t

  explicit CalibState(int resolution);
  double deficiency(int i) const { return successes[i] - grid.level(i) * plays[i]; }
  // Empirical frequency at level i; only defined when plays[i] > 0.
  double freq(int i) const { return successes[i] / plays[i]; }
};

// The bracket i with d_i >= 0 >= d_{i+1} (smallest such i; it always exists
// since d_0 >= 0 and d_N <= 0) and the probability of playing the lower
// endpoint i/N.
struct FosterBracket {
  int index;
  double prob_lower;
};
FosterBracket foster_bracket(const CalibState& state);

// Randomized forecast: i/N with probability |d_{i+1}| / (|d_i| + |d_{i+1}|),
// else (i+1)/N; a fair coin when both deficiencies vanish.
double foster_forecast(const CalibState& state, RngHandle& rng);

// Mixture mean of foster_forecast's two-point distribution; deterministic.
double foster_expected(const CalibState& state);

// Record one (played level, binary outcome) pair. `played` must be a grid
// level and `outcome` must be 0 or 1.
void calib_update(CalibState& state, double played, int outcome);

// Deterministic-variant update: distribute one play over the current bracket
// endpoints with the forecast mixture weights (the expectation of the
// randomized update).
void calib_update_expected(CalibState& state, int outcome);

// l1 calibration error: sum_i |freq(i) - i/N| * n_i / t; 0 when t = 0.
double subroutine_calib_error(const CalibState& state);

// Tophat-kernel frequency estimator over `bins` equal intervals of [0,1],
// smoothed with a pseudo-count of 1 centered at 1/2.
struct BinFreqState {
  int bins;
  std::vector<long long> counts;
  std::vector<long long> sums;
  explicit BinFreqState(int bin_count);
};

double kde_forecast(const BinFreqState& state, double raw);
void kde_update(BinFreqState& state, double raw, int outcome);

}  // namespace calreg
