// Evaluation quantities: empirical calibration ratios and errors, CRPS and
// CRPS regret, PIT calibration score, interval coverage, Markov exceedance.
#pragma once

#include <array>
#include <span>
#include <utility>
#include <vector>

#include "calreg/core.hpp"

namespace calreg {

// Per-probe play/success counts over the forecast grid. Forecast values that
// are off-grid (continuous baselines) are quantized to the nearest level.
class CalibLedger {
 public:
  CalibLedger(std::vector<double> probes, int resolution);

  // One round: g_at_probe[k] is the recalibrated CDF value at probe k, y the
  // revealed outcome.
  void record(std::span<const double> g_at_probe, double y);

  // Empirical frequency of {y <= probe} over rounds where p was predicted at
  // the probe; 0 when p was never predicted there.
  double rho(int probe_idx, double p) const;

  // sum_i |rho(i/N) - i/N| * (plays_i / T); 0 when T = 0.
  double calib_error(int probe_idx) const;

  const std::vector<double>& probes() const { return probes_; }
  int resolution() const { return grid_.resolution(); }
  long long rounds() const { return rounds_; }
  long long plays(int probe_idx, int level) const { return plays_[probe_idx][level]; }
  long long hits(int probe_idx, int level) const { return hits_[probe_idx][level]; }

 private:
  std::vector<double> probes_;
  ProbGrid grid_;
  std::vector<std::vector<long long>> plays_;
  std::vector<std::vector<long long>> hits_;
  long long rounds_ = 0;
};

// One evaluated round of a streaming run. The first block mirrors the trace
// CSV schema; the remaining fields are in-memory diagnostics.
struct TraceRow {
  long long t = 0;
  double y = 0.0;
  double f_crps = 0.0;
  double g_crps = 0.0;
  double regret_running = 0.0;
  double pit_u = 0.0;
  double pit_score_running = 0.0;
  double coverage_gap_running = 0.0;
  std::vector<double> calib_probe;  // running C_t(y_k) per probe

  std::vector<double> g_at_probe;  // raw G at each probe
  double ev_abs = 0.0;             // E_G |y| via the exported CDF
};

struct MetricTrace {
  std::vector<double> probes;
  std::vector<TraceRow> rows;
};

// Appendix-style PIT levels {0, 0.2, 0.4, 0.5, 0.6, 0.8, 1}.
std::vector<double> default_pit_levels();

// Trapezoidal CRPS over zgrid, with the indicator discontinuity at y handled
// by splitting the straddling cell.
double crps(double y, const PredictiveCDF& f, std::span<const double> zgrid);
double crps_from_values(double y, std::span<const double> zgrid, std::span<const double> fz);

// Mean CRPS(G) - mean CRPS(F) over the trace; 0 for an empty trace.
double crps_regret(const MetricTrace& trace);

// sum_j ((q_j - q_{j-1}) - phat_j)^2 with phat_j the fraction of PIT values in
// (q_{j-1}, q_j] (u <= q_1 falls in the first bin); 0 for empty input.
double pit_calib_score(std::span<const double> pit, std::span<const double> levels);

// Incremental PIT histogram for running scores.
class PitHist {
 public:
  explicit PitHist(std::vector<double> levels);
  void add(double u);
  double score() const;
  long long count() const { return total_; }

 private:
  std::vector<double> levels_;
  std::vector<long long> counts_;
  long long total_ = 0;
};

// Both sides of the interval-coverage limit for the fixed interval
// [y1, y2]: mean predicted mass and empirical frequency. y1/y2 must be
// probe levels recorded in the trace.
std::pair<double, double> coverage_check(const MetricTrace& trace, double y1, double y2);

// Fraction of rounds where the realized value reached r times its estimate:
// (1/T) sum 1{v_t >= r * vhat_t}; pairs are (estimate, realized).
double markov_exceedance(std::span<const std::pair<double, double>> pairs, double r);

// Uniform grid of k points spanning [lo, hi].
std::vector<double> uniform_grid(double lo, double hi, int k);

}  // namespace calreg
