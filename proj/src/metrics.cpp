#include "calreg/metrics.hpp"

#include <algorithm>
#include <cmath>

namespace calreg {

CalibLedger::CalibLedger(std::vector<double> probes, int resolution)
    : probes_(std::move(probes)), grid_(resolution) {
  if (probes_.empty()) throw DomainError("CalibLedger: need at least one probe");
  plays_.assign(probes_.size(), std::vector<long long>(grid_.size(), 0));
  hits_.assign(probes_.size(), std::vector<long long>(grid_.size(), 0));
}

void CalibLedger::record(std::span<const double> g_at_probe, double y) {
  if (g_at_probe.size() != probes_.size())
    throw DomainError("CalibLedger::record: probe count mismatch");
  for (std::size_t k = 0; k < probes_.size(); ++k) {
    const int i = grid_.nearest_index(g_at_probe[k]);
    plays_[k][i] += 1;
    if (y <= probes_[k]) hits_[k][i] += 1;
  }
  rounds_ += 1;
}

double CalibLedger::rho(int probe_idx, double p) const {
  const int i = grid_.nearest_index(p);
  if (plays_[probe_idx][i] == 0) return 0.0;
  return static_cast<double>(hits_[probe_idx][i]) / static_cast<double>(plays_[probe_idx][i]);
}

double CalibLedger::calib_error(int probe_idx) const {
  if (rounds_ == 0) return 0.0;
  double total = 0.0;
  for (int i = 0; i < grid_.size(); ++i) {
    const long long n = plays_[probe_idx][i];
    if (n == 0) continue;
    const double freq = static_cast<double>(hits_[probe_idx][i]) / static_cast<double>(n);
    total += std::abs(freq - grid_.level(i)) *
             (static_cast<double>(n) / static_cast<double>(rounds_));
  }
  return total;
}

std::vector<double> default_pit_levels() { return {0.0, 0.2, 0.4, 0.5, 0.6, 0.8, 1.0}; }

namespace {

double crps_trapezoid(double y, std::span<const double> zgrid, std::span<const double> fz,
                      double f_at_y, bool have_f_at_y) {
  if (zgrid.size() < 2 || zgrid.size() != fz.size())
    throw DomainError("crps: need matching grids with >= 2 points");
  if (y < zgrid.front() - 1e-12 || y > zgrid.back() + 1e-12)
    throw DomainError("crps: y outside integration domain");
  double total = 0.0;
  for (std::size_t k = 0; k + 1 < zgrid.size(); ++k) {
    const double a = zgrid[k], b = zgrid[k + 1];
    const double fa = fz[k], fb = fz[k + 1];
    if (y > a && y < b) {
      // indicator jumps inside the cell: integrate the two halves separately
      const double fy = have_f_at_y ? f_at_y : fa + (fb - fa) * (y - a) / (b - a);
      total += 0.5 * (y - a) * (fa * fa + fy * fy);
      total += 0.5 * (b - y) * ((fy - 1.0) * (fy - 1.0) + (fb - 1.0) * (fb - 1.0));
    } else {
      const double ia = y <= a ? 1.0 : 0.0;
      const double ib = y <= b ? 1.0 : 0.0;
      const double ga = (fa - ia) * (fa - ia);
      const double gb = (fb - ib) * (fb - ib);
      total += 0.5 * (b - a) * (ga + gb);
    }
  }
  return total;
}

}  // namespace

double crps_from_values(double y, std::span<const double> zgrid, std::span<const double> fz) {
  return crps_trapezoid(y, zgrid, fz, 0.0, false);
}

double crps(double y, const PredictiveCDF& f, std::span<const double> zgrid) {
  std::vector<double> fz(zgrid.size());
  for (std::size_t k = 0; k < zgrid.size(); ++k) fz[k] = f(zgrid[k]);
  return crps_trapezoid(y, zgrid, fz, f(y), true);
}

double crps_regret(const MetricTrace& trace) {
  if (trace.rows.empty()) return 0.0;
  double df = 0.0;
  for (const TraceRow& r : trace.rows) df += r.g_crps - r.f_crps;
  return df / static_cast<double>(trace.rows.size());
}

namespace {

int pit_bin(double u, std::span<const double> levels) {
  // bins (q_{j-1}, q_j]; u <= q_1 goes to the first bin
  for (std::size_t j = 1; j + 1 < levels.size(); ++j)
    if (u <= levels[j]) return static_cast<int>(j) - 1;
  return static_cast<int>(levels.size()) - 2;
}

}  // namespace

double pit_calib_score(std::span<const double> pit, std::span<const double> levels) {
  if (levels.size() < 2) throw DomainError("pit_calib_score: need >= 2 levels");
  if (pit.empty()) return 0.0;
  std::vector<long long> counts(levels.size() - 1, 0);
  for (double u : pit) counts[pit_bin(u, levels)] += 1;
  double score = 0.0;
  for (std::size_t j = 0; j + 1 < levels.size(); ++j) {
    const double width = levels[j + 1] - levels[j];
    const double phat = static_cast<double>(counts[j]) / static_cast<double>(pit.size());
    score += (width - phat) * (width - phat);
  }
  return score;
}

PitHist::PitHist(std::vector<double> levels) : levels_(std::move(levels)) {
  if (levels_.size() < 2) throw DomainError("PitHist: need >= 2 levels");
  counts_.assign(levels_.size() - 1, 0);
}

void PitHist::add(double u) {
  counts_[pit_bin(u, levels_)] += 1;
  total_ += 1;
}

double PitHist::score() const {
  if (total_ == 0) return 0.0;
  double score = 0.0;
  for (std::size_t j = 0; j + 1 < levels_.size(); ++j) {
    const double width = levels_[j + 1] - levels_[j];
    const double phat = static_cast<double>(counts_[j]) / static_cast<double>(total_);
    score += (width - phat) * (width - phat);
  }
  return score;
}

std::pair<double, double> coverage_check(const MetricTrace& trace, double y1, double y2) {
  if (!(y1 < y2)) throw DomainError("coverage_check: need y1 < y2");
  if (trace.rows.empty()) return {0.0, 0.0};
  auto probe_index = [&](double y) {
    for (std::size_t k = 0; k < trace.probes.size(); ++k)
      if (std::abs(trace.probes[k] - y) <= 1e-12) return static_cast<int>(k);
    throw DomainError("coverage_check: y is not a recorded probe level");
  };
  const int k1 = probe_index(y1), k2 = probe_index(y2);
  double mass = 0.0, freq = 0.0;
  for (const TraceRow& r : trace.rows) {
    mass += r.g_at_probe[k2] - r.g_at_probe[k1];
    if (r.y >= y1 && r.y <= y2) freq += 1.0;
  }
  const double t = static_cast<double>(trace.rows.size());
  return {mass / t, freq / t};
}

double markov_exceedance(std::span<const std::pair<double, double>> pairs, double r) {
  if (!(r > 1.0)) throw DomainError("markov_exceedance: r must exceed 1");
  if (pairs.empty()) return 0.0;
  long long hits = 0;
  for (const auto& [est, realized] : pairs)
    if (realized >= r * est) hits += 1;
  return static_cast<double>(hits) / static_cast<double>(pairs.size());
}

std::vector<double> uniform_grid(double lo, double hi, int k) {
  if (k < 2 || !(lo < hi)) throw DomainError("uniform_grid: need k >= 2 and lo < hi");
  std::vector<double> g(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i)
    g[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(k - 1);
  return g;
}

}  // namespace calreg
