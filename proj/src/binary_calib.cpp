#include "calreg/binary_calib.hpp"

#include <cmath>

namespace calreg {

CalibState::CalibState(int resolution)
    : grid(resolution),
      plays(static_cast<std::size_t>(resolution) + 1, 0),
      successes(static_cast<std::size_t>(resolution) + 1, 0) {}

FosterBracket foster_bracket(const CalibState& state) {
  const int n = state.grid.resolution();
  for (int i = 0; i < n; ++i) {
    const double lo = state.deficiency(i);
    const double hi = state.deficiency(i + 1);
    if (lo >= 0.0 && hi <= 0.0) {
      const double denom = lo - hi;  // |lo| + |hi|
      return {i, denom == 0.0 ? 0.5 : -hi / denom};
    }
  }
  // d_0 = s_0 >= 0 and d_N = s_N - n_N <= 0, so a sign change always exists.
  throw StateError("foster_bracket: no deficiency sign change found");
}

double foster_forecast(const CalibState& state, RngHandle& rng) {
  const FosterBracket br = foster_bracket(state);
  const int i = rng.uniform01() < br.prob_lower ? br.index : br.index + 1;
  return state.grid.level(i);
}

double foster_expected(const CalibState& state) {
  const FosterBracket br = foster_bracket(state);
  return br.prob_lower * state.grid.level(br.index) +
         (1.0 - br.prob_lower) * state.grid.level(br.index + 1);
}

void calib_update(CalibState& state, double played, int outcome) {
  if (outcome != 0 && outcome != 1) throw DomainError("calib_update: outcome must be 0 or 1");
  const int idx = state.grid.index_of(played);
  state.plays[idx] += 1;
  state.successes[idx] += outcome;
  state.rounds += 1;
}

void calib_update_expected(CalibState& state, int outcome) {
  if (outcome != 0 && outcome != 1)
    throw DomainError("calib_update_expected: outcome must be 0 or 1");
  const FosterBracket br = foster_bracket(state);
  const double w = br.prob_lower;
  state.plays[br.index] += w;
  state.successes[br.index] += w * outcome;
  state.plays[br.index + 1] += 1.0 - w;
  state.successes[br.index + 1] += (1.0 - w) * outcome;
  state.rounds += 1;
}

double subroutine_calib_error(const CalibState& state) {
  if (state.rounds == 0) return 0.0;
  double total = 0.0;
  for (int i = 0; i < state.grid.size(); ++i) {
    if (state.plays[i] == 0) continue;
    total += std::abs(state.freq(i) - state.grid.level(i)) *
             (static_cast<double>(state.plays[i]) / static_cast<double>(state.rounds));
  }
  return total;
}

BinFreqState::BinFreqState(int bin_count)
    : bins(bin_count),
      counts(static_cast<std::size_t>(bin_count), 0),
      sums(static_cast<std::size_t>(bin_count), 0) {
  if (bin_count < 1) throw DomainError("BinFreqState: need at least one bin");
}

double kde_forecast(const BinFreqState& state, double raw) {
  const int b = quantize(raw, state.bins) - 1;
  return (static_cast<double>(state.sums[b]) + 0.5) /
         (static_cast<double>(state.counts[b]) + 1.0);
}

void kde_update(BinFreqState& state, double raw, int outcome) {
  if (outcome != 0 && outcome != 1) throw DomainError("kde_update: outcome must be 0 or 1");
  const int b = quantize(raw, state.bins) - 1;
  state.counts[b] += 1;
  state.sums[b] += outcome;
}

}  // namespace calreg
