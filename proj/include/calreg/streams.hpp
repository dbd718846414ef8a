// Data ingestion and stream synthesis: CSV replay, synthetic and adversarial
// generators, and the batched online evaluation protocol.
#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "calreg/core.hpp"
#include "calreg/metrics.hpp"
#include "calreg/recalibrator.hpp"

namespace calreg {

struct StreamRecord {
  std::vector<double> x;
  double y = 0.0;
  long long t = 0;
};

struct BatchPlan {
  int batch_size;
  explicit BatchPlan(int n) : batch_size(n) {
    if (n < 1) throw DomainError("BatchPlan: batch size must be >= 1");
  }
  long long steps(long long total) const { return (total + batch_size - 1) / batch_size; }
};

// CSV with a header row. Empty feature list means "all columns but the
// target". Ingestion errors carry 1-based data row numbers.
std::vector<StreamRecord> load_csv(const std::string& path, const std::string& target_col,
                                   const std::vector<std::string>& feature_cols = {});
void save_csv(const std::string& path, std::span<const StreamRecord> records,
              const std::string& target_col = "y");

enum class SynthKind { iid_gaussian, variance_misspec, mean_shift, greedy_adversary };
SynthKind synth_kind_from_string(const std::string& name);
std::string to_string(SynthKind kind);

struct SynthParams {
  int dim = 2;
  double noise = 1.0;   // base residual scale
  double c = 3.0;       // variance misspecification factor
  double bound = 2.0;   // B assumed by the greedy generator
  int warmup = 50;      // protocol mirrored by the greedy generator
  int batch_size = 10;
};

// Deterministic given (kind, params, seed).
std::vector<StreamRecord> synth_stream(SynthKind kind, const SynthParams& params,
                                       std::uint64_t seed, long long total);

enum class Method { raw, kde, online_nonrandom, online };
Method method_from_string(const std::string& name);
std::string to_string(Method m);

struct RunOptions {
  Method method = Method::online;
  int resolution = 20;  // N
  int intervals = 0;    // M; 0 means M = N
  int batch_size = 10;
  double bound = 2.0;  // B
  int crps_points = 200;
  int probe_count = 9;
  int warmup = 50;
  std::uint64_t seed = 1;
};

struct ScalingInfo {
  bool applied = false;
  double scale = 1.0;
  double offset = 0.0;
  long long clamped = 0;  // outcomes clipped into the bounded domain
};

struct RunResult {
  MetricTrace trace;
  ScalingInfo scaling;
  double final_pit_score = 0.0;
  double mean_crps_f = 0.0;
  double mean_crps_g = 0.0;
  double regret = 0.0;
  double coverage_gap = 0.0;
};

// Baseline forecaster interface used by the replay loop.
class Forecaster {
 public:
  virtual ~Forecaster() = default;
  virtual PredictiveCDF predict(std::span<const double> x) const = 0;
  virtual void update(std::span<const StreamRecord> batch) = 0;
};

struct MetricsSetup {
  double bound = 2.0;
  int crps_points = 200;
  int probe_count = 9;
  int ledger_resolution = 20;  // grid for quantizing raw-method forecasts
  std::vector<double> pit_levels = default_pit_levels();
};

// Replay `records` through the batch protocol: per point predict (forecaster
// frozen within the batch), open a recalibration round, score, observe; then
// update the forecaster on the whole batch. `bank` may be null (raw method).
RunResult run_stream(std::span<const StreamRecord> records, const BatchPlan& plan,
                     Forecaster& forecaster, RecalibratorBank* bank,
                     const MetricsSetup& setup, RngHandle& bank_rng);

// Full pipeline: warmup preprocessing (outcome rescaling into the bounded
// domain, feature standardization, noise estimation), model and bank
// construction, then run_stream.
RunResult run_experiment(std::span<const StreamRecord> records, const RunOptions& options);

// Probe grid used for calibration metrics: `count` equally spaced outcome
// levels strictly inside [-B/2, B/2].
std::vector<double> probe_levels(double bound, int count);

}  // namespace calreg
