#include "calreg/streams.hpp"

#include <memory>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "calreg/forecasters.hpp"

namespace calreg {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

double parse_cell(const std::string& cell, long long row, const std::string& col) {
  const char* begin = cell.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  while (end && *end == ' ') ++end;
  if (end == begin || (end && *end != '\0') || !std::isfinite(v))
    throw DataError("non-numeric cell at row " + std::to_string(row) + ", column " + col);
  return v;
}

}  // namespace

std::vector<StreamRecord> load_csv(const std::string& path, const std::string& target_col,
                                   const std::vector<std::string>& feature_cols) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw DataError(path + ": empty file");
  const std::vector<std::string> header = split_csv_line(line);

  auto column_index = [&](const std::string& name) -> std::size_t {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return i;
    throw DataError(path + ": missing column " + name);
  };

  const std::size_t target = column_index(target_col);
  std::vector<std::size_t> features;
  if (feature_cols.empty()) {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (i != target) features.push_back(i);
  } else {
    for (const std::string& name : feature_cols) features.push_back(column_index(name));
  }
  if (features.empty()) throw DataError(path + ": no feature columns");

  std::vector<StreamRecord> records;
  long long row = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    row += 1;
    const std::vector<std::string> cells = split_csv_line(line);
    if (cells.size() != header.size())
      throw DataError(path + ": wrong field count at row " + std::to_string(row));
    StreamRecord rec;
    rec.t = row;
    rec.y = parse_cell(cells[target], row, header[target]);
    rec.x.reserve(features.size());
    for (std::size_t f : features) rec.x.push_back(parse_cell(cells[f], row, header[f]));
    records.push_back(std::move(rec));
  }
  if (records.empty()) throw DataError(path + ": no data rows");
  return records;
}

void save_csv(const std::string& path, std::span<const StreamRecord> records,
              const std::string& target_col) {
  if (records.empty()) throw DomainError("save_csv: nothing to write");
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  const std::size_t d = records.front().x.size();
  for (std::size_t i = 0; i < d; ++i) out << "x" << i + 1 << ",";
  out << target_col << "\n";
  char buf[32];
  for (const StreamRecord& r : records) {
    for (double v : r.x) {
      std::snprintf(buf, sizeof buf, "%.17g", v);
      out << buf << ",";
    }
    std::snprintf(buf, sizeof buf, "%.17g", r.y);
    out << buf << "\n";
  }
}

SynthKind synth_kind_from_string(const std::string& name) {
  if (name == "iid_gaussian") return SynthKind::iid_gaussian;
  if (name == "variance_misspec") return SynthKind::variance_misspec;
  if (name == "mean_shift") return SynthKind::mean_shift;
  if (name == "greedy_adversary") return SynthKind::greedy_adversary;
  throw DomainError("unknown synth kind: " + name);
}

std::string to_string(SynthKind kind) {
  switch (kind) {
    case SynthKind::iid_gaussian: return "iid_gaussian";
    case SynthKind::variance_misspec: return "variance_misspec";
    case SynthKind::mean_shift: return "mean_shift";
    case SynthKind::greedy_adversary: return "greedy_adversary";
  }
  return "?";
}

Method method_from_string(const std::string& name) {
  if (name == "raw") return Method::raw;
  if (name == "kde") return Method::kde;
  if (name == "online-nonrandom") return Method::online_nonrandom;
  if (name == "online") return Method::online;
  throw DomainError("unknown method: " + name);
}

std::string to_string(Method m) {
  switch (m) {
    case Method::raw: return "raw";
    case Method::kde: return "kde";
    case Method::online_nonrandom: return "online-nonrandom";
    case Method::online: return "online";
  }
  return "?";
}

std::vector<double> probe_levels(double bound, int count) {
  if (count < 1) throw DomainError("probe_levels: need at least one probe");
  OutcomeBound b(bound);
  std::vector<double> probes(static_cast<std::size_t>(count));
  for (int k = 1; k <= count; ++k)
    probes[k - 1] = -b.half() + bound * static_cast<double>(k) / (count + 1);
  return probes;
}

namespace {

// Warmup-derived transforms shared by the replay pipeline and the greedy
// generator (which must track the replayed baseline exactly).
struct Preprocess {
  ScalingInfo scaling;
  std::vector<double> x_mean, x_scale;
  double noise_var = 1.0;
  double clamp_lo = 0.0, clamp_hi = 0.0;

  std::vector<double> transform_x(std::span<const double> x) const {
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = (x[i] - x_mean[i]) / x_scale[i];
    return out;
  }
  double transform_y(double y, long long* clamped) const {
    double v = scaling.scale * y + scaling.offset;
    if (v < clamp_lo || v > clamp_hi) {
      if (clamped) *clamped += 1;
      v = std::clamp(v, clamp_lo, clamp_hi);
    }
    return v;
  }
};

Preprocess make_preprocess(std::span<const StreamRecord> records, double bound, int warmup) {
  if (records.empty()) throw DomainError("run: empty stream");
  const std::size_t d = records.front().x.size();
  for (const StreamRecord& r : records)
    if (r.x.size() != d) throw DomainError("run: inconsistent feature dimension");

  const OutcomeBound b(bound);
  const double delta = bound / 1000.0;
  const std::size_t w = std::min<std::size_t>(records.size(),
                                              static_cast<std::size_t>(std::max(warmup, 2)));
  Preprocess prep;
  prep.clamp_lo = -b.half() + delta;
  prep.clamp_hi = b.half() - delta;

  double ymin = records[0].y, ymax = records[0].y;
  bool out_of_bound = false;
  for (std::size_t i = 0; i < w; ++i) {
    ymin = std::min(ymin, records[i].y);
    ymax = std::max(ymax, records[i].y);
    if (!b.contains(records[i].y)) out_of_bound = true;
  }
  if (out_of_bound) {
    prep.scaling.applied = true;
    if (ymax > ymin) {
      prep.scaling.scale = (prep.clamp_hi - prep.clamp_lo) / (ymax - ymin);
      prep.scaling.offset = prep.clamp_lo - prep.scaling.scale * ymin;
    } else {
      prep.scaling.scale = 1.0;
      prep.scaling.offset = -ymin;
    }
  }

  prep.x_mean.assign(d, 0.0);
  prep.x_scale.assign(d, 1.0);
  for (std::size_t i = 0; i < w; ++i)
    for (std::size_t j = 0; j < d; ++j) prep.x_mean[j] += records[i].x[j];
  for (double& m : prep.x_mean) m /= static_cast<double>(w);
  std::vector<double> var(d, 0.0);
  for (std::size_t i = 0; i < w; ++i)
    for (std::size_t j = 0; j < d; ++j) {
      const double dv = records[i].x[j] - prep.x_mean[j];
      var[j] += dv * dv;
    }
  for (std::size_t j = 0; j < d; ++j)
    prep.x_scale[j] = std::max(std::sqrt(var[j] / static_cast<double>(w)), 1e-9);

  double ysum = 0.0, ysum2 = 0.0;
  for (std::size_t i = 0; i < w; ++i) {
    const double ty = prep.transform_y(records[i].y, nullptr);
    ysum += ty;
    ysum2 += ty * ty;
  }
  const double my = ysum / static_cast<double>(w);
  prep.noise_var = std::max(ysum2 / static_cast<double>(w) - my * my, 1e-6);
  return prep;
}

}  // namespace

std::vector<StreamRecord> synth_stream(SynthKind kind, const SynthParams& params,
                                       std::uint64_t seed, long long total) {
  if (total < 1) throw DomainError("synth_stream: need at least one record");
  if (params.dim < 1) throw DomainError("synth_stream: dimension must be >= 1");

  RngHandle rng_w(seed, "synth/weights");
  RngHandle rng_x(seed, "synth/x");
  RngHandle rng_e(seed, "synth/noise");

  std::vector<double> w(static_cast<std::size_t>(params.dim));
  for (double& wi : w) wi = rng_w.normal();

  std::vector<StreamRecord> records;
  records.reserve(static_cast<std::size_t>(total));

  if (kind != SynthKind::greedy_adversary) {
    for (long long t = 1; t <= total; ++t) {
      StreamRecord rec;
      rec.t = t;
      rec.x.resize(w.size());
      for (double& xi : rec.x) xi = rng_x.normal();
      double mean = 0.0;
      for (std::size_t i = 0; i < w.size(); ++i) mean += w[i] * rec.x[i];
      double sd = params.noise;
      switch (kind) {
        case SynthKind::iid_gaussian:
          break;
        case SynthKind::variance_misspec:
          if (t > params.warmup) sd *= params.c;
          break;
        case SynthKind::mean_shift:
          if (t > total / 2) mean = -mean;
          break;
        default:
          break;
      }
      rec.y = mean + (sd > 0.0 ? sd * rng_e.normal() : 0.0);
      records.push_back(std::move(rec));
    }
    return records;
  }

  // Greedy adversary: mirrors the replay pipeline (warmup transforms, batch
  // refits) and places each outcome a fixed fraction of the predictive
  // stddev above/below the baseline median, alternating sides.
  const OutcomeBound b(params.bound);
  const double delta = params.bound / 1000.0;
  const double lo = -b.half() + delta, hi = b.half() - delta;
  const long long w_len = std::min<long long>(total, std::max(params.warmup, 2));
  for (long long t = 1; t <= w_len; ++t) {
    StreamRecord rec;
    rec.t = t;
    rec.x.resize(w.size());
    for (double& xi : rec.x) xi = rng_x.normal();
    rec.y = std::clamp(0.2 * b.half() * rng_e.normal(), lo, hi);
    records.push_back(std::move(rec));
  }
  if (w_len == total) return records;

  const Preprocess prep = make_preprocess(records, params.bound, params.warmup);
  BayesLinReg model(params.dim, 1.0, prep.noise_var);
  const BatchPlan plan(params.batch_size);

  long long done = 0;  // records already used to update the model
  for (long long t = w_len + 1; t <= total; ++t) {
    // complete batches strictly before t feed the model
    while (done + plan.batch_size < t) {
      for (long long i = done; i < done + plan.batch_size; ++i)
        model.update(prep.transform_x(records[static_cast<std::size_t>(i)].x),
                     prep.transform_y(records[static_cast<std::size_t>(i)].y, nullptr));
      done += plan.batch_size;
    }
    StreamRecord rec;
    rec.t = t;
    rec.x.resize(w.size());
    for (double& xi : rec.x) xi = rng_x.normal();
    const std::vector<double> xt = prep.transform_x(rec.x);
    const double median = model.predictive_mean(xt);
    const double sd = std::sqrt(model.predictive_var(xt));
    const double dir = (t % 2 == 0) ? 1.0 : -1.0;
    rec.y = std::clamp(median + dir * 0.2 * sd, lo, hi);
    records.push_back(std::move(rec));
  }
  return records;
}

RunResult run_stream(std::span<const StreamRecord> records, const BatchPlan& plan,
                     Forecaster& forecaster, RecalibratorBank* bank,
                     const MetricsSetup& setup, RngHandle& bank_rng) {
  if (records.empty()) throw DomainError("run_stream: empty stream");
  const OutcomeBound b(setup.bound);
  const std::vector<double> zgrid = uniform_grid(-b.half(), b.half(), setup.crps_points);
  const std::vector<double> probes = probe_levels(setup.bound, setup.probe_count);
  const int ledger_res = bank ? bank->resolution() : setup.ledger_resolution;

  CalibLedger ledger(probes, ledger_res);
  PitHist hist(setup.pit_levels);
  MetricTrace trace;
  trace.probes = probes;
  trace.rows.reserve(records.size());

  double cum_f = 0.0, cum_g = 0.0, mass_sum = 0.0;
  long long in_interval = 0;

  std::vector<double> fz(zgrid.size()), gz(zgrid.size());
  std::vector<double> g_probe(probes.size());

  std::size_t start = 0;
  while (start < records.size()) {
    const std::size_t len = std::min<std::size_t>(plan.batch_size, records.size() - start);
    const std::span<const StreamRecord> batch = records.subspan(start, len);
    for (const StreamRecord& rec : batch) {
      const long long t = static_cast<long long>(trace.rows.size()) + 1;
      try {
        if (!b.contains(rec.y)) throw DomainError("outcome outside (-B/2, B/2)");
        const PredictiveCDF f = forecaster.predict(rec.x).with_domain(-b.half(), b.half());
        for (std::size_t k = 0; k < zgrid.size(); ++k) fz[k] = f(zgrid[k]);
        if (bank) bank->begin_round(bank_rng);

        for (std::size_t j = 0; j < probes.size(); ++j) {
          const double u = f(probes[j]);
          g_probe[j] = bank ? bank->eval_at_prob(u) : u;
        }
        for (std::size_t k = 0; k < zgrid.size(); ++k)
          gz[k] = bank ? bank->eval_at_prob(fz[k]) : fz[k];
        const double u_base = f(rec.y);
        const double pit_u = bank ? bank->eval_at_prob(u_base) : u_base;

        TraceRow row;
        row.t = t;
        row.y = rec.y;
        row.f_crps = crps_from_values(rec.y, zgrid, fz);
        row.g_crps = crps_from_values(rec.y, zgrid, gz);

        std::vector<double> iso = isotonic_fit(gz);
        for (double& v : iso) v = std::clamp(v, 0.0, 1.0);
        double ev = iso[0] * std::abs(zgrid[0]);
        for (std::size_t k = 1; k < iso.size(); ++k)
          ev += (iso[k] - iso[k - 1]) * std::abs(zgrid[k]);
        ev += (1.0 - iso.back()) * std::abs(zgrid.back());
        row.ev_abs = ev;

        if (bank) bank->observe_pit(u_base);

        ledger.record(g_probe, rec.y);
        hist.add(pit_u);
        cum_f += row.f_crps;
        cum_g += row.g_crps;
        mass_sum += g_probe.back() - g_probe.front();
        if (rec.y >= probes.front() && rec.y <= probes.back()) in_interval += 1;

        const double tt = static_cast<double>(t);
        row.pit_u = pit_u;
        row.regret_running = (cum_g - cum_f) / tt;
        row.pit_score_running = hist.score();
        row.coverage_gap_running =
            std::abs(mass_sum / tt - static_cast<double>(in_interval) / tt);
        row.calib_probe.resize(probes.size());
        for (std::size_t j = 0; j < probes.size(); ++j)
          row.calib_probe[j] = ledger.calib_error(static_cast<int>(j));
        row.g_at_probe = g_probe;
        trace.rows.push_back(std::move(row));
      } catch (const DomainError& e) {
        throw DomainError("round " + std::to_string(t) + ": " + e.what());
      } catch (const StateError& e) {
        throw StateError("round " + std::to_string(t) + ": " + e.what());
      } catch (const NumericalError& e) {
        throw NumericalError("round " + std::to_string(t) + ": " + e.what());
      }
    }
    forecaster.update(batch);
    start += len;
  }

  RunResult result;
  const double tt = static_cast<double>(trace.rows.size());
  result.final_pit_score = hist.score();
  result.mean_crps_f = cum_f / tt;
  result.mean_crps_g = cum_g / tt;
  result.regret = (cum_g - cum_f) / tt;
  result.coverage_gap = trace.rows.back().coverage_gap_running;
  result.trace = std::move(trace);
  return result;
}

namespace {

// Bayesian ridge over warmup-standardized features.
class StandardizedBlr final : public Forecaster {
 public:
  StandardizedBlr(const Preprocess& prep, int dim) : prep_(prep), model_(dim, 1.0, prep.noise_var) {}

  PredictiveCDF predict(std::span<const double> x) const override {
    return model_.predict(prep_.transform_x(x));
  }
  void update(std::span<const StreamRecord> batch) override {
    for (const StreamRecord& rec : batch)
      model_.update(prep_.transform_x(rec.x), rec.y);
  }

 private:
  Preprocess prep_;
  BayesLinReg model_;
};

}  // namespace

RunResult run_experiment(std::span<const StreamRecord> records, const RunOptions& options) {
  if (records.empty()) throw DomainError("run_experiment: empty stream");
  Preprocess prep = make_preprocess(records, options.bound, options.warmup);

  ScalingInfo scaling = prep.scaling;
  std::vector<StreamRecord> prepared(records.begin(), records.end());
  for (StreamRecord& rec : prepared) rec.y = prep.transform_y(rec.y, &scaling.clamped);

  const int d = static_cast<int>(records.front().x.size());
  StandardizedBlr forecaster(prep, d);

  const int n = options.resolution;
  const int m = options.intervals > 0 ? options.intervals : n;
  std::unique_ptr<RecalibratorBank> bank;
  switch (options.method) {
    case Method::raw: break;
    case Method::kde: bank = std::make_unique<RecalibratorBank>(m, n, BankVariant::kde); break;
    case Method::online_nonrandom:
      bank = std::make_unique<RecalibratorBank>(m, n, BankVariant::expected);
      break;
    case Method::online:
      bank = std::make_unique<RecalibratorBank>(m, n, BankVariant::randomized);
      break;
  }

  MetricsSetup setup;
  setup.bound = options.bound;
  setup.crps_points = options.crps_points;
  setup.probe_count = options.probe_count;
  setup.ledger_resolution = options.resolution;

  RngHandle rng(options.seed, "recalibrator");
  BatchPlan plan(options.batch_size);
  RunResult result = run_stream(prepared, plan, forecaster, bank.get(), setup, rng);
  result.scaling = scaling;
  return result;
}

}  // namespace calreg
