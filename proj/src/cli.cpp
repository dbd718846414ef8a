#include "calreg/cli.hpp"

#include <CLI11.hpp>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <sstream>

#include <json.hpp>

#include "calreg/bayesopt.hpp"

namespace calreg {

namespace fs = std::filesystem;
using nlohmann::json;

const char* const kTraceSchema = "calreg-trace-v1";

std::string stream_trace_header(int probe_count) {
  std::string h = "t,y,F_crps,G_crps,regret_running,pit_u,pit_score_running,coverage_gap_running";
  for (int k = 1; k <= probe_count; ++k) h += ",calib_error_probe_" + std::to_string(k);
  return h;
}

std::string bo_trace_header() { return "iter,y,best"; }

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t");
  return s.substr(a, b - a + 1);
}

const std::vector<std::string>& known_keys() {
  static const std::vector<std::string> keys = {
      "dataset", "target", "features", "synth", "dim", "noise", "c", "method", "resolution",
      "intervals", "batch-size", "bound", "seed", "seeds", "rounds", "probes", "warmup",
      "crps-points", "out", "benchmark", "iterations", "calibrated", "budget", "variant"};
  return keys;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

long long parse_int(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const long long v = std::stoll(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw DomainError("config: bad integer for " + key + ": " + value);
  }
}

double parse_real(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(value, &pos);
    if (pos != value.size() || !std::isfinite(v)) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw DomainError("config: bad number for " + key + ": " + value);
  }
}

long long require_positive(const std::string& key, long long v) {
  if (v <= 0) throw DomainError("config: " + key + " must be positive");
  return v;
}

std::uint64_t file_hash(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  const std::string bytes = ss.str();
  return fnv1a64(bytes);
}

std::string hex64(std::uint64_t v) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace

std::map<std::string, std::string> load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DomainError("config: cannot open " + path);
  std::map<std::string, std::string> kv;
  std::string line;
  long long lineno = 0;
  while (std::getline(in, line)) {
    lineno += 1;
    const auto hash_pos = line.find('#');
    if (hash_pos != std::string::npos) line = line.substr(0, hash_pos);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw DomainError("config: line " + std::to_string(lineno) + " is not key=value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto& keys = known_keys();
    if (std::find(keys.begin(), keys.end(), key) == keys.end())
      throw DomainError("config: unknown key '" + key + "' at line " + std::to_string(lineno));
    kv[key] = value;
  }
  return kv;
}

void apply_config(RunConfig& config, const std::map<std::string, std::string>& kv) {
  for (const auto& [key, value] : kv) {
    if (key == "dataset") config.dataset = value;
    else if (key == "target") config.target = value;
    else if (key == "features") config.features = split_list(value);
    else if (key == "synth") config.synth = value;
    else if (key == "dim") config.dim = static_cast<int>(require_positive(key, parse_int(key, value)));
    else if (key == "noise") config.noise = parse_real(key, value);
    else if (key == "c") config.c = parse_real(key, value);
    else if (key == "method") config.method = value;
    else if (key == "resolution") config.resolution = static_cast<int>(require_positive(key, parse_int(key, value)));
    else if (key == "intervals") config.intervals = static_cast<int>(require_positive(key, parse_int(key, value)));
    else if (key == "batch-size") config.batch_size = static_cast<int>(require_positive(key, parse_int(key, value)));
    else if (key == "bound") {
      config.bound = parse_real(key, value);
      if (!(config.bound > 0)) throw DomainError("config: bound must be positive");
    } else if (key == "seed") config.seed = static_cast<std::uint64_t>(parse_int(key, value));
    else if (key == "seeds") {
      config.seeds.clear();
      for (const std::string& s : split_list(value))
        config.seeds.push_back(static_cast<std::uint64_t>(parse_int(key, s)));
    } else if (key == "rounds") config.rounds = require_positive(key, parse_int(key, value));
    else if (key == "probes") config.probe_count = static_cast<int>(require_positive(key, parse_int(key, value)));
    else if (key == "warmup") config.warmup = static_cast<int>(require_positive(key, parse_int(key, value)));
    else if (key == "crps-points") config.crps_points = static_cast<int>(require_positive(key, parse_int(key, value)));
    else if (key == "out") config.out_dir = value;
    else if (key == "benchmark") config.benchmark = value;
    else if (key == "iterations") config.iterations = static_cast<int>(require_positive(key, parse_int(key, value)));
    else if (key == "calibrated") config.calibrated = value;
    else if (key == "budget") config.budget = static_cast<int>(require_positive(key, parse_int(key, value)));
    else if (key == "variant") config.variant = value;
  }
}

namespace {

json scaling_json(const ScalingInfo& s) {
  return {{"applied", s.applied}, {"scale", s.scale}, {"offset", s.offset}, {"clamped", s.clamped}};
}

json config_json(const RunConfig& c) {
  json j;
  j["command"] = c.command;
  j["method"] = c.method;
  j["resolution"] = c.resolution;
  j["intervals"] = c.intervals > 0 ? c.intervals : c.resolution;
  j["batch-size"] = c.batch_size;
  j["bound"] = c.bound;
  j["seed"] = c.seed;
  j["rounds"] = c.rounds;
  j["probes"] = c.probe_count;
  j["warmup"] = c.warmup;
  j["crps-points"] = c.crps_points;
  if (!c.dataset.empty()) {
    j["dataset"] = c.dataset;
    j["target"] = c.target;
    if (!c.features.empty()) j["features"] = c.features;
  }
  if (!c.synth.empty()) {
    j["synth"] = c.synth;
    j["dim"] = c.dim;
    j["noise"] = c.noise;
    j["c"] = c.c;
  }
  if (!c.benchmark.empty()) {
    j["benchmark"] = c.benchmark;
    j["iterations"] = c.iterations;
    j["calibrated"] = c.calibrated;
    j["budget"] = c.budget;
    j["variant"] = c.variant;
    json seeds = json::array();
    for (std::uint64_t s : c.seeds) seeds.push_back(s);
    j["seeds"] = seeds;
  }
  return j;
}

void write_text(const fs::path& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << body;
  if (!out) throw DataError("short write to " + path.string());
}

std::vector<StreamRecord> make_records(const RunConfig& config, std::string& input_desc,
                                       std::string& input_hash) {
  if (!config.dataset.empty() && !config.synth.empty())
    throw DomainError("config: give either dataset or synth, not both");
  if (!config.dataset.empty()) {
    input_desc = config.dataset;
    input_hash = hex64(file_hash(config.dataset));
    std::vector<StreamRecord> records = load_csv(config.dataset, config.target, config.features);
    if (config.rounds > 0 && static_cast<long long>(records.size()) > config.rounds)
      records.resize(static_cast<std::size_t>(config.rounds));
    return records;
  }
  if (config.synth.empty()) throw DomainError("config: stream command needs dataset or synth");
  SynthParams params;
  params.dim = config.dim;
  params.noise = config.noise;
  params.c = config.c;
  params.bound = config.bound;
  params.warmup = config.warmup;
  params.batch_size = config.batch_size;
  const SynthKind kind = synth_kind_from_string(config.synth);
  input_desc = "synth:" + config.synth;
  const std::string desc = input_desc + "/dim=" + std::to_string(params.dim) +
                           "/noise=" + fmt(params.noise) + "/c=" + fmt(params.c) +
                           "/seed=" + std::to_string(config.seed) +
                           "/T=" + std::to_string(config.rounds);
  input_hash = hex64(fnv1a64(desc));
  return synth_stream(kind, params, config.seed, config.rounds);
}

std::string render_stream_trace(const MetricTrace& trace, int probe_count) {
  std::string out = stream_trace_header(probe_count) + "\n";
  for (const TraceRow& r : trace.rows) {
    out += std::to_string(r.t);
    out += ',' + fmt(r.y) + ',' + fmt(r.f_crps) + ',' + fmt(r.g_crps) + ',' +
           fmt(r.regret_running) + ',' + fmt(r.pit_u) + ',' + fmt(r.pit_score_running) + ',' +
           fmt(r.coverage_gap_running);
    for (double v : r.calib_probe) out += ',' + fmt(v);
    out += '\n';
  }
  return out;
}

}  // namespace

int cmd_stream(const RunConfig& config) {
  const Method method = method_from_string(config.method);

  std::string input_desc, input_hash;
  const std::vector<StreamRecord> records = make_records(config, input_desc, input_hash);

  RunOptions options;
  options.method = method;
  options.resolution = config.resolution;
  options.intervals = config.intervals;
  options.batch_size = config.batch_size;
  options.bound = config.bound;
  options.crps_points = config.crps_points;
  options.probe_count = config.probe_count;
  options.warmup = config.warmup;
  options.seed = config.seed;

  const RunResult result = run_experiment(records, options);

  json summary;
  summary["schema"] = kTraceSchema;
  summary["type"] = "stream";
  summary["method"] = config.method;
  summary["rounds"] = static_cast<long long>(result.trace.rows.size());
  summary["final_pit_score"] = result.final_pit_score;
  summary["mean_crps_f"] = result.mean_crps_f;
  summary["mean_crps_g"] = result.mean_crps_g;
  summary["regret"] = result.regret;
  summary["coverage_gap"] = result.coverage_gap;
  summary["probes"] = result.trace.probes;
  summary["final_calib_error"] = result.trace.rows.back().calib_probe;
  summary["scaling"] = scaling_json(result.scaling);

  json manifest;
  manifest["schema"] = kTraceSchema;
  manifest["config"] = config_json(config);
  manifest["input"] = {{"source", input_desc}, {"hash", input_hash}};
  manifest["scaling"] = scaling_json(result.scaling);

  fs::create_directories(config.out_dir);
  write_text(fs::path(config.out_dir) / "trace.csv",
             render_stream_trace(result.trace, config.probe_count));
  write_text(fs::path(config.out_dir) / "summary.json", summary.dump(2) + "\n");
  write_text(fs::path(config.out_dir) / "manifest.json", manifest.dump(2) + "\n");

  std::cout << "stream run complete: T=" << result.trace.rows.size()
            << " method=" << config.method << " pit_score=" << result.final_pit_score
            << " regret=" << result.regret << "\n";
  return 0;
}

int cmd_bo(const RunConfig& config) {
  if (config.benchmark.empty()) throw DomainError("config: bo command needs a benchmark");
  const BenchmarkFn fn = benchmark_from_string(config.benchmark);
  std::vector<std::uint64_t> seeds = config.seeds;
  if (seeds.empty()) seeds = {config.seed};

  std::vector<bool> arms;
  if (config.calibrated == "both") arms = {false, true};
  else if (config.calibrated == "on") arms = {true};
  else if (config.calibrated == "off") arms = {false};
  else throw DomainError("config: calibrated must be both|on|off");

  BOOptions options;
  options.budget = config.budget;
  options.variant = bank_variant_from_string(config.variant);

  struct Job {
    std::uint64_t seed;
    bool calibrated;
    std::future<BOTrace> result;
  };
  std::vector<Job> jobs;
  for (std::uint64_t s : seeds)
    for (bool arm : arms)
      jobs.push_back({s, arm, std::async(std::launch::async, [&, s, arm] {
                        return bo_run(fn, config.iterations, s, arm, options);
                      })});

  fs::create_directories(config.out_dir);
  bool failed = false;
  json runs = json::array();
  std::map<bool, std::vector<double>> finals;
  for (Job& job : jobs) {
    const BOTrace trace = job.result.get();
    failed = failed || trace.aborted;
    const std::string arm_name = job.calibrated ? "calibrated" : "uncalibrated";
    std::string body = bo_trace_header() + "\n";
    for (std::size_t i = 0; i < trace.ys.size(); ++i)
      body += std::to_string(i + 1) + ',' + fmt(trace.ys[i]) + ',' + fmt(trace.best[i]) + '\n';
    const std::string name =
        "bo_" + fn.name + "_seed" + std::to_string(job.seed) + "_" + arm_name + ".csv";
    write_text(fs::path(config.out_dir) / name, body);
    finals[job.calibrated].push_back(trace.best.back());
    runs.push_back({{"seed", job.seed},
                    {"arm", arm_name},
                    {"final_best", trace.best.back()},
                    {"evaluations", trace.ys.size()},
                    {"aborted", trace.aborted},
                    {"trace", name}});
  }

  json summary;
  summary["schema"] = kTraceSchema;
  summary["type"] = "bo";
  summary["benchmark"] = fn.name;
  summary["iterations"] = config.iterations;
  summary["runs"] = runs;
  for (const auto& [calibrated, values] : finals) {
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(values.size());
    double var = 0.0;
    for (double v : values) var += (v - mean) * (v - mean);
    const double stderr_mean =
        values.size() > 1 ? std::sqrt(var / static_cast<double>(values.size() - 1) /
                                      static_cast<double>(values.size()))
                          : 0.0;
    summary[calibrated ? "calibrated" : "uncalibrated"] = {{"mean_final_best", mean},
                                                           {"stderr", stderr_mean}};
  }

  json manifest;
  manifest["schema"] = kTraceSchema;
  manifest["config"] = config_json(config);
  manifest["input"] = {{"source", "benchmark:" + fn.name}, {"hash", hex64(fnv1a64(fn.name))}};

  write_text(fs::path(config.out_dir) / "summary.json", summary.dump(2) + "\n");
  write_text(fs::path(config.out_dir) / "manifest.json", manifest.dump(2) + "\n");

  std::cout << "bo runs complete: benchmark=" << fn.name << " seeds=" << seeds.size() << "\n";
  if (failed) throw NumericalError("bo: at least one run aborted on a numerical failure");
  return 0;
}

namespace {

void validate_stream_trace(const fs::path& path, int probe_count) {
  std::ifstream in(path);
  if (!in) throw DataError("report: cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw DataError("report: " + path.string() + " is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != stream_trace_header(probe_count))
    throw DataError("report: " + path.string() + " has a mismatched trace schema");
  const std::size_t expected = 8 + static_cast<std::size_t>(probe_count);
  long long row = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    row += 1;
    std::size_t fields = 1;
    for (char ch : line)
      if (ch == ',') fields += 1;
    if (fields != expected)
      throw DataError("report: " + path.string() + " malformed at row " + std::to_string(row));
  }
}

}  // namespace

int cmd_report(const std::vector<std::string>& run_dirs, const std::string& out_dir) {
  if (run_dirs.empty()) throw DomainError("report: need at least one run directory");
  json comparison = json::array();
  std::printf("%-28s %-16s %12s %12s %12s %12s %12s\n", "run", "method", "rounds", "pit_score",
              "crps_F", "crps_G", "regret");
  for (const std::string& dir : run_dirs) {
    const fs::path summary_path = fs::path(dir) / "summary.json";
    std::ifstream in(summary_path);
    if (!in) throw DataError("report: cannot open " + summary_path.string());
    json summary;
    try {
      in >> summary;
    } catch (const json::exception& e) {
      throw DataError("report: bad JSON in " + summary_path.string() + ": " + e.what());
    }
    if (!summary.contains("schema") || summary["schema"] != kTraceSchema)
      throw DataError("report: " + summary_path.string() + " has an unsupported schema");
    json entry;
    entry["run"] = dir;
    entry["summary"] = summary;
    if (summary["type"] == "stream") {
      const int probes = static_cast<int>(summary["probes"].size());
      validate_stream_trace(fs::path(dir) / "trace.csv", probes);
      std::printf("%-28s %-16s %12lld %12.5f %12.5f %12.5f %12.5f\n", dir.c_str(),
                  summary["method"].get<std::string>().c_str(),
                  summary["rounds"].get<long long>(), summary["final_pit_score"].get<double>(),
                  summary["mean_crps_f"].get<double>(), summary["mean_crps_g"].get<double>(),
                  summary["regret"].get<double>());
    } else {
      std::printf("%-28s %-16s", dir.c_str(), "bo");
      for (const char* arm : {"uncalibrated", "calibrated"})
        if (summary.contains(arm))
          std::printf("  %s: %.5f (%.5f)", arm, summary[arm]["mean_final_best"].get<double>(),
                      summary[arm]["stderr"].get<double>());
      std::printf("\n");
    }
    comparison.push_back(entry);
  }
  fs::create_directories(out_dir);
  write_text(fs::path(out_dir) / "comparison.json", comparison.dump(2) + "\n");
  return 0;
}

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"Online calibrated regression toolkit"};
  app.require_subcommand(1);

  RunConfig config;
  std::string config_path;
  std::string seeds_arg, features_arg;
  std::string report_out = "report";

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "flat key=value config file");
    sub->add_option("--seed", config.seed);
    sub->add_option("--out", config.out_dir);
  };

  CLI::App* stream = app.add_subcommand("stream", "run a streaming recalibration experiment");
  add_common(stream);
  stream->add_option("--dataset", config.dataset, "CSV input path");
  stream->add_option("--target", config.target);
  stream->add_option("--features", features_arg, "comma-separated feature columns");
  stream->add_option("--synth", config.synth, "iid_gaussian|variance_misspec|mean_shift|greedy_adversary");
  stream->add_option("--dim", config.dim);
  stream->add_option("--noise", config.noise);
  stream->add_option("--c", config.c);
  stream->add_option("--method", config.method, "raw|kde|online-nonrandom|online");
  stream->add_option("--resolution", config.resolution);
  stream->add_option("--intervals", config.intervals);
  stream->add_option("--batch-size", config.batch_size);
  stream->add_option("--bound", config.bound);
  stream->add_option("--rounds", config.rounds);
  stream->add_option("--probes", config.probe_count);
  stream->add_option("--warmup", config.warmup);
  stream->add_option("--crps-points", config.crps_points);

  CLI::App* bo = app.add_subcommand("bo", "run paired Bayesian optimization comparisons");
  add_common(bo);
  bo->add_option("--benchmark", config.benchmark,
                 "ackley2|ackley10|sixhumpcamel|beale|mccormick|alpine10");
  bo->add_option("--seeds", seeds_arg, "comma-separated seed list");
  bo->add_option("--iterations", config.iterations);
  bo->add_option("--calibrated", config.calibrated, "both|on|off");
  bo->add_option("--budget", config.budget);
  bo->add_option("--variant", config.variant, "randomized|expected|kde|identity");

  CLI::App* report = app.add_subcommand("report", "aggregate run outputs into a comparison");
  report->add_option("runs", config.report_paths, "run output directories");
  report->add_option("--out", report_out);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    // config file first, command line wins
    RunConfig from_file;
    if (!config_path.empty()) {
      apply_config(from_file, load_config_file(config_path));
      // start from file values, then copy fields the user passed on the CLI
      RunConfig merged = from_file;
      auto passed = [&](const CLI::App* sub, const std::string& name) {
        return sub->count(name) > 0;
      };
      const CLI::App* sub = stream->parsed() ? stream : (bo->parsed() ? bo : nullptr);
      if (sub) {
        if (passed(sub, "--seed")) merged.seed = config.seed;
        if (passed(sub, "--out")) merged.out_dir = config.out_dir;
        if (sub == stream) {
          if (passed(sub, "--dataset")) merged.dataset = config.dataset;
          if (passed(sub, "--target")) merged.target = config.target;
          if (passed(sub, "--synth")) merged.synth = config.synth;
          if (passed(sub, "--dim")) merged.dim = config.dim;
          if (passed(sub, "--noise")) merged.noise = config.noise;
          if (passed(sub, "--c")) merged.c = config.c;
          if (passed(sub, "--method")) merged.method = config.method;
          if (passed(sub, "--resolution")) merged.resolution = config.resolution;
          if (passed(sub, "--intervals")) merged.intervals = config.intervals;
          if (passed(sub, "--batch-size")) merged.batch_size = config.batch_size;
          if (passed(sub, "--bound")) merged.bound = config.bound;
          if (passed(sub, "--rounds")) merged.rounds = config.rounds;
          if (passed(sub, "--probes")) merged.probe_count = config.probe_count;
          if (passed(sub, "--warmup")) merged.warmup = config.warmup;
          if (passed(sub, "--crps-points")) merged.crps_points = config.crps_points;
        } else {
          if (passed(sub, "--benchmark")) merged.benchmark = config.benchmark;
          if (passed(sub, "--iterations")) merged.iterations = config.iterations;
          if (passed(sub, "--calibrated")) merged.calibrated = config.calibrated;
          if (passed(sub, "--budget")) merged.budget = config.budget;
          if (passed(sub, "--variant")) merged.variant = config.variant;
        }
      }
      config = merged;
    }
    if (!features_arg.empty()) config.features = split_list(features_arg);
    if (!seeds_arg.empty()) {
      config.seeds.clear();
      for (const std::string& s : split_list(seeds_arg))
        config.seeds.push_back(static_cast<std::uint64_t>(parse_int("seeds", s)));
    }

    if (stream->parsed()) {
      config.command = "stream";
      return cmd_stream(config);
    }
    if (bo->parsed()) {
      config.command = "bo";
      return cmd_bo(config);
    }
    config.command = "report";
    return cmd_report(config.report_paths, report_out);
  } catch (const DomainError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const NumericalError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const StateError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}

}  // namespace calreg
