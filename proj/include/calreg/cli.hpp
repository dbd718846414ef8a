// Command-line entry points: streaming recalibration runs, Bayesian
// optimization comparisons, and report aggregation.
#pragma once

#include <map>
#include <string>
#include <vector>

#include "calreg/streams.hpp"

namespace calreg {

// Versioned trace schema; report refuses anything else.
extern const char* const kTraceSchema;
std::string stream_trace_header(int probe_count);
std::string bo_trace_header();

struct RunConfig {
  std::string command;  // stream | bo | report
  // stream inputs
  std::string dataset;
  std::string target = "y";
  std::vector<std::string> features;
  std::string synth;
  int dim = 2;
  double noise = 1.0;
  double c = 3.0;
  // shared knobs
  std::string method = "online";
  int resolution = 20;  // N
  int intervals = 0;    // M; 0 = N
  int batch_size = 10;
  double bound = 2.0;  // B
  std::uint64_t seed = 1;
  std::vector<std::uint64_t> seeds;
  long long rounds = 10000;  // T
  int probe_count = 9;
  int warmup = 50;
  int crps_points = 200;
  std::string out_dir = "out";
  // bo
  std::string benchmark;
  int iterations = 30;
  std::string calibrated = "both";  // both | on | off
  int budget = 2048;
  std::string variant = "expected";  // bank variant for bo
  // report
  std::vector<std::string> report_paths;
};

// Flat key=value config file; '#' comments; unknown keys rejected.
std::map<std::string, std::string> load_config_file(const std::string& path);
void apply_config(RunConfig& config, const std::map<std::string, std::string>& kv);

int cmd_stream(const RunConfig& config);
int cmd_bo(const RunConfig& config);
int cmd_report(const std::vector<std::string>& run_dirs, const std::string& out_dir);

// Full argv entry point; returns the process exit code
// (0 ok, 2 config error, 3 data error, 4 numerical failure).
int run_cli(int argc, const char* const* argv);

}  // namespace calreg
