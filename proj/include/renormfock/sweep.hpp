#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "renormfock/config.hpp"

namespace renormfock {

struct SweepRow {
  std::string model;
  std::string sweep_param;
  double sweep_value = 0.0;
  double mu = 0.0;
  int modes = 0;
  int nmax = 0;
  long long dim = 0;
  double sigma = 0.0;
  double sigma0 = 0.0;
  double e0 = 0.0;
  double gap = 0.0;
  double num_expect = 0.0;
  double vac_overlap = 0.0;
  double resolvent_gap = 0.0;
  double tail_bound = 0.0;
  double metric_cond = 0.0;
  double runtime_ms = 0.0;
};

struct RunOptions {
  int threads = 1;
  std::optional<std::uint64_t> seed;  // overrides solver.seed
  cplx z = kI;
};

// Thread count from RENORMFOCK_THREADS, or 1 when unset or invalid.
int default_threads();

// Evaluates every sweep point on a bounded worker pool; rows come back in
// config order. If a point fails, the completed rows are kept in
// `completed` (when given) and an Error naming the first failing point index
// is thrown.
std::vector<SweepRow> run_sweep(const ExperimentConfig& config, const RunOptions& options,
                                std::vector<SweepRow>* completed = nullptr);

// Runs the sweep and writes the CSV. On failure the completed rows go to
// `<out>.partial` before the error propagates.
std::vector<SweepRow> run_sweep_to_file(const ExperimentConfig& config,
                                        const std::string& out_path,
                                        const RunOptions& options);

const std::string& csv_header();
std::string csv_line(const SweepRow& row);
std::string to_csv(const std::vector<SweepRow>& rows);

}  // namespace renormfock
