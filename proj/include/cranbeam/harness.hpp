// Experiment orchestration: seeded Monte-Carlo trials over (algorithm, eta)
// grids on shared per-trial scenarios, parallel across trials, with
// machine-readable CSV/JSONL emission. Output is byte-identical for a given
// (config, base_seed) regardless of the parallelism degree.
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cranbeam/baselines.hpp"
#include "cranbeam/ccp.hpp"
#include "cranbeam/scenario.hpp"

namespace cranbeam {

enum class Algorithm { sdr_ccp, g_ccp, greedy, exhaustive, unicast, full_coop };

const char* to_string(Algorithm a);
Algorithm algorithm_from_string(const std::string& s);

struct EtaPoint {
  double value = 1.0;
  bool power_only = false;

  static EtaPoint infinite() { return {0.0, true}; }
  std::string label() const;
};

struct ExperimentConfig {
  RadioConfig radio;
  PopularitySpec popularity;
  CacheStrategy strategy = CacheStrategy::PopC;
  int cache_size = 10;
  std::vector<Algorithm> algorithms = {Algorithm::g_ccp};
  std::vector<EtaPoint> eta_grid = {{1.0, false}};
  int n_trials = 1;
  std::uint64_t base_seed = 1;
  std::string out_path = "results.csv";
  int jobs = 1;
  SolverSettings solver;
  enum class Format { csv, jsonl };
  Format format = Format::csv;
  bool include_timings = false;  // wall times are nondeterministic; opt-in

  void validate() const;
};

struct ResultRow {
  int trial = 0;
  std::uint64_t seed = 0;
  Algorithm algorithm = Algorithm::g_ccp;
  EtaPoint eta;
  std::string status;  // "ok" or a SolveError name
  bool feasible = false;
  int m_groups = 0;
  // Cost fields are meaningful only when feasible.
  double backhaul_bps = 0.0;
  double power_w = 0.0;
  double power_dbm = 0.0;
  double total_cost = 0.0;
  double min_sinr_margin = 0.0;
  int outer_stages = 0;
  int inner_iters = 0;
  double wall_ms = 0.0;
  std::uint64_t scenario_hash = 0;
};

struct SummaryRow {
  Algorithm algorithm;
  EtaPoint eta;
  int n_feasible = 0;
  int n_trials = 0;
  double mean_backhaul_bps = 0.0;
  double mean_power_w = 0.0;
};

struct SweepResult {
  std::vector<ResultRow> rows;
  std::vector<SummaryRow> summary;
};

std::uint64_t trial_seed(std::uint64_t base_seed, int trial);
Scenario scenario_for_trial(const ExperimentConfig& cfg, int trial);

// One row per (algorithm, eta) on the trial's single scenario; per-row
// failures are recorded and do not stop the trial.
std::vector<ResultRow> run_trial(const ExperimentConfig& cfg, int trial);

// All trials (parallel up to cfg.jobs) plus per-(algorithm, eta) means over
// feasible rows.
SweepResult run_sweep(const ExperimentConfig& cfg);

void emit_results(const std::vector<ResultRow>& rows, ExperimentConfig::Format format,
                  const std::string& path, bool include_timings = false);
std::vector<ResultRow> read_results(const std::string& path, ExperimentConfig::Format format);
void emit_summary(const std::vector<SummaryRow>& summary, const std::string& path);

std::vector<SummaryRow> summarize(const std::vector<ResultRow>& rows,
                                  const ExperimentConfig& cfg);

// Config file round-trip (JSON).
std::string config_to_json(const ExperimentConfig& cfg);
ExperimentConfig config_from_json(const std::string& text);

}  // namespace cranbeam
