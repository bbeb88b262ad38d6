// Command-line front end: scenario generation, single solves, Monte-Carlo
// sweeps, the small-network oracle validation, and caching-strategy
// comparisons. Exit codes: 0 success, 2 infeasible instance, 1 error.
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "cranbeam/baselines.hpp"
#include "cranbeam/harness.hpp"
#include "cranbeam/rng.hpp"

using namespace cranbeam;

namespace {

struct CommonArgs {
  std::uint64_t seed = 1;
  std::string out;
  int jobs = 1;
  std::string config_path;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--seed", args.seed, "base random seed")->required();
  cmd->add_option("--out", args.out, "output path")->required();
  cmd->add_option("--jobs", args.jobs, "parallel trial workers")->required();
  cmd->add_option("--config", args.config_path, "experiment config (JSON)");
}

ExperimentConfig load_config(const CommonArgs& args) {
  ExperimentConfig cfg;
  if (!args.config_path.empty()) {
    std::ifstream in(args.config_path);
    if (!in) throw std::runtime_error("cannot open config: " + args.config_path);
    std::stringstream ss;
    ss << in.rdbuf();
    cfg = config_from_json(ss.str());
  }
  cfg.base_seed = args.seed;  // CLI flags override config fields
  cfg.out_path = args.out;
  cfg.jobs = args.jobs;
  return cfg;
}

int sweep_to_files(const ExperimentConfig& cfg) {
  const SweepResult res = run_sweep(cfg);
  emit_results(res.rows, cfg.format, cfg.out_path, cfg.include_timings);
  emit_summary(res.summary, cfg.out_path + ".summary.csv");
  std::printf("wrote %zu rows to %s\n", res.rows.size(), cfg.out_path.c_str());
  bool any_feasible = false;
  for (const auto& r : res.rows) any_feasible = any_feasible || r.feasible;
  return any_feasible ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"content-centric sparse multicast beamforming simulator"};
  app.require_subcommand(1);

  CommonArgs gen_args, solve_args, sweep_args, val_args, cmp_args;

  auto* gen = app.add_subcommand("generate", "generate a scenario file");
  add_common(gen, gen_args);
  int gen_trial = 0;
  gen->add_option("--trial", gen_trial, "trial index to derive the scenario seed");

  auto* solve = app.add_subcommand("solve", "solve one scenario at one eta");
  add_common(solve, solve_args);
  std::string solve_algorithm = "g_ccp";
  std::string solve_eta = "1";
  std::string solve_scenario;
  std::string solve_trace;
  std::string solve_oracle_table;
  solve->add_option("--algorithm", solve_algorithm, "sdr_ccp|g_ccp|greedy|exhaustive|unicast|full_coop");
  solve->add_option("--eta", solve_eta, "tradeoff weight or 'power-only'");
  solve->add_option("--scenario", solve_scenario, "scenario JSON (otherwise generated)");
  solve->add_option("--trace", solve_trace, "write the per-iteration trace CSV here");
  solve->add_option("--oracle-table", solve_oracle_table,
                    "with --algorithm exhaustive: write the per-clustering audit table here");

  auto* sweep = app.add_subcommand("sweep", "run the full Monte-Carlo sweep");
  add_common(sweep, sweep_args);
  int sweep_trials = 0;
  sweep->add_option("--trials", sweep_trials, "override the number of trials");

  auto* val = app.add_subcommand("validate", "small-network oracle comparison");
  add_common(val, val_args);
  int val_trials = 20;
  val->add_option("--trials", val_trials, "number of seeds");

  auto* cmp = app.add_subcommand("compare-caching", "sweep the three caching strategies");
  add_common(cmp, cmp_args);

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) {
      const ExperimentConfig cfg = load_config(gen_args);
      const Scenario sc = scenario_for_trial(cfg, gen_trial);
      save_scenario(sc, cfg.out_path);
      std::printf("wrote scenario (%d BSs, %d users, %d groups) to %s\n", sc.n_bs(),
                  sc.radio.n_users, sc.n_groups(), cfg.out_path.c_str());
      return 0;
    }

    if (solve->parsed()) {
      ExperimentConfig cfg = load_config(solve_args);
      const Scenario sc = solve_scenario.empty() ? scenario_for_trial(cfg, 0)
                                                 : load_scenario(solve_scenario);
      EtaPoint eta;
      if (solve_eta == "power-only" || solve_eta == "inf")
        eta = EtaPoint::infinite();
      else
        eta = {std::stod(solve_eta), false};
      cfg.algorithms = {algorithm_from_string(solve_algorithm)};
      cfg.eta_grid = {eta};
      cfg.solver.trace_enabled = !solve_trace.empty();

      SolverSettings st = cfg.solver;
      st.power_only = eta.power_only;
      st.eta = eta.power_only ? 1.0 : eta.value;
      const std::uint64_t sseed = derive_seed(cfg.base_seed, 0x1);
      SolveResult res;
      const Algorithm algo = cfg.algorithms[0];
      switch (algo) {
        case Algorithm::sdr_ccp: res = sdr_ccp(sc, st, sseed); break;
        case Algorithm::g_ccp: res = g_ccp(sc, st, sseed); break;
        case Algorithm::greedy: res = greedy_clustering(sc, st.eta, st, sseed); break;
        case Algorithm::exhaustive: {
          const OracleOutcome oracle = exhaustive_search(sc, st.eta, st, sseed);
          if (!solve_oracle_table.empty()) {
            std::ofstream tab(solve_oracle_table);
            tab << "mask,clustering,feasible,backhaul_bps,power_w\n";
            for (const auto& row : oracle.table) {
              tab << row.mask << ",";
              for (Eigen::Index m = 0; m < row.s.rows(); ++m)
                for (Eigen::Index n = 0; n < row.s.cols(); ++n) tab << row.s(m, n);
              char buf[80];
              if (row.feasible)
                std::snprintf(buf, sizeof buf, ",1,%.10g,%.10g\n", row.backhaul, row.power);
              else
                std::snprintf(buf, sizeof buf, ",0,,\n");
              tab << buf;
            }
          }
          res = oracle.best;
          break;
        }
        case Algorithm::unicast: res = unicast_sparse_bf(sc, st.eta, st, sseed); break;
        case Algorithm::full_coop: {
          ClusterMatrix ones;
          ones.s = IMat::Ones(sc.n_groups(), sc.n_bs());
          res = polish(ones, sc, st, sseed);
          break;
        }
      }
      std::vector<ResultRow> rows;
      {
        ResultRow row;
        row.trial = 0;
        row.seed = cfg.base_seed;
        row.algorithm = algo;
        row.eta = eta;
        row.status = to_string(res.error);
        row.m_groups = sc.n_groups();
        row.scenario_hash = channel_hash(sc.chan);
        if (res.ok()) {
          row.feasible = true;
          row.backhaul_bps = res.outcome->costs.backhaul;
          row.power_w = res.outcome->costs.power;
          row.power_dbm = watts_to_dbm(res.outcome->costs.power);
          row.total_cost = res.outcome->costs.total;
          row.min_sinr_margin = res.outcome->min_sinr_margin;
          row.outer_stages = res.outcome->diag.outer_stages;
          for (int it : res.outcome->diag.inner_iters) row.inner_iters += it;
          row.wall_ms = res.outcome->diag.wall_seconds * 1e3;
        }
        rows.push_back(row);
      }
      emit_results(rows, cfg.format, cfg.out_path, cfg.include_timings);
      if (res.ok() && !solve_trace.empty()) {
        std::ofstream tr(solve_trace);
        tr << "theta,inner_iter,surrogate,true_cost,min_sinr_margin\n";
        for (const auto& t : res.outcome->diag.trace) {
          char buf[160];
          std::snprintf(buf, sizeof buf, "%.10g,%d,%.10g,%.10g,%.10g\n", t.theta, t.inner_iter,
                        t.surrogate, t.true_cost, t.min_sinr_margin);
          tr << buf;
        }
      }
      if (!res.ok()) {
        std::fprintf(stderr, "instance did not solve: %s\n", to_string(res.error));
        return res.error == SolveError::numerical_failure ? 1 : 2;
      }
      std::printf("%s eta=%s backhaul=%.6g bps power=%.6g W total=%.6g\n",
                  to_string(algo), eta.label().c_str(), res.outcome->costs.backhaul,
                  res.outcome->costs.power, res.outcome->costs.total);
      return 0;
    }

    if (sweep->parsed()) {
      ExperimentConfig cfg = load_config(sweep_args);
      if (sweep_trials > 0) cfg.n_trials = sweep_trials;
      return sweep_to_files(cfg);
    }

    if (val->parsed()) {
      // Small-network reduction: 3 BSs x 3 antennas, 6 users, 4 contents with
      // zipf(1) popularity, 2 most popular cached everywhere.
      ExperimentConfig cfg = load_config(val_args);
      cfg.radio = RadioConfig{};
      cfg.radio.n_bs = 3;
      cfg.radio.n_ant = 3;
      cfg.radio.n_users = 6;
      cfg.radio.n_contents = 4;
      cfg.popularity = {1.0, std::nullopt};
      cfg.strategy = CacheStrategy::PopC;
      cfg.cache_size = 2;
      cfg.n_trials = val_trials;
      cfg.algorithms = {Algorithm::g_ccp, Algorithm::exhaustive};
      cfg.eta_grid = {{1e-6, false}, {0.1, false}, {1.0, false}, {10.0, false},
                      EtaPoint::infinite()};
      const SweepResult res = run_sweep(cfg);
      emit_results(res.rows, cfg.format, cfg.out_path, cfg.include_timings);
      emit_summary(res.summary, cfg.out_path + ".summary.csv");

      bool pass = true;
      std::printf("%-12s %-12s %-14s %-14s %-8s\n", "eta", "g_ccp", "oracle", "ratio", "ok");
      for (const EtaPoint& eta : cfg.eta_grid) {
        double g_cost = 0.0, o_cost = 0.0;
        int n = 0;
        for (const auto& row : res.rows) {
          if (!row.feasible || row.eta.label() != eta.label()) continue;
          const double cost = eta.power_only ? row.power_w : row.total_cost;
          if (row.algorithm == Algorithm::g_ccp) {
            g_cost += cost;
            ++n;
          } else if (row.algorithm == Algorithm::exhaustive) {
            o_cost += cost;
          }
        }
        const double ratio = o_cost > 0 ? g_cost / o_cost : 1.0;
        const bool ok = ratio <= 1.10;
        pass = pass && ok;
        std::printf("%-12s %-12.6g %-14.6g %-14.4f %-8s\n", eta.label().c_str(),
                    g_cost / std::max(1, n), o_cost / std::max(1, n), ratio, ok ? "yes" : "NO");
      }
      return pass ? 0 : 1;
    }

    if (cmp->parsed()) {
      ExperimentConfig base = load_config(cmp_args);
      std::size_t total = 0;
      for (CacheStrategy strat :
           {CacheStrategy::PopC, CacheStrategy::RanC, CacheStrategy::ProC}) {
        ExperimentConfig cfg = base;
        cfg.strategy = strat;
        const SweepResult res = run_sweep(cfg);
        const std::string stem = base.out_path + "." + to_string(strat);
        emit_results(res.rows, base.format, stem + ".csv", base.include_timings);
        emit_summary(res.summary, stem + ".summary.csv");
        total += res.rows.size();
      }
      std::printf("wrote %zu rows across %s.{popc,ranc,proc}.csv\n", total,
                  base.out_path.c_str());
      return 0;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 1;
}
