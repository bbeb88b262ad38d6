#include "cranbeam/harness.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "cranbeam/rng.hpp"

namespace cranbeam {

namespace {

std::string fmt_double(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

double parse_double(const std::string& s) {
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  return std::stod(s);
}

}  // namespace

const char* to_string(Algorithm a) {
  switch (a) {
    case Algorithm::sdr_ccp: return "sdr_ccp";
    case Algorithm::g_ccp: return "g_ccp";
    case Algorithm::greedy: return "greedy";
    case Algorithm::exhaustive: return "exhaustive";
    case Algorithm::unicast: return "unicast";
    case Algorithm::full_coop: return "full_coop";
  }
  return "?";
}

Algorithm algorithm_from_string(const std::string& s) {
  for (Algorithm a : {Algorithm::sdr_ccp, Algorithm::g_ccp, Algorithm::greedy,
                      Algorithm::exhaustive, Algorithm::unicast, Algorithm::full_coop})
    if (s == to_string(a)) return a;
  throw std::invalid_argument("unknown algorithm: " + s);
}

std::string EtaPoint::label() const { return power_only ? "power-only" : fmt_double(value); }

void ExperimentConfig::validate() const {
  radio.validate();
  if (eta_grid.empty()) throw std::invalid_argument("ExperimentConfig: empty eta grid");
  if (n_trials < 1) throw std::invalid_argument("ExperimentConfig: n_trials must be >= 1");
  if (jobs < 1) throw std::invalid_argument("ExperimentConfig: jobs must be >= 1");
  if (algorithms.empty()) throw std::invalid_argument("ExperimentConfig: no algorithms");
  solver.validate();
}

std::uint64_t trial_seed(std::uint64_t base_seed, int trial) {
  return derive_seed(base_seed, 0x7261696c, static_cast<std::uint64_t>(trial));
}

Scenario scenario_for_trial(const ExperimentConfig& cfg, int trial) {
  return make_scenario(cfg.radio, cfg.popularity, cfg.strategy, cfg.cache_size,
                       trial_seed(cfg.base_seed, trial));
}

namespace {

SolverSettings settings_for(const ExperimentConfig& cfg, const EtaPoint& eta) {
  SolverSettings st = cfg.solver;
  st.power_only = eta.power_only;
  st.eta = eta.power_only ? 1.0 : eta.value;
  return st;
}

ResultRow make_row(const ExperimentConfig& cfg, int trial, Algorithm algo, const EtaPoint& eta,
                   const Scenario& sc, const SolveResult& res) {
  ResultRow row;
  row.trial = trial;
  row.seed = trial_seed(cfg.base_seed, trial);
  row.algorithm = algo;
  row.eta = eta;
  row.status = to_string(res.error);
  row.m_groups = sc.n_groups();
  row.scenario_hash = channel_hash(sc.chan);
  if (res.ok()) {
    const auto& out = *res.outcome;
    row.feasible = true;
    row.backhaul_bps = out.costs.backhaul;
    row.power_w = out.costs.power;
    row.power_dbm = watts_to_dbm(out.costs.power);
    row.total_cost = out.costs.total;
    row.min_sinr_margin = out.min_sinr_margin;
    row.outer_stages = out.diag.outer_stages;
    for (int it : out.diag.inner_iters) row.inner_iters += it;
    row.wall_ms = out.diag.wall_seconds * 1e3;
  }
  return row;
}

SolveResult dispatch(Algorithm algo, const Scenario& sc, const SolverSettings& st, double eta,
                     std::uint64_t seed) {
  switch (algo) {
    case Algorithm::sdr_ccp: return sdr_ccp(sc, st, seed);
    case Algorithm::g_ccp: return g_ccp(sc, st, seed);
    case Algorithm::greedy: return greedy_clustering(sc, eta, st, seed);
    case Algorithm::exhaustive: return exhaustive_search(sc, eta, st, seed).best;
    case Algorithm::unicast: return unicast_sparse_bf(sc, eta, st, seed);
    case Algorithm::full_coop: {
      ClusterMatrix ones;
      ones.s = IMat::Ones(sc.n_groups(), sc.n_bs());
      return polish(ones, sc, st, seed);
    }
  }
  return SolveResult{SolveError::numerical_failure, std::nullopt};
}

}  // namespace

std::vector<ResultRow> run_trial(const ExperimentConfig& cfg, int trial) {
  const Scenario sc = scenario_for_trial(cfg, trial);
  const std::uint64_t tseed = trial_seed(cfg.base_seed, trial);
  std::vector<ResultRow> rows;
  for (std::size_t ai = 0; ai < cfg.algorithms.size(); ++ai) {
    const Algorithm algo = cfg.algorithms[ai];
    for (std::size_t ei = 0; ei < cfg.eta_grid.size(); ++ei) {
      const EtaPoint eta = cfg.eta_grid[ei];
      const SolverSettings st = settings_for(cfg, eta);
      // Solver seed does not depend on the caching strategy or algorithm
      // position, so paired comparisons across configs share randomization.
      const std::uint64_t sseed =
          derive_seed(tseed, static_cast<std::uint64_t>(algo), static_cast<std::uint64_t>(ei));
      SolveResult res;
      try {
        res = dispatch(algo, sc, st, eta.power_only ? 0.0 : eta.value, sseed);
      } catch (const std::exception&) {
        res = SolveResult{SolveError::numerical_failure, std::nullopt};
      }
      rows.push_back(make_row(cfg, trial, algo, eta, sc, res));
    }
  }
  return rows;
}

SweepResult run_sweep(const ExperimentConfig& cfg) {
  cfg.validate();
  std::vector<std::vector<ResultRow>> per_trial(static_cast<std::size_t>(cfg.n_trials));
  std::atomic<int> next{0};
  const int workers = std::min(cfg.jobs, cfg.n_trials);
  auto work = [&] {
    for (int t = next.fetch_add(1); t < cfg.n_trials; t = next.fetch_add(1))
      per_trial[static_cast<std::size_t>(t)] = run_trial(cfg, t);
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < workers; ++i) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }

  SweepResult out;
  for (auto& rows : per_trial)
    for (auto& r : rows) out.rows.push_back(std::move(r));
  out.summary = summarize(out.rows, cfg);
  return out;
}

std::vector<SummaryRow> summarize(const std::vector<ResultRow>& rows,
                                  const ExperimentConfig& cfg) {
  std::vector<SummaryRow> summary;
  for (Algorithm algo : cfg.algorithms) {
    for (const EtaPoint& eta : cfg.eta_grid) {
      SummaryRow s;
      s.algorithm = algo;
      s.eta = eta;
      double backhaul = 0.0, power = 0.0;
      for (const ResultRow& r : rows) {
        if (r.algorithm != algo || r.eta.power_only != eta.power_only ||
            (!eta.power_only && r.eta.value != eta.value))
          continue;
        s.n_trials += 1;
        if (!r.feasible) continue;
        s.n_feasible += 1;
        backhaul += r.backhaul_bps;
        power += r.power_w;
      }
      if (s.n_feasible > 0) {
        s.mean_backhaul_bps = backhaul / s.n_feasible;
        s.mean_power_w = power / s.n_feasible;
      }
      summary.push_back(s);
    }
  }
  return summary;
}

namespace {

constexpr const char* kCsvHeader =
    "trial,seed,algorithm,eta,status,feasible,m_groups,backhaul_bps,power_w,power_dbm,"
    "total_cost,min_sinr_margin,outer_stages,inner_iters,wall_ms,scenario_hash";

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

void emit_results(const std::vector<ResultRow>& rows, ExperimentConfig::Format format,
                  const std::string& path, bool include_timings) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("emit_results: cannot open " + path);
  if (format == ExperimentConfig::Format::csv) {
    out << kCsvHeader << "\n";
    for (const ResultRow& r : rows) {
      out << r.trial << "," << r.seed << "," << to_string(r.algorithm) << "," << r.eta.label()
          << "," << r.status << "," << (r.feasible ? 1 : 0) << "," << r.m_groups << ",";
      if (r.feasible)
        out << fmt_double(r.backhaul_bps) << "," << fmt_double(r.power_w) << ","
            << fmt_double(r.power_dbm) << "," << fmt_double(r.total_cost) << ","
            << fmt_double(r.min_sinr_margin);
      else
        out << ",,,,";
      out << "," << r.outer_stages << "," << r.inner_iters << ",";
      if (include_timings) out << fmt_double(r.wall_ms);
      char hash[24];
      std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(r.scenario_hash));
      out << "," << hash << "\n";
    }
  } else {
    for (const ResultRow& r : rows) {
      nlohmann::ordered_json j;
      j["trial"] = r.trial;
      j["seed"] = r.seed;
      j["algorithm"] = to_string(r.algorithm);
      j["eta"] = r.eta.label();
      j["status"] = r.status;
      j["feasible"] = r.feasible;
      j["m_groups"] = r.m_groups;
      if (r.feasible) {
        j["backhaul_bps"] = r.backhaul_bps;
        j["power_w"] = r.power_w;
        j["power_dbm"] = r.power_dbm;
        if (std::isinf(r.total_cost))
          j["total_cost"] = nullptr;  // power-only rows have no finite total
        else
          j["total_cost"] = r.total_cost;
        j["min_sinr_margin"] = r.min_sinr_margin;
      }
      j["outer_stages"] = r.outer_stages;
      j["inner_iters"] = r.inner_iters;
      if (include_timings) j["wall_ms"] = r.wall_ms;
      char hash[24];
      std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(r.scenario_hash));
      j["scenario_hash"] = hash;
      out << j.dump() << "\n";
    }
  }
}

std::vector<ResultRow> read_results(const std::string& path, ExperimentConfig::Format format) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("read_results: cannot open " + path);
  std::vector<ResultRow> rows;
  std::string line;
  if (format == ExperimentConfig::Format::csv) {
    std::getline(in, line);
    if (line != kCsvHeader) throw std::runtime_error("read_results: unexpected header");
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const auto f = split_csv(line);
      if (f.size() != 16) throw std::runtime_error("read_results: bad row");
      ResultRow r;
      r.trial = std::stoi(f[0]);
      r.seed = std::stoull(f[1]);
      r.algorithm = algorithm_from_string(f[2]);
      if (f[3] == "power-only")
        r.eta = EtaPoint::infinite();
      else
        r.eta = {parse_double(f[3]), false};
      r.status = f[4];
      r.feasible = f[5] == "1";
      r.m_groups = std::stoi(f[6]);
      if (r.feasible) {
        r.backhaul_bps = parse_double(f[7]);
        r.power_w = parse_double(f[8]);
        r.power_dbm = parse_double(f[9]);
        r.total_cost = parse_double(f[10]);
        r.min_sinr_margin = parse_double(f[11]);
      }
      r.outer_stages = std::stoi(f[12]);
      r.inner_iters = std::stoi(f[13]);
      if (!f[14].empty()) r.wall_ms = parse_double(f[14]);
      r.scenario_hash = std::stoull(f[15], nullptr, 16);
      rows.push_back(std::move(r));
    }
  } else {
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const auto j = nlohmann::json::parse(line);
      ResultRow r;
      r.trial = j.at("trial");
      r.seed = j.at("seed");
      r.algorithm = algorithm_from_string(j.at("algorithm"));
      const std::string eta = j.at("eta");
      r.eta = eta == "power-only" ? EtaPoint::infinite() : EtaPoint{parse_double(eta), false};
      r.status = j.at("status");
      r.feasible = j.at("feasible");
      r.m_groups = j.at("m_groups");
      if (r.feasible) {
        r.backhaul_bps = j.at("backhaul_bps");
        r.power_w = j.at("power_w");
        r.power_dbm = j.at("power_dbm");
        r.total_cost = j.at("total_cost").is_null() ? std::numeric_limits<double>::infinity()
                                                    : j.at("total_cost").get<double>();
        r.min_sinr_margin = j.at("min_sinr_margin");
      }
      r.outer_stages = j.at("outer_stages");
      r.inner_iters = j.at("inner_iters");
      if (j.contains("wall_ms")) r.wall_ms = j.at("wall_ms");
      r.scenario_hash = std::stoull(j.at("scenario_hash").get<std::string>(), nullptr, 16);
      rows.push_back(std::move(r));
    }
  }
  return rows;
}

void emit_summary(const std::vector<SummaryRow>& summary, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("emit_summary: cannot open " + path);
  out << "algorithm,eta,n_feasible,n_trials,mean_backhaul_bps,mean_power_w,mean_power_dbm\n";
  for (const SummaryRow& s : summary) {
    out << to_string(s.algorithm) << "," << s.eta.label() << "," << s.n_feasible << ","
        << s.n_trials << ",";
    if (s.n_feasible > 0)
      out << fmt_double(s.mean_backhaul_bps) << "," << fmt_double(s.mean_power_w) << ","
          << fmt_double(watts_to_dbm(s.mean_power_w));
    else
      out << ",,";
    out << "\n";
  }
}

std::string config_to_json(const ExperimentConfig& cfg) {
  nlohmann::ordered_json j;
  j["radio"] = {{"n_bs", cfg.radio.n_bs},
                {"n_ant", cfg.radio.n_ant},
                {"n_users", cfg.radio.n_users},
                {"n_contents", cfg.radio.n_contents},
                {"inter_bs_distance_m", cfg.radio.inter_bs_distance_m},
                {"exclusion_radius_m", cfg.radio.exclusion_radius_m},
                {"bandwidth_hz", cfg.radio.bandwidth_hz},
                {"antenna_gain_db", cfg.radio.antenna_gain_db},
                {"pathloss_intercept_db", cfg.radio.pathloss_intercept_db},
                {"pathloss_slope_db", cfg.radio.pathloss_slope_db},
                {"shadowing_std_db", cfg.radio.shadowing_std_db},
                {"noise_psd_dbm_hz", cfg.radio.noise_psd_dbm_hz},
                {"sinr_target_db", cfg.radio.sinr_target_db}};
  if (cfg.radio.per_antenna_peak_dbm)
    j["radio"]["per_antenna_peak_dbm"] = *cfg.radio.per_antenna_peak_dbm;
  if (cfg.radio.per_bs_peak_dbm) j["radio"]["per_bs_peak_dbm"] = *cfg.radio.per_bs_peak_dbm;
  j["popularity"] = {{"alpha", cfg.popularity.alpha}};
  if (cfg.popularity.trending_mass)
    j["popularity"]["trending_mass"] = *cfg.popularity.trending_mass;
  j["cache"] = {{"strategy", to_string(cfg.strategy)}, {"size", cfg.cache_size}};
  std::vector<std::string> algos;
  for (Algorithm a : cfg.algorithms) algos.emplace_back(to_string(a));
  j["algorithms"] = algos;
  nlohmann::ordered_json grid = nlohmann::ordered_json::array();
  for (const EtaPoint& e : cfg.eta_grid) {
    if (e.power_only)
      grid.push_back("power-only");
    else
      grid.push_back(e.value);
  }
  j["eta_grid"] = grid;
  j["n_trials"] = cfg.n_trials;
  j["base_seed"] = cfg.base_seed;
  j["out"] = cfg.out_path;
  j["jobs"] = cfg.jobs;
  j["format"] = cfg.format == ExperimentConfig::Format::csv ? "csv" : "jsonl";
  j["include_timings"] = cfg.include_timings;
  j["solver"] = {{"smooth_kind", to_string(cfg.solver.smooth_kind)},
                 {"beta", cfg.solver.anneal.beta},
                 {"epsilon", cfg.solver.anneal.epsilon},
                 {"ccp_rel_tol", cfg.solver.ccp_rel_tol},
                 {"ccp_max_iters", cfg.solver.ccp_max_iters},
                 {"n_randomizations", cfg.solver.n_randomizations},
                 {"cluster_threshold", cfg.solver.cluster_threshold},
                 {"conic_tol", cfg.solver.conic_tol}};
  return j.dump(1);
}

ExperimentConfig config_from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  ExperimentConfig cfg;
  if (j.contains("radio")) {
    const auto& r = j.at("radio");
    auto get = [&](const char* key, auto& field) {
      if (r.contains(key)) field = r.at(key);
    };
    get("n_bs", cfg.radio.n_bs);
    get("n_ant", cfg.radio.n_ant);
    get("n_users", cfg.radio.n_users);
    get("n_contents", cfg.radio.n_contents);
    get("inter_bs_distance_m", cfg.radio.inter_bs_distance_m);
    get("exclusion_radius_m", cfg.radio.exclusion_radius_m);
    get("bandwidth_hz", cfg.radio.bandwidth_hz);
    get("antenna_gain_db", cfg.radio.antenna_gain_db);
    get("pathloss_intercept_db", cfg.radio.pathloss_intercept_db);
    get("pathloss_slope_db", cfg.radio.pathloss_slope_db);
    get("shadowing_std_db", cfg.radio.shadowing_std_db);
    get("noise_psd_dbm_hz", cfg.radio.noise_psd_dbm_hz);
    get("sinr_target_db", cfg.radio.sinr_target_db);
    if (r.contains("per_antenna_peak_dbm"))
      cfg.radio.per_antenna_peak_dbm = r.at("per_antenna_peak_dbm").get<double>();
    if (r.contains("per_bs_peak_dbm"))
      cfg.radio.per_bs_peak_dbm = r.at("per_bs_peak_dbm").get<double>();
  }
  if (j.contains("popularity")) {
    cfg.popularity.alpha = j.at("popularity").value("alpha", 1.0);
    if (j.at("popularity").contains("trending_mass"))
      cfg.popularity.trending_mass = j.at("popularity").at("trending_mass").get<double>();
  }
  if (j.contains("cache")) {
    cfg.strategy = cache_strategy_from_string(j.at("cache").value("strategy", "popc"));
    cfg.cache_size = j.at("cache").value("size", cfg.cache_size);
  }
  if (j.contains("algorithms")) {
    cfg.algorithms.clear();
    for (const auto& a : j.at("algorithms"))
      cfg.algorithms.push_back(algorithm_from_string(a.get<std::string>()));
  }
  if (j.contains("eta_grid")) {
    cfg.eta_grid.clear();
    for (const auto& e : j.at("eta_grid")) {
      if (e.is_string() && e.get<std::string>() == "power-only")
        cfg.eta_grid.push_back(EtaPoint::infinite());
      else
        cfg.eta_grid.push_back({e.get<double>(), false});
    }
  }
  cfg.n_trials = j.value("n_trials", cfg.n_trials);
  cfg.base_seed = j.value("base_seed", cfg.base_seed);
  cfg.out_path = j.value("out", cfg.out_path);
  cfg.jobs = j.value("jobs", cfg.jobs);
  if (j.value("format", "csv") == std::string("jsonl"))
    cfg.format = ExperimentConfig::Format::jsonl;
  cfg.include_timings = j.value("include_timings", false);
  if (j.contains("solver")) {
    const auto& s = j.at("solver");
    if (s.contains("smooth_kind")) {
      const std::string k = s.at("smooth_kind");
      cfg.solver.smooth_kind = k == "log"   ? SmoothKind::Log
                               : k == "exp" ? SmoothKind::Exp
                                            : SmoothKind::Arctan;
    }
    cfg.solver.anneal.beta = s.value("beta", cfg.solver.anneal.beta);
    cfg.solver.anneal.epsilon = s.value("epsilon", cfg.solver.anneal.epsilon);
    cfg.solver.ccp_rel_tol = s.value("ccp_rel_tol", cfg.solver.ccp_rel_tol);
    cfg.solver.ccp_max_iters = s.value("ccp_max_iters", cfg.solver.ccp_max_iters);
    cfg.solver.n_randomizations = s.value("n_randomizations", cfg.solver.n_randomizations);
    cfg.solver.cluster_threshold = s.value("cluster_threshold", cfg.solver.cluster_threshold);
    cfg.solver.conic_tol = s.value("conic_tol", cfg.solver.conic_tol);
  }
  return cfg;
}

}  // namespace cranbeam
