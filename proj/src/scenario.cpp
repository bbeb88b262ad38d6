#include "cranbeam/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "cranbeam/rng.hpp"

namespace cranbeam {

void RadioConfig::validate() const {
  if (n_bs < 1 || n_ant < 1 || n_users < 1 || n_contents < 1)
    throw std::invalid_argument("RadioConfig: all counts must be >= 1");
  if (!(bandwidth_hz > 0.0)) throw std::invalid_argument("RadioConfig: bandwidth must be > 0");
  if (!(exclusion_radius_m < inter_bs_distance_m / 2.0))
    throw std::invalid_argument("RadioConfig: exclusion radius must be < half the BS spacing");
  if (!std::isfinite(sinr_target_db))
    throw std::invalid_argument("RadioConfig: SINR target must be finite");
}

void Popularity::validate() const {
  if (probs.size() < 1) throw std::invalid_argument("Popularity: empty");
  if ((probs.array() < 0.0).any()) throw std::invalid_argument("Popularity: negative entry");
  if (std::abs(probs.sum() - 1.0) > 1e-12)
    throw std::invalid_argument("Popularity: probabilities must sum to 1");
}

const char* to_string(CacheStrategy s) {
  switch (s) {
    case CacheStrategy::PopC: return "popc";
    case CacheStrategy::RanC: return "ranc";
    case CacheStrategy::ProC: return "proc";
  }
  return "?";
}

CacheStrategy cache_strategy_from_string(const std::string& s) {
  if (s == "popc" || s == "PopC") return CacheStrategy::PopC;
  if (s == "ranc" || s == "RanC") return CacheStrategy::RanC;
  if (s == "proc" || s == "ProC") return CacheStrategy::ProC;
  throw std::invalid_argument("unknown cache strategy: " + s);
}

namespace {

// Hexagonal cell of inradius d/2 centered at c, flat sides facing the six
// neighbor directions (neighbors sit at angles 0, 60, ..., 300 degrees).
bool in_hex(const Vec2& p, const Vec2& c, double spacing) {
  const Vec2 d = p - c;
  for (int k = 0; k < 3; ++k) {
    const double th = k * std::numbers::pi / 3.0;
    if (std::abs(std::cos(th) * d.x() + std::sin(th) * d.y()) > spacing / 2.0 + 1e-9)
      return false;
  }
  return true;
}

std::vector<Vec2> hex_bs_layout(int n_bs, double spacing) {
  std::vector<Vec2> pos;
  pos.emplace_back(0.0, 0.0);
  for (int k = 0; k < 6 && static_cast<int>(pos.size()) < n_bs; ++k) {
    const double th = k * std::numbers::pi / 3.0;
    pos.emplace_back(spacing * std::cos(th), spacing * std::sin(th));
  }
  // Second ring: 6 at distance sqrt(3)*d (edge midpoints) and 6 at 2d.
  for (int k = 0; k < 6 && static_cast<int>(pos.size()) < n_bs; ++k) {
    const double th = k * std::numbers::pi / 3.0 + std::numbers::pi / 6.0;
    pos.emplace_back(std::numbers::sqrt3 * spacing * std::cos(th),
                     std::numbers::sqrt3 * spacing * std::sin(th));
  }
  for (int k = 0; k < 6 && static_cast<int>(pos.size()) < n_bs; ++k) {
    const double th = k * std::numbers::pi / 3.0;
    pos.emplace_back(2.0 * spacing * std::cos(th), 2.0 * spacing * std::sin(th));
  }
  if (static_cast<int>(pos.size()) < n_bs)
    throw std::invalid_argument("build_topology: hex layout supports at most 19 BSs");
  pos.resize(n_bs);
  return pos;
}

}  // namespace

Topology build_topology(const RadioConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Topology topo;
  topo.bs_positions = hex_bs_layout(cfg.n_bs, cfg.inter_bs_distance_m);

  Rng rng(seed);
  const double rc = cfg.inter_bs_distance_m / std::numbers::sqrt3;  // hex circumradius
  topo.user_positions.reserve(cfg.n_users);
  std::uint64_t draws = 0;
  constexpr std::uint64_t kMaxDraws = 1'000'000;
  while (static_cast<int>(topo.user_positions.size()) < cfg.n_users) {
    if (++draws > kMaxDraws)
      throw std::runtime_error(
          "build_topology: rejection sampling failed; exclusion discs too large for layout");
    // Cells tile the plane with equal area, so picking a cell uniformly and a
    // point uniformly inside it is uniform over the union.
    const auto cell = static_cast<std::size_t>(rng.below(topo.bs_positions.size()));
    const Vec2 c = topo.bs_positions[cell];
    const Vec2 p(c.x() + rng.uniform(-rc, rc), c.y() + rng.uniform(-rc, rc));
    if (!in_hex(p, c, cfg.inter_bs_distance_m)) continue;
    bool clear = true;
    for (const Vec2& b : topo.bs_positions) {
      if ((p - b).norm() < cfg.exclusion_radius_m) {
        clear = false;
        break;
      }
    }
    if (clear) topo.user_positions.push_back(p);
  }
  return topo;
}

ChannelState sample_channels(const Topology& topo, const RadioConfig& cfg, std::uint64_t seed) {
  const int k_users = static_cast<int>(topo.user_positions.size());
  const int n_bs = static_cast<int>(topo.bs_positions.size());
  if (k_users != cfg.n_users || n_bs != cfg.n_bs)
    throw std::invalid_argument("sample_channels: topology inconsistent with config");

  ChannelState ch;
  ch.h.resize(k_users, cfg.n_tx());
  Rng rng(seed);
  for (int k = 0; k < k_users; ++k) {
    for (int n = 0; n < n_bs; ++n) {
      const double d_km = (topo.user_positions[k] - topo.bs_positions[n]).norm() / 1000.0;
      const double pl_db = cfg.pathloss_intercept_db + cfg.pathloss_slope_db * std::log10(d_km);
      const double shadow_db = cfg.shadowing_std_db * rng.normal();  // shared over antennas
      const double gain_db = -pl_db + cfg.antenna_gain_db + shadow_db;
      const double amp = std::pow(10.0, gain_db / 20.0);
      for (int l = 0; l < cfg.n_ant; ++l)
        ch.h(k, n * cfg.n_ant + l) = amp * rng.complex_normal();
    }
  }
  const double noise_dbm = cfg.noise_psd_dbm_hz + 10.0 * std::log10(cfg.bandwidth_hz);
  ch.noise_power_w = dbm_to_watts(noise_dbm);
  return ch;
}

Popularity zipf_popularity(int n_contents, double alpha, std::optional<double> trending_mass) {
  if (n_contents < 1) throw std::invalid_argument("zipf_popularity: F must be >= 1");
  if (alpha < 0.0) throw std::invalid_argument("zipf_popularity: alpha must be >= 0");
  if (trending_mass && !(*trending_mass >= 0.0 && *trending_mass < 1.0))
    throw std::invalid_argument("zipf_popularity: trending mass must lie in [0,1)");

  Popularity pop;
  pop.probs.resize(n_contents);
  if (trending_mass) {
    if (n_contents == 1) {
      pop.probs(0) = 1.0;
      return pop;
    }
    pop.probs(0) = *trending_mass;
    double norm = 0.0;
    for (int r = 1; r < n_contents; ++r) norm += std::pow(static_cast<double>(r), -alpha);
    for (int r = 1; r < n_contents; ++r)
      pop.probs(r) = (1.0 - *trending_mass) * std::pow(static_cast<double>(r), -alpha) / norm;
  } else {
    double norm = 0.0;
    for (int r = 1; r <= n_contents; ++r) norm += std::pow(static_cast<double>(r), -alpha);
    for (int r = 1; r <= n_contents; ++r)
      pop.probs(r - 1) = std::pow(static_cast<double>(r), -alpha) / norm;
  }
  pop.validate();
  return pop;
}

MulticastGroups sample_requests(const Popularity& pop, int n_users, double gamma_db,
                                double bandwidth_hz, std::uint64_t seed) {
  pop.validate();
  Rng rng(seed);
  std::map<int, std::vector<int>> by_content;
  for (int k = 0; k < n_users; ++k) {
    const double u = rng.uniform();
    double acc = 0.0;
    int content = static_cast<int>(pop.probs.size()) - 1;
    for (int f = 0; f < pop.probs.size(); ++f) {
      acc += pop.probs(f);
      if (u < acc) {
        content = f;
        break;
      }
    }
    by_content[content].push_back(k);
  }
  MulticastGroups g;
  for (auto& [content, users] : by_content) g.groups.push_back({content, std::move(users)});
  const double gamma = db_to_linear(gamma_db);
  const double rate = bandwidth_hz * std::log2(1.0 + gamma);
  g.gamma = Vec::Constant(g.size(), gamma);
  g.rate = Vec::Constant(g.size(), rate);
  return g;
}

CachePlacement place_cache(CacheStrategy strategy, const Popularity& pop, int cache_size,
                           int n_bs, std::uint64_t seed) {
  pop.validate();
  const int F = static_cast<int>(pop.probs.size());
  if (!(cache_size < F)) throw std::invalid_argument("place_cache: require Y < F");
  if (cache_size < 0) throw std::invalid_argument("place_cache: Y must be >= 0");

  CachePlacement cp;
  cp.c = IMat::Zero(F, n_bs);
  cp.capacity = IVec::Constant(n_bs, cache_size);
  Rng rng(seed);

  switch (strategy) {
    case CacheStrategy::PopC: {
      std::vector<int> order(F);
      for (int f = 0; f < F; ++f) order[f] = f;
      // Ties broken by lower content id.
      std::stable_sort(order.begin(), order.end(),
                       [&](int a, int b) { return pop.probs(a) > pop.probs(b); });
      for (int i = 0; i < cache_size; ++i)
        for (int n = 0; n < n_bs; ++n) cp.c(order[i], n) = 1;
      break;
    }
    case CacheStrategy::RanC: {
      std::vector<int> ids(F);
      for (int n = 0; n < n_bs; ++n) {
        for (int f = 0; f < F; ++f) ids[f] = f;
        for (int i = 0; i < cache_size; ++i) {  // partial Fisher-Yates
          const int j = i + static_cast<int>(rng.below(static_cast<std::uint64_t>(F - i)));
          std::swap(ids[i], ids[j]);
          cp.c(ids[i], n) = 1;
        }
      }
      break;
    }
    case CacheStrategy::ProC: {
      // Sequential weighted sampling without replacement, weights = popularity.
      for (int n = 0; n < n_bs; ++n) {
        Vec w = pop.probs;
        for (int i = 0; i < cache_size; ++i) {
          const double total = w.sum();
          int pick = -1;
          if (total > 0.0) {
            const double u = rng.uniform() * total;
            double acc = 0.0;
            for (int f = 0; f < F; ++f) {
              if (w(f) <= 0.0) continue;
              acc += w(f);
              if (u < acc) {
                pick = f;
                break;
              }
            }
            if (pick < 0) {  // numeric edge: fall to last positive weight
              for (int f = F - 1; f >= 0; --f)
                if (w(f) > 0.0) {
                  pick = f;
                  break;
                }
            }
          } else {  // remaining contents all have zero popularity: uniform
            int remaining = 0;
            for (int f = 0; f < F; ++f)
              if (cp.c(f, n) == 0) ++remaining;
            int idx = static_cast<int>(rng.below(static_cast<std::uint64_t>(remaining)));
            for (int f = 0; f < F; ++f) {
              if (cp.c(f, n) == 0 && idx-- == 0) {
                pick = f;
                break;
              }
            }
          }
          cp.c(pick, n) = 1;
          w(pick) = 0.0;
        }
      }
      break;
    }
  }
  return cp;
}

Scenario make_scenario(const RadioConfig& cfg, const PopularitySpec& pop_spec,
                       CacheStrategy strategy, int cache_size, std::uint64_t seed) {
  Scenario sc;
  sc.radio = cfg;
  sc.pop = zipf_popularity(cfg.n_contents, pop_spec.alpha, pop_spec.trending_mass);
  sc.topo = build_topology(cfg, derive_seed(seed, 1));
  sc.chan = sample_channels(sc.topo, cfg, derive_seed(seed, 2));
  sc.groups = sample_requests(sc.pop, cfg.n_users, cfg.sinr_target_db, cfg.bandwidth_hz,
                              derive_seed(seed, 3));
  sc.cache = place_cache(strategy, sc.pop, cache_size, cfg.n_bs, derive_seed(seed, 4));
  return sc;
}

double sinr(int user, int group, const BeamformerSet& w, const ChannelState& ch) {
  const CVec h = ch.h.row(user).transpose();
  double interference = 0.0;
  for (int j = 0; j < w.size(); ++j) {
    if (j == group) continue;
    interference += std::norm(h.dot(w.w[j]));
  }
  const double signal = std::norm(h.dot(w.w[group]));
  return signal / (interference + ch.noise_power_w);
}

double min_sinr_margin(const BeamformerSet& w, const Scenario& sc) {
  double margin = std::numeric_limits<double>::infinity();
  for (int m = 0; m < sc.groups.size(); ++m)
    for (int k : sc.groups.groups[m].users)
      margin = std::min(margin, sinr(k, m, w, sc.chan) / sc.groups.gamma(m));
  return margin;
}

double backhaul_cost(const ClusterMatrix& s, const CachePlacement& cache,
                     const MulticastGroups& groups) {
  if (s.s.rows() != groups.size() || s.s.cols() != cache.c.cols())
    throw std::invalid_argument("backhaul_cost: dimension mismatch");
  double total = 0.0;
  for (int m = 0; m < s.s.rows(); ++m) {
    const int f = groups.groups[m].content;
    for (int n = 0; n < s.s.cols(); ++n)
      if (s.s(m, n) != 0 && cache.c(f, n) == 0) total += groups.rate(m);
  }
  return total;
}

double power_cost(const BeamformerSet& w) {
  double total = 0.0;
  for (const CVec& wm : w.w) total += wm.squaredNorm();
  return total;
}

double block_power(const BeamformerSet& w, int group, int bs, int n_ant) {
  return w.w[group].segment(static_cast<Index>(bs) * n_ant, n_ant).squaredNorm();
}

CostBreakdown network_cost(const BeamformerSet& w, const ClusterMatrix& s, const Scenario& sc,
                           double eta) {
  CostBreakdown cb;
  cb.backhaul = backhaul_cost(s, sc.cache, sc.groups);
  cb.power = power_cost(w);
  cb.eta = eta;
  cb.total = cb.backhaul + eta * cb.power;
  return cb;
}

// --- serialization ---

namespace {

using nlohmann::ordered_json;

ordered_json vec2_list(const std::vector<Vec2>& v) {
  ordered_json arr = ordered_json::array();
  for (const Vec2& p : v) arr.push_back({p.x(), p.y()});
  return arr;
}

std::vector<Vec2> vec2_list_from(const ordered_json& arr) {
  std::vector<Vec2> v;
  for (const auto& e : arr) v.emplace_back(e[0].get<double>(), e[1].get<double>());
  return v;
}

}  // namespace

std::string scenario_to_json(const Scenario& sc) {
  ordered_json j;
  const RadioConfig& r = sc.radio;
  j["radio"] = {{"n_bs", r.n_bs},
                {"n_ant", r.n_ant},
                {"n_users", r.n_users},
                {"n_contents", r.n_contents},
                {"inter_bs_distance_m", r.inter_bs_distance_m},
                {"exclusion_radius_m", r.exclusion_radius_m},
                {"bandwidth_hz", r.bandwidth_hz},
                {"antenna_gain_db", r.antenna_gain_db},
                {"pathloss_intercept_db", r.pathloss_intercept_db},
                {"pathloss_slope_db", r.pathloss_slope_db},
                {"shadowing_std_db", r.shadowing_std_db},
                {"noise_psd_dbm_hz", r.noise_psd_dbm_hz},
                {"sinr_target_db", r.sinr_target_db}};
  if (r.per_antenna_peak_dbm) j["radio"]["per_antenna_peak_dbm"] = *r.per_antenna_peak_dbm;
  if (r.per_bs_peak_dbm) j["radio"]["per_bs_peak_dbm"] = *r.per_bs_peak_dbm;

  j["topology"] = {{"bs", vec2_list(sc.topo.bs_positions)},
                   {"users", vec2_list(sc.topo.user_positions)}};

  ordered_json rows = ordered_json::array();
  for (Index k = 0; k < sc.chan.h.rows(); ++k) {
    ordered_json row = ordered_json::array();
    for (Index t = 0; t < sc.chan.h.cols(); ++t)
      row.push_back({sc.chan.h(k, t).real(), sc.chan.h(k, t).imag()});
    rows.push_back(std::move(row));
  }
  j["channel"] = {{"h", std::move(rows)}, {"noise_power_w", sc.chan.noise_power_w}};

  j["popularity"] = std::vector<double>(sc.pop.probs.begin(), sc.pop.probs.end());

  ordered_json gs = ordered_json::array();
  for (const auto& g : sc.groups.groups) gs.push_back({{"content", g.content}, {"users", g.users}});
  j["groups"] = {{"list", std::move(gs)},
                 {"gamma", std::vector<double>(sc.groups.gamma.begin(), sc.groups.gamma.end())},
                 {"rate", std::vector<double>(sc.groups.rate.begin(), sc.groups.rate.end())}};

  ordered_json cache_rows = ordered_json::array();
  for (Index f = 0; f < sc.cache.c.rows(); ++f) {
    ordered_json row = ordered_json::array();
    for (Index n = 0; n < sc.cache.c.cols(); ++n) row.push_back(sc.cache.c(f, n));
    cache_rows.push_back(std::move(row));
  }
  j["cache"] = {{"c", std::move(cache_rows)},
                {"capacity", std::vector<int>(sc.cache.capacity.begin(), sc.cache.capacity.end())}};
  return j.dump(1);
}

Scenario scenario_from_json(const std::string& text) {
  const ordered_json j = ordered_json::parse(text);
  Scenario sc;
  const auto& r = j.at("radio");
  sc.radio.n_bs = r.at("n_bs");
  sc.radio.n_ant = r.at("n_ant");
  sc.radio.n_users = r.at("n_users");
  sc.radio.n_contents = r.at("n_contents");
  sc.radio.inter_bs_distance_m = r.at("inter_bs_distance_m");
  sc.radio.exclusion_radius_m = r.at("exclusion_radius_m");
  sc.radio.bandwidth_hz = r.at("bandwidth_hz");
  sc.radio.antenna_gain_db = r.at("antenna_gain_db");
  sc.radio.pathloss_intercept_db = r.at("pathloss_intercept_db");
  sc.radio.pathloss_slope_db = r.at("pathloss_slope_db");
  sc.radio.shadowing_std_db = r.at("shadowing_std_db");
  sc.radio.noise_psd_dbm_hz = r.at("noise_psd_dbm_hz");
  sc.radio.sinr_target_db = r.at("sinr_target_db");
  if (r.contains("per_antenna_peak_dbm"))
    sc.radio.per_antenna_peak_dbm = r.at("per_antenna_peak_dbm").get<double>();
  if (r.contains("per_bs_peak_dbm")) sc.radio.per_bs_peak_dbm = r.at("per_bs_peak_dbm").get<double>();

  sc.topo.bs_positions = vec2_list_from(j.at("topology").at("bs"));
  sc.topo.user_positions = vec2_list_from(j.at("topology").at("users"));

  const auto& hrows = j.at("channel").at("h");
  const Index K = static_cast<Index>(hrows.size());
  const Index T = K > 0 ? static_cast<Index>(hrows[0].size()) : 0;
  sc.chan.h.resize(K, T);
  for (Index k = 0; k < K; ++k)
    for (Index t = 0; t < T; ++t)
      sc.chan.h(k, t) = Complex(hrows[k][t][0].get<double>(), hrows[k][t][1].get<double>());
  sc.chan.noise_power_w = j.at("channel").at("noise_power_w");

  const auto probs = j.at("popularity").get<std::vector<double>>();
  sc.pop.probs = Eigen::Map<const Vec>(probs.data(), static_cast<Index>(probs.size()));

  for (const auto& g : j.at("groups").at("list"))
    sc.groups.groups.push_back({g.at("content").get<int>(), g.at("users").get<std::vector<int>>()});
  const auto gamma = j.at("groups").at("gamma").get<std::vector<double>>();
  const auto rate = j.at("groups").at("rate").get<std::vector<double>>();
  sc.groups.gamma = Eigen::Map<const Vec>(gamma.data(), static_cast<Index>(gamma.size()));
  sc.groups.rate = Eigen::Map<const Vec>(rate.data(), static_cast<Index>(rate.size()));

  const auto& crows = j.at("cache").at("c");
  const Index F = static_cast<Index>(crows.size());
  const Index N = F > 0 ? static_cast<Index>(crows[0].size()) : 0;
  sc.cache.c.resize(F, N);
  for (Index f = 0; f < F; ++f)
    for (Index n = 0; n < N; ++n) sc.cache.c(f, n) = crows[f][n].get<int>();
  const auto cap = j.at("cache").at("capacity").get<std::vector<int>>();
  sc.cache.capacity = Eigen::Map<const IVec>(cap.data(), static_cast<Index>(cap.size()));
  return sc;
}

void save_scenario(const Scenario& sc, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_scenario: cannot open " + path);
  out << scenario_to_json(sc);
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_scenario: cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return scenario_from_json(ss.str());
}

std::uint64_t channel_hash(const ChannelState& ch) {
  std::uint64_t hash = 1469598103934665603ULL;
  auto mix = [&hash](const void* data, std::size_t len) {
    const auto* bytes = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
      hash ^= bytes[i];
      hash *= 1099511628211ULL;
    }
  };
  for (Index k = 0; k < ch.h.rows(); ++k)
    for (Index t = 0; t < ch.h.cols(); ++t) {
      const double re = ch.h(k, t).real(), im = ch.h(k, t).imag();
      mix(&re, sizeof re);
      mix(&im, sizeof im);
    }
  mix(&ch.noise_power_w, sizeof ch.noise_power_w);
  return hash;
}

}  // namespace cranbeam
