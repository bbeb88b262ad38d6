// Scenario generation and the cost/SINR model: topology, channels, content
// popularity, multicast groups, cache placement. Everything is a plain value
// type, deterministic given a seed, and serializable so trials can be
// replayed without re-seeding.
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cranbeam/types.hpp"

namespace cranbeam {

struct RadioConfig {
  int n_bs = 7;        // N
  int n_ant = 4;       // L, antennas per BS
  int n_users = 30;    // K
  int n_contents = 100;  // F
  double inter_bs_distance_m = 500.0;
  double exclusion_radius_m = 50.0;
  double bandwidth_hz = 10e6;
  double antenna_gain_db = 10.0;
  double pathloss_intercept_db = 148.1;
  double pathloss_slope_db = 37.6;   // dB per decade, distance in km
  double shadowing_std_db = 8.0;
  double noise_psd_dbm_hz = -172.0;
  double sinr_target_db = 10.0;
  std::optional<double> per_antenna_peak_dbm;
  std::optional<double> per_bs_peak_dbm;

  int n_tx() const { return n_bs * n_ant; }
  void validate() const;  // throws std::invalid_argument
};

struct Topology {
  std::vector<Vec2> bs_positions;
  std::vector<Vec2> user_positions;
};

struct ChannelState {
  CMat h;                 // K x (N*L); row k is user k's network-wide channel
  double noise_power_w = 0.0;  // sigma^2, linear watts, common to all users
};

struct Popularity {
  Vec probs;  // length F, nonnegative, sums to 1
  void validate() const;
};

struct MulticastGroup {
  int content = 0;            // f_m (0-based)
  std::vector<int> users;     // G_m, ascending user indices
};

struct MulticastGroups {
  std::vector<MulticastGroup> groups;  // sorted by content id
  Vec gamma;  // linear SINR target per group
  Vec rate;   // R_m = B log2(1 + gamma_m), bits/s

  int size() const { return static_cast<int>(groups.size()); }
};

enum class CacheStrategy { PopC, RanC, ProC };

const char* to_string(CacheStrategy s);
CacheStrategy cache_strategy_from_string(const std::string& s);

struct CachePlacement {
  IMat c;         // F x N, binary
  IVec capacity;  // Y_n per BS
};

struct ClusterMatrix {
  IMat s;  // M x N, binary
};

struct BeamformerSet {
  std::vector<CVec> w;  // per group, length N*L; block n is rows [n*L, (n+1)*L)

  int size() const { return static_cast<int>(w.size()); }
};

struct CostBreakdown {
  double backhaul = 0.0;  // C_B, bits/s
  double power = 0.0;     // C_P, watts
  double eta = 0.0;
  double total = 0.0;     // C_B + eta * C_P
};

struct Scenario {
  RadioConfig radio;
  Topology topo;
  ChannelState chan;
  Popularity pop;
  MulticastGroups groups;
  CachePlacement cache;

  int n_bs() const { return radio.n_bs; }
  int n_ant() const { return radio.n_ant; }
  int n_tx() const { return radio.n_tx(); }
  int n_groups() const { return groups.size(); }
};

// --- generation ---

Topology build_topology(const RadioConfig& cfg, std::uint64_t seed);
ChannelState sample_channels(const Topology& topo, const RadioConfig& cfg, std::uint64_t seed);
Popularity zipf_popularity(int n_contents, double alpha,
                           std::optional<double> trending_mass = std::nullopt);
MulticastGroups sample_requests(const Popularity& pop, int n_users, double gamma_db,
                                double bandwidth_hz, std::uint64_t seed);
CachePlacement place_cache(CacheStrategy strategy, const Popularity& pop, int cache_size,
                           int n_bs, std::uint64_t seed);

struct PopularitySpec {
  double alpha = 1.0;
  std::optional<double> trending_mass;  // one trending content takes this mass
};

// Builds the full per-trial bundle; sub-seeds are derived deterministically.
Scenario make_scenario(const RadioConfig& cfg, const PopularitySpec& pop_spec,
                       CacheStrategy strategy, int cache_size, std::uint64_t seed);

// --- model evaluation ---

// Received SINR of user k (member of group m) under the given beamformers.
double sinr(int user, int group, const BeamformerSet& w, const ChannelState& ch);

// min over all grouped users of SINR_k / gamma_m; >= 1 means feasible.
double min_sinr_margin(const BeamformerSet& w, const Scenario& sc);

double backhaul_cost(const ClusterMatrix& s, const CachePlacement& cache,
                     const MulticastGroups& groups);
double power_cost(const BeamformerSet& w);
double block_power(const BeamformerSet& w, int group, int bs, int n_ant);

// eta may be +inf (power-only reporting); total then follows IEEE semantics.
CostBreakdown network_cost(const BeamformerSet& w, const ClusterMatrix& s, const Scenario& sc,
                           double eta);

// --- serialization (field-for-field JSON) ---

std::string scenario_to_json(const Scenario& sc);
Scenario scenario_from_json(const std::string& text);
void save_scenario(const Scenario& sc, const std::string& path);
Scenario load_scenario(const std::string& path);

// FNV-1a over the canonical serialization of the channel matrix; used to
// assert that all rows of a trial saw the same realization.
std::uint64_t channel_hash(const ChannelState& ch);

}  // namespace cranbeam
