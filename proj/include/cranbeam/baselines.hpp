// Reference methods: exhaustive clustering enumeration (the small-network
// oracle), the cache-aware greedy clustering, and the user-centric sparse
// unicast baseline via iterative reweighted l1.
#pragma once

#include <cstdint>
#include <vector>

#include "cranbeam/ccp.hpp"
#include "cranbeam/scenario.hpp"

namespace cranbeam {

struct ClusterEval {
  IMat s;              // the clustering
  bool feasible = false;
  double backhaul = 0.0;
  double power = 0.0;  // polished power
  std::uint64_t mask = 0;  // enumeration id, seeds the polish deterministically
};

struct OracleOutcome {
  SolveResult best;           // polished outcome of the winning clustering
  IMat best_clustering;
  std::uint64_t n_evaluated = 0;
  double n_pruned = 0.0;      // clusterings skipped by forcing cached pairs active
  std::vector<ClusterEval> table;  // per-clustering audit table
};

// Enumerates clusterings with s_{m,n} = 1 forced wherever the content is
// cached (set prune = false to search the raw 2^(M*N) space), polishing each.
// Throws if more than 2^20 subproblems would be required.
OracleOutcome exhaustive_search(const Scenario& sc, double eta, const SolverSettings& settings,
                                std::uint64_t seed, bool prune = true);

// Minimum-cost row of an oracle table at a given tradeoff weight; ties go to
// the lexicographically smallest clustering. Returns -1 if nothing feasible.
Eigen::Index oracle_pick(const std::vector<ClusterEval>& table, double eta, bool power_only);

// Steepest-descent deactivation of one (group, BS) pair per round, never
// touching pairs whose content is cached at the BS.
SolveResult greedy_clustering(const Scenario& sc, double eta, const SolverSettings& settings,
                              std::uint64_t seed);

// User-centric sparse unicast beamforming; every user gets an own beamformer
// under per-user SINR constraints. Backhaul counts one copy per (BS, content).
// The returned clustering matrix is per-user (K x N).
SolveResult unicast_sparse_bf(const Scenario& sc, double eta, const SolverSettings& settings,
                              std::uint64_t seed);

}  // namespace cranbeam
