// Convex-concave-procedure solvers for joint BS clustering and multicast
// beamforming: the full-cooperation power-minimization start, the SDR-based
// CCP (lifted matrices, DC objective), the generalized CCP (beamformers plus
// per-block power epigraphs, DC objective and constraints), Gaussian
// randomization with LP power scaling, cluster extraction, and the
// fixed-clustering polish solve. All reported costs are recomputed from the
// final beamformers and clustering, never read off solver objectives.
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cranbeam/scenario.hpp"
#include "cranbeam/smooth.hpp"
#include "cranbeam/types.hpp"

namespace cranbeam {

struct SolverSettings {
  double eta = 1.0;
  bool power_only = false;  // eta -> inf limit: drop the backhaul term
  SmoothKind smooth_kind = SmoothKind::Arctan;
  AnnealSchedule anneal;
  double ccp_rel_tol = 1e-4;
  int ccp_max_iters = 30;
  int n_randomizations = 300;
  double cluster_threshold = 1e-4;  // relative to the max block power
  double rank1_tol = 1e-6;
  double conic_tol = 1e-7;
  std::optional<double> per_antenna_peak_w;  // overrides RadioConfig when set
  std::optional<double> per_bs_peak_w;
  bool trace_enabled = false;

  void validate() const;
};

// Per-group lifted Hermitian PSD matrices (the SDR variables).
using LiftedSet = std::vector<CMat>;

struct IterTraceRow {
  double theta = 0.0;
  int inner_iter = 0;
  double surrogate = 0.0;
  double true_cost = 0.0;
  double min_sinr_margin = 0.0;
};

struct SolveDiagnostics {
  std::string algorithm;
  int outer_stages = 0;
  std::vector<int> inner_iters;  // per theta stage
  bool rank1 = false;
  bool randomization_used = false;
  int subproblem_failures = 0;
  double wall_seconds = 0.0;
  std::vector<IterTraceRow> trace;
};

struct SolveOutcome {
  BeamformerSet w;
  ClusterMatrix clustering;
  CostBreakdown costs;
  double min_sinr_margin = 0.0;
  SolveDiagnostics diag;
};

enum class SolveError {
  none,
  infeasible_p_ini,            // full-cooperation start infeasible: instance infeasible
  infeasible_initialization,   // relaxation feasible but no feasible point recovered
  infeasible_clustering,       // the given clustering cannot meet the SINR targets
  numerical_failure,
};

const char* to_string(SolveError e);

struct SolveResult {
  SolveError error = SolveError::none;
  std::optional<SolveOutcome> outcome;

  bool ok() const { return error == SolveError::none && outcome.has_value(); }
};

// J_n: diagonal 0/1 selector of BS n's antenna block.
Mat selection_matrix(int bs, int n_bs, int n_ant);

struct PIniResult {
  SolveError error = SolveError::none;
  LiftedSet lifted;

  bool ok() const { return error == SolveError::none; }
};

// Power minimization with full BS cooperation; infeasibility here proves the
// whole instance infeasible.
PIniResult solve_p_ini(const Scenario& sc, const SolverSettings& settings);

// EVD-based rank-1 extraction; nothing if any block's second eigenvalue
// exceeds rank_tol times its first.
std::optional<BeamformerSet> extract_rank1(const LiftedSet& lifted, double rank_tol);

// Gaussian randomization with per-group LP power scaling; returns the best
// feasible draw or nothing if all draws fail.
std::optional<BeamformerSet> randomize_and_scale(const LiftedSet& lifted, const Scenario& sc,
                                                 const SolverSettings& settings,
                                                 std::uint64_t seed);

// Threshold the per-(group, BS) block powers into a clustering; BSs caching
// the group's content are always included. Sub-threshold blocks come back
// hard-zeroed in the second element.
std::pair<ClusterMatrix, BeamformerSet> extract_clusters(const BeamformerSet& w,
                                                         const CachePlacement& cache,
                                                         const MulticastGroups& groups,
                                                         double threshold);

// Power minimization with the clustering fixed (zero blocks eliminated),
// then rank-1 extraction or randomization; reports exact costs.
SolveResult polish(const ClusterMatrix& s, const Scenario& sc, const SolverSettings& settings,
                   std::uint64_t seed);

SolveResult sdr_ccp(const Scenario& sc, const SolverSettings& settings, std::uint64_t seed);
SolveResult g_ccp(const Scenario& sc, const SolverSettings& settings, std::uint64_t seed);

}  // namespace cranbeam
