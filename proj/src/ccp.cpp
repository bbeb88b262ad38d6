#include "cranbeam/ccp.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include "cranbeam/conic.hpp"
#include "cranbeam/rng.hpp"

namespace cranbeam {

namespace {

constexpr double kFeasibleMargin = 1.0 - 1e-5;
constexpr double kInf = std::numeric_limits<double>::infinity();

using conic::SolveStatusKind;

// Solver-side view of a scenario: channels normalized by the noise amplitude
// (so sigma^2 = 1 in every constraint), per-pair backhaul weights, and peak
// limits in linear watts. Beamformer units are unchanged.
struct Ctx {
  const Scenario& sc;
  const SolverSettings& settings;
  int M, N, L, NL;
  CMat hn;     // K x NL
  Vec alpha;   // (m, n) -> (1 - c_{f_m, n}) R_m, row-major m*N + n
  double eta_eff;
  std::optional<double> peak_ant, peak_bs;

  Ctx(const Scenario& s, const SolverSettings& st)
      : sc(s),
        settings(st),
        M(s.n_groups()),
        N(s.n_bs()),
        L(s.n_ant()),
        NL(s.n_tx()),
        hn(s.chan.h / std::sqrt(s.chan.noise_power_w)),
        alpha(Vec::Zero(static_cast<Index>(s.n_groups()) * s.n_bs())),
        eta_eff(st.power_only ? 0.0 : st.eta) {
    for (int m = 0; m < M; ++m) {
      const int f = s.groups.groups[static_cast<std::size_t>(m)].content;
      for (int n = 0; n < N; ++n)
        alpha(m * N + n) = s.cache.c(f, n) == 0 ? s.groups.rate(m) : 0.0;
    }
    peak_ant = st.per_antenna_peak_w;
    if (!peak_ant && s.radio.per_antenna_peak_dbm)
      peak_ant = dbm_to_watts(*s.radio.per_antenna_peak_dbm);
    peak_bs = st.per_bs_peak_w;
    if (!peak_bs && s.radio.per_bs_peak_dbm) peak_bs = dbm_to_watts(*s.radio.per_bs_peak_dbm);
  }

  double gamma(int m) const { return sc.groups.gamma(m); }
  double a_of(int m, int n) const { return alpha(m * N + n); }
};

double lifted_block_power(const CMat& w_m, int n, int n_ant) {
  double p = 0.0;
  for (int l = 0; l < n_ant; ++l) p += w_m(n * n_ant + l, n * n_ant + l).real();
  return p;
}

// Power minimization SDP over the given per-group BS supports (P_INI when all
// BSs are active, the polish subproblem otherwise).
conic::SdpProblem build_power_min_sdp(const Ctx& ctx,
                                      const std::vector<std::vector<int>>& supports) {
  conic::SdpProblem p;
  const int L = ctx.L;
  p.block_dims.resize(static_cast<std::size_t>(ctx.M));
  for (int m = 0; m < ctx.M; ++m) {
    const Index d = static_cast<Index>(supports[static_cast<std::size_t>(m)].size()) * L;
    p.block_dims[static_cast<std::size_t>(m)] = d;
    p.objective.push_back(CMat::Identity(d, d));
  }

  auto restricted_channel = [&](int k, int m) {
    const auto& sup = supports[static_cast<std::size_t>(m)];
    CVec h(static_cast<Index>(sup.size()) * L);
    for (std::size_t i = 0; i < sup.size(); ++i)
      h.segment(static_cast<Index>(i) * L, L) = ctx.hn.row(k).segment(sup[i] * L, L).transpose();
    return h;
  };

  for (int m = 0; m < ctx.M; ++m) {
    const double g = ctx.gamma(m);
    for (int k : ctx.sc.groups.groups[static_cast<std::size_t>(m)].users) {
      conic::SdpConstraint con;
      con.coeff.resize(static_cast<std::size_t>(ctx.M));
      for (int j = 0; j < ctx.M; ++j) {
        const CVec hj = restricted_channel(k, j);
        const CMat Hj = hj * hj.adjoint();
        con.coeff[static_cast<std::size_t>(j)] = (j == m) ? Hj : CMat(-g * Hj);
      }
      con.rhs = g;  // noise normalized to 1
      p.constraints.push_back(std::move(con));
    }
  }

  auto support_pos = [&](int m, int n) -> int {
    const auto& sup = supports[static_cast<std::size_t>(m)];
    const auto it = std::find(sup.begin(), sup.end(), n);
    return it == sup.end() ? -1 : static_cast<int>(it - sup.begin());
  };

  if (ctx.peak_ant) {
    for (int n = 0; n < ctx.N; ++n)
      for (int l = 0; l < L; ++l) {
        conic::SdpConstraint con;
        con.coeff.resize(static_cast<std::size_t>(ctx.M));
        bool any = false;
        for (int m = 0; m < ctx.M; ++m) {
          const Index d = p.block_dims[static_cast<std::size_t>(m)];
          CMat e = CMat::Zero(d, d);
          if (const int pos = support_pos(m, n); pos >= 0) {
            e(pos * L + l, pos * L + l) = 1.0;
            any = true;
          }
          con.coeff[static_cast<std::size_t>(m)] = std::move(e);
        }
        if (!any) continue;
        con.rhs = *ctx.peak_ant;
        con.greater_equal = false;
        p.constraints.push_back(std::move(con));
      }
  }
  if (ctx.peak_bs) {
    for (int n = 0; n < ctx.N; ++n) {
      conic::SdpConstraint con;
      con.coeff.resize(static_cast<std::size_t>(ctx.M));
      bool any = false;
      for (int m = 0; m < ctx.M; ++m) {
        const Index d = p.block_dims[static_cast<std::size_t>(m)];
        CMat e = CMat::Zero(d, d);
        if (const int pos = support_pos(m, n); pos >= 0) {
          for (int l = 0; l < L; ++l) e(pos * L + l, pos * L + l) = 1.0;
          any = true;
        }
        con.coeff[static_cast<std::size_t>(m)] = std::move(e);
      }
      if (!any) continue;
      con.rhs = *ctx.peak_bs;
      con.greater_equal = false;
      p.constraints.push_back(std::move(con));
    }
  }
  return p;
}

std::vector<std::vector<int>> full_supports(int M, int N) {
  std::vector<int> all(static_cast<std::size_t>(N));
  for (int n = 0; n < N; ++n) all[static_cast<std::size_t>(n)] = n;
  return std::vector<std::vector<int>>(static_cast<std::size_t>(M), all);
}

// Zero-pads per-group lifted blocks from a support layout back to N*L.
LiftedSet lift_to_full(const std::vector<CMat>& blocks,
                       const std::vector<std::vector<int>>& supports, int N, int L) {
  LiftedSet full;
  for (std::size_t m = 0; m < blocks.size(); ++m) {
    const auto& sup = supports[m];
    CMat w = CMat::Zero(static_cast<Index>(N) * L, static_cast<Index>(N) * L);
    for (std::size_t a = 0; a < sup.size(); ++a)
      for (std::size_t b = 0; b < sup.size(); ++b)
        w.block(sup[a] * L, sup[b] * L, L, L) =
            blocks[m].block(static_cast<Index>(a) * L, static_cast<Index>(b) * L, L, L);
    full.push_back(std::move(w));
  }
  return full;
}

// P2 objective at a lifted point (power-only: plain total power).
double surrogate_sdr(const Ctx& ctx, const LiftedSet& w, double theta) {
  double f = 0.0;
  for (int m = 0; m < ctx.M; ++m) {
    const double tr = w[static_cast<std::size_t>(m)].trace().real();
    if (ctx.settings.power_only) {
      f += tr;
      continue;
    }
    f += ctx.eta_eff * tr;
    for (int n = 0; n < ctx.N; ++n)
      f += ctx.a_of(m, n) *
           f_theta(ctx.settings.smooth_kind,
                   std::max(0.0, lifted_block_power(w[static_cast<std::size_t>(m)], n, ctx.L)),
                   theta);
  }
  return f;
}

// P3 objective evaluated at t = per-block powers of w.
double surrogate_gccp(const Ctx& ctx, const BeamformerSet& w, double theta) {
  double f = 0.0;
  for (int m = 0; m < ctx.M; ++m)
    for (int n = 0; n < ctx.N; ++n) {
      const double t = block_power(w, m, n, ctx.L);
      if (ctx.settings.power_only)
        f += t;
      else
        f += ctx.eta_eff * t + ctx.a_of(m, n) * f_theta(ctx.settings.smooth_kind, t, theta);
    }
  return f;
}

// Relaxed clustering/cost snapshot of a lifted iterate, for trace rows.
double lifted_true_cost(const Ctx& ctx, const LiftedSet& w) {
  double maxp = 0.0;
  for (int m = 0; m < ctx.M; ++m)
    for (int n = 0; n < ctx.N; ++n)
      maxp = std::max(maxp, lifted_block_power(w[static_cast<std::size_t>(m)], n, ctx.L));
  double backhaul = 0.0, power = 0.0;
  for (int m = 0; m < ctx.M; ++m) {
    power += w[static_cast<std::size_t>(m)].trace().real();
    for (int n = 0; n < ctx.N; ++n) {
      const double p = lifted_block_power(w[static_cast<std::size_t>(m)], n, ctx.L);
      if (p > ctx.settings.cluster_threshold * maxp) backhaul += ctx.a_of(m, n);
    }
  }
  return ctx.settings.power_only ? power : backhaul + ctx.settings.eta * power;
}

double lifted_min_margin(const Ctx& ctx, const LiftedSet& w) {
  double margin = kInf;
  for (int m = 0; m < ctx.M; ++m) {
    for (int k : ctx.sc.groups.groups[static_cast<std::size_t>(m)].users) {
      const CVec h = ctx.hn.row(k).transpose();
      double sig = 0.0, interf = 0.0;
      for (int j = 0; j < ctx.M; ++j) {
        const double q = (h.adjoint() * w[static_cast<std::size_t>(j)] * h)(0, 0).real();
        (j == m ? sig : interf) += q;
      }
      margin = std::min(margin, sig / (interf + 1.0) / ctx.gamma(m));
    }
  }
  return margin;
}

double true_cost_of(const Ctx& ctx, const BeamformerSet& w) {
  const auto [s, wz] =
      extract_clusters(w, ctx.sc.cache, ctx.sc.groups, ctx.settings.cluster_threshold);
  const double backhaul = backhaul_cost(s, ctx.sc.cache, ctx.sc.groups);
  const double power = power_cost(w);
  return ctx.settings.power_only ? power : backhaul + ctx.settings.eta * power;
}

CostBreakdown final_costs(const Ctx& ctx, const BeamformerSet& w, const ClusterMatrix& s) {
  const double eta = ctx.settings.power_only ? kInf : ctx.settings.eta;
  return network_cost(w, s, ctx.sc, eta);
}

double compare_key(const Ctx& ctx, const CostBreakdown& cb) {
  return ctx.settings.power_only ? cb.power : cb.total;
}

// Rank-1 extraction guarded by an exact feasibility check, falling back to
// randomization and scaling.
std::optional<BeamformerSet> recover_beamformers(const Ctx& ctx, const LiftedSet& w,
                                                 std::uint64_t seed, bool& rank1,
                                                 bool& randomized) {
  rank1 = false;
  randomized = false;
  if (auto bf = extract_rank1(w, ctx.settings.rank1_tol)) {
    if (min_sinr_margin(*bf, ctx.sc) >= kFeasibleMargin) {
      rank1 = true;
      return bf;
    }
  }
  randomized = true;
  return randomize_and_scale(w, ctx.sc, ctx.settings, seed);
}

SolveResult failure(SolveError e) { return SolveResult{e, std::nullopt}; }

// Shared pipeline tail. The near-sparse iterate is mapped to clusterings by
// thresholding the block powers at a ladder of levels, each candidate is
// re-solved at fixed clustering (polish), and the cheapest feasible candidate
// wins; the hard-zeroed iterate itself competes at the base threshold. The
// ladder matters at small eta, where blocks carrying a few percent of the
// power still cost full backhaul units that a polish can trade away.
SolveResult finalize_outcome(const Ctx& ctx, const BeamformerSet& w, std::uint64_t seed,
                             SolveDiagnostics diag) {
  auto [s, w_zeroed] =
      extract_clusters(w, ctx.sc.cache, ctx.sc.groups, ctx.settings.cluster_threshold);

  std::vector<IMat> patterns{s.s};
  auto push_unique = [&patterns](const IMat& cand) {
    for (const IMat& p : patterns)
      if ((p - cand).cwiseAbs().sum() == 0) return;
    patterns.push_back(cand);
  };
  for (double t : {1e-3, 1e-2, 0.05, 0.1, 0.2, 0.35, 0.5}) {
    if (t <= ctx.settings.cluster_threshold) continue;
    push_unique(extract_clusters(w, ctx.sc.cache, ctx.sc.groups, t).first.s);
  }
  // Row-relative candidates: threshold each group against its own strongest
  // block, down to keeping just the dominant BS per group.
  for (double t : {0.05, 0.2, 0.5, 0.95}) {
    IMat cand = IMat::Zero(ctx.M, ctx.N);
    for (int m = 0; m < ctx.M; ++m) {
      double rowmax = 0.0;
      for (int n = 0; n < ctx.N; ++n) rowmax = std::max(rowmax, block_power(w, m, n, ctx.L));
      const int f = ctx.sc.groups.groups[static_cast<std::size_t>(m)].content;
      for (int n = 0; n < ctx.N; ++n)
        cand(m, n) =
            (block_power(w, m, n, ctx.L) > t * rowmax || ctx.sc.cache.c(f, n) != 0) ? 1 : 0;
    }
    push_unique(cand);
  }

  std::optional<SolveOutcome> best;
  for (std::size_t i = 0; i < patterns.size(); ++i) {
    ClusterMatrix cand;
    cand.s = patterns[i];
    SolveResult polished = polish(cand, ctx.sc, ctx.settings, derive_seed(seed, 0x9010, i));
    if (!polished.ok()) continue;
    if (!best || compare_key(ctx, polished.outcome->costs) < compare_key(ctx, best->costs))
      best = std::move(*polished.outcome);
  }

  const double zeroed_margin = min_sinr_margin(w_zeroed, ctx.sc);
  if (zeroed_margin >= kFeasibleMargin) {
    SolveOutcome cand;
    cand.w = w_zeroed;
    cand.clustering = s;
    cand.costs = final_costs(ctx, w_zeroed, s);
    cand.min_sinr_margin = zeroed_margin;
    if (!best || compare_key(ctx, cand.costs) < compare_key(ctx, best->costs))
      best = std::move(cand);
  }

  if (!best) {
    // Zeroing was too aggressive and the clustering cannot be re-solved; keep
    // the raw iterate with its full support.
    if (min_sinr_margin(w, ctx.sc) < kFeasibleMargin)
      return failure(SolveError::numerical_failure);
    auto [s_full, w_full] = extract_clusters(w, ctx.sc.cache, ctx.sc.groups, 1e-12);
    SolveOutcome cand;
    cand.w = w_full;
    cand.clustering = s_full;
    cand.costs = final_costs(ctx, w_full, s_full);
    cand.min_sinr_margin = min_sinr_margin(w_full, ctx.sc);
    best = std::move(cand);
  }

  best->diag = std::move(diag);
  SolveResult res;
  res.outcome = std::move(best);
  return res;
}

}  // namespace

void SolverSettings::validate() const {
  if (!(eta >= 0.0)) throw std::invalid_argument("SolverSettings: eta must be >= 0");
  if (!(ccp_rel_tol > 0.0) || !(conic_tol > 0.0) || !(cluster_threshold > 0.0) ||
      !(rank1_tol > 0.0))
    throw std::invalid_argument("SolverSettings: tolerances must be > 0");
  if (ccp_max_iters < 1 || n_randomizations < 1)
    throw std::invalid_argument("SolverSettings: counts must be >= 1");
  anneal.validate();
}

const char* to_string(SolveError e) {
  switch (e) {
    case SolveError::none: return "ok";
    case SolveError::infeasible_p_ini: return "infeasible_p_ini";
    case SolveError::infeasible_initialization: return "infeasible_initialization";
    case SolveError::infeasible_clustering: return "infeasible_clustering";
    case SolveError::numerical_failure: return "numerical_failure";
  }
  return "?";
}

Mat selection_matrix(int bs, int n_bs, int n_ant) {
  Mat j = Mat::Zero(static_cast<Index>(n_bs) * n_ant, static_cast<Index>(n_bs) * n_ant);
  for (int l = 0; l < n_ant; ++l) j(bs * n_ant + l, bs * n_ant + l) = 1.0;
  return j;
}

PIniResult solve_p_ini(const Scenario& sc, const SolverSettings& settings) {
  settings.validate();
  const Ctx ctx(sc, settings);
  const auto prob = build_power_min_sdp(ctx, full_supports(ctx.M, ctx.N));
  const auto sol = conic::solve_sdp(prob, settings.conic_tol);
  PIniResult res;
  switch (sol.status) {
    case SolveStatusKind::optimal:
      res.lifted = sol.blocks;
      return res;
    case SolveStatusKind::infeasible:
      res.error = SolveError::infeasible_p_ini;
      return res;
    default:
      res.error = SolveError::numerical_failure;
      return res;
  }
}

std::optional<BeamformerSet> extract_rank1(const LiftedSet& lifted, double rank_tol) {
  BeamformerSet w;
  for (const CMat& wm : lifted) {
    Eigen::SelfAdjointEigenSolver<CMat> eig(wm);
    const Index d = wm.rows();
    const double l1 = eig.eigenvalues()(d - 1);
    const double l2 = d > 1 ? eig.eigenvalues()(d - 2) : 0.0;
    if (l1 <= 0.0) {
      w.w.push_back(CVec::Zero(d));
      continue;
    }
    if (l2 > rank_tol * l1) return std::nullopt;
    w.w.push_back(std::sqrt(l1) * eig.eigenvectors().col(d - 1));
  }
  return w;
}

std::optional<BeamformerSet> randomize_and_scale(const LiftedSet& lifted, const Scenario& sc,
                                                 const SolverSettings& settings,
                                                 std::uint64_t seed) {
  const Ctx ctx(sc, settings);
  const int M = ctx.M;
  const Index NL = ctx.NL;
  Rng rng(seed);

  // Factor each covariance once: W = F F^H with negative eigenvalues clipped.
  std::vector<CMat> factors;
  std::vector<CVec> principal;
  for (const CMat& wm : lifted) {
    Eigen::SelfAdjointEigenSolver<CMat> eig(wm);
    const Vec lam = eig.eigenvalues().cwiseMax(0.0);
    factors.push_back(eig.eigenvectors() * lam.cwiseSqrt().asDiagonal());
    principal.push_back(std::sqrt(lam(NL - 1)) * eig.eigenvectors().col(NL - 1));
  }

  double best_power = kInf;
  BeamformerSet best;

  auto try_candidate = [&](const std::vector<CVec>& cand) {
    conic::LpProblem lp;
    lp.n = M;
    lp.objective.resize(M);
    for (int m = 0; m < M; ++m) lp.objective(m) = cand[static_cast<std::size_t>(m)].squaredNorm();
    for (int m = 0; m < M; ++m) {
      const double g = ctx.gamma(m);
      for (int k : sc.groups.groups[static_cast<std::size_t>(m)].users) {
        const CVec h = ctx.hn.row(k).transpose();
        Vec row = Vec::Zero(M);
        for (int j = 0; j < M; ++j) {
          const double a = std::norm(h.dot(cand[static_cast<std::size_t>(j)]));
          row(j) = (j == m) ? a : -g * a;
        }
        if (row(m) <= 0.0) return;  // draw orthogonal to a served user
        lp.constraints.push_back({row, g, true});
      }
    }
    if (ctx.peak_ant) {
      for (Index a = 0; a < NL; ++a) {
        Vec row(M);
        for (int m = 0; m < M; ++m) row(m) = std::norm(cand[static_cast<std::size_t>(m)](a));
        lp.constraints.push_back({row, *ctx.peak_ant, false});
      }
    }
    if (ctx.peak_bs) {
      for (int n = 0; n < ctx.N; ++n) {
        Vec row(M);
        for (int m = 0; m < M; ++m)
          row(m) = cand[static_cast<std::size_t>(m)].segment(n * ctx.L, ctx.L).squaredNorm();
        lp.constraints.push_back({row, *ctx.peak_bs, false});
      }
    }
    const auto sol = conic::solve_lp(lp, settings.conic_tol);
    if (sol.status != SolveStatusKind::optimal) return;
    if (sol.objective < best_power) {
      best_power = sol.objective;
      best.w.clear();
      for (int m = 0; m < M; ++m)
        best.w.push_back(std::sqrt(std::max(0.0, sol.x(m))) * cand[static_cast<std::size_t>(m)]);
    }
  };

  try_candidate(principal);  // the EVD direction is always a candidate
  std::vector<CVec> cand(static_cast<std::size_t>(M));
  for (int it = 0; it < settings.n_randomizations; ++it) {
    for (int m = 0; m < M; ++m) {
      CVec g(NL);
      for (Index i = 0; i < NL; ++i) g(i) = rng.complex_normal();
      cand[static_cast<std::size_t>(m)] = factors[static_cast<std::size_t>(m)] * g;
    }
    try_candidate(cand);
  }

  if (!std::isfinite(best_power)) return std::nullopt;
  return best;
}

std::pair<ClusterMatrix, BeamformerSet> extract_clusters(const BeamformerSet& w,
                                                         const CachePlacement& cache,
                                                         const MulticastGroups& groups,
                                                         double threshold) {
  const int M = groups.size();
  const int N = static_cast<int>(cache.c.cols());
  const int L = M > 0 ? static_cast<int>(w.w[0].size()) / N : 0;
  ClusterMatrix s;
  s.s = IMat::Zero(M, N);
  BeamformerSet out = w;
  double maxp = 0.0;
  for (int m = 0; m < M; ++m)
    for (int n = 0; n < N; ++n) maxp = std::max(maxp, block_power(w, m, n, L));
  for (int m = 0; m < M; ++m) {
    const int f = groups.groups[static_cast<std::size_t>(m)].content;
    for (int n = 0; n < N; ++n) {
      const bool active = block_power(w, m, n, L) > threshold * maxp;
      const bool cached = cache.c(f, n) != 0;
      s.s(m, n) = (active || cached) ? 1 : 0;
      if (!active) out.w[static_cast<std::size_t>(m)].segment(n * L, L).setZero();
    }
  }
  return {s, out};
}

SolveResult polish(const ClusterMatrix& s, const Scenario& sc, const SolverSettings& settings,
                   std::uint64_t seed) {
  settings.validate();
  const auto start = std::chrono::steady_clock::now();
  const Ctx ctx(sc, settings);
  std::vector<std::vector<int>> supports(static_cast<std::size_t>(ctx.M));
  for (int m = 0; m < ctx.M; ++m) {
    for (int n = 0; n < ctx.N; ++n)
      if (s.s(m, n) != 0) supports[static_cast<std::size_t>(m)].push_back(n);
    if (supports[static_cast<std::size_t>(m)].empty())
      return failure(SolveError::infeasible_clustering);
  }

  const auto prob = build_power_min_sdp(ctx, supports);
  const auto sol = conic::solve_sdp(prob, settings.conic_tol);
  if (sol.status == SolveStatusKind::infeasible)
    return failure(SolveError::infeasible_clustering);
  if (sol.status != SolveStatusKind::optimal) return failure(SolveError::numerical_failure);

  const LiftedSet full = lift_to_full(sol.blocks, supports, ctx.N, ctx.L);
  SolveDiagnostics diag;
  diag.algorithm = "polish";
  auto w = recover_beamformers(ctx, full, derive_seed(seed, 0x5011), diag.rank1,
                               diag.randomization_used);
  if (!w) return failure(SolveError::infeasible_clustering);

  SolveOutcome out;
  out.w = *w;
  out.clustering = s;
  out.costs = final_costs(ctx, *w, s);
  out.min_sinr_margin = min_sinr_margin(*w, sc);
  if (out.min_sinr_margin < kFeasibleMargin) return failure(SolveError::numerical_failure);
  diag.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  out.diag = std::move(diag);
  SolveResult res;
  res.outcome = std::move(out);
  return res;
}

SolveResult sdr_ccp(const Scenario& sc, const SolverSettings& settings, std::uint64_t seed) {
  settings.validate();
  const auto start = std::chrono::steady_clock::now();
  const Ctx ctx(sc, settings);
  SolveDiagnostics diag;
  diag.algorithm = "sdr_ccp";

  PIniResult ini = solve_p_ini(sc, settings);
  if (!ini.ok()) return failure(ini.error);
  LiftedSet w_lift = std::move(ini.lifted);

  // Power-only: the DC term vanishes and P2 is already the traditional SDR
  // power minimization; W from P_INI is its solution.
  if (!settings.power_only) {
    std::vector<double> powers;
    for (int m = 0; m < ctx.M; ++m)
      for (int n = 0; n < ctx.N; ++n)
        powers.push_back(
            std::max(0.0, lifted_block_power(w_lift[static_cast<std::size_t>(m)], n, ctx.L)));
    double theta = theta_init(powers);

    const auto base = build_power_min_sdp(ctx, full_supports(ctx.M, ctx.N));
    bool any_solve = false;
    bool stop = false;
    while (!stop) {
      diag.outer_stages += 1;
      double f_prev = surrogate_sdr(ctx, w_lift, theta);
      int inner = 0;
      for (; inner < settings.ccp_max_iters; ++inner) {
        conic::SdpProblem sub = base;
        // Majorize: linearize the concave surrogate at the current block
        // powers (constant terms dropped).
        Vec coef(static_cast<Index>(ctx.M) * ctx.N);
        for (int m = 0; m < ctx.M; ++m)
          for (int n = 0; n < ctx.N; ++n) {
            const double t =
                std::max(0.0, lifted_block_power(w_lift[static_cast<std::size_t>(m)], n, ctx.L));
            coef(m * ctx.N + n) =
                ctx.eta_eff + ctx.a_of(m, n) * grad_f_theta(settings.smooth_kind, t, theta);
          }
        const double cmax = coef.maxCoeff();
        coef = coef.cwiseMax(cmax > 0.0 ? 1e-12 * cmax : 1.0);
        for (int m = 0; m < ctx.M; ++m) {
          CVec dw(ctx.NL);
          for (int n = 0; n < ctx.N; ++n)
            for (int l = 0; l < ctx.L; ++l) dw(n * ctx.L + l) = coef(m * ctx.N + n);
          sub.objective[static_cast<std::size_t>(m)] = dw.asDiagonal();
        }

        const auto sol = conic::solve_sdp(sub, settings.conic_tol);
        if (sol.status != SolveStatusKind::optimal) {
          diag.subproblem_failures += 1;
          if (!any_solve) return failure(SolveError::numerical_failure);
          stop = true;
          break;
        }
        any_solve = true;
        const double f_new = surrogate_sdr(ctx, sol.blocks, theta);
        // Monotone safeguard: a step that fails to descend is solver noise;
        // keep the previous iterate and treat the stage as converged.
        if (f_new > f_prev + 10.0 * settings.conic_tol * std::max(1.0, std::abs(f_prev))) {
          ++inner;
          break;
        }
        w_lift = sol.blocks;
        if (settings.trace_enabled)
          diag.trace.push_back({theta, inner, f_new, lifted_true_cost(ctx, w_lift),
                                lifted_min_margin(ctx, w_lift)});
        const bool converged =
            std::abs(f_new - f_prev) <= settings.ccp_rel_tol * std::max(1.0, std::abs(f_prev));
        f_prev = f_new;
        if (converged) {
          ++inner;
          break;
        }
      }
      diag.inner_iters.push_back(inner);
      if (stop) break;
      const auto next = theta_next(theta, settings.anneal);
      if (!next) break;
      theta = *next;
    }
  }

  auto w = recover_beamformers(ctx, w_lift, derive_seed(seed, 0x4444), diag.rank1,
                               diag.randomization_used);
  if (!w) return failure(SolveError::infeasible_initialization);

  SolveResult res = finalize_outcome(ctx, *w, seed, std::move(diag));
  if (res.ok()) {
    res.outcome->diag.algorithm = "sdr_ccp";
    res.outcome->diag.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
  return res;
}

SolveResult g_ccp(const Scenario& sc, const SolverSettings& settings, std::uint64_t seed) {
  settings.validate();
  const auto start = std::chrono::steady_clock::now();
  const Ctx ctx(sc, settings);
  SolveDiagnostics diag;
  diag.algorithm = "g_ccp";

  PIniResult ini = solve_p_ini(sc, settings);
  if (!ini.ok()) return failure(ini.error);

  auto w0 = recover_beamformers(ctx, ini.lifted, derive_seed(seed, 0x7007), diag.rank1,
                                diag.randomization_used);
  if (!w0) return failure(SolveError::infeasible_initialization);
  BeamformerSet w = std::move(*w0);

  std::vector<double> powers;
  for (int m = 0; m < ctx.M; ++m)
    for (int n = 0; n < ctx.N; ++n) powers.push_back(block_power(w, m, n, ctx.L));
  double theta = theta_init(powers);

  const Index n_w = static_cast<Index>(ctx.M) * ctx.NL;
  const Index n_t = static_cast<Index>(ctx.M) * ctx.N;
  bool any_solve = false;
  bool stop = false;

  while (!stop) {
    diag.outer_stages += 1;
    double f_prev = surrogate_gccp(ctx, w, theta);
    int inner = 0;
    for (; inner < settings.ccp_max_iters; ++inner) {
      conic::QcqpProblem sub;
      sub.n_w = n_w;
      sub.n_t = n_t;
      sub.obj_w = CVec::Zero(n_w);
      Vec coef(n_t);
      for (int m = 0; m < ctx.M; ++m)
        for (int n = 0; n < ctx.N; ++n) {
          if (settings.power_only) {
            coef(m * ctx.N + n) = 1.0;
          } else {
            const double t = block_power(w, m, n, ctx.L);
            coef(m * ctx.N + n) =
                ctx.eta_eff + ctx.a_of(m, n) * grad_f_theta(settings.smooth_kind, t, theta);
          }
        }
      if (!settings.power_only) {
        const double cmax = coef.maxCoeff();
        coef = coef.cwiseMax(cmax > 0.0 ? 1e-12 * cmax : 1.0);
      }
      sub.obj_t = coef;

      // Epigraphs ||w_{m,n}||^2 <= t_{m,n}.
      for (int m = 0; m < ctx.M; ++m)
        for (int n = 0; n < ctx.N; ++n) {
          conic::QcqpQuadConstraint q;
          q.a = CMat::Zero(ctx.L, n_w);
          for (int l = 0; l < ctx.L; ++l)
            q.a(l, static_cast<Index>(m) * ctx.NL + n * ctx.L + l) = 1.0;
          q.b = CVec::Zero(ctx.L);
          q.lin_w = CVec::Zero(n_w);
          q.lin_t = Vec::Zero(n_t);
          q.lin_t(m * ctx.N + n) = 1.0;
          sub.quad.push_back(std::move(q));
        }

      // SINR constraints with the signal term linearized at the iterate; the
      // subproblem feasible set is an inner approximation, so every iterate
      // stays feasible for the true constraints.
      for (int m = 0; m < ctx.M; ++m) {
        const double g = ctx.gamma(m);
        for (int k : sc.groups.groups[static_cast<std::size_t>(m)].users) {
          const CVec h = ctx.hn.row(k).transpose();
          const Complex sig = h.dot(w.w[static_cast<std::size_t>(m)]);
          conic::QcqpQuadConstraint q;
          q.a = CMat::Zero(ctx.M - 1, n_w);
          Index r = 0;
          for (int j = 0; j < ctx.M; ++j) {
            if (j == m) continue;
            for (Index t = 0; t < ctx.NL; ++t)
              q.a(r, static_cast<Index>(j) * ctx.NL + t) = std::sqrt(g) * std::conj(h(t));
            ++r;
          }
          q.b = CVec::Zero(ctx.M - 1);
          q.lin_w = CVec::Zero(n_w);
          q.lin_w.segment(static_cast<Index>(m) * ctx.NL, ctx.NL) = 2.0 * sig * h;
          q.lin_t = Vec::Zero(n_t);
          q.offset = -std::norm(sig) - g;  // noise normalized to 1
          sub.quad.push_back(std::move(q));
        }
      }

      if (ctx.peak_ant) {
        for (Index a = 0; a < ctx.NL; ++a) {
          conic::QcqpQuadConstraint q;
          q.a = CMat::Zero(ctx.M, n_w);
          for (int m = 0; m < ctx.M; ++m) q.a(m, static_cast<Index>(m) * ctx.NL + a) = 1.0;
          q.b = CVec::Zero(ctx.M);
          q.lin_w = CVec::Zero(n_w);
          q.lin_t = Vec::Zero(n_t);
          q.offset = *ctx.peak_ant;
          sub.quad.push_back(std::move(q));
        }
      }
      if (ctx.peak_bs) {
        // Sum of epigraph variables per BS; exact at the optimum where
        // t = ||w_{m,n}||^2.
        for (int n = 0; n < ctx.N; ++n) {
          conic::QcqpAffineConstraint a;
          a.lin_w = CVec::Zero(n_w);
          a.lin_t = Vec::Zero(n_t);
          for (int m = 0; m < ctx.M; ++m) a.lin_t(m * ctx.N + n) = 1.0;
          a.rhs = *ctx.peak_bs;
          a.greater_equal = false;
          sub.affine.push_back(std::move(a));
        }
      }

      const auto sol = conic::solve_qcqp(sub, settings.conic_tol);
      if (sol.status != SolveStatusKind::optimal) {
        diag.subproblem_failures += 1;
        if (!any_solve) return failure(SolveError::numerical_failure);
        stop = true;
        break;
      }
      any_solve = true;
      BeamformerSet w_new = w;
      for (int m = 0; m < ctx.M; ++m)
        w_new.w[static_cast<std::size_t>(m)] = sol.w.segment(static_cast<Index>(m) * ctx.NL, ctx.NL);

      const double f_new = surrogate_gccp(ctx, w_new, theta);
      // Monotone safeguard: reject non-descent steps (solver noise).
      if (f_new > f_prev + 10.0 * settings.conic_tol * std::max(1.0, std::abs(f_prev))) {
        ++inner;
        break;
      }
      w = std::move(w_new);
      if (settings.trace_enabled)
        diag.trace.push_back({theta, inner, f_new, true_cost_of(ctx, w), min_sinr_margin(w, sc)});
      const bool converged =
          std::abs(f_new - f_prev) <= settings.ccp_rel_tol * std::max(1.0, std::abs(f_prev));
      f_prev = f_new;
      if (converged) {
        ++inner;
        break;
      }
    }
    diag.inner_iters.push_back(inner);
    if (stop || settings.power_only) break;  // power-only: nothing to anneal
    const auto next = theta_next(theta, settings.anneal);
    if (!next) break;
    theta = *next;
  }

  SolveResult res = finalize_outcome(ctx, w, seed, std::move(diag));
  if (res.ok()) {
    res.outcome->diag.algorithm = "g_ccp";
    res.outcome->diag.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
  return res;
}

}  // namespace cranbeam
