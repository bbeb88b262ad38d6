#include "cranbeam/baselines.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "cranbeam/conic.hpp"
#include "cranbeam/rng.hpp"

namespace cranbeam {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool lex_less(const IMat& a, const IMat& b) {
  for (Index m = 0; m < a.rows(); ++m)
    for (Index n = 0; n < a.cols(); ++n) {
      if (a(m, n) != b(m, n)) return a(m, n) < b(m, n);
    }
  return false;
}

double eval_total(const ClusterEval& e, double eta, bool power_only) {
  return power_only ? e.power : e.backhaul + eta * e.power;
}

}  // namespace

Eigen::Index oracle_pick(const std::vector<ClusterEval>& table, double eta, bool power_only) {
  Eigen::Index best = -1;
  double best_cost = kInf;
  for (std::size_t i = 0; i < table.size(); ++i) {
    if (!table[i].feasible) continue;
    const double cost = eval_total(table[i], eta, power_only);
    if (best < 0 || cost < best_cost ||
        (cost == best_cost && lex_less(table[i].s, table[static_cast<std::size_t>(best)].s))) {
      best = static_cast<Eigen::Index>(i);
      best_cost = cost;
    }
  }
  return best;
}

OracleOutcome exhaustive_search(const Scenario& sc, double eta, const SolverSettings& settings,
                                std::uint64_t seed, bool prune) {
  settings.validate();
  const int M = sc.n_groups();
  const int N = sc.n_bs();

  // Free pairs: everything not pinned to 1 by the caching property.
  std::vector<std::pair<int, int>> free_pairs;
  IMat forced = IMat::Zero(M, N);
  for (int m = 0; m < M; ++m) {
    const int f = sc.groups.groups[static_cast<std::size_t>(m)].content;
    for (int n = 0; n < N; ++n) {
      if (prune && sc.cache.c(f, n) != 0)
        forced(m, n) = 1;
      else
        free_pairs.emplace_back(m, n);
    }
  }
  if (free_pairs.size() > 20)
    throw std::runtime_error("exhaustive_search: more than 2^20 clusterings, refusing");

  OracleOutcome out;
  out.n_pruned =
      std::exp2(static_cast<double>(M) * N) - std::exp2(static_cast<double>(free_pairs.size()));

  const std::uint64_t n_masks = 1ULL << free_pairs.size();
  for (std::uint64_t mask = 0; mask < n_masks; ++mask) {
    ClusterEval ev;
    ev.mask = mask;
    ev.s = forced;
    for (std::size_t b = 0; b < free_pairs.size(); ++b)
      if (mask & (1ULL << b)) ev.s(free_pairs[b].first, free_pairs[b].second) = 1;
    out.n_evaluated += 1;

    bool has_empty_row = false;
    for (int m = 0; m < M; ++m)
      if (ev.s.row(m).sum() == 0) has_empty_row = true;
    if (!has_empty_row) {
      ClusterMatrix s;
      s.s = ev.s;
      const SolveResult res = polish(s, sc, settings, derive_seed(seed, mask));
      if (res.ok()) {
        ev.feasible = true;
        ev.backhaul = res.outcome->costs.backhaul;
        ev.power = res.outcome->costs.power;
      }
    }
    out.table.push_back(std::move(ev));
  }

  const Eigen::Index pick = oracle_pick(out.table, eta, settings.power_only);
  if (pick < 0) {
    out.best = SolveResult{SolveError::infeasible_p_ini, std::nullopt};
    return out;
  }
  const auto& win = out.table[static_cast<std::size_t>(pick)];
  out.best_clustering = win.s;
  ClusterMatrix s;
  s.s = win.s;
  out.best = polish(s, sc, settings, derive_seed(seed, win.mask));
  if (out.best.ok()) out.best.outcome->diag.algorithm = "exhaustive";
  return out;
}

SolveResult greedy_clustering(const Scenario& sc, double eta, const SolverSettings& settings,
                              std::uint64_t seed) {
  settings.validate();
  const auto start = std::chrono::steady_clock::now();
  const int M = sc.n_groups();
  const int N = sc.n_bs();

  ClusterMatrix s;
  s.s = IMat::Ones(M, N);
  SolveResult cur = polish(s, sc, settings, derive_seed(seed, 0));
  if (!cur.ok()) return cur;  // full cooperation infeasible: instance infeasible

  auto total = [&](const SolveOutcome& o) {
    return settings.power_only ? o.costs.power : o.costs.backhaul + eta * o.costs.power;
  };

  int round = 0;
  while (true) {
    ++round;
    double best_cost = total(*cur.outcome);
    std::optional<std::pair<int, int>> best_pair;
    SolveResult best_res;
    for (int m = 0; m < M; ++m) {
      const int f = sc.groups.groups[static_cast<std::size_t>(m)].content;
      for (int n = 0; n < N; ++n) {
        if (s.s(m, n) == 0 || sc.cache.c(f, n) != 0) continue;  // cached pairs stay
        ClusterMatrix cand = s;
        cand.s(m, n) = 0;
        if (cand.s.row(m).sum() == 0) continue;
        const SolveResult res =
            polish(cand, sc, settings, derive_seed(seed, static_cast<std::uint64_t>(round),
                                                   static_cast<std::uint64_t>(m * N + n)));
        if (!res.ok()) continue;
        const double cost = total(*res.outcome);
        if (cost < best_cost - 1e-9 * std::max(1.0, std::abs(best_cost))) {
          best_cost = cost;
          best_pair = {m, n};
          best_res = res;
        }
      }
    }
    if (!best_pair) break;
    s.s(best_pair->first, best_pair->second) = 0;
    cur = std::move(best_res);
  }

  cur.outcome->diag.algorithm = "greedy(pairwise)";
  cur.outcome->diag.outer_stages = round;
  cur.outcome->diag.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return cur;
}

namespace {

// Unicast working set: per-user content ids and solver-side channels.
struct UniCtx {
  const Scenario& sc;
  const SolverSettings& settings;
  int K, N, L, NL;
  CMat hn;
  std::vector<int> content;  // per user
  double eta_eff;
  std::optional<double> peak_ant, peak_bs;

  UniCtx(const Scenario& s, const SolverSettings& st)
      : sc(s),
        settings(st),
        K(s.radio.n_users),
        N(s.n_bs()),
        L(s.n_ant()),
        NL(s.n_tx()),
        hn(s.chan.h / std::sqrt(s.chan.noise_power_w)),
        content(static_cast<std::size_t>(s.radio.n_users), -1),
        eta_eff(st.power_only ? 0.0 : st.eta) {
    for (int m = 0; m < s.n_groups(); ++m)
      for (int k : s.groups.groups[static_cast<std::size_t>(m)].users)
        content[static_cast<std::size_t>(k)] = s.groups.groups[static_cast<std::size_t>(m)].content;
    for (int c : content)
      if (c < 0) throw std::invalid_argument("unicast: user without a request");
    peak_ant = st.per_antenna_peak_w;
    if (!peak_ant && s.radio.per_antenna_peak_dbm)
      peak_ant = dbm_to_watts(*s.radio.per_antenna_peak_dbm);
    peak_bs = st.per_bs_peak_w;
    if (!peak_bs && s.radio.per_bs_peak_dbm) peak_bs = dbm_to_watts(*s.radio.per_bs_peak_dbm);
  }

  double gamma() const { return sc.groups.gamma(0); }
  double rate() const { return sc.groups.rate(0); }
};

// Per-user supports -> reduced complex variable layout.
struct UniLayout {
  std::vector<std::vector<int>> sup;  // active BS list per user
  std::vector<Index> off;             // complex offset per user
  Index n_w = 0;

  UniLayout(const std::vector<std::vector<int>>& supports, int L) : sup(supports) {
    off.resize(sup.size());
    for (std::size_t k = 0; k < sup.size(); ++k) {
      off[k] = n_w;
      n_w += static_cast<Index>(sup[k].size()) * L;
    }
  }
};

// Unicast power/sparsity QCQP over the given supports. Weights are the
// reweighted-l1 multipliers; empty weights mean pure power minimization.
conic::QcqpSolution solve_unicast_qcqp(const UniCtx& ctx, const UniLayout& lay,
                                       const Mat* weights) {
  const int K = ctx.K, L = ctx.L;
  const bool l1 = weights != nullptr;
  conic::QcqpProblem p;
  p.n_w = lay.n_w;
  // t: per-user power epigraph (K); u: per-(user, active BS) norm bounds.
  Index n_u = 0;
  std::vector<Index> u_off(static_cast<std::size_t>(K));
  if (l1)
    for (int k = 0; k < K; ++k) {
      u_off[static_cast<std::size_t>(k)] = static_cast<Index>(K) + n_u;
      n_u += static_cast<Index>(lay.sup[static_cast<std::size_t>(k)].size());
    }
  p.n_t = K + n_u;
  p.obj_w = CVec::Zero(p.n_w);
  p.obj_t = Vec::Zero(p.n_t);
  for (int k = 0; k < K; ++k) p.obj_t(k) = ctx.settings.power_only ? 1.0 : ctx.eta_eff;
  if (l1)
    for (int k = 0; k < K; ++k) {
      const auto& sup = lay.sup[static_cast<std::size_t>(k)];
      for (std::size_t i = 0; i < sup.size(); ++i) {
        const int f = ctx.content[static_cast<std::size_t>(k)];
        const double alpha = ctx.sc.cache.c(f, sup[i]) == 0 ? ctx.rate() : 0.0;
        p.obj_t(u_off[static_cast<std::size_t>(k)] + static_cast<Index>(i)) =
            alpha * (*weights)(k, sup[i]);
      }
    }

  // ||w_k||^2 <= t_k
  for (int k = 0; k < K; ++k) {
    const Index d = static_cast<Index>(lay.sup[static_cast<std::size_t>(k)].size()) * L;
    conic::QcqpQuadConstraint q;
    q.a = CMat::Zero(d, p.n_w);
    for (Index i = 0; i < d; ++i) q.a(i, lay.off[static_cast<std::size_t>(k)] + i) = 1.0;
    q.b = CVec::Zero(d);
    q.lin_w = CVec::Zero(p.n_w);
    q.lin_t = Vec::Zero(p.n_t);
    q.lin_t(k) = 1.0;
    p.quad.push_back(std::move(q));
  }
  // ||w_{k,n}|| <= u_{k,n}
  if (l1)
    for (int k = 0; k < K; ++k) {
      const auto& sup = lay.sup[static_cast<std::size_t>(k)];
      for (std::size_t i = 0; i < sup.size(); ++i) {
        conic::QcqpQuadConstraint q;
        q.a = CMat::Zero(L, p.n_w);
        for (int l = 0; l < L; ++l)
          q.a(l, lay.off[static_cast<std::size_t>(k)] + static_cast<Index>(i) * L + l) = 1.0;
        q.b = CVec::Zero(L);
        q.lin_w = CVec::Zero(p.n_w);
        q.lin_t = Vec::Zero(p.n_t);
        q.lin_t(u_off[static_cast<std::size_t>(k)] + static_cast<Index>(i)) = 1.0;
        q.squared = false;
        p.quad.push_back(std::move(q));
      }
    }

  // Per-user SINR as a second-order cone (phase-rotated standard form):
  // sqrt(g) * ||[h_k^H w_j (j != k); 1]|| <= Re{h_k^H w_k}.
  auto restricted = [&](int k, int j) {
    const auto& sup = lay.sup[static_cast<std::size_t>(j)];
    CVec h(static_cast<Index>(sup.size()) * L);
    for (std::size_t i = 0; i < sup.size(); ++i)
      h.segment(static_cast<Index>(i) * L, L) =
          ctx.hn.row(k).segment(sup[i] * L, L).transpose();
    return h;
  };
  const double g = ctx.gamma();
  for (int k = 0; k < K; ++k) {
    conic::QcqpQuadConstraint q;
    q.a = CMat::Zero(K, p.n_w);
    q.b = CVec::Zero(K);
    Index r = 0;
    for (int j = 0; j < K; ++j) {
      if (j == k) continue;
      const CVec hj = restricted(k, j);
      for (Index i = 0; i < hj.size(); ++i)
        q.a(r, lay.off[static_cast<std::size_t>(j)] + i) = std::sqrt(g) * std::conj(hj(i));
      ++r;
    }
    q.b(K - 1) = std::sqrt(g);  // noise term, normalized to 1
    q.lin_w = CVec::Zero(p.n_w);
    const CVec hk = restricted(k, k);
    q.lin_w.segment(lay.off[static_cast<std::size_t>(k)], hk.size()) = hk;
    q.lin_t = Vec::Zero(p.n_t);
    q.squared = false;
    p.quad.push_back(std::move(q));
  }

  if (ctx.peak_ant) {
    for (int n = 0; n < ctx.N; ++n)
      for (int l = 0; l < L; ++l) {
        conic::QcqpQuadConstraint q;
        std::vector<Index> idx;
        for (int k = 0; k < K; ++k) {
          const auto& sup = lay.sup[static_cast<std::size_t>(k)];
          const auto it = std::find(sup.begin(), sup.end(), n);
          if (it != sup.end())
            idx.push_back(lay.off[static_cast<std::size_t>(k)] +
                          static_cast<Index>(it - sup.begin()) * L + l);
        }
        if (idx.empty()) continue;
        q.a = CMat::Zero(static_cast<Index>(idx.size()), p.n_w);
        for (std::size_t i = 0; i < idx.size(); ++i) q.a(static_cast<Index>(i), idx[i]) = 1.0;
        q.b = CVec::Zero(static_cast<Index>(idx.size()));
        q.lin_w = CVec::Zero(p.n_w);
        q.lin_t = Vec::Zero(p.n_t);
        q.offset = *ctx.peak_ant;
        p.quad.push_back(std::move(q));
      }
  }
  if (ctx.peak_bs) {
    for (int n = 0; n < ctx.N; ++n) {
      conic::QcqpQuadConstraint q;
      std::vector<Index> idx;
      for (int k = 0; k < K; ++k) {
        const auto& sup = lay.sup[static_cast<std::size_t>(k)];
        const auto it = std::find(sup.begin(), sup.end(), n);
        if (it != sup.end())
          for (int l = 0; l < L; ++l)
            idx.push_back(lay.off[static_cast<std::size_t>(k)] +
                          static_cast<Index>(it - sup.begin()) * L + l);
      }
      if (idx.empty()) continue;
      q.a = CMat::Zero(static_cast<Index>(idx.size()), p.n_w);
      for (std::size_t i = 0; i < idx.size(); ++i) q.a(static_cast<Index>(i), idx[i]) = 1.0;
      q.b = CVec::Zero(static_cast<Index>(idx.size()));
      q.lin_w = CVec::Zero(p.n_w);
      q.lin_t = Vec::Zero(p.n_t);
      q.offset = *ctx.peak_bs;
      p.quad.push_back(std::move(q));
    }
  }

  return conic::solve_qcqp(p, ctx.settings.conic_tol);
}

// Expand the reduced unicast solution into per-user full-length beamformers.
std::vector<CVec> expand_unicast(const UniCtx& ctx, const UniLayout& lay, const CVec& w) {
  std::vector<CVec> out(static_cast<std::size_t>(ctx.K));
  for (int k = 0; k < ctx.K; ++k) {
    CVec full = CVec::Zero(ctx.NL);
    const auto& sup = lay.sup[static_cast<std::size_t>(k)];
    for (std::size_t i = 0; i < sup.size(); ++i)
      full.segment(sup[i] * ctx.L, ctx.L) =
          w.segment(lay.off[static_cast<std::size_t>(k)] + static_cast<Index>(i) * ctx.L, ctx.L);
    out[static_cast<std::size_t>(k)] = std::move(full);
  }
  return out;
}

double unicast_min_margin(const UniCtx& ctx, const std::vector<CVec>& w) {
  double margin = kInf;
  for (int k = 0; k < ctx.K; ++k) {
    const CVec h = ctx.hn.row(k).transpose();
    double interf = 0.0;
    for (int j = 0; j < ctx.K; ++j)
      if (j != k) interf += std::norm(h.dot(w[static_cast<std::size_t>(j)]));
    const double sig = std::norm(h.dot(w[static_cast<std::size_t>(k)]));
    margin = std::min(margin, sig / (interf + 1.0) / ctx.gamma());
  }
  return margin;
}

// One copy per (BS, content) at the maximum requested rate among the BS's
// served users of that content (rates are uniform here).
double unicast_backhaul(const UniCtx& ctx, const IMat& s) {
  double total = 0.0;
  for (int n = 0; n < ctx.N; ++n) {
    std::vector<bool> seen(static_cast<std::size_t>(ctx.sc.radio.n_contents), false);
    for (int k = 0; k < ctx.K; ++k) {
      const int f = ctx.content[static_cast<std::size_t>(k)];
      if (s(k, n) != 0 && ctx.sc.cache.c(f, n) == 0 && !seen[static_cast<std::size_t>(f)]) {
        seen[static_cast<std::size_t>(f)] = true;
        total += ctx.rate();
      }
    }
  }
  return total;
}

}  // namespace

SolveResult unicast_sparse_bf(const Scenario& sc, double eta, const SolverSettings& settings,
                              std::uint64_t seed) {
  SolverSettings st = settings;
  st.eta = eta;
  st.validate();
  const auto start = std::chrono::steady_clock::now();
  const UniCtx ctx(sc, st);
  const int K = ctx.K, N = ctx.N, L = ctx.L;

  std::vector<std::vector<int>> all(static_cast<std::size_t>(K));
  for (auto& sup : all)
    for (int n = 0; n < N; ++n) sup.push_back(n);
  UniLayout lay(all, L);

  SolveDiagnostics diag;
  diag.algorithm = "unicast(rw-l1)";

  constexpr int kReweightIters = 10;
  constexpr double kDelta = 1e-6;
  Mat weights = Mat::Ones(K, N);
  std::vector<CVec> w;
  const int iters = st.power_only ? 1 : kReweightIters;
  for (int it = 0; it < iters; ++it) {
    const auto sol = solve_unicast_qcqp(ctx, lay, st.power_only ? nullptr : &weights);
    if (sol.status == conic::SolveStatusKind::infeasible)
      return SolveResult{SolveError::infeasible_p_ini, std::nullopt};
    if (sol.status != conic::SolveStatusKind::optimal)
      return SolveResult{SolveError::numerical_failure, std::nullopt};
    w = expand_unicast(ctx, lay, sol.w);
    for (int k = 0; k < K; ++k)
      for (int n = 0; n < N; ++n)
        weights(k, n) =
            1.0 / (w[static_cast<std::size_t>(k)].segment(n * L, L).norm() + kDelta);
    diag.outer_stages = it + 1;
  }

  // Threshold per-user blocks into supports (cached BSs kept), then re-solve
  // the pure power minimization on the supports for exact costs.
  double maxp = 0.0;
  for (int k = 0; k < K; ++k)
    for (int n = 0; n < N; ++n)
      maxp = std::max(maxp, w[static_cast<std::size_t>(k)].segment(n * L, L).squaredNorm());
  IMat s = IMat::Zero(K, N);
  std::vector<std::vector<int>> sup(static_cast<std::size_t>(K));
  for (int k = 0; k < K; ++k) {
    const int f = ctx.content[static_cast<std::size_t>(k)];
    for (int n = 0; n < N; ++n) {
      const bool active =
          w[static_cast<std::size_t>(k)].segment(n * L, L).squaredNorm() > st.cluster_threshold * maxp;
      if (active || sc.cache.c(f, n) != 0) {
        s(k, n) = 1;
        sup[static_cast<std::size_t>(k)].push_back(n);
      }
    }
  }

  UniLayout lay2(sup, L);
  const auto polish_sol = solve_unicast_qcqp(UniCtx(sc, st), lay2, nullptr);
  std::vector<CVec> w_final;
  if (polish_sol.status == conic::SolveStatusKind::optimal) {
    w_final = expand_unicast(ctx, lay2, polish_sol.w);
    diag.randomization_used = false;
  } else {
    w_final = w;  // keep the reweighted iterate if the support re-solve fails
    diag.subproblem_failures += 1;
  }

  const double margin = unicast_min_margin(ctx, w_final);
  if (margin < 1.0 - 1e-5) return SolveResult{SolveError::numerical_failure, std::nullopt};

  SolveOutcome out;
  out.w.w = w_final;
  out.clustering.s = s;
  out.costs.backhaul = unicast_backhaul(ctx, s);
  double power = 0.0;
  for (const CVec& wk : w_final) power += wk.squaredNorm();
  out.costs.power = power;
  out.costs.eta = st.power_only ? kInf : eta;
  out.costs.total = out.costs.backhaul + out.costs.eta * out.costs.power;
  out.min_sinr_margin = margin;
  diag.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  out.diag = std::move(diag);
  (void)seed;  // the pipeline is deterministic; no randomization step
  SolveResult res;
  res.outcome = std::move(out);
  return res;
}

}  // namespace cranbeam
