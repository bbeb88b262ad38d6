#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>

#include "cranbeam/ccp.hpp"
#include "cranbeam/rng.hpp"

using namespace cranbeam;

namespace {

// Hand-built scenario with explicit channels; topology is irrelevant to the
// solvers and left empty.
Scenario manual_scenario(int n_bs, int n_ant, const CMat& h_physical, double noise_w,
                         const std::vector<MulticastGroup>& groups, double gamma_linear,
                         double rate, const IMat& cache) {
  Scenario sc;
  sc.radio.n_bs = n_bs;
  sc.radio.n_ant = n_ant;
  sc.radio.n_users = static_cast<int>(h_physical.rows());
  sc.radio.n_contents = static_cast<int>(cache.rows());
  sc.chan.h = h_physical;
  sc.chan.noise_power_w = noise_w;
  sc.groups.groups = groups;
  sc.groups.gamma = Vec::Constant(static_cast<Index>(groups.size()), gamma_linear);
  sc.groups.rate = Vec::Constant(static_cast<Index>(groups.size()), rate);
  sc.cache.c = cache;
  sc.cache.capacity = IVec::Constant(cache.cols(), static_cast<int>(cache.rows()) - 1);
  return sc;
}

SolverSettings base_settings() {
  SolverSettings s;
  s.eta = 1.0;
  s.n_randomizations = 50;
  return s;
}

Scenario random_small_scenario(std::uint64_t seed) {
  RadioConfig cfg;
  cfg.n_bs = 2;
  cfg.n_ant = 2;
  cfg.n_users = 3;
  cfg.n_contents = 3;
  PopularitySpec ps;
  ps.alpha = 1.0;
  return make_scenario(cfg, ps, CacheStrategy::PopC, 1, seed);
}

}  // namespace

TEST_CASE("selection matrix identities") {
  const int N = 3, L = 2;
  Mat sum = Mat::Zero(N * L, N * L);
  for (int n = 0; n < N; ++n) sum += selection_matrix(n, N, L);
  CHECK((sum - Mat::Identity(N * L, N * L)).norm() == doctest::Approx(0.0));
  CHECK((selection_matrix(0, N, L) * selection_matrix(1, N, L)).norm() == doctest::Approx(0.0));

  Rng rng(4);
  CVec w(N * L);
  for (Index i = 0; i < w.size(); ++i) w(i) = rng.complex_normal();
  const CMat W = w * w.adjoint();
  double tr = 0.0;
  for (int n = 0; n < N; ++n) {
    const double blk = (W * selection_matrix(n, N, L).cast<Complex>()).trace().real();
    CHECK(blk == doctest::Approx(w.segment(n * L, L).squaredNorm()).epsilon(1e-12));
    tr += blk;
  }
  CHECK(tr == doctest::Approx(W.trace().real()).epsilon(1e-12));
}

TEST_CASE("p_ini: single-user scalar closed form") {
  // N = L = 1, |h| = 1, sigma^2 = 1, gamma = 10 -> Tr(W*) = 10.
  CMat h(1, 1);
  h(0, 0) = 1.0;
  const auto sc = manual_scenario(1, 1, h, 1.0, {{0, {0}}}, 10.0, 1.0, IMat::Zero(1, 1));
  const auto res = solve_p_ini(sc, base_settings());
  REQUIRE(res.ok());
  CHECK(res.lifted[0].trace().real() == doctest::Approx(10.0).epsilon(1e-4));
}

TEST_CASE("p_ini: identical channels across two groups is infeasible") {
  CMat h(2, 1);
  h(0, 0) = 1.0;
  h(1, 0) = 1.0;
  const auto sc =
      manual_scenario(1, 1, h, 1.0, {{0, {0}}, {1, {1}}}, 10.0, 1.0, IMat::Zero(2, 1));
  const auto res = solve_p_ini(sc, base_settings());
  CHECK(res.error == SolveError::infeasible_p_ini);
}

TEST_CASE("p_ini: vanishing target gives vanishing power") {
  CMat h(1, 1);
  h(0, 0) = 1.0;
  const auto sc = manual_scenario(1, 1, h, 1.0, {{0, {0}}}, 1e-8, 1.0, IMat::Zero(1, 1));
  const auto res = solve_p_ini(sc, base_settings());
  REQUIRE(res.ok());
  CHECK(res.lifted[0].trace().real() <= 1e-6);
}

TEST_CASE("extract_rank1 contract") {
  Rng rng(17);
  CVec v(3);
  for (Index i = 0; i < 3; ++i) v(i) = rng.complex_normal();

  SUBCASE("exact rank-1 returns the vector up to phase") {
    const LiftedSet lifted = {CMat(v * v.adjoint())};
    const auto w = extract_rank1(lifted, 1e-6);
    REQUIRE(w.has_value());
    CHECK(std::abs(v.dot(w->w[0])) == doctest::Approx(v.squaredNorm()).epsilon(1e-8));
  }
  SUBCASE("identity is rejected below rank_tol = 1") {
    const LiftedSet lifted = {CMat::Identity(2, 2)};
    CHECK_FALSE(extract_rank1(lifted, 1e-6).has_value());
    CHECK_FALSE(extract_rank1(lifted, 0.99).has_value());
  }
  SUBCASE("near-rank-1 within threshold is accepted") {
    CMat w2 = CMat::Zero(2, 2);
    w2(0, 0) = 1.0;
    w2(1, 1) = 1e-9;
    const auto w = extract_rank1({w2}, 1e-6);
    REQUIRE(w.has_value());
    CHECK(std::abs(w->w[0](0)) == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(std::abs(w->w[0](1)) <= 1e-4);
  }
}

TEST_CASE("randomize_and_scale") {
  SUBCASE("rank-1 covariance reproduces the EVD power") {
    CMat h(1, 2);
    h(0, 0) = 1.0;
    h(0, 1) = 0.5;
    const auto sc = manual_scenario(1, 2, h, 1.0, {{0, {0}}}, 10.0, 1.0, IMat::Zero(1, 1));
    // Optimal MRT beamformer: power gamma*sigma^2/||h||^2.
    const double p_star = 10.0 / h.row(0).squaredNorm();
    CVec v = h.row(0).adjoint();
    v *= std::sqrt(p_star) / v.norm();
    const LiftedSet lifted = {CMat(v * v.adjoint())};
    const auto w = randomize_and_scale(lifted, sc, base_settings(), 7);
    REQUIRE(w.has_value());
    CHECK(power_cost(*w) == doctest::Approx(p_star).epsilon(1e-5));
    CHECK(min_sinr_margin(*w, sc) >= 1.0 - 1e-6);
  }
  SUBCASE("single group scaling matches the closed form") {
    // Candidate direction fixed by a rank-1 W misaligned with h: the LP
    // rescales it so the worst user just meets the target.
    CMat h(2, 2);
    h(0, 0) = 1.0;
    h(0, 1) = 0.0;
    h(1, 0) = 0.6;
    h(1, 1) = 0.0;
    const auto sc = manual_scenario(1, 2, h, 1.0, {{0, {0, 1}}}, 10.0, 1.0, IMat::Zero(1, 1));
    CVec u(2);
    u(0) = 1.0;
    u(1) = 0.0;
    const LiftedSet lifted = {CMat(u * u.adjoint())};
    const auto w = randomize_and_scale(lifted, sc, base_settings(), 3);
    REQUIRE(w.has_value());
    // beta* = gamma * max_k sigma^2/|h_k^H u|^2 = 10 / 0.36.
    CHECK(power_cost(*w) == doctest::Approx(10.0 / 0.36).epsilon(1e-5));
  }
  SUBCASE("covariance orthogonal to every user fails") {
    CMat h(1, 2);
    h(0, 0) = 1.0;
    h(0, 1) = 0.0;
    const auto sc = manual_scenario(1, 2, h, 1.0, {{0, {0}}}, 10.0, 1.0, IMat::Zero(1, 1));
    CVec u(2);
    u(0) = 0.0;
    u(1) = 1.0;  // orthogonal to the only channel
    const LiftedSet lifted = {CMat(u * u.adjoint())};
    SolverSettings st = base_settings();
    st.n_randomizations = 20;
    CHECK_FALSE(randomize_and_scale(lifted, sc, st, 3).has_value());
  }
}

TEST_CASE("extract_clusters") {
  MulticastGroups g;
  g.groups = {{0, {0}}, {1, {1}}};
  g.gamma = Vec::Constant(2, 10.0);
  g.rate = Vec::Constant(2, 1.0);
  CachePlacement cache;
  cache.c = IMat::Zero(2, 2);
  cache.capacity = IVec::Constant(2, 1);

  BeamformerSet w;
  w.w.push_back(CVec::Zero(2));
  w.w.push_back(CVec::Zero(2));
  w.w[0](0) = 1.0;  // group 0 active only at BS 0
  w.w[1](0) = 1.0;
  w.w[1](1) = 1.0;  // group 1 active everywhere

  SUBCASE("exact-zero uncached block is dropped") {
    const auto [s, wz] = extract_clusters(w, cache, g, 1e-4);
    CHECK(s.s(0, 0) == 1);
    CHECK(s.s(0, 1) == 0);
    CHECK(s.s(1, 0) == 1);
    CHECK(s.s(1, 1) == 1);
  }
  SUBCASE("zero block but cached stays in the cluster at no backhaul") {
    cache.c(0, 1) = 1;
    const auto [s, wz] = extract_clusters(w, cache, g, 1e-4);
    CHECK(s.s(0, 1) == 1);
    CHECK(backhaul_cost(s, cache, g) == doctest::Approx(3.0));  // pairs (0,0),(1,0),(1,1)
    CHECK(wz.w[0](1) == Complex(0.0, 0.0));
  }
  SUBCASE("equal block powers give the all-ones clustering") {
    w.w[0](1) = 1.0;
    const auto [s, wz] = extract_clusters(w, cache, g, 1e-4);
    CHECK(s.s.sum() == 4);
  }
  SUBCASE("sub-threshold blocks are hard-zeroed") {
    w.w[0](1) = 1e-6;
    const auto [s, wz] = extract_clusters(w, cache, g, 1e-4);
    CHECK(s.s(0, 1) == 0);
    CHECK(wz.w[0](1) == Complex(0.0, 0.0));
    CHECK(wz.w[1](1) != Complex(0.0, 0.0));
  }
}

TEST_CASE("polish") {
  SUBCASE("all-ones clustering equals the p_ini pipeline") {
    CMat h(1, 2);
    h(0, 0) = 1.0;
    h(0, 1) = 0.5;
    const auto sc = manual_scenario(2, 1, h, 1.0, {{0, {0}}}, 10.0, 1.0, IMat::Zero(1, 2));
    ClusterMatrix s;
    s.s = IMat::Ones(1, 2);
    const auto res = polish(s, sc, base_settings(), 5);
    REQUIRE(res.ok());
    CHECK(res.outcome->costs.power == doctest::Approx(10.0 / 1.25).epsilon(1e-4));
    CHECK(res.outcome->min_sinr_margin >= 1.0 - 1e-5);
  }
  SUBCASE("zero row is infeasible") {
    CMat h(1, 2);
    h(0, 0) = 1.0;
    h(0, 1) = 0.5;
    const auto sc = manual_scenario(2, 1, h, 1.0, {{0, {0}}}, 10.0, 1.0, IMat::Zero(1, 2));
    ClusterMatrix s;
    s.s = IMat::Zero(1, 2);
    CHECK(polish(s, sc, base_settings(), 5).error == SolveError::infeasible_clustering);
  }
  SUBCASE("two users in one group on one scalar BS") {
    CMat h(2, 1);
    h(0, 0) = 1.0;
    h(1, 0) = 0.5;
    const auto sc = manual_scenario(1, 1, h, 1.0, {{0, {0, 1}}}, 10.0, 1.0, IMat::Zero(1, 1));
    ClusterMatrix s;
    s.s = IMat::Ones(1, 1);
    const auto res = polish(s, sc, base_settings(), 5);
    REQUIRE(res.ok());
    CHECK(res.outcome->costs.power == doctest::Approx(10.0 / 0.25).epsilon(1e-4));
  }
}

TEST_CASE("closed-form agreement of p_ini, polish, g_ccp, sdr_ccp (scalar cases)") {
  SolverSettings st = base_settings();
  st.power_only = true;

  SUBCASE("single user") {
    CMat h(1, 1);
    h(0, 0) = Complex(0.6, 0.8);  // |h| = 1
    const auto sc = manual_scenario(1, 1, h, 2.0, {{0, {0}}}, 10.0, 1.0, IMat::Zero(1, 1));
    const double expect = 10.0 * 2.0 / 1.0;
    const auto pini = solve_p_ini(sc, st);
    REQUIRE(pini.ok());
    CHECK(pini.lifted[0].trace().real() == doctest::Approx(expect).epsilon(1e-4));
    const auto g = g_ccp(sc, st, 1);
    REQUIRE(g.ok());
    CHECK(g.outcome->costs.power == doctest::Approx(expect).epsilon(1e-4));
    const auto sdr = sdr_ccp(sc, st, 1);
    REQUIRE(sdr.ok());
    CHECK(sdr.outcome->costs.power == doctest::Approx(expect).epsilon(1e-4));
  }
  SUBCASE("two-user single-antenna multicast") {
    CMat h(2, 1);
    h(0, 0) = 1.0;
    h(1, 0) = Complex(0.0, 0.5);
    const auto sc = manual_scenario(1, 1, h, 1.0, {{0, {0, 1}}}, 10.0, 1.0, IMat::Zero(1, 1));
    const double expect = 10.0 / 0.25;
    const auto g = g_ccp(sc, st, 1);
    REQUIRE(g.ok());
    CHECK(g.outcome->costs.power == doctest::Approx(expect).epsilon(1e-4));
    const auto sdr = sdr_ccp(sc, st, 1);
    REQUIRE(sdr.ok());
    CHECK(sdr.outcome->costs.power == doctest::Approx(expect).epsilon(1e-4));
    ClusterMatrix ones;
    ones.s = IMat::Ones(1, 1);
    const auto pol = polish(ones, sc, st, 1);
    REQUIRE(pol.ok());
    CHECK(pol.outcome->costs.power == doctest::Approx(expect).epsilon(1e-4));
  }
}

TEST_CASE("full caching collapses both algorithms to power minimization") {
  // alpha == 0 for every pair, so the surrogate is eta * power plus a
  // constant; the outcome power matches the p_ini pipeline.
  const Scenario base = random_small_scenario(11);
  Scenario sc = base;
  sc.cache.c.setOnes();  // everything cached everywhere

  SolverSettings st = base_settings();
  st.eta = 1.0;
  const auto pini = solve_p_ini(sc, st);
  REQUIRE(pini.ok());
  double p_ref = 0.0;
  for (const auto& wl : pini.lifted) p_ref += wl.trace().real();

  for (auto* fn : {&sdr_ccp, &g_ccp}) {
    const auto res = (*fn)(sc, st, 21);
    REQUIRE(res.ok());
    CHECK(res.outcome->costs.backhaul == doctest::Approx(0.0));
    CHECK(res.outcome->costs.power == doctest::Approx(p_ref).epsilon(1e-3));
    CHECK(res.outcome->min_sinr_margin >= 1.0 - 1e-5);
  }
}

TEST_CASE("relaxation lower-bounds rank-1 feasible points (power-only)") {
  const Scenario sc = random_small_scenario(5);
  SolverSettings st = base_settings();
  st.power_only = true;
  const auto pini = solve_p_ini(sc, st);
  REQUIRE(pini.ok());
  double relax = 0.0;
  for (const auto& wl : pini.lifted) relax += wl.trace().real();

  ClusterMatrix ones;
  ones.s = IMat::Ones(sc.n_groups(), sc.n_bs());
  const auto pol = polish(ones, sc, st, 9);
  REQUIRE(pol.ok());
  CHECK(pol.outcome->costs.power >= relax - 1e-6 * std::max(1.0, relax));

  const auto g = g_ccp(sc, st, 9);
  REQUIRE(g.ok());
  CHECK(g.outcome->costs.power >= relax - 1e-6 * std::max(1.0, relax));
}

TEST_CASE("ccp runs: descent, feasibility retention, recomputed costs") {
  const Scenario sc = random_small_scenario(23);
  SolverSettings st = base_settings();
  st.eta = 1e-7;  // backhaul-dominated, exercises the annealing path
  st.trace_enabled = true;

  const auto g = g_ccp(sc, st, 31);
  REQUIRE(g.ok());
  const auto& diag = g.outcome->diag;
  CHECK(diag.outer_stages >= 1);
  CHECK(!diag.trace.empty());

  // Surrogate non-increasing within each theta stage (10x solver tolerance).
  std::map<double, std::vector<double>> by_theta;
  for (const auto& row : diag.trace) by_theta[row.theta].push_back(row.surrogate);
  for (const auto& [theta, seq] : by_theta)
    for (std::size_t i = 1; i < seq.size(); ++i)
      CHECK(seq[i] <= seq[i - 1] + 10.0 * st.conic_tol * std::max(1.0, std::abs(seq[i - 1])));

  // Every inner iterate of g_ccp stays feasible for the true constraints.
  for (const auto& row : diag.trace) CHECK(row.min_sinr_margin >= 1.0 - 1e-5);

  // Reported costs are recomputed from the final beamformers and clustering.
  const auto& out = *g.outcome;
  CHECK(out.costs.power == doctest::Approx(power_cost(out.w)).epsilon(1e-12));
  CHECK(out.costs.backhaul ==
        doctest::Approx(backhaul_cost(out.clustering, sc.cache, sc.groups)).epsilon(1e-12));
  CHECK(out.min_sinr_margin >= 1.0 - 1e-5);

  const auto sdr = sdr_ccp(sc, st, 31);
  REQUIRE(sdr.ok());
  std::map<double, std::vector<double>> sdr_by_theta;
  for (const auto& row : sdr.outcome->diag.trace)
    sdr_by_theta[row.theta].push_back(row.surrogate);
  for (const auto& [theta, seq] : sdr_by_theta)
    for (std::size_t i = 1; i < seq.size(); ++i)
      CHECK(seq[i] <= seq[i - 1] + 10.0 * st.conic_tol * std::max(1.0, std::abs(seq[i - 1])));
}

TEST_CASE("cluster extraction includes cached BSs per the optimality property") {
  // A cached BS joins the cluster even at zero beamformer power.
  Scenario sc = random_small_scenario(41);
  sc.cache.c.setZero();
  sc.cache.c(sc.groups.groups[0].content, 0) = 1;
  SolverSettings st = base_settings();
  st.eta = 1e9;  // strong power weight: clusters shrink, caching keeps BS 0
  const auto g = g_ccp(sc, st, 51);
  REQUIRE(g.ok());
  CHECK(g.outcome->clustering.s(0, 0) == 1);
}

TEST_CASE("determinism: identical seeds give identical outcomes") {
  const Scenario sc = random_small_scenario(61);
  SolverSettings st = base_settings();
  st.eta = 1e-6;
  const auto a = g_ccp(sc, st, 71);
  const auto b = g_ccp(sc, st, 71);
  REQUIRE(a.ok());
  REQUIRE(b.ok());
  CHECK(a.outcome->costs.total == b.outcome->costs.total);
  CHECK(a.outcome->costs.power == b.outcome->costs.power);
  for (int m = 0; m < sc.n_groups(); ++m)
    CHECK((a.outcome->w.w[static_cast<std::size_t>(m)] -
           b.outcome->w.w[static_cast<std::size_t>(m)])
              .norm() == 0.0);
}
