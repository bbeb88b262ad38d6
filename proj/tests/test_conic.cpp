#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "cranbeam/conic.hpp"
#include "cranbeam/rng.hpp"

using namespace cranbeam;
using namespace cranbeam::conic;

namespace {
CMat rand_hermitian(Rng& rng, Index d) {
  CMat a(d, d);
  for (Index i = 0; i < d; ++i)
    for (Index j = 0; j < d; ++j) a(i, j) = rng.complex_normal();
  return 0.5 * (a + a.adjoint()).eval();
}
}  // namespace

TEST_CASE("hvec preserves Hermitian inner products") {
  Rng rng(1);
  const CMat a = rand_hermitian(rng, 4);
  const CMat x = rand_hermitian(rng, 4);
  const double direct = (a * x).trace().real();
  CHECK(hvec(a).dot(hvec(x)) == doctest::Approx(direct).epsilon(1e-12));
  CHECK((hmat(hvec(a), 4) - a).norm() == doctest::Approx(0.0).epsilon(1e-14));
}

TEST_CASE("sdp: single rank-one constraint closed form") {
  // min Tr(W) s.t. <hh^H, W> >= g*s2; optimum g*s2/||h||^2, rank-1.
  Rng rng(7);
  const Index d = 3;
  CVec h(d);
  for (Index i = 0; i < d; ++i) h(i) = rng.complex_normal();
  const double gs = 10.0 * 0.5;

  SdpProblem p;
  p.block_dims = {d};
  p.objective = {CMat::Identity(d, d)};
  SdpConstraint con;
  con.coeff = {CMat(h * h.adjoint())};
  con.rhs = gs;
  p.constraints = {con};

  const SdpSolution sol = solve_sdp(p);
  REQUIRE(sol.status == SolveStatusKind::optimal);
  CHECK(sol.objective == doctest::Approx(gs / h.squaredNorm()).epsilon(1e-6));

  Eigen::SelfAdjointEigenSolver<CMat> eig(sol.blocks[0]);
  const Vec ev = eig.eigenvalues();
  CHECK(ev(d - 1) > 0.0);
  CHECK(std::abs(ev(d - 2)) <= 1e-5 * ev(d - 1));

  // Real embedding exactness: the reported objective agrees with the direct
  // complex evaluation.
  const double direct = sol.blocks[0].trace().real();
  CHECK(sol.objective == doctest::Approx(direct).epsilon(1e-9));
  // Optimal solutions re-checked against the original constraints.
  const double lhs = (CMat(h * h.adjoint()) * sol.blocks[0]).trace().real();
  CHECK(lhs >= gs * (1.0 - 1e-6));
}

TEST_CASE("sdp: zero-coefficient constraint is infeasible") {
  SdpProblem p;
  p.block_dims = {2};
  p.objective = {CMat::Identity(2, 2)};
  SdpConstraint con;
  con.coeff = {CMat::Zero(2, 2)};
  con.rhs = 1.0;
  p.constraints = {con};
  CHECK(solve_sdp(p).status == SolveStatusKind::infeasible);
}

TEST_CASE("sdp: no constraints gives zero") {
  SdpProblem p;
  p.block_dims = {2};
  p.objective = {CMat::Identity(2, 2)};
  const SdpSolution sol = solve_sdp(p);
  REQUIRE(sol.status == SolveStatusKind::optimal);
  CHECK(sol.objective == doctest::Approx(0.0).epsilon(1e-7));
  CHECK(sol.blocks[0].norm() <= 1e-5);
}

TEST_CASE("sdp: multiple blocks with interference-style coupling") {
  // Two scalar blocks with crossed constraints admit a hand-computable
  // optimum: minimize W1+W2 s.t. W1 >= g(W2 + 1), W2 >= g(W1 + 1), g = 0.5.
  SdpProblem p;
  p.block_dims = {1, 1};
  p.objective = {CMat::Identity(1, 1), CMat::Identity(1, 1)};
  const double g = 0.5;
  SdpConstraint c1, c2;
  c1.coeff = {CMat::Identity(1, 1), CMat::Constant(1, 1, -g)};
  c1.rhs = g;
  c2.coeff = {CMat::Constant(1, 1, -g), CMat::Identity(1, 1)};
  c2.rhs = g;
  p.constraints = {c1, c2};
  const SdpSolution sol = solve_sdp(p);
  REQUIRE(sol.status == SolveStatusKind::optimal);
  // symmetric fixed point: W = g(W+1) -> W = g/(1-g) = 1.
  CHECK(sol.blocks[0](0, 0).real() == doctest::Approx(1.0).epsilon(1e-5));
  CHECK(sol.blocks[1](0, 0).real() == doctest::Approx(1.0).epsilon(1e-5));
}

TEST_CASE("sdp: gamma >= 1 with identical channels is infeasible") {
  // Two groups, identical scalar channels: the SINR system contradicts.
  SdpProblem p;
  p.block_dims = {1, 1};
  p.objective = {CMat::Identity(1, 1), CMat::Identity(1, 1)};
  const double g = 10.0;
  SdpConstraint c1, c2;
  c1.coeff = {CMat::Identity(1, 1), CMat::Constant(1, 1, -g)};
  c1.rhs = g;
  c2.coeff = {CMat::Constant(1, 1, -g), CMat::Identity(1, 1)};
  c2.rhs = g;
  p.constraints = {c1, c2};
  CHECK(solve_sdp(p).status == SolveStatusKind::infeasible);
}

TEST_CASE("qcqp: squared norm bound with affine floor") {
  // min t s.t. ||w||^2 <= t, Re{w} >= 3 (scalar complex w) -> t* = 9.
  QcqpProblem p;
  p.n_w = 1;
  p.n_t = 1;
  p.obj_w = CVec::Zero(1);
  p.obj_t = Vec::Ones(1);
  QcqpQuadConstraint q;
  q.a = CMat::Identity(1, 1);
  q.b = CVec::Zero(1);
  q.lin_w = CVec::Zero(1);
  q.lin_t = Vec::Ones(1);
  q.offset = 0.0;
  p.quad = {q};
  QcqpAffineConstraint a;
  a.lin_w = CVec::Ones(1);
  a.lin_t = Vec::Zero(1);
  a.rhs = 3.0;
  p.affine = {a};
  const QcqpSolution sol = solve_qcqp(p);
  REQUIRE(sol.status == SolveStatusKind::optimal);
  CHECK(sol.objective == doctest::Approx(9.0).epsilon(1e-6));
  CHECK(sol.w(0).real() == doctest::Approx(3.0).epsilon(1e-5));
  // Embedding exactness against direct complex evaluation.
  CHECK(sol.t(0) == doctest::Approx(sol.w.squaredNorm()).epsilon(1e-5));
}

TEST_CASE("qcqp: unconstrained epigraph collapses to zero") {
  QcqpProblem p;
  p.n_w = 2;
  p.n_t = 1;
  p.obj_w = CVec::Zero(2);
  p.obj_t = Vec::Ones(1);
  QcqpQuadConstraint q;
  q.a = CMat::Identity(2, 2);
  q.b = CVec::Zero(2);
  q.lin_w = CVec::Zero(2);
  q.lin_t = Vec::Ones(1);
  p.quad = {q};
  const QcqpSolution sol = solve_qcqp(p);
  REQUIRE(sol.status == SolveStatusKind::optimal);
  CHECK(sol.objective == doctest::Approx(0.0).epsilon(1e-7));
}

TEST_CASE("qcqp: contradictory affine bounds are infeasible") {
  QcqpProblem p;
  p.n_w = 1;
  p.n_t = 0;
  p.obj_w = CVec::Zero(1);
  p.obj_t = Vec();
  QcqpAffineConstraint a1, a2;
  a1.lin_w = CVec::Ones(1);
  a1.lin_t = Vec();
  a1.rhs = 3.0;                  // Re{w} >= 3
  a2.lin_w = CVec::Ones(1);
  a2.lin_t = Vec();
  a2.rhs = 2.0;
  a2.greater_equal = false;      // Re{w} <= 2
  p.affine = {a1, a2};
  CHECK(solve_qcqp(p).status == SolveStatusKind::infeasible);
}

TEST_CASE("qcqp: plain norm cone constraint") {
  // min u s.t. ||w - (1+2i)|| <= u: optimum 0 at w = 1+2i.
  QcqpProblem p;
  p.n_w = 1;
  p.n_t = 1;
  p.obj_w = CVec::Zero(1);
  p.obj_t = Vec::Ones(1);
  QcqpQuadConstraint q;
  q.a = CMat::Identity(1, 1);
  q.b = CVec::Constant(1, Complex(-1.0, -2.0));
  q.lin_w = CVec::Zero(1);
  q.lin_t = Vec::Ones(1);
  q.squared = false;
  p.quad = {q};
  const QcqpSolution sol = solve_qcqp(p);
  REQUIRE(sol.status == SolveStatusKind::optimal);
  CHECK(sol.objective == doctest::Approx(0.0).epsilon(1e-5));
  CHECK(std::abs(sol.w(0) - Complex(1.0, 2.0)) <= 1e-4);
}

TEST_CASE("lp wrapper") {
  SUBCASE("simple bound") {
    LpProblem p;
    p.n = 1;
    p.objective = Vec::Ones(1);
    p.constraints = {{Vec::Ones(1), 2.0, true}};
    const LpSolution sol = solve_lp(p);
    REQUIRE(sol.status == SolveStatusKind::optimal);
    CHECK(sol.objective == doctest::Approx(2.0).epsilon(1e-7));
  }
  SUBCASE("infeasible") {
    LpProblem p;
    p.n = 1;
    p.objective = Vec::Zero(1);
    p.constraints = {{Vec::Ones(1), -1.0, false}};  // b <= -1 with b >= 0
    CHECK(solve_lp(p).status == SolveStatusKind::infeasible);
  }
  SUBCASE("unbounded reported distinctly") {
    LpProblem p;
    p.n = 1;
    p.objective = -Vec::Ones(1);
    const LpSolution sol = solve_lp(p);
    CHECK(sol.status == SolveStatusKind::unbounded);
  }
  SUBCASE("single-group scaling closed form") {
    // min b*pw s.t. a*b >= g*(s2) -> b = g*s2/a.
    LpProblem p;
    p.n = 1;
    p.objective = Vec::Constant(1, 4.0);
    const double a = 2.0, g = 10.0, s2 = 0.5;
    p.constraints = {{Vec::Constant(1, a), g * s2, true}};
    const LpSolution sol = solve_lp(p);
    REQUIRE(sol.status == SolveStatusKind::optimal);
    CHECK(sol.x(0) == doctest::Approx(g * s2 / a).epsilon(1e-7));
  }
}

TEST_CASE("random sdp solutions violate no constraint beyond 10x tol") {
  Rng rng(321);
  const double tol = 1e-7;
  for (int rep = 0; rep < 5; ++rep) {
    const Index d = 3;
    SdpProblem p;
    p.block_dims = {d};
    p.objective = {CMat::Identity(d, d)};
    for (int i = 0; i < 3; ++i) {
      CVec h(d);
      for (Index r = 0; r < d; ++r) h(r) = rng.complex_normal();
      SdpConstraint con;
      con.coeff = {CMat(h * h.adjoint())};
      con.rhs = rng.uniform(0.5, 2.0);
      p.constraints.push_back(con);
    }
    const SdpSolution sol = solve_sdp(p, tol);
    REQUIRE(sol.status == SolveStatusKind::optimal);
    double scale = 1.0;
    for (const auto& con : p.constraints)
      scale = std::max(scale, std::abs(con.rhs));
    for (const auto& con : p.constraints) {
      const double lhs = (con.coeff[0] * sol.blocks[0]).trace().real();
      CHECK(lhs - con.rhs >= -10.0 * tol * scale);
    }
    Eigen::SelfAdjointEigenSolver<CMat> eig(sol.blocks[0]);
    CHECK(eig.eigenvalues().minCoeff() >= -10.0 * tol);
  }
}

TEST_CASE("problem dump round-trips basic structure") {
  LpProblem p;
  p.n = 2;
  p.objective = (Vec(2) << 1.0, 2.0).finished();
  p.constraints = {{(Vec(2) << 1.0, 1.0).finished(), 1.0, true}};
  const LoweredCone low = lower_lp(p);
  const std::string text = dump_problem_string(low);
  CHECK(text.find("cranbeam-cone-dump v1") == 0);
  CHECK(text.find("orthant 3") != std::string::npos);
  CHECK(text.find("end") != std::string::npos);
}
