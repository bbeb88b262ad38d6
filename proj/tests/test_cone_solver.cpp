#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "cranbeam/cone_solver.hpp"
#include "cranbeam/rng.hpp"

using namespace cranbeam;
using namespace cranbeam::conic;

namespace {

// Checks the returned triple against the KKT system of
//   min c'x  s.t.  Gx + s = h, s in K:
// primal/dual feasibility and complementary slackness.
void check_kkt(const Vec& c, const Mat& G, const Vec& h, const ConeDims& dims,
               const ConeSolution& sol, double tol = 1e-6) {
  REQUIRE(sol.status == ConeStatus::optimal);
  const double scale = std::max({1.0, c.norm(), h.norm()});
  CHECK((G * sol.x + sol.s - h).norm() <= tol * scale);
  CHECK((G.transpose() * sol.z + c).norm() <= tol * scale);
  CHECK(std::abs(sol.s.dot(sol.z)) <= 1e-5 * scale);
  // Cone membership of s and z per block.
  Index off = 0;
  for (Index i = 0; i < dims.orthant; ++i, ++off) {
    CHECK(sol.s(off) >= -tol * scale);
    CHECK(sol.z(off) >= -tol * scale);
  }
  for (Index q : dims.soc) {
    CHECK(sol.s(off) >= sol.s.segment(off + 1, q - 1).norm() - tol * scale);
    CHECK(sol.z(off) >= sol.z.segment(off + 1, q - 1).norm() - tol * scale);
    off += q;
  }
  for (Index p : dims.psd) {
    const Index len = p * (p + 1) / 2;
    Eigen::SelfAdjointEigenSolver<Mat> es(smat(sol.s.segment(off, len), p));
    Eigen::SelfAdjointEigenSolver<Mat> ez(smat(sol.z.segment(off, len), p));
    CHECK(es.eigenvalues().minCoeff() >= -tol * scale);
    CHECK(ez.eigenvalues().minCoeff() >= -tol * scale);
    off += len;
  }
}

}  // namespace

TEST_CASE("svec/smat round trip preserves inner products") {
  Rng rng(5);
  Mat A(4, 4), B(4, 4);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) {
      A(i, j) = rng.normal();
      B(i, j) = rng.normal();
    }
  A = (A + A.transpose()).eval();
  B = (B + B.transpose()).eval();
  CHECK((smat(svec(A), 4) - A).norm() == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(svec(A).dot(svec(B)) == doctest::Approx((A * B).trace()).epsilon(1e-12));
}

TEST_CASE("lp: simple bound") {
  // min b s.t. b >= 2, b >= 0
  Vec c(1);
  c << 1.0;
  Mat G(2, 1);
  G << -1.0, -1.0;
  Vec h(2);
  h << -2.0, 0.0;
  ConeDims dims;
  dims.orthant = 2;
  const auto sol = solve_cone_program(c, G, h, dims);
  REQUIRE(sol.status == ConeStatus::optimal);
  CHECK(sol.x(0) == doctest::Approx(2.0).epsilon(1e-7));
  check_kkt(c, G, h, dims, sol);
}

TEST_CASE("lp: infeasible certificate") {
  // b <= -1 and b >= 0
  Vec c(1);
  c << 0.0;
  Mat G(2, 1);
  G << 1.0, -1.0;
  Vec h(2);
  h << -1.0, 0.0;
  ConeDims dims;
  dims.orthant = 2;
  const auto sol = solve_cone_program(c, G, h, dims);
  CHECK(sol.status == ConeStatus::primal_infeasible);
  // Farkas certificate: z in K*, G'z ~ 0, h'z = -1.
  CHECK((G.transpose() * sol.z).norm() <= 1e-6);
  CHECK(h.dot(sol.z) == doctest::Approx(-1.0).epsilon(1e-6));
}

TEST_CASE("lp: unbounded detected as dual infeasible") {
  Vec c(1);
  c << -1.0;
  Mat G(1, 1);
  G << -1.0;
  Vec h(1);
  h << 0.0;
  ConeDims dims;
  dims.orthant = 1;
  const auto sol = solve_cone_program(c, G, h, dims);
  CHECK(sol.status == ConeStatus::dual_infeasible);
}

TEST_CASE("soc: projection-style problem") {
  // min t s.t. ||(x1, x2)|| <= t, x1 >= 3; optimum t = 3 at (3, 0).
  // vars x = (t, x1, x2)
  Vec c(3);
  c << 1.0, 0.0, 0.0;
  Mat G(4, 3);
  G.setZero();
  G(0, 1) = -1.0;  // x1 >= 3
  G(1, 0) = -1.0;  // s = (t, x1, x2) in SOC
  G(2, 1) = -1.0;
  G(3, 2) = -1.0;
  Vec h(4);
  h << -3.0, 0.0, 0.0, 0.0;
  ConeDims dims;
  dims.orthant = 1;
  dims.soc = {3};
  const auto sol = solve_cone_program(c, G, h, dims);
  REQUIRE(sol.status == ConeStatus::optimal);
  CHECK(sol.x(0) == doctest::Approx(3.0).epsilon(1e-6));
  check_kkt(c, G, h, dims, sol);
}

TEST_CASE("sdp: rank-one constrained trace minimization") {
  // min Tr(W) s.t. <hh', W> >= gs, W psd (2x2 real)
  // optimum gs/||h||^2 with W* rank-1 along h.
  const double gs = 10.0;
  Vec hvec2(2);
  hvec2 << 1.0, 2.0;
  const Mat H = hvec2 * hvec2.transpose();
  Vec c = svec(Mat::Identity(2, 2));
  Mat G(1 + 3, 3);
  G.row(0) = -svec(H).transpose();
  G.bottomRows(3) = -Mat::Identity(3, 3);
  Vec h(4);
  h << -gs, 0.0, 0.0, 0.0;
  ConeDims dims;
  dims.orthant = 1;
  dims.psd = {2};
  const auto sol = solve_cone_program(c, G, h, dims);
  REQUIRE(sol.status == ConeStatus::optimal);
  CHECK(sol.primal_objective == doctest::Approx(gs / hvec2.squaredNorm()).epsilon(1e-6));
  Eigen::SelfAdjointEigenSolver<Mat> eig(smat(sol.x, 2));
  CHECK(eig.eigenvalues()(1) > 0.0);
  CHECK(eig.eigenvalues()(0) <= 1e-5 * eig.eigenvalues()(1));
  check_kkt(c, G, h, dims, sol);
}

TEST_CASE("sdp: infeasible when coefficient is zero") {
  // <0, W> >= 1 with W psd.
  Vec c = svec(Mat::Identity(2, 2));
  Mat G(4, 3);
  G.setZero();
  G.bottomRows(3) = -Mat::Identity(3, 3);
  Vec h(4);
  h << -1.0, 0.0, 0.0, 0.0;
  ConeDims dims;
  dims.orthant = 1;
  dims.psd = {2};
  const auto sol = solve_cone_program(c, G, h, dims);
  CHECK(sol.status == ConeStatus::primal_infeasible);
}

TEST_CASE("sdp: zero objective, only psd constraint") {
  // Pure feasibility problem: any PSD point is optimal with value 0.
  Vec c = Vec::Zero(3);
  Mat G = -Mat::Identity(3, 3);
  Vec h = Vec::Zero(3);
  ConeDims dims;
  dims.psd = {2};
  const auto sol = solve_cone_program(c, G, h, dims);
  REQUIRE(sol.status == ConeStatus::optimal);
  CHECK(sol.primal_objective == doctest::Approx(0.0));
  Eigen::SelfAdjointEigenSolver<Mat> eig(smat(sol.x, 2), Eigen::EigenvaluesOnly);
  CHECK(eig.eigenvalues().minCoeff() >= -1e-8);
}

TEST_CASE("mixed cones with random feasible data satisfy KKT") {
  Rng rng(2024);
  for (int rep = 0; rep < 12; ++rep) {
    const Index n = 6;
    ConeDims dims;
    dims.orthant = 3;
    dims.soc = {3};
    dims.psd = {3};
    const Index m = dims.rows();
    Mat G(m, n);
    for (Index i = 0; i < m; ++i)
      for (Index j = 0; j < n; ++j) G(i, j) = rng.normal();
    // Make h = G*0 + s0 with s0 strictly interior, so x = 0 is feasible.
    Vec s0 = Vec::Zero(m);
    for (Index i = 0; i < 3; ++i) s0(i) = rng.uniform(0.5, 2.0);
    s0(3) = 3.0;
    s0(4) = rng.uniform(-1.0, 1.0);
    s0(5) = rng.uniform(-1.0, 1.0);
    Mat P(3, 3);
    for (Index i = 0; i < 3; ++i)
      for (Index j = 0; j < 3; ++j) P(i, j) = rng.normal();
    s0.tail(6) = svec(Mat(P * P.transpose() + 0.5 * Mat::Identity(3, 3)));
    const Vec h = s0;
    Vec c(n);
    for (Index j = 0; j < n; ++j) c(j) = rng.normal();
    // Bound the problem: add row sum constraints -1 <= x_j <= 1 via orthant.
    Mat Gb(m + 2 * n, n);
    Vec hb(m + 2 * n);
    ConeDims dimsb;
    dimsb.orthant = dims.orthant + 2 * n;
    dimsb.soc = dims.soc;
    dimsb.psd = dims.psd;
    Gb.topRows(3) = G.topRows(3);
    hb.head(3) = h.head(3);
    Gb.middleRows(3, n) = Mat::Identity(n, n);
    hb.segment(3, n).setOnes();
    Gb.middleRows(3 + n, n) = -Mat::Identity(n, n);
    hb.segment(3 + n, n).setOnes();
    Gb.bottomRows(m - 3) = G.bottomRows(m - 3);
    hb.tail(m - 3) = h.tail(m - 3);
    const auto sol = solve_cone_program(c, Gb, hb, dimsb);
    check_kkt(c, Gb, hb, dimsb, sol);
    CHECK(sol.primal_objective == doctest::Approx(sol.dual_objective).epsilon(1e-5));
  }
}

TEST_CASE("sdp rank-one recovery on random rank-1-optimal instances") {
  Rng rng(99);
  for (int rep = 0; rep < 6; ++rep) {
    const Index p = 3;
    Vec hv(p);
    for (Index i = 0; i < p; ++i) hv(i) = rng.normal();
    const Mat H = hv * hv.transpose();
    const Index len = p * (p + 1) / 2;
    Vec c = svec(Mat::Identity(p, p));
    Mat G(1 + len, len);
    G.row(0) = -svec(H).transpose();
    G.bottomRows(len) = -Mat::Identity(len, len);
    Vec h = Vec::Zero(1 + len);
    h(0) = -1.0;
    ConeDims dims;
    dims.orthant = 1;
    dims.psd = {p};
    const auto sol = solve_cone_program(c, G, h, dims);
    REQUIRE(sol.status == ConeStatus::optimal);
    Eigen::SelfAdjointEigenSolver<Mat> eig(smat(sol.x, p));
    const Vec ev = eig.eigenvalues();
    CHECK(ev(p - 1) > 0.0);
    CHECK(std::abs(ev(p - 2)) <= 1e-5 * ev(p - 1));
    CHECK(sol.primal_objective == doctest::Approx(1.0 / hv.squaredNorm()).epsilon(1e-6));
  }
}
