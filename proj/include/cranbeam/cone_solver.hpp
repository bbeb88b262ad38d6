// Dense primal-dual interior-point solver for cone programs
//
//     minimize    c'x
//     subject to  G x + s = h,   s in K,
//
// where K is a product of a nonnegative orthant, second-order cones, and
// (svec-packed) positive-semidefinite cones. Uses Nesterov-Todd scaling and a
// Mehrotra predictor-corrector step on the homogeneous self-dual embedding,
// which yields certificates of primal/dual infeasibility instead of just
// failing to converge. Sized for the small dense problems this project
// produces (a few hundred variables); every call is independent and
// reentrant.
#pragma once

#include <vector>

#include "cranbeam/types.hpp"

namespace cranbeam::conic {

struct ConeDims {
  Index orthant = 0;
  std::vector<Index> soc;  // dimension of each second-order cone (>= 1)
  std::vector<Index> psd;  // side length of each PSD block

  Index rows() const {
    Index m = orthant;
    for (Index q : soc) m += q;
    for (Index p : psd) m += p * (p + 1) / 2;
    return m;
  }
  // Rank of the product cone; the barrier parameter nu.
  Index degree() const {
    Index d = orthant + static_cast<Index>(soc.size());
    for (Index p : psd) d += p;
    return d;
  }
};

struct ConeSolverOptions {
  int max_iters = 100;
  double feastol = 1e-8;
  double abstol = 1e-8;
  double reltol = 1e-8;
  double step_fraction = 0.99;
  bool verbose = false;
};

enum class ConeStatus { optimal, primal_infeasible, dual_infeasible, numerical_failure };

struct ConeSolution {
  ConeStatus status = ConeStatus::numerical_failure;
  Vec x, s, z;
  double primal_objective = 0.0;
  double dual_objective = 0.0;
  double gap = 0.0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  int iterations = 0;
};

ConeSolution solve_cone_program(const Vec& c, const Mat& G, const Vec& h, const ConeDims& dims,
                                const ConeSolverOptions& opts = {});

// Symmetric packing with off-diagonals scaled by sqrt(2), so that
// svec(A) . svec(B) = <A, B>. Column-major lower triangle.
Vec svec(const Mat& S);
Mat smat(const Vec& v, Index p);

}  // namespace cranbeam::conic
