// Solver-facing problem shapes: linear SDPs over Hermitian blocks, convex
// QCQPs over complex vector variables, and small LPs over nonnegative
// variables. Complex data is lowered through the standard real embedding
// [X_re, -X_im; X_im, X_re]; the lowering is exact, so objective values agree
// with direct complex evaluation. The CCP layer depends only on the contracts
// here, not on the embedded interior-point backend.
#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "cranbeam/cone_solver.hpp"
#include "cranbeam/types.hpp"

namespace cranbeam::conic {

enum class SolveStatusKind { optimal, infeasible, unbounded, numerical_failure };

const char* to_string(SolveStatusKind k);

// ---- SDP: minimize sum_m <C_m, W_m> over Hermitian PSD W_m ----

struct SdpConstraint {
  // sum_m <coeff[m], W_m> (>= | <=) rhs; empty matrices mean zero coefficient.
  std::vector<CMat> coeff;
  double rhs = 0.0;
  bool greater_equal = true;
};

struct SdpProblem {
  std::vector<Index> block_dims;   // complex side length of each W_m
  std::vector<CMat> objective;     // C_m, Hermitian
  std::vector<SdpConstraint> constraints;

  void validate() const;  // Hermitian checks, dimension consistency
};

struct SdpSolution {
  SolveStatusKind status = SolveStatusKind::numerical_failure;
  std::vector<CMat> blocks;  // Hermitian PSD on optimal
  double objective = 0.0;
  int iterations = 0;
};

SdpSolution solve_sdp(const SdpProblem& p, double tol = 1e-7);

// ---- Convex QCQP over complex w and real auxiliary t ----

struct QcqpQuadConstraint {
  // ||a w + b||_2 (squared if `squared`) <= Re{lin_w^H w} + lin_t' t + offset
  CMat a;       // rows x n_w (may have zero rows)
  CVec b;
  CVec lin_w;   // length n_w
  Vec lin_t;    // length n_t
  double offset = 0.0;
  bool squared = true;
};

struct QcqpAffineConstraint {
  CVec lin_w;
  Vec lin_t;
  double rhs = 0.0;
  bool greater_equal = true;  // Re{lin_w^H w} + lin_t' t (>= | <=) rhs
};

struct QcqpProblem {
  Index n_w = 0;  // complex variables
  Index n_t = 0;  // real variables
  CVec obj_w;     // objective Re{obj_w^H w} + obj_t' t
  Vec obj_t;
  std::vector<QcqpQuadConstraint> quad;
  std::vector<QcqpAffineConstraint> affine;

  void validate() const;
};

struct QcqpSolution {
  SolveStatusKind status = SolveStatusKind::numerical_failure;
  CVec w;
  Vec t;
  double objective = 0.0;
  int iterations = 0;
};

QcqpSolution solve_qcqp(const QcqpProblem& p, double tol = 1e-7);

// ---- LP over nonnegative variables ----

struct LpConstraint {
  Vec a;
  double rhs = 0.0;
  bool greater_equal = true;
};

struct LpProblem {
  Index n = 0;             // variables, implicitly >= 0
  Vec objective;
  std::vector<LpConstraint> constraints;
};

struct LpSolution {
  SolveStatusKind status = SolveStatusKind::numerical_failure;
  Vec x;
  double objective = 0.0;
  int iterations = 0;
};

LpSolution solve_lp(const LpProblem& p, double tol = 1e-7);

// ---- shared lowering + debug dump ----

struct LoweredCone {
  Vec c;
  Mat G;
  Vec h;
  ConeDims dims;
  double objective_scale = 1.0;  // c was divided by this
};

LoweredCone lower_sdp(const SdpProblem& p);
LoweredCone lower_qcqp(const QcqpProblem& p);
LoweredCone lower_lp(const LpProblem& p);

// Portable sparse text dump of a lowered instance, for cross-checking against
// external solvers.
void dump_problem(std::ostream& os, const LoweredCone& low);
std::string dump_problem_string(const LoweredCone& low);

// Hermitian packing: hvec(A)'hvec(X) = <A, X> = Tr(AX) for Hermitian A, X.
Vec hvec(const CMat& a);
CMat hmat(const Vec& v, Index d);

}  // namespace cranbeam::conic
