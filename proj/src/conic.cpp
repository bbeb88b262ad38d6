#include "cranbeam/conic.hpp"

#include <cmath>
#include <cstdlib>
#include <numbers>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace cranbeam::conic {

const char* to_string(SolveStatusKind k) {
  switch (k) {
    case SolveStatusKind::optimal: return "optimal";
    case SolveStatusKind::infeasible: return "infeasible";
    case SolveStatusKind::unbounded: return "unbounded";
    case SolveStatusKind::numerical_failure: return "numerical_failure";
  }
  return "?";
}

Vec hvec(const CMat& a) {
  const Index d = a.rows();
  Vec v(d * d);
  Index idx = 0;
  for (Index j = 0; j < d; ++j) {
    v(idx++) = a(j, j).real();
    for (Index i = j + 1; i < d; ++i) {
      v(idx++) = std::numbers::sqrt2 * a(i, j).real();
      v(idx++) = std::numbers::sqrt2 * a(i, j).imag();
    }
  }
  return v;
}

CMat hmat(const Vec& v, Index d) {
  CMat a(d, d);
  Index idx = 0;
  for (Index j = 0; j < d; ++j) {
    a(j, j) = v(idx++);
    for (Index i = j + 1; i < d; ++i) {
      const double re = v(idx++) / std::numbers::sqrt2;
      const double im = v(idx++) / std::numbers::sqrt2;
      a(i, j) = Complex(re, im);
      a(j, i) = Complex(re, -im);
    }
  }
  return a;
}

namespace {

void check_hermitian(const CMat& a, const char* what) {
  if (a.rows() != a.cols()) throw std::invalid_argument(std::string(what) + ": not square");
  const double scale = std::max(1.0, a.norm());
  if ((a - a.adjoint()).norm() > 1e-10 * scale)
    throw std::invalid_argument(std::string(what) + ": not Hermitian");
}

// svec of the real embedding [X_re, -X_im; X_im, X_re] as a linear map of
// hvec(X), built column-by-column over the Hermitian basis.
Mat embedding_map(Index d) {
  const Index n_h = d * d;
  const Index p = 2 * d;
  Mat T(p * (p + 1) / 2, n_h);
  Vec unit = Vec::Zero(n_h);
  for (Index k = 0; k < n_h; ++k) {
    unit(k) = 1.0;
    const CMat B = hmat(unit, d);
    unit(k) = 0.0;
    Mat E(p, p);
    E.topLeftCorner(d, d) = B.real();
    E.bottomRightCorner(d, d) = B.real();
    E.topRightCorner(d, d) = -B.imag();
    E.bottomLeftCorner(d, d) = B.imag();
    T.col(k) = svec(E);
  }
  return T;
}

double normalize_objective(Vec& c) {
  const double scale = c.cwiseAbs().maxCoeff();
  if (scale > 0.0 && std::isfinite(scale)) {
    c /= scale;
    return scale;
  }
  return 1.0;
}

SolveStatusKind map_status(ConeStatus s) {
  switch (s) {
    case ConeStatus::optimal: return SolveStatusKind::optimal;
    case ConeStatus::primal_infeasible: return SolveStatusKind::infeasible;
    case ConeStatus::dual_infeasible: return SolveStatusKind::unbounded;
    case ConeStatus::numerical_failure: return SolveStatusKind::numerical_failure;
  }
  return SolveStatusKind::numerical_failure;
}

ConeSolverOptions options_for(double tol) {
  ConeSolverOptions o;
  o.feastol = tol * 0.2;
  o.abstol = tol * 0.2;
  o.reltol = tol * 0.2;
  if (std::getenv("CRANBEAM_CONIC_VERBOSE")) o.verbose = true;
  return o;
}

}  // namespace

void SdpProblem::validate() const {
  if (objective.size() != block_dims.size())
    throw std::invalid_argument("SdpProblem: objective/block count mismatch");
  for (std::size_t m = 0; m < block_dims.size(); ++m) {
    if (objective[m].rows() != block_dims[m])
      throw std::invalid_argument("SdpProblem: objective block dimension mismatch");
    check_hermitian(objective[m], "SdpProblem objective");
  }
  for (const auto& con : constraints) {
    if (con.coeff.size() != block_dims.size())
      throw std::invalid_argument("SdpProblem: constraint block count mismatch");
    for (std::size_t m = 0; m < block_dims.size(); ++m) {
      if (con.coeff[m].size() == 0) continue;  // zero block
      if (con.coeff[m].rows() != block_dims[m])
        throw std::invalid_argument("SdpProblem: constraint block dimension mismatch");
      check_hermitian(con.coeff[m], "SdpProblem constraint");
    }
  }
}

LoweredCone lower_sdp(const SdpProblem& p) {
  p.validate();
  const std::size_t M = p.block_dims.size();
  std::vector<Index> offs(M + 1, 0);
  for (std::size_t m = 0; m < M; ++m) offs[m + 1] = offs[m] + p.block_dims[m] * p.block_dims[m];
  const Index n = offs[M];
  const Index n_ineq = static_cast<Index>(p.constraints.size());

  LoweredCone low;
  low.dims.orthant = n_ineq;
  Index psd_rows = 0;
  for (std::size_t m = 0; m < M; ++m) {
    const Index pd = 2 * p.block_dims[m];
    low.dims.psd.push_back(pd);
    psd_rows += pd * (pd + 1) / 2;
  }

  low.c.resize(n);
  for (std::size_t m = 0; m < M; ++m) low.c.segment(offs[m], offs[m + 1] - offs[m]) = hvec(p.objective[m]);

  low.G = Mat::Zero(n_ineq + psd_rows, n);
  low.h = Vec::Zero(n_ineq + psd_rows);
  for (Index i = 0; i < n_ineq; ++i) {
    const auto& con = p.constraints[static_cast<std::size_t>(i)];
    const double sgn = con.greater_equal ? -1.0 : 1.0;
    for (std::size_t m = 0; m < M; ++m) {
      if (con.coeff[m].size() == 0) continue;
      low.G.row(i).segment(offs[m], offs[m + 1] - offs[m]) = sgn * hvec(con.coeff[m]).transpose();
    }
    low.h(i) = sgn * con.rhs;
  }
  Index row = n_ineq;
  for (std::size_t m = 0; m < M; ++m) {
    const Mat T = embedding_map(p.block_dims[m]);
    low.G.block(row, offs[m], T.rows(), T.cols()) = -T;
    row += T.rows();
  }
  low.objective_scale = normalize_objective(low.c);
  return low;
}

SdpSolution solve_sdp(const SdpProblem& p, double tol) {
  // With no affine constraints the problem separates exactly: W = 0 is optimal
  // iff every objective block is PSD, otherwise the value is unbounded below.
  if (p.constraints.empty()) {
    p.validate();
    SdpSolution sol;
    for (std::size_t m = 0; m < p.block_dims.size(); ++m) {
      Eigen::SelfAdjointEigenSolver<CMat> eig(p.objective[m], Eigen::EigenvaluesOnly);
      if (eig.eigenvalues().minCoeff() < 0.0) {
        sol.status = SolveStatusKind::unbounded;
        return sol;
      }
    }
    for (Index d : p.block_dims) sol.blocks.push_back(CMat::Zero(d, d));
    sol.status = SolveStatusKind::optimal;
    sol.objective = 0.0;
    return sol;
  }
  const LoweredCone low = lower_sdp(p);
  const ConeSolution cs = solve_cone_program(low.c, low.G, low.h, low.dims, options_for(tol));
  SdpSolution sol;
  sol.status = map_status(cs.status);
  sol.iterations = cs.iterations;
  if (sol.status == SolveStatusKind::optimal) {
    Index off = 0;
    for (Index d : p.block_dims) {
      sol.blocks.push_back(hmat(cs.x.segment(off, d * d), d));
      off += d * d;
    }
    sol.objective = cs.primal_objective * low.objective_scale;
  }
  return sol;
}

void QcqpProblem::validate() const {
  if (obj_w.size() != n_w || obj_t.size() != n_t)
    throw std::invalid_argument("QcqpProblem: objective dimension mismatch");
  for (const auto& q : quad) {
    if (q.a.size() > 0 && q.a.cols() != n_w)
      throw std::invalid_argument("QcqpProblem: quad constraint column mismatch");
    if (q.a.rows() != q.b.size())
      throw std::invalid_argument("QcqpProblem: quad constraint rhs mismatch");
    if (q.lin_w.size() != n_w || q.lin_t.size() != n_t)
      throw std::invalid_argument("QcqpProblem: quad constraint linear part mismatch");
  }
  for (const auto& a : affine)
    if (a.lin_w.size() != n_w || a.lin_t.size() != n_t)
      throw std::invalid_argument("QcqpProblem: affine constraint dimension mismatch");
}

namespace {

// Coefficient row of Re{a^H w} + g' t over x = [Re w; Im w; t].
Vec real_linear_row(const CVec& a, const Vec& g, Index n_w, Index n_t) {
  Vec row(2 * n_w + n_t);
  row.head(n_w) = a.real();
  row.segment(n_w, n_w) = a.imag();
  row.tail(n_t) = g;
  return row;
}

}  // namespace

LoweredCone lower_qcqp(const QcqpProblem& p) {
  p.validate();
  const Index n = 2 * p.n_w + p.n_t;

  // Count rows: affine (+ degenerate quads) in the orthant, one SOC per quad.
  std::vector<const QcqpQuadConstraint*> cones;
  std::vector<std::pair<const QcqpQuadConstraint*, double>> degenerate;  // aff >= const
  for (const auto& q : p.quad) {
    if (q.a.rows() == 0)
      degenerate.push_back({&q, q.squared ? q.b.squaredNorm() : q.b.norm()});
    else
      cones.push_back(&q);
  }

  LoweredCone low;
  low.dims.orthant = static_cast<Index>(p.affine.size() + degenerate.size());
  Index soc_rows = 0;
  for (const auto* q : cones) {
    const Index dim = q->squared ? 2 * q->a.rows() + 2 : 2 * q->a.rows() + 1;
    low.dims.soc.push_back(dim);
    soc_rows += dim;
  }

  low.c = real_linear_row(p.obj_w, p.obj_t, p.n_w, p.n_t);
  low.G = Mat::Zero(low.dims.orthant + soc_rows, n);
  low.h = Vec::Zero(low.dims.orthant + soc_rows);

  Index row = 0;
  for (const auto& a : p.affine) {
    const double sgn = a.greater_equal ? -1.0 : 1.0;
    low.G.row(row) = sgn * real_linear_row(a.lin_w, a.lin_t, p.n_w, p.n_t).transpose();
    low.h(row) = sgn * a.rhs;
    ++row;
  }
  for (const auto& [q, bound] : degenerate) {
    low.G.row(row) = -real_linear_row(q->lin_w, q->lin_t, p.n_w, p.n_t).transpose();
    low.h(row) = q->offset - bound;
    ++row;
  }
  for (const auto* q : cones) {
    const Index ra = q->a.rows();
    const Vec lin = real_linear_row(q->lin_w, q->lin_t, p.n_w, p.n_t);
    // Real rows of a w + b: two per complex row.
    Mat rows(2 * ra, n);
    Vec consts(2 * ra);
    rows.setZero();
    for (Index r = 0; r < ra; ++r) {
      rows.row(2 * r).head(p.n_w) = q->a.row(r).real();
      rows.row(2 * r).segment(p.n_w, p.n_w) = -q->a.row(r).imag();
      rows.row(2 * r + 1).head(p.n_w) = q->a.row(r).imag();
      rows.row(2 * r + 1).segment(p.n_w, p.n_w) = q->a.row(r).real();
      consts(2 * r) = q->b(r).real();
      consts(2 * r + 1) = q->b(r).imag();
    }
    if (q->squared) {
      // ||v||^2 <= u  <=>  ||(2v, u-1)|| <= u+1
      low.G.row(row) = -lin.transpose();
      low.h(row) = q->offset + 1.0;
      low.G.middleRows(row + 1, 2 * ra) = -2.0 * rows;
      low.h.segment(row + 1, 2 * ra) = 2.0 * consts;
      low.G.row(row + 1 + 2 * ra) = -lin.transpose();
      low.h(row + 1 + 2 * ra) = q->offset - 1.0;
      row += 2 * ra + 2;
    } else {
      low.G.row(row) = -lin.transpose();
      low.h(row) = q->offset;
      low.G.middleRows(row + 1, 2 * ra) = -rows;
      low.h.segment(row + 1, 2 * ra) = consts;
      row += 2 * ra + 1;
    }
  }
  low.objective_scale = normalize_objective(low.c);
  return low;
}

QcqpSolution solve_qcqp(const QcqpProblem& p, double tol) {
  const LoweredCone low = lower_qcqp(p);
  const ConeSolution cs = solve_cone_program(low.c, low.G, low.h, low.dims, options_for(tol));
  QcqpSolution sol;
  sol.status = map_status(cs.status);
  sol.iterations = cs.iterations;
  if (sol.status == SolveStatusKind::optimal) {
    sol.w = cs.x.head(p.n_w) + Complex(0.0, 1.0) * cs.x.segment(p.n_w, p.n_w);
    sol.t = cs.x.tail(p.n_t);
    sol.objective = cs.primal_objective * low.objective_scale;
  }
  return sol;
}

LoweredCone lower_lp(const LpProblem& p) {
  if (p.objective.size() != p.n) throw std::invalid_argument("LpProblem: objective size mismatch");
  const Index rows = p.n + static_cast<Index>(p.constraints.size());
  LoweredCone low;
  low.dims.orthant = rows;
  low.c = p.objective;
  low.G = Mat::Zero(rows, p.n);
  low.h = Vec::Zero(rows);
  low.G.topLeftCorner(p.n, p.n) = -Mat::Identity(p.n, p.n);
  for (std::size_t i = 0; i < p.constraints.size(); ++i) {
    const auto& con = p.constraints[i];
    if (con.a.size() != p.n) throw std::invalid_argument("LpProblem: constraint size mismatch");
    const double sgn = con.greater_equal ? -1.0 : 1.0;
    low.G.row(p.n + static_cast<Index>(i)) = sgn * con.a.transpose();
    low.h(p.n + static_cast<Index>(i)) = sgn * con.rhs;
  }
  low.objective_scale = normalize_objective(low.c);
  return low;
}

LpSolution solve_lp(const LpProblem& p, double tol) {
  const LoweredCone low = lower_lp(p);
  const ConeSolution cs = solve_cone_program(low.c, low.G, low.h, low.dims, options_for(tol));
  LpSolution sol;
  sol.status = map_status(cs.status);
  sol.iterations = cs.iterations;
  if (sol.status == SolveStatusKind::optimal) {
    sol.x = cs.x;
    sol.objective = cs.primal_objective * low.objective_scale;
  }
  return sol;
}

void dump_problem(std::ostream& os, const LoweredCone& low) {
  os << "cranbeam-cone-dump v1\n";
  os << "n " << low.c.size() << "\n";
  os << "orthant " << low.dims.orthant << "\n";
  os << "soc " << low.dims.soc.size();
  for (Index q : low.dims.soc) os << " " << q;
  os << "\npsd " << low.dims.psd.size();
  for (Index p : low.dims.psd) os << " " << p;
  os << "\nobjective-scale " << low.objective_scale << "\n";
  char buf[96];
  os << "c\n";
  for (Index i = 0; i < low.c.size(); ++i)
    if (low.c(i) != 0.0) {
      std::snprintf(buf, sizeof buf, "%lld %.17g\n", static_cast<long long>(i), low.c(i));
      os << buf;
    }
  os << "G\n";
  for (Index j = 0; j < low.G.cols(); ++j)
    for (Index i = 0; i < low.G.rows(); ++i)
      if (low.G(i, j) != 0.0) {
        std::snprintf(buf, sizeof buf, "%lld %lld %.17g\n", static_cast<long long>(i),
                      static_cast<long long>(j), low.G(i, j));
        os << buf;
      }
  os << "h\n";
  for (Index i = 0; i < low.h.size(); ++i)
    if (low.h(i) != 0.0) {
      std::snprintf(buf, sizeof buf, "%lld %.17g\n", static_cast<long long>(i), low.h(i));
      os << buf;
    }
  os << "end\n";
}

std::string dump_problem_string(const LoweredCone& low) {
  std::ostringstream ss;
  dump_problem(ss, low);
  return ss.str();
}

}  // namespace cranbeam::conic
