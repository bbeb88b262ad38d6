#include "cranbeam/cone_solver.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>

namespace cranbeam::conic {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct SocBlock {
  Index off, dim;
};
struct PsdBlock {
  Index off, p, len;
};

// Row layout of the product cone within the stacked slack vector.
struct Layout {
  Index l = 0;
  std::vector<SocBlock> soc;
  std::vector<PsdBlock> psd;
  Index m = 0;

  explicit Layout(const ConeDims& dims) {
    l = dims.orthant;
    Index off = l;
    for (Index q : dims.soc) {
      soc.push_back({off, q});
      off += q;
    }
    for (Index p : dims.psd) {
      const Index len = p * (p + 1) / 2;
      psd.push_back({off, p, len});
      off += len;
    }
    m = off;
  }
};

Index svec_diag_index(Index p, Index j) { return j * p - j * (j - 1) / 2; }

// Square root factor F with F F' = A for symmetric positive (semi)definite A.
// Cholesky when possible, eigenvalue flooring as fallback near the boundary.
Mat psd_factor(const Mat& a, bool& ok) {
  Eigen::LLT<Mat> llt(a);
  if (llt.info() == Eigen::Success) {
    ok = true;
    return llt.matrixL();
  }
  Eigen::SelfAdjointEigenSolver<Mat> eig(a);
  if (eig.info() != Eigen::Success) {
    ok = false;
    return Mat::Identity(a.rows(), a.cols());
  }
  const double floor = std::max(eig.eigenvalues().maxCoeff(), 1.0) * 1e-14;
  ok = eig.eigenvalues().minCoeff() > -floor * 10.0;
  Vec d = eig.eigenvalues().cwiseMax(floor).cwiseSqrt();
  return eig.eigenvectors() * d.asDiagonal();
}

struct Scaling {
  Vec orth_w2;      // s/z        (W'W diagonal)
  Vec orth_w2inv;   // z/s
  struct Soc {
    double eta2 = 1.0;
    Mat H, Hinv;
  };
  std::vector<Soc> soc;
  struct Psd {
    Mat R, Rti;     // Rti = R^{-T}
    Mat Wnt, Winv;  // R R' and its inverse
    Vec lam;        // NT-scaled eigenvalues (diagonal of the scaled point)
  };
  std::vector<Psd> psd;
  Vec lambda;  // scaled point, full m
};

bool update_scaling(const Layout& lay, const Vec& s, const Vec& z, Scaling& w) {
  w.lambda.resize(lay.m);
  // Orthant
  if (lay.l > 0) {
    const auto sl = s.head(lay.l).array();
    const auto zl = z.head(lay.l).array();
    if ((sl <= 0.0).any() || (zl <= 0.0).any()) return false;
    w.orth_w2 = (sl / zl).matrix();
    w.orth_w2inv = (zl / sl).matrix();
    w.lambda.head(lay.l) = (sl * zl).sqrt().matrix();
  }
  // Second-order cones
  w.soc.assign(lay.soc.size(), {});
  for (std::size_t i = 0; i < lay.soc.size(); ++i) {
    const auto [off, q] = lay.soc[i];
    const Vec sk = s.segment(off, q), zk = z.segment(off, q);
    const double sres = sk(0) * sk(0) - sk.tail(q - 1).squaredNorm();
    const double zres = zk(0) * zk(0) - zk.tail(q - 1).squaredNorm();
    if (sres <= 0.0 || zres <= 0.0 || sk(0) <= 0.0 || zk(0) <= 0.0) return false;
    const Vec sbar = sk / std::sqrt(sres);
    const Vec zbar = zk / std::sqrt(zres);
    const double gamma = std::sqrt(0.5 * (1.0 + sbar.dot(zbar)));
    Vec wbar(q);
    wbar(0) = (sbar(0) + zbar(0)) / (2.0 * gamma);
    wbar.tail(q - 1) = (sbar.tail(q - 1) - zbar.tail(q - 1)) / (2.0 * gamma);
    auto& blk = w.soc[i];
    blk.eta2 = std::sqrt(sres / zres);
    blk.H.setIdentity(q, q);
    blk.H(0, 0) = wbar(0);
    blk.H.col(0).tail(q - 1) = wbar.tail(q - 1);
    blk.H.row(0).tail(q - 1) = wbar.tail(q - 1).transpose();
    blk.H.bottomRightCorner(q - 1, q - 1) +=
        wbar.tail(q - 1) * wbar.tail(q - 1).transpose() / (1.0 + wbar(0));
    blk.Hinv = blk.H;
    blk.Hinv.col(0).tail(q - 1) *= -1.0;
    blk.Hinv.row(0).tail(q - 1) *= -1.0;
    w.lambda.segment(off, q) = std::sqrt(blk.eta2) * (blk.H * zk);
  }
  // PSD blocks
  w.psd.assign(lay.psd.size(), {});
  for (std::size_t i = 0; i < lay.psd.size(); ++i) {
    const auto [off, p, len] = lay.psd[i];
    const Mat S = smat(s.segment(off, len), p);
    const Mat Z = smat(z.segment(off, len), p);
    bool oks = false, okz = false;
    const Mat Fs = psd_factor(S, oks);
    const Mat Fz = psd_factor(Z, okz);
    if (!oks || !okz) return false;
    Eigen::JacobiSVD<Mat> svd(Fz.transpose() * Fs, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Vec sig = svd.singularValues();
    if (sig.minCoeff() <= 0.0) return false;
    auto& blk = w.psd[i];
    const Vec isq = sig.cwiseSqrt().cwiseInverse();
    blk.R = Fs * svd.matrixV() * isq.asDiagonal();
    blk.Rti = Fz * svd.matrixU() * isq.asDiagonal();
    blk.Wnt = blk.R * blk.R.transpose();
    blk.Winv = blk.Rti * blk.Rti.transpose();
    blk.lam = sig;
    Vec lam_svec = Vec::Zero(len);
    for (Index j = 0; j < p; ++j) lam_svec(svec_diag_index(p, j)) = sig(j);
    w.lambda.segment(off, len) = lam_svec;
  }
  return true;
}

enum class WOp { w, wt, winv_t, w2, w2inv };

// Applies the chosen scaling operator blockwise.
Vec apply_scaling(const Layout& lay, const Scaling& w, WOp op, const Vec& u) {
  Vec out(lay.m);
  if (lay.l > 0) {
    switch (op) {
      case WOp::w:
      case WOp::wt:
        out.head(lay.l) = w.orth_w2.cwiseSqrt().cwiseProduct(u.head(lay.l));
        break;
      case WOp::winv_t:
        out.head(lay.l) = u.head(lay.l).cwiseQuotient(w.orth_w2.cwiseSqrt());
        break;
      case WOp::w2:
        out.head(lay.l) = w.orth_w2.cwiseProduct(u.head(lay.l));
        break;
      case WOp::w2inv:
        out.head(lay.l) = w.orth_w2inv.cwiseProduct(u.head(lay.l));
        break;
    }
  }
  for (std::size_t i = 0; i < lay.soc.size(); ++i) {
    const auto [off, q] = lay.soc[i];
    const auto& blk = w.soc[i];
    const double eta = std::sqrt(blk.eta2);
    const auto uk = u.segment(off, q);
    switch (op) {
      case WOp::w:
      case WOp::wt:
        out.segment(off, q) = eta * (blk.H * uk);
        break;
      case WOp::winv_t:
        out.segment(off, q) = (blk.Hinv * uk) / eta;
        break;
      case WOp::w2:
        out.segment(off, q) = blk.eta2 * (blk.H * (blk.H * uk));
        break;
      case WOp::w2inv:
        out.segment(off, q) = (blk.Hinv * (blk.Hinv * uk)) / blk.eta2;
        break;
    }
  }
  for (std::size_t i = 0; i < lay.psd.size(); ++i) {
    const auto [off, p, len] = lay.psd[i];
    const auto& blk = w.psd[i];
    const Mat U = smat(u.segment(off, len), p);
    Mat V;
    switch (op) {
      case WOp::w: V = blk.R.transpose() * U * blk.R; break;
      case WOp::wt: V = blk.R * U * blk.R.transpose(); break;
      case WOp::winv_t: V = blk.Rti.transpose() * U * blk.Rti; break;
      case WOp::w2: V = blk.Wnt * U * blk.Wnt; break;
      case WOp::w2inv: V = blk.Winv * U * blk.Winv; break;
    }
    out.segment(off, len) = svec(0.5 * (V + V.transpose()));
  }
  return out;
}

// Jordan product in the scaled space.
Vec jordan(const Layout& lay, const Vec& u, const Vec& v) {
  Vec out(lay.m);
  if (lay.l > 0) out.head(lay.l) = u.head(lay.l).cwiseProduct(v.head(lay.l));
  for (const auto& [off, q] : lay.soc) {
    const auto uk = u.segment(off, q), vk = v.segment(off, q);
    out(off) = uk.dot(vk);
    out.segment(off + 1, q - 1) = uk(0) * vk.tail(q - 1) + vk(0) * uk.tail(q - 1);
  }
  for (const auto& [off, p, len] : lay.psd) {
    const Mat U = smat(u.segment(off, len), p);
    const Mat V = smat(v.segment(off, len), p);
    out.segment(off, len) = svec(0.5 * (U * V + V * U));
  }
  return out;
}

// Solves lambda o u = v for u.
Vec jordan_div_lambda(const Layout& lay, const Scaling& w, const Vec& v) {
  Vec out(lay.m);
  if (lay.l > 0) out.head(lay.l) = v.head(lay.l).cwiseQuotient(w.lambda.head(lay.l));
  for (std::size_t i = 0; i < lay.soc.size(); ++i) {
    const auto [off, q] = lay.soc[i];
    const auto lam = w.lambda.segment(off, q);
    const auto vk = v.segment(off, q);
    const double det = lam(0) * lam(0) - lam.tail(q - 1).squaredNorm();
    const double u0 = (lam(0) * vk(0) - lam.tail(q - 1).dot(vk.tail(q - 1))) / det;
    out(off) = u0;
    out.segment(off + 1, q - 1) = (vk.tail(q - 1) - u0 * lam.tail(q - 1)) / lam(0);
  }
  for (std::size_t i = 0; i < lay.psd.size(); ++i) {
    const auto [off, p, len] = lay.psd[i];
    const Vec& lam = w.psd[i].lam;
    const Mat V = smat(v.segment(off, len), p);
    Mat U(p, p);
    for (Index a = 0; a < p; ++a)
      for (Index b = 0; b < p; ++b) U(a, b) = 2.0 * V(a, b) / (lam(a) + lam(b));
    out.segment(off, len) = svec(U);
  }
  return out;
}

Vec cone_identity(const Layout& lay) {
  Vec e = Vec::Zero(lay.m);
  e.head(lay.l).setOnes();
  for (const auto& [off, q] : lay.soc) e(off) = 1.0;
  for (const auto& [off, p, len] : lay.psd)
    for (Index j = 0; j < p; ++j) e(off + svec_diag_index(p, j)) = 1.0;
  return e;
}

// sup { t : v + t*dir stays in the cone }, for v strictly interior.
double max_step(const Layout& lay, const Vec& v, const Vec& dir) {
  double t = kInf;
  for (Index i = 0; i < lay.l; ++i)
    if (dir(i) < 0.0) t = std::min(t, -v(i) / dir(i));
  for (const auto& [off, q] : lay.soc) {
    const auto vk = v.segment(off, q), dk = dir.segment(off, q);
    const double a = dk(0) * dk(0) - dk.tail(q - 1).squaredNorm();
    const double b = 2.0 * (vk(0) * dk(0) - vk.tail(q - 1).dot(dk.tail(q - 1)));
    const double cq = vk(0) * vk(0) - vk.tail(q - 1).squaredNorm();
    // Smallest positive root of a t^2 + b t + c = 0 given c > 0.
    double root = kInf;
    if (std::abs(a) < 1e-300) {
      if (b < 0.0) root = -cq / b;
    } else {
      const double disc = b * b - 4.0 * a * cq;
      if (disc >= 0.0) {
        const double sq = std::sqrt(disc);
        const double qn = -0.5 * (b + (b >= 0.0 ? sq : -sq));
        double r1 = qn / a, r2 = (qn != 0.0) ? cq / qn : kInf;
        if (r1 > r2) std::swap(r1, r2);
        if (a < 0.0)
          root = r2 > 0.0 ? r2 : kInf;  // starts inside the parabola's cap
        else if (r1 > 0.0)
          root = r1;
      }
    }
    t = std::min(t, root);
  }
  for (const auto& [off, p, len] : lay.psd) {
    const Mat V = smat(v.segment(off, len), p);
    const Mat D = smat(dir.segment(off, len), p);
    Eigen::LLT<Mat> llt(V);
    Mat M;
    if (llt.info() == Eigen::Success) {
      const Mat Li = llt.matrixL().solve(Mat::Identity(p, p));
      M = Li * D * Li.transpose();
    } else {
      Eigen::SelfAdjointEigenSolver<Mat> ev(V);
      const double floor = std::max(1e-300, ev.eigenvalues().maxCoeff() * 1e-16);
      const Vec inv_sqrt = ev.eigenvalues().cwiseMax(floor).cwiseSqrt().cwiseInverse();
      const Mat Vi = ev.eigenvectors() * inv_sqrt.asDiagonal();
      M = Vi.transpose() * D * Vi;
    }
    Eigen::SelfAdjointEigenSolver<Mat> eig(0.5 * (M + M.transpose()),
                                           Eigen::EigenvaluesOnly);
    const double lmin = eig.eigenvalues().minCoeff();
    if (lmin < 0.0) t = std::min(t, -1.0 / lmin);
  }
  return t;
}

// Largest shift needed to put v strictly inside the cone (negative: interior).
double interior_deficiency(const Layout& lay, const Vec& v) {
  double a = -kInf;
  if (lay.l > 0) a = std::max(a, -v.head(lay.l).minCoeff());
  for (const auto& [off, q] : lay.soc)
    a = std::max(a, v.segment(off + 1, q - 1).norm() - v(off));
  for (const auto& [off, p, len] : lay.psd) {
    Eigen::SelfAdjointEigenSolver<Mat> eig(smat(v.segment(off, len), p), Eigen::EigenvaluesOnly);
    a = std::max(a, -eig.eigenvalues().minCoeff());
  }
  return a;
}

// Column support of each cone block of G, used to keep the Schur-complement
// assembly proportional to the actual coupling structure.
struct Support {
  std::vector<std::vector<Index>> orth_rows;  // per orthant row
  std::vector<std::vector<Index>> soc;
  std::vector<std::vector<Index>> psd;
};

std::vector<Index> column_support(const Mat& G, Index row0, Index nrows) {
  std::vector<Index> cols;
  for (Index j = 0; j < G.cols(); ++j) {
    bool nz = false;
    for (Index r = row0; r < row0 + nrows && !nz; ++r) nz = G(r, j) != 0.0;
    if (nz) cols.push_back(j);
  }
  return cols;
}

Support build_support(const Layout& lay, const Mat& G) {
  Support sup;
  sup.orth_rows.resize(lay.l);
  for (Index r = 0; r < lay.l; ++r) sup.orth_rows[r] = column_support(G, r, 1);
  for (const auto& [off, q] : lay.soc) sup.soc.push_back(column_support(G, off, q));
  for (const auto& [off, p, len] : lay.psd) sup.psd.push_back(column_support(G, off, len));
  return sup;
}

// S = G' (W'W)^{-1} G accumulated per cone block over its column support.
Mat build_schur(const Layout& lay, const Scaling& w, const Mat& G, const Support& sup) {
  const Index n = G.cols();
  Mat S = Mat::Zero(n, n);
  for (Index r = 0; r < lay.l; ++r) {
    const double wi = w.orth_w2inv(r);
    const auto& cols = sup.orth_rows[r];
    for (std::size_t a = 0; a < cols.size(); ++a) {
      const double ga = G(r, cols[a]) * wi;
      for (std::size_t b = a; b < cols.size(); ++b)
        S(cols[a], cols[b]) += ga * G(r, cols[b]);
    }
  }
  for (std::size_t i = 0; i < lay.soc.size(); ++i) {
    const auto [off, q] = lay.soc[i];
    const auto& cols = sup.soc[i];
    if (cols.empty()) continue;
    Mat Gsub(q, static_cast<Index>(cols.size()));
    for (std::size_t a = 0; a < cols.size(); ++a) Gsub.col(a) = G.block(off, cols[a], q, 1);
    const Mat HinvG = w.soc[i].Hinv * Gsub;
    const Mat contrib = (HinvG.transpose() * HinvG) / w.soc[i].eta2;
    for (std::size_t a = 0; a < cols.size(); ++a)
      for (std::size_t b = a; b < cols.size(); ++b)
        S(cols[a], cols[b]) += (cols[a] <= cols[b]) ? contrib(a, b) : contrib(b, a);
  }
  for (std::size_t i = 0; i < lay.psd.size(); ++i) {
    const auto [off, p, len] = lay.psd[i];
    const auto& cols = sup.psd[i];
    if (cols.empty()) continue;
    const Mat& Winv = w.psd[i].Winv;
    Mat WG(len, static_cast<Index>(cols.size()));
    for (std::size_t a = 0; a < cols.size(); ++a) {
      const Mat U = smat(G.col(cols[a]).segment(off, len), p);
      WG.col(a) = svec(Winv * U * Winv);
    }
    Mat Gsub(len, static_cast<Index>(cols.size()));
    for (std::size_t a = 0; a < cols.size(); ++a) Gsub.col(a) = G.col(cols[a]).segment(off, len);
    const Mat contrib = Gsub.transpose() * WG;
    for (std::size_t a = 0; a < cols.size(); ++a)
      for (std::size_t b = a; b < cols.size(); ++b)
        S(cols[a], cols[b]) += 0.5 * (contrib(a, b) + contrib(b, a));
  }
  // Fill the lower triangle by symmetry. Off-support pairs stayed zero.
  for (Index a = 0; a < n; ++a)
    for (Index b = 0; b < a; ++b) S(a, b) = S(b, a);
  return S;
}

struct KktSolver {
  const Layout& lay;
  const Scaling& w;
  const Mat& G;
  Eigen::LLT<Mat> llt;
  bool ok = false;

  KktSolver(const Layout& lay_, const Scaling& w_, const Mat& G_, const Support& sup)
      : lay(lay_), w(w_), G(G_) {
    Mat S = build_schur(lay, w, G, sup);
    double reg = 0.0;
    const double scale = std::max(1.0, S.diagonal().cwiseAbs().maxCoeff());
    for (int attempt = 0; attempt < 3; ++attempt) {
      llt.compute(S + reg * Mat::Identity(S.rows(), S.cols()));
      if (llt.info() == Eigen::Success) {
        ok = true;
        return;
      }
      reg = (reg == 0.0) ? 1e-13 * scale : reg * 1e3;
    }
  }

  // Solves [0 G'; G -W'W] [ux; uz] = [bx; bz] with iterative refinement; the
  // Schur complement turns severely ill-conditioned near convergence and the
  // refinement recovers the lost digits.
  void solve(const Vec& bx, const Vec& bz, Vec& ux, Vec& uz) const {
    auto once = [&](const Vec& fx, const Vec& fz, Vec& ox, Vec& oz) {
      const Vec t = apply_scaling(lay, w, WOp::w2inv, fz);
      ox = llt.solve(fx + G.transpose() * t);
      oz = apply_scaling(lay, w, WOp::w2inv, G * ox - fz);
    };
    once(bx, bz, ux, uz);
    const double scale = std::max({1.0, bx.lpNorm<Eigen::Infinity>(),
                                   bz.lpNorm<Eigen::Infinity>()});
    for (int pass = 0; pass < 6; ++pass) {
      const Vec r1 = bx - G.transpose() * uz;
      const Vec r2 = bz - (G * ux - apply_scaling(lay, w, WOp::w2, uz));
      if (std::max(r1.lpNorm<Eigen::Infinity>(), r2.lpNorm<Eigen::Infinity>()) <
          1e-13 * scale)
        break;
      Vec cx, cz;
      once(r1, r2, cx, cz);
      ux += cx;
      uz += cz;
    }
  }
};

}  // namespace

Vec svec(const Mat& S) {
  const Index p = S.rows();
  Vec v(p * (p + 1) / 2);
  Index idx = 0;
  for (Index j = 0; j < p; ++j) {
    v(idx++) = S(j, j);
    for (Index i = j + 1; i < p; ++i) v(idx++) = std::numbers::sqrt2 * S(i, j);
  }
  return v;
}

Mat smat(const Vec& v, Index p) {
  Mat S(p, p);
  Index idx = 0;
  for (Index j = 0; j < p; ++j) {
    S(j, j) = v(idx++);
    for (Index i = j + 1; i < p; ++i) {
      const double val = v(idx++) / std::numbers::sqrt2;
      S(i, j) = val;
      S(j, i) = val;
    }
  }
  return S;
}

namespace {

// Ruiz equilibration of G. Row scales are kept uniform inside each SOC/PSD
// block so the cone geometry is preserved; columns rescale the variables.
struct Equilibration {
  Vec row;  // m
  Vec col;  // n
};

Equilibration equilibrate(Mat& G, Vec& c, Vec& h, const Layout& lay) {
  const Index m = G.rows(), n = G.cols();
  Equilibration eq{Vec::Ones(m), Vec::Ones(n)};
  for (int pass = 0; pass < 3; ++pass) {
    Vec rmax = Vec::Zero(m), cmax = Vec::Zero(n);
    for (Index j = 0; j < n; ++j)
      for (Index i = 0; i < m; ++i) {
        const double a = std::abs(G(i, j));
        rmax(i) = std::max(rmax(i), a);
        cmax(j) = std::max(cmax(j), a);
      }
    for (const auto& [off, q] : lay.soc)
      rmax.segment(off, q).setConstant(rmax.segment(off, q).maxCoeff());
    for (const auto& [off, p, len] : lay.psd)
      rmax.segment(off, len).setConstant(rmax.segment(off, len).maxCoeff());
    auto factor = [](double v) { return v > 1e-12 ? 1.0 / std::sqrt(v) : 1.0; };
    const Vec rs = rmax.unaryExpr(factor);
    const Vec cs = cmax.unaryExpr(factor);
    G = rs.asDiagonal() * G * cs.asDiagonal();
    eq.row = eq.row.cwiseProduct(rs);
    eq.col = eq.col.cwiseProduct(cs);
  }
  h = h.cwiseProduct(eq.row);
  c = c.cwiseProduct(eq.col);
  return eq;
}

ConeSolution solve_cone_program_scaled(const Vec& c, const Mat& G, const Vec& h,
                                       const ConeDims& dims, const ConeSolverOptions& opts);

}  // namespace

ConeSolution solve_cone_program(const Vec& c_in, const Mat& G_in, const Vec& h_in,
                                const ConeDims& dims, const ConeSolverOptions& opts) {
  Vec c = c_in;
  Mat G = G_in;
  Vec h = h_in;
  {
    const Layout lay(dims);
    if (G.rows() != lay.m || G.cols() != c.size() || h.size() != lay.m)
      throw std::invalid_argument("solve_cone_program: dimension mismatch");
    const Equilibration eq = equilibrate(G, c, h, lay);
    ConeSolution sol = solve_cone_program_scaled(c, G, h, dims, opts);
    // Map back to the original variables and recompute the objective values.
    if (sol.x.size() == c.size()) sol.x = sol.x.cwiseProduct(eq.col);
    if (sol.s.size() == lay.m) sol.s = sol.s.cwiseQuotient(eq.row);
    if (sol.z.size() == lay.m) sol.z = sol.z.cwiseProduct(eq.row);
    if (sol.status == ConeStatus::optimal) {
      sol.primal_objective = c_in.dot(sol.x);
      sol.dual_objective = -h_in.dot(sol.z);
      sol.gap = sol.s.dot(sol.z);
    }
    return sol;
  }
}

namespace {

ConeSolution solve_cone_program_scaled(const Vec& c, const Mat& G, const Vec& h,
                                       const ConeDims& dims, const ConeSolverOptions& opts) {
  ConeSolution sol;
  const Layout lay(dims);
  const Index n = c.size(), m = lay.m;

  if (m == 0) {
    sol.x = Vec::Zero(n);
    sol.status = (c.norm() == 0.0) ? ConeStatus::optimal : ConeStatus::dual_infeasible;
    return sol;
  }

  const Support sup = build_support(lay, G);
  const Vec e = cone_identity(lay);
  const double nu = static_cast<double>(dims.degree());
  const double resx0 = std::max(1.0, c.norm());
  const double resz0 = std::max(1.0, h.norm());

  // Initial point from two least-squares solves (identity scaling), shifted
  // into the cone interior.
  Vec x, s, z;
  {
    Mat M0 = G.transpose() * G;
    M0.diagonal().array() += 1e-12 * std::max(1.0, M0.diagonal().cwiseAbs().maxCoeff());
    Eigen::LDLT<Mat> ldlt(M0);
    x = ldlt.solve(G.transpose() * h);
    Vec shat = h - G * x;
    double def = interior_deficiency(lay, shat);
    s = (def < -1e-8 * std::max(1.0, shat.norm())) ? shat : (shat + (1.0 + def) * e).eval();
    Vec xd = ldlt.solve(-c);
    Vec zhat = G * xd;
    def = interior_deficiency(lay, zhat);
    z = (def < -1e-8 * std::max(1.0, zhat.norm())) ? zhat : (zhat + (1.0 + def) * e).eval();
  }
  double tau = 1.0, kappa = 1.0;

  Scaling w;

  // Best-so-far iterate; interior-point steps can degrade once the iterate is
  // at the achievable accuracy, so exits fall back to the best point seen.
  struct Best {
    Vec x, s, z;
    double tau = 1.0;
    double pres = kInf, dres = kInf, gap = kInf, relgap = kInf;
    double score = kInf;
  } best;
  int stalled = 0;
  double best_probe = kInf;

  auto load_point = [&](ConeStatus status) {
    sol.status = status;
    sol.x = best.x / best.tau;
    sol.s = best.s / best.tau;
    sol.z = best.z / best.tau;
    sol.primal_objective = c.dot(sol.x);
    sol.dual_objective = -h.dot(sol.z);
    sol.gap = sol.s.dot(sol.z);
    sol.primal_residual = best.pres;
    sol.dual_residual = best.dres;
  };

  for (int iter = 0; iter <= opts.max_iters; ++iter) {
    sol.iterations = iter;

    const Vec rx = G.transpose() * z + c * tau;
    const Vec rz = G * x + s - h * tau;
    const double cx = c.dot(x), hz = h.dot(z);
    const double rt = kappa + cx + hz;
    const double mu = (s.dot(z) + tau * kappa) / (nu + 1.0);

    const double pcost = cx / tau;
    const double dcost = -hz / tau;
    const double gap = s.dot(z) / (tau * tau);
    double relgap = kInf;
    if (pcost < 0.0)
      relgap = gap / (-pcost);
    else if (dcost > 0.0)
      relgap = gap / dcost;
    const double pres = rz.norm() / resz0 / tau;
    const double dres = rx.norm() / resx0 / tau;
    const double score = std::max({pres, dres, std::min(gap, relgap)});
    if (score < best.score) {
      best = {x, s, z, tau, pres, dres, gap, relgap, score};
    }
    // Progress also counts toward an infeasibility certificate.
    double probe = score;
    if (hz < 0.0) probe = std::min(probe, (G.transpose() * z).norm() / resx0 / (-hz));
    if (cx < 0.0) probe = std::min(probe, (G * x + s).norm() / resz0 / (-cx));
    if (probe < 0.95 * best_probe) {
      best_probe = std::min(best_probe, probe);
      stalled = 0;
    } else if (++stalled >= 12) {
      break;  // at the achievable accuracy; further steps only degrade
    }

    if (opts.verbose)
      std::printf("it %2d  pcost % .6e  dcost % .6e  gap %.2e  pres %.2e  dres %.2e  "
                  "tau %.2e  kap %.2e\n",
                  iter, pcost, dcost, gap, pres, dres, tau, kappa);

    if (pres <= opts.feastol && dres <= opts.feastol &&
        (gap <= opts.abstol || relgap <= opts.reltol)) {
      load_point(ConeStatus::optimal);
      return sol;
    }
    if (hz < 0.0) {
      const double pinfres = (G.transpose() * z).norm() / resx0 / (-hz);
      if (pinfres <= opts.feastol) {
        sol.status = ConeStatus::primal_infeasible;
        sol.z = z / (-hz);  // Farkas certificate: G'z ~ 0, h'z = -1, z in K*
        sol.x = Vec::Zero(n);
        sol.s = Vec::Zero(m);
        sol.iterations = iter;
        return sol;
      }
    }
    if (cx < 0.0) {
      const double dinfres = (G * x + s).norm() / resz0 / (-cx);
      if (dinfres <= opts.feastol) {
        sol.status = ConeStatus::dual_infeasible;
        sol.x = x / (-cx);  // unbounded ray: Gx + s = 0, c'x = -1
        sol.s = s / (-cx);
        sol.z = Vec::Zero(m);
        sol.iterations = iter;
        return sol;
      }
    }
    if (iter == opts.max_iters) break;

    if (!update_scaling(lay, s, z, w)) break;
    const KktSolver kkt(lay, w, G, sup);
    if (!kkt.ok) break;

    // Direction common to both predictor and corrector.
    Vec gx1, gz1;
    kkt.solve(-c, h, gx1, gz1);
    const double denom = c.dot(gx1) + h.dot(gz1) - kappa / tau;
    if (!(denom < 0.0) || !std::isfinite(denom)) break;

    const Vec lam_sq = jordan(lay, w.lambda, w.lambda);

    auto direction = [&](const Vec& ds_rhs, double dt_rhs, double rmul, Vec& dx, Vec& dz,
                         Vec& ds, double& dtau, double& dkappa) {
      // ds_rhs is the scaled complementarity target, dt_rhs the tau*kappa one.
      const Vec wl = jordan_div_lambda(lay, w, ds_rhs);
      const Vec bz_eff = -rmul * rz - apply_scaling(lay, w, WOp::wt, wl);
      Vec ux, uz;
      kkt.solve(-rmul * rx, bz_eff, ux, uz);
      dtau = (-rmul * rt - dt_rhs / tau - c.dot(ux) - h.dot(uz)) / denom;
      dx = ux + dtau * gx1;
      dz = uz + dtau * gz1;
      ds = apply_scaling(lay, w, WOp::wt, wl) - apply_scaling(lay, w, WOp::w2, dz);
      dkappa = (dt_rhs - kappa * dtau) / tau;
    };

    // Predictor (affine) step.
    Vec dx_a, dz_a, ds_a;
    double dtau_a, dkappa_a;
    direction(-lam_sq, -tau * kappa, 1.0, dx_a, dz_a, ds_a, dtau_a, dkappa_a);

    const Vec us_a = apply_scaling(lay, w, WOp::winv_t, ds_a);
    const Vec uz_a = apply_scaling(lay, w, WOp::w, dz_a);
    double alpha_aff = std::min(max_step(lay, w.lambda, us_a), max_step(lay, w.lambda, uz_a));
    if (dtau_a < 0.0) alpha_aff = std::min(alpha_aff, -tau / dtau_a);
    if (dkappa_a < 0.0) alpha_aff = std::min(alpha_aff, -kappa / dkappa_a);
    alpha_aff = std::min(alpha_aff, 1.0);

    const double sigma = std::pow(1.0 - alpha_aff, 3);

    // Corrector (combined) step with Mehrotra second-order term.
    const Vec corr = jordan(lay, us_a, uz_a);
    const Vec ds_rhs = sigma * mu * e - lam_sq - corr;
    const double dt_rhs = sigma * mu - tau * kappa - dtau_a * dkappa_a;
    Vec dx, dz, ds;
    double dtau, dkappa;
    direction(ds_rhs, dt_rhs, 1.0 - sigma, dx, dz, ds, dtau, dkappa);

    const Vec us = apply_scaling(lay, w, WOp::winv_t, ds);
    const Vec uz = apply_scaling(lay, w, WOp::w, dz);
    double alpha = std::min(max_step(lay, w.lambda, us), max_step(lay, w.lambda, uz));
    if (dtau < 0.0) alpha = std::min(alpha, -tau / dtau);
    if (dkappa < 0.0) alpha = std::min(alpha, -kappa / dkappa);
    alpha = std::min(1.0, opts.step_fraction * alpha);
    if (!(alpha > 1e-10)) break;

    x += alpha * dx;
    z += alpha * dz;
    s += alpha * ds;
    tau += alpha * dtau;
    kappa += alpha * dkappa;
    if (!(tau > 0.0) || !(kappa >= 0.0) || !std::isfinite(tau)) break;
  }

  // Did not formally converge: accept a mildly relaxed optimum at the best
  // iterate seen, else fail.
  if (best.pres <= 50.0 * opts.feastol && best.dres <= 50.0 * opts.feastol &&
      (best.gap <= 50.0 * opts.abstol || best.relgap <= 50.0 * opts.reltol)) {
    load_point(ConeStatus::optimal);
    return sol;
  }
  load_point(ConeStatus::numerical_failure);
  return sol;
}

}  // namespace

}  // namespace cranbeam::conic
