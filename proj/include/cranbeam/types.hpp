// Common dense linear-algebra aliases used across the library.
#pragma once

#include <complex>
#include <Eigen/Dense>

namespace cranbeam {

using Index = Eigen::Index;
using Complex = std::complex<double>;

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;
using IVec = Eigen::VectorXi;
using IMat = Eigen::MatrixXi;
using Vec2 = Eigen::Vector2d;

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double lin) { return 10.0 * std::log10(lin); }
inline double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }
inline double watts_to_dbm(double w) { return 30.0 + 10.0 * std::log10(w); }

}  // namespace cranbeam
