// Concave smooth surrogates for the block-sparsity indicator, their
// derivatives, and the smoothness-annealing schedule shared by both CCP
// solvers. All three surrogates vanish at 0, increase strictly, and approach
// the indicator as theta -> 0 (arctan saturates at pi/2 instead of 1; the
// reported costs never depend on that constant because clustering is
// re-thresholded before costing).
#pragma once

#include <cmath>
#include <optional>
#include <span>
#include <stdexcept>

namespace cranbeam {

enum class SmoothKind { Log, Exp, Arctan };

inline const char* to_string(SmoothKind k) {
  switch (k) {
    case SmoothKind::Log: return "log";
    case SmoothKind::Exp: return "exp";
    case SmoothKind::Arctan: return "arctan";
  }
  return "?";
}

struct AnnealSchedule {
  double theta0 = 1.0;
  double beta = 0.1;     // decay factor per outer stage
  double epsilon = 1e-6; // stop once the next theta would fall below this

  void validate() const {
    if (!(theta0 > 0.0) || !(beta > 0.0 && beta < 1.0) || !(epsilon > 0.0) ||
        !(theta0 > epsilon))
      throw std::invalid_argument("AnnealSchedule: require theta0 > epsilon > 0, beta in (0,1)");
  }
};

namespace detail {
template <typename T>
void check_smooth_domain(T x, T theta) {
  if (!(x >= T(0))) throw std::domain_error("f_theta: x must be >= 0");
  if (!(theta > T(0))) throw std::domain_error("f_theta: theta must be > 0");
}
}  // namespace detail

template <typename T>
T f_theta(SmoothKind kind, T x, T theta) {
  detail::check_smooth_domain(x, theta);
  switch (kind) {
    case SmoothKind::Log:
      return std::log(x / theta + T(1)) / std::log(T(1) / theta + T(1));
    case SmoothKind::Exp:
      return T(1) - std::exp(-x / theta);
    case SmoothKind::Arctan:
      return std::atan(x / theta);
  }
  return T(0);
}

template <typename T>
T grad_f_theta(SmoothKind kind, T x, T theta) {
  detail::check_smooth_domain(x, theta);
  switch (kind) {
    case SmoothKind::Log:
      return T(1) / (std::log(T(1) / theta + T(1)) * (x + theta));
    case SmoothKind::Exp:
      return std::exp(-x / theta) / theta;
    case SmoothKind::Arctan:
      return theta / (theta * theta + x * x);
  }
  return T(0);
}

// theta0 rule: the largest per-(group, BS) block power of the initialization
// solution. An all-zero start falls back to 1.
inline double theta_init(std::span<const double> block_powers) {
  if (block_powers.empty()) throw std::invalid_argument("theta_init: empty power list");
  double m = 0.0;
  for (double p : block_powers) m = std::max(m, p);
  return m > 0.0 ? m : 1.0;
}

// One annealing step: beta * theta, or nothing once that would cross epsilon.
inline std::optional<double> theta_next(double theta, const AnnealSchedule& sched) {
  const double next = sched.beta * theta;
  if (next < sched.epsilon) return std::nullopt;
  return next;
}

}  // namespace cranbeam
