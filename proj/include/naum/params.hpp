#ifndef NAUM_PARAMS_HPP
#define NAUM_PARAMS_HPP

#include <algorithm>
#include <cmath>
#include <string>

#include "errors.hpp"

namespace naum {

// How the factor subproblems are (inexactly) minimized.
enum class Scheme { Proximal, ProxLinear, HierarchicalProx };

inline const char* to_string(Scheme s) {
  switch (s) {
    case Scheme::Proximal: return "prox";
    case Scheme::ProxLinear: return "proxlin";
    case Scheme::HierarchicalProx: return "hier";
  }
  return "?";
}

inline Scheme parse_scheme(const std::string& name) {
  if (name == "prox") return Scheme::Proximal;
  if (name == "proxlin") return Scheme::ProxLinear;
  if (name == "hier") return Scheme::HierarchicalProx;
  throw InvalidParameter("unknown scheme '" + name + "' (expected prox, proxlin or hier)");
}

// Solver parameters. alpha is free (not 0 or 1); beta is tied to it by
// 1/alpha + 1/beta = 1, and gamma, rho are the derived curvature constants
// used by the line search bounds:
//   gamma = max{0, -alpha, -(alpha + beta)}
//   rho   = max{1, alpha^2 / (alpha + beta)^2}
struct SolverParams {
  double alpha = 0.0;
  double beta = 0.0;
  double gamma = 0.0;
  double rho = 1.0;

  double tau = 4.0;        // step growth factor in the line search
  double c = 1e-4;         // sufficient decrease constant
  int window = 3;          // history length N of the non-monotone acceptance
  double mu_min = 1.0;
  double sigma_min = 1.0;
  double sigma_max = 1e6;  // cap on the initial sigma of each line search

  Scheme scheme_x = Scheme::HierarchicalProx;
  Scheme scheme_y = Scheme::HierarchicalProx;

  void validate() const {
    if (!std::isfinite(alpha) || alpha == 0.0 || alpha == 1.0)
      throw InvalidParameter("params: alpha must be finite and not 0 or 1");
    if (!std::isfinite(beta) || beta == 0.0)
      throw InvalidParameter("params: beta must be finite and nonzero");
    if (std::abs(1.0 / alpha + 1.0 / beta - 1.0) > 1e-12)
      throw InvalidParameter("params: 1/alpha + 1/beta must equal 1");
    const double apb = alpha + beta;
    if (apb == 0.0) throw InvalidParameter("params: alpha + beta must be nonzero");
    const double want_gamma = std::max({0.0, -alpha, -apb});
    if (std::abs(gamma - want_gamma) > 1e-12 * std::max(1.0, std::abs(want_gamma)))
      throw InvalidParameter("params: gamma does not match its defining maximum");
    const double want_rho = std::max(1.0, (alpha / apb) * (alpha / apb));
    if (std::abs(rho - want_rho) > 1e-12 * std::max(1.0, want_rho))
      throw InvalidParameter("params: rho does not match its defining maximum");
    if (!(tau > 1.0)) throw InvalidParameter("params: tau must exceed 1");
    if (!(c > 0.0)) throw InvalidParameter("params: c must be positive");
    if (window < 0) throw InvalidParameter("params: window must be >= 0");
    if (!(mu_min > 0.0)) throw InvalidParameter("params: mu_min must be positive");
    if (!(sigma_min > 0.0) || !(sigma_min <= sigma_max))
      throw InvalidParameter("params: need 0 < sigma_min <= sigma_max");
  }
};

inline SolverParams derive_params(double alpha) {
  if (!std::isfinite(alpha) || alpha == 0.0 || alpha == 1.0)
    throw InvalidParameter("derive_params: alpha must be finite and not 0 or 1");
  SolverParams p;
  p.alpha = alpha;
  p.beta = alpha / (alpha - 1.0);
  const double apb = p.alpha + p.beta;
  p.gamma = std::max({0.0, -alpha, -apb});
  p.rho = std::max(1.0, (alpha / apb) * (alpha / apb));
  p.validate();
  return p;
}

}  // namespace naum

#endif
