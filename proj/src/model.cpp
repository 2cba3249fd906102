#include "blowup/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/quadrature/exp_sinh.hpp>

namespace blowup {

std::string to_string(DomainKind kind) {
  return kind == DomainKind::ball ? "ball" : "truncated-space";
}

std::string to_string(Boundary bc) {
  return bc == Boundary::dirichlet ? "dirichlet" : "neumann";
}

std::string to_string(InitKind kind) {
  switch (kind) {
    case InitKind::gaussian:
      return "gaussian";
    case InitKind::cosine_bump:
      return "cosine_bump";
    case InitKind::constant:
      return "constant";
  }
  return "?";
}

void SystemParams::validate() const {
  auto finite = [](double x) { return std::isfinite(x); };
  if (!finite(p1) || !finite(p2) || !(p1 > 1.0) || !(p2 > 1.0))
    throw ParameterError("p1 and p2 must lie in (1,inf) (p_1,p_2∈(1,∞))");
  if (!(q1 > 1.0 && q1 <= 2.0))
    throw ParameterError("q1 must lie in (1,2] (q_1,q_2∈(1,2])");
  if (!(q2 > 1.0 && q2 <= 2.0))
    throw ParameterError("q2 must lie in (1,2] (q_1,q_2∈(1,2])");
  if (n < 1) throw ParameterError("n must be >= 1");
  if (!finite(radius) || !(radius > 0.0)) throw ParameterError("radius must be > 0");
  if (boundary == Boundary::neumann && domain != DomainKind::truncated_space)
    throw ParameterError("neumann boundary is only available in truncated-space mode");
  if (!(init.amplitude_u >= 0.0) || !(init.amplitude_v >= 0.0) || !finite(init.amplitude_u) ||
      !finite(init.amplitude_v))
    throw ParameterError("initial amplitudes must be finite and >= 0 (u_0,v_0 ≥ 0)");
  if (init.kind == InitKind::constant) {
    if (boundary != Boundary::neumann)
      throw ParameterError("constant initial data requires the neumann boundary");
  } else {
    if (!finite(init.width) || !(init.width > 0.0)) throw ParameterError("init width must be > 0");
    if (init.kind == InitKind::cosine_bump && boundary == Boundary::dirichlet &&
        init.width > radius)
      throw ParameterError("cosine_bump width must not exceed the radius under dirichlet data");
  }
}

Exponents compute_exponents(const SystemParams& params) {
  const double p1 = params.p1;
  const double p2 = params.p2;
  const double denom = p1 * p2 - 1.0;
  if (!(denom > 0.0) || !std::isfinite(denom))
    throw ParameterError("p1*p2 must exceed 1");

  Exponents e;
  e.alpha = (p1 + 1.0) / denom;
  e.beta = (p2 + 1.0) / denom;
  e.theta1 = 2.0 * (p1 + 1.0) / (p1 * p2 + 2.0 * p1 + 1.0);
  e.theta2 = 2.0 * (p2 + 1.0) / (p1 * p2 + 2.0 * p2 + 1.0);
  e.mu1 = 2.0 * e.alpha + 2.0 - (2.0 * e.alpha + 1.0) * params.q1;
  e.mu2 = 2.0 * e.beta + 2.0 - (2.0 * e.beta + 1.0) * params.q2;
  e.q1_bound = (2.0 * e.alpha + 2.0) / (2.0 * e.alpha + 1.0);
  e.q2_bound = (2.0 * e.beta + 2.0) / (2.0 * e.beta + 1.0);
  e.cond_fujita = std::max(e.alpha, e.beta) >= 0.5 * params.n;
  e.cond_q = params.q1 > 1.0 && params.q1 < e.q1_bound && params.q2 > 1.0 &&
             params.q2 < e.q2_bound;
  return e;
}

HypothesisReport check_theorem_hypotheses(const SystemParams& params) {
  HypothesisReport r;
  r.exps = compute_exponents(params);
  r.cond_fujita = r.exps.cond_fujita;
  r.cond_q = r.exps.cond_q;
  r.margin_q1 = r.exps.q1_bound - params.q1;
  r.margin_q2 = r.exps.q2_bound - params.q2;
  r.margin_fujita = std::max(r.exps.alpha, r.exps.beta) - 0.5 * params.n;
  return r;
}

double ode_blowup_time(double p1, double p2, double a_u, double a_v) {
  if (!(p1 > 0.0 && p2 > 0.0) || !(p1 * p2 > 1.0)) throw ParameterError("p1*p2 must exceed 1");
  if (!(a_u >= 0.0 && a_v >= 0.0) || !(a_u > 0.0 || a_v > 0.0))
    throw ParameterError("ODE data must be >= 0 and not both zero");
  if (p1 == p2 && a_u == a_v) return std::pow(a_u, 1.0 - p1) / (p1 - 1.0);
  // integrate in whichever component starts positive
  if (a_u == 0.0) std::swap(p1, p2), std::swap(a_u, a_v);
  // v(u)^{p1+1} = (p1+1) (u^{m} - a_u^{m}) / m + a_v^{p1+1}, m = p2 + 1, along
  // the first integral; T = int_{a_u}^inf du / v^p1. The substitution
  // u = a_u + s^{p1+1} removes the endpoint singularity when a_v = 0.
  const double m = p2 + 1.0;
  const double k = p1 + 1.0;
  const double lead = k * std::pow(a_u, p2);  // v^k ~ lead x near x = 0 when a_v = 0
  auto f = [&](double s) {
    const double x = std::pow(s, k);
    const double g = k * std::pow(a_u, m) * std::expm1(m * std::log1p(x / a_u)) / m +
                     std::pow(a_v, k);
    if (!(g > 0.0)) return k / std::pow(lead, p1 / k);
    if (!std::isfinite(g)) return 0.0;
    return k * std::pow(s, p1) / std::pow(g, p1 / k);
  };
  boost::math::quadrature::exp_sinh<double> integrator;
  return integrator.integrate(f, 0.0, std::numeric_limits<double>::infinity(), 1e-12);
}

}  // namespace blowup
