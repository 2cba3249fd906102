#pragma once

#include <stdexcept>
#include <string>

namespace blowup {

/// Thrown for parameter values outside the admissible region of the problem.
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class DomainKind { ball, truncated_space };
enum class Boundary { dirichlet, neumann };
enum class InitKind { gaussian, cosine_bump, constant };

std::string to_string(DomainKind kind);
std::string to_string(Boundary bc);
std::string to_string(InitKind kind);

/// Radially symmetric initial profiles for u and v.
///
/// gaussian:    A (g(r) - g(R)) / (1 - g(R)),  g(r) = exp(-(r/width)^2), Dirichlet
///              ball only; otherwise A g(r).
/// cosine_bump: A cos^2(pi r / (2 width)) for r <= width, 0 beyond.
/// constant:    A everywhere (Neumann only).
struct InitSpec {
  InitKind kind = InitKind::gaussian;
  double amplitude_u = 20.0;
  double amplitude_v = 20.0;
  double width = 0.3;
};

struct SystemParams {
  double p1 = 2.0;
  double p2 = 2.0;
  double q1 = 1.5;
  double q2 = 1.5;
  int n = 1;
  DomainKind domain = DomainKind::ball;
  double radius = 1.0;
  Boundary boundary = Boundary::dirichlet;
  InitSpec init;

  /// Throws ParameterError naming the violated constraint.
  void validate() const;
};

struct Exponents {
  double alpha = 0.0;
  double beta = 0.0;
  double mu1 = 0.0;
  double mu2 = 0.0;
  double theta1 = 0.0;  // power applied to |grad u| in M_u
  double theta2 = 0.0;  // power applied to |grad v| in M_v
  double q1_bound = 0.0;
  double q2_bound = 0.0;
  bool cond_fujita = false;
  bool cond_q = false;
};

struct HypothesisReport {
  Exponents exps;
  bool cond_fujita = false;
  bool cond_q = false;
  double margin_q1 = 0.0;       // q1_bound - q1
  double margin_q2 = 0.0;       // q2_bound - q2
  double margin_fujita = 0.0;   // max(alpha, beta) - n/2

  bool all_hold() const { return cond_fujita && cond_q; }
};

Exponents compute_exponents(const SystemParams& params);
HypothesisReport check_theorem_hypotheses(const SystemParams& params);

/// Blow-up time of u' = v^p1, v' = u^p2 from (a_u, a_v). Closed form when
/// the data are symmetric, otherwise quadrature along the first integral
/// u^{p2+1}/(p2+1) - v^{p1+1}/(p1+1) = const.
double ode_blowup_time(double p1, double p2, double a_u, double a_v);

}  // namespace blowup
