#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "blowup/grid.hpp"
#include "blowup/model.hpp"

namespace blowup {

/// Raised when the explicit scheme produces negativity beyond round-off,
/// which means the step controller or stencil is broken.
class IntegrationFault : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SolverConfig {
  double safety = 0.4;        // diffusive CFL factor in dt <= safety h^2 / (2n)
  double reaction_cap = 0.05; // max relative growth of a sup per step
  double m_stop = 1e8;
  double t_max = 10.0;
  int record_every = 50;

  void validate() const;
};

enum class StopReason { threshold, t_max, nonfinite, truncation_contaminated };
std::string to_string(StopReason reason);

struct SupNormSeries {
  std::vector<double> t;
  std::vector<double> M_u;
  std::vector<double> M_v;
  std::vector<double> max_u;
  std::vector<double> max_v;
  std::vector<double> max_grad_u;
  std::vector<double> max_grad_v;
  std::vector<double> argmax_r_u;

  std::size_t size() const { return t.size(); }
  bool empty() const { return t.empty(); }
  void push(double t_, double mu, double mv, double mxu, double mxv, double gu, double gv,
            double ru);
};

struct Snapshot {
  FieldState state;
  double M_u = 0.0;         // running sup at the snapshot time
  double M_v = 0.0;
  int doubling_level = -1;  // k for the frame taken when M_u first reached 2^k M_u(0); -1 for stride frames
};

struct RunResult {
  SupNormSeries series;
  std::vector<Snapshot> snapshots;
  StopReason stop_reason = StopReason::t_max;
  std::size_t steps_taken = 0;
  FieldState final_state;
};

/// One forward-Euler step of the coupled system. dt is the smaller of the
/// diffusive limit and the reaction-growth limit, halved until no channel's
/// instantaneous sup grows by more than reaction_cap.
std::pair<FieldState, double> step(const FieldState& state, const RadialGrid& grid,
                                   const SystemParams& params, const Exponents& exps,
                                   const SolverConfig& cfg);

RunResult run_to_blowup(const SystemParams& params, const Exponents& exps, const RadialGrid& grid,
                        const SolverConfig& cfg);

/// Single equation u_t = Lap u + |grad u|^q + u^p with u0 taken from
/// params.init.amplitude_u, p = params.p1, q = params.q1.
RunResult run_scalar(const SystemParams& params, const RadialGrid& grid, const SolverConfig& cfg);
RunResult run_scalar(double p, double q, const SystemParams& params, const RadialGrid& grid,
                     const SolverConfig& cfg, std::vector<double> u0);

/// Integrates w_t = Lap w + (1+w) log^p(1+w) with w0 = exp(u0) - 1. The
/// series columns describe w; use log1p_field for the u-equivalent.
RunResult transform_oracle(double p, const SystemParams& params, const RadialGrid& grid,
                           const SolverConfig& cfg, const std::vector<double>& u0);

std::vector<double> log1p_field(const std::vector<double>& w);

struct TransformComparison {
  double max_abs_diff = 0.0;  // sup over grid and time of |u - log(1+w)|
  double t_end = 0.0;
  double max_u_end = 0.0;
  std::size_t steps = 0;
};

/// Advances the q = 2 scalar equation and the transformed equation with a
/// shared step sequence until max u reaches u_cap (or t_max), tracking the
/// sup difference between u and log(1+w).
TransformComparison compare_transform(double p, const SystemParams& params,
                                      const RadialGrid& grid, const SolverConfig& cfg,
                                      const std::vector<double>& u0, double u_cap);

}  // namespace blowup
