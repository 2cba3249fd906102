#include "blowup/solver.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

namespace blowup {

void SolverConfig::validate() const {
  if (!(safety > 0.0 && safety < 1.0)) throw ParameterError("safety must lie in (0,1)");
  if (!(reaction_cap > 0.0 && reaction_cap < 1.0))
    throw ParameterError("reaction_cap must lie in (0,1)");
  if (!(m_stop > 0.0) || !std::isfinite(m_stop)) throw ParameterError("m_stop must be > 0");
  if (!(t_max > 0.0) || !std::isfinite(t_max)) throw ParameterError("t_max must be > 0");
  if (record_every < 1) throw ParameterError("record_every must be >= 1");
}

std::string to_string(StopReason reason) {
  switch (reason) {
    case StopReason::threshold:
      return "threshold";
    case StopReason::t_max:
      return "t_max";
    case StopReason::nonfinite:
      return "nonfinite";
    case StopReason::truncation_contaminated:
      return "truncation_contaminated";
  }
  return "?";
}

void SupNormSeries::push(double t_, double mu, double mv, double mxu, double mxv, double gu,
                         double gv, double ru) {
  t.push_back(t_);
  M_u.push_back(mu);
  M_v.push_back(mv);
  max_u.push_back(mxu);
  max_v.push_back(mxv);
  max_grad_u.push_back(gu);
  max_grad_v.push_back(gv);
  argmax_r_u.push_back(ru);
}

namespace {

// x^e for x >= 0 with multiplication fast paths for the common integer powers.
class Power {
 public:
  explicit Power(double e) : e_(e) {
    if (e == 1.0) mode_ = 1;
    else if (e == 2.0) mode_ = 2;
    else if (e == 3.0) mode_ = 3;
    else mode_ = 0;
  }
  double operator()(double x) const {
    switch (mode_) {
      case 1:
        return x;
      case 2:
        return x * x;
      case 3:
        return x * x * x;
      default:
        return x > 0.0 ? std::pow(x, e_) : 0.0;
    }
  }

 private:
  double e_;
  int mode_ = 0;
};

using Field = std::vector<double>;

struct SystemSource {
  static constexpr std::size_t fields = 2;
  Power pq1, pq2, pp1, pp2;
  void operator()(const std::array<Field, 2>& f, const std::array<Field, 2>& g,
                  std::array<Field, 2>& rate) const {
    const std::size_t N = f[0].size();
    for (std::size_t i = 0; i < N; ++i) {
      rate[0][i] += pq1(g[0][i]) + pp1(f[1][i]);
      rate[1][i] += pq2(g[1][i]) + pp2(f[0][i]);
    }
  }
};

struct ScalarSource {
  static constexpr std::size_t fields = 1;
  Power pq, pp;
  void operator()(const std::array<Field, 1>& f, const std::array<Field, 1>& g,
                  std::array<Field, 1>& rate) const {
    const std::size_t N = f[0].size();
    for (std::size_t i = 0; i < N; ++i) rate[0][i] += pq(g[0][i]) + pp(f[0][i]);
  }
};

// Reaction (1+w) log^p(1+w), the image of |grad u|^2 + u^p under w = e^u - 1.
struct TransformSource {
  static constexpr std::size_t fields = 1;
  Power pp;
  void operator()(const std::array<Field, 1>& f, const std::array<Field, 1>&,
                  std::array<Field, 1>& rate) const {
    const std::size_t N = f[0].size();
    for (std::size_t i = 0; i < N; ++i) rate[0][i] += (1.0 + f[0][i]) * pp(std::log1p(f[0][i]));
  }
};

enum class TrialStatus { accepted, rejected, nonfinite };

constexpr double kClampTolerance = 1e-13;

template <class Source>
class Integrator {
 public:
  static constexpr std::size_t NF = Source::fields;

  Integrator(const RadialGrid& grid, int n, Boundary bc, const SolverConfig& cfg, Source source,
             std::array<double, NF> thetas, std::array<Field, NF> init, double t0)
      : grid_(grid), n_(n), bc_(bc), cfg_(cfg), source_(std::move(source)), thetas_(thetas),
        f_(std::move(init)), t_(t0) {
    const std::size_t N = grid.size();
    for (std::size_t k = 0; k < NF; ++k) {
      if (f_[k].size() != N) throw std::invalid_argument("field length does not match the grid");
      grad_[k].assign(N, 0.0);
      rate_[k].assign(N, 0.0);
      trial_[k].assign(N, 0.0);
      trial_grad_[k].assign(N, 0.0);
      if (bc_ == Boundary::dirichlet) f_[k].back() = 0.0;
      gradient(f_[k], grad_[k]);
      inst_[k] = powered_sup(f_[k], grad_[k], thetas_[k]);
    }
  }

  double propose_dt() {
    const std::size_t N = grid_.size();
    for (std::size_t k = 0; k < NF; ++k) radial_laplacian(grid_, f_[k], n_, rate_[k]);
    source_(f_, grad_, rate_);
    const std::size_t last = bc_ == Boundary::dirichlet ? N - 1 : N;
    const double h = grid_.h();
    double dt = cfg_.safety * h * h / (2.0 * n_);
    for (std::size_t k = 0; k < NF; ++k) {
      double fmax = 0.0;
      double rmax = 0.0;
      for (std::size_t i = 0; i < last; ++i) {
        fmax = std::max(fmax, f_[k][i]);
        rmax = std::max(rmax, rate_[k][i]);
      }
      if (fmax > 0.0 && rmax > 0.0) dt = std::min(dt, cfg_.reaction_cap * fmax / rmax);
    }
    return dt;
  }

  TrialStatus trial(double dt) {
    const std::size_t N = grid_.size();
    for (std::size_t k = 0; k < NF; ++k) {
      auto& out = trial_[k];
      const auto& f = f_[k];
      const auto& r = rate_[k];
      double peak = 0.0;
      bool finite = true;
      for (std::size_t i = 0; i < N; ++i) {
        out[i] = f[i] + dt * r[i];
        finite = finite && std::isfinite(out[i]);
        peak = std::max(peak, std::abs(out[i]));
      }
      if (bc_ == Boundary::dirichlet) out.back() = 0.0;
      if (!finite) return TrialStatus::nonfinite;
      const double floor = -kClampTolerance * peak;
      for (std::size_t i = 0; i < N; ++i) {
        if (out[i] < 0.0) {
          if (out[i] < floor)
            throw IntegrationFault("negative value " + std::to_string(out[i]) + " at node " +
                                   std::to_string(i) + ", t = " + std::to_string(t_));
          out[i] = 0.0;
        }
      }
      gradient(out, trial_grad_[k]);
      trial_inst_[k] = powered_sup(out, trial_grad_[k], thetas_[k]);
    }
    for (std::size_t k = 0; k < NF; ++k) {
      if (inst_[k] > 0.0 && trial_inst_[k] > (1.0 + cfg_.reaction_cap) * inst_[k])
        return TrialStatus::rejected;
    }
    pending_dt_ = dt;
    return TrialStatus::accepted;
  }

  void commit() {
    for (std::size_t k = 0; k < NF; ++k) {
      std::swap(f_[k], trial_[k]);
      std::swap(grad_[k], trial_grad_[k]);
      inst_[k] = trial_inst_[k];
    }
    t_ += pending_dt_;
  }

  // Proposes a step and halves dt until the growth cap holds.
  TrialStatus advance(double* dt_used) {
    double dt = propose_dt();
    for (int attempt = 0; attempt < 64; ++attempt) {
      const auto status = trial(dt);
      if (status == TrialStatus::accepted) {
        commit();
        if (dt_used) *dt_used = dt;
        return status;
      }
      if (status == TrialStatus::nonfinite) return status;
      dt *= 0.5;
    }
    throw IntegrationFault("step size underflow while enforcing the growth cap");
  }

  double t() const { return t_; }
  const Field& field(std::size_t k) const { return f_[k]; }
  const Field& grad(std::size_t k) const { return grad_[k]; }
  double inst(std::size_t k) const { return inst_[k]; }

 private:
  void gradient(const Field& f, Field& out) const {
    gradient_magnitude(grid_, f, out);
    if (bc_ == Boundary::neumann) out.back() = 0.0;
  }

  const RadialGrid& grid_;
  int n_;
  Boundary bc_;
  SolverConfig cfg_;
  Source source_;
  std::array<double, NF> thetas_;
  std::array<Field, NF> f_;
  std::array<Field, NF> grad_, rate_, trial_, trial_grad_;
  std::array<double, NF> inst_{};
  std::array<double, NF> trial_inst_{};
  double t_;
  double pending_dt_ = 0.0;
};

struct Extremes {
  double max = 0.0;
  double argmax_r = 0.0;
  double max_grad = 0.0;
};

Extremes extremes(const RadialGrid& grid, const Field& f, const Field& g) {
  Extremes e;
  std::size_t imax = 0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (f[i] > f[imax]) imax = i;
    e.max_grad = std::max(e.max_grad, g[i]);
  }
  e.max = f[imax];
  e.argmax_r = grid.r(imax);
  return e;
}

// Time loop shared by every run flavour: running sups, series sampling,
// doubling and stride snapshots, stopping rules.
template <class Source>
RunResult drive(Integrator<Source>& in, const RadialGrid& grid, const SolverConfig& cfg,
                bool truncated) {
  constexpr std::size_t NF = Source::fields;
  constexpr double kSeriesGrowth = 1.01;
  const std::size_t N = grid.size();
  RunResult result;

  auto state_now = [&] {
    FieldState s;
    s.t = in.t();
    s.u = in.field(0);
    s.v = in.field(NF - 1);
    return s;
  };

  double M_u = in.inst(0);
  double M_v = in.inst(NF - 1);
  if (std::max(M_u, M_v) >= cfg.m_stop)
    throw ParameterError("m_stop must exceed the initial sup of the data");
  if (truncated) {
    for (std::size_t k = 0; k < NF; ++k) {
      const auto& f = in.field(k);
      const double peak = *std::max_element(f.begin(), f.end());
      if (peak > 0.0 && f[N - 2] > 1e-12 * peak)
        throw ParameterError("truncated-space data must be negligible (< 1e-12 of peak) at the truncation radius");
    }
  }

  double base = M_u > 0.0 ? M_u : 0.0;
  int level = base > 0.0 ? 0 : -1;
  double rec_u = M_u;
  double rec_v = M_v;

  auto record = [&] {
    const auto eu = extremes(grid, in.field(0), in.grad(0));
    const auto ev = extremes(grid, in.field(NF - 1), in.grad(NF - 1));
    result.series.push(in.t(), M_u, M_v, eu.max, ev.max, eu.max_grad, ev.max_grad, eu.argmax_r);
    rec_u = M_u;
    rec_v = M_v;
  };
  auto snapshot = [&](int lvl) {
    result.snapshots.push_back(Snapshot{state_now(), M_u, M_v, lvl});
  };

  record();
  snapshot(level);

  std::size_t steps = 0;
  while (true) {
    if (std::max(M_u, M_v) >= cfg.m_stop) {
      result.stop_reason = StopReason::threshold;
      break;
    }
    if (in.t() >= cfg.t_max) {
      result.stop_reason = StopReason::t_max;
      break;
    }
    if (in.advance(nullptr) == TrialStatus::nonfinite) {
      result.stop_reason = StopReason::nonfinite;
      break;
    }
    ++steps;
    M_u = std::max(M_u, in.inst(0));
    M_v = std::max(M_v, in.inst(NF - 1));

    int new_level = level;
    if (base <= 0.0 && M_u > 0.0) {
      base = M_u;
      new_level = 0;
    } else if (base > 0.0) {
      while (M_u >= base * std::ldexp(1.0, new_level + 1)) ++new_level;
    }
    const bool doubled = new_level != level;
    level = new_level;
    const bool stride = steps % static_cast<std::size_t>(cfg.record_every) == 0;

    if (stride || doubled || M_u > kSeriesGrowth * rec_u || M_v > kSeriesGrowth * rec_v)
      record();
    if (doubled) snapshot(level);
    else if (stride) snapshot(-1);

    if (truncated) {
      bool contaminated = false;
      for (std::size_t k = 0; k < NF; ++k) {
        const auto& f = in.field(k);
        const double peak = *std::max_element(f.begin(), f.end());
        contaminated = contaminated || (peak > 0.0 && f[N - 2] > 1e-6 * peak);
      }
      if (contaminated) {
        result.stop_reason = StopReason::truncation_contaminated;
        break;
      }
    }
  }
  if (result.series.t.back() != in.t()) record();
  if (result.snapshots.back().state.t != in.t()) snapshot(-1);
  result.steps_taken = steps;
  result.final_state = state_now();
  return result;
}

// Whole-space truncation is only monitored with zero Dirichlet data at the cut;
// the Neumann variant exists for spatially constant data.
bool monitors_truncation(const SystemParams& p) {
  return p.domain == DomainKind::truncated_space && p.boundary == Boundary::dirichlet;
}

SystemSource system_source(const SystemParams& p) {
  return SystemSource{Power(p.q1), Power(p.q2), Power(p.p1), Power(p.p2)};
}

}  // namespace

std::pair<FieldState, double> step(const FieldState& state, const RadialGrid& grid,
                                   const SystemParams& params, const Exponents& exps,
                                   const SolverConfig& cfg) {
  Integrator<SystemSource> in(grid, params.n, params.boundary, cfg, system_source(params),
                              {exps.theta1, exps.theta2}, {state.u, state.v}, state.t);
  double dt = 0.0;
  if (in.advance(&dt) == TrialStatus::nonfinite)
    throw IntegrationFault("non-finite values produced by step");
  FieldState out;
  out.t = in.t();
  out.u = in.field(0);
  out.v = in.field(1);
  return {std::move(out), dt};
}

RunResult run_to_blowup(const SystemParams& params, const Exponents& exps, const RadialGrid& grid,
                        const SolverConfig& cfg) {
  params.validate();
  cfg.validate();
  auto init = make_initial_state(grid, params);
  Integrator<SystemSource> in(grid, params.n, params.boundary, cfg, system_source(params),
                              {exps.theta1, exps.theta2}, {std::move(init.u), std::move(init.v)},
                              0.0);
  return drive(in, grid, cfg, monitors_truncation(params));
}

RunResult run_scalar(double p, double q, const SystemParams& params, const RadialGrid& grid,
                     const SolverConfig& cfg, std::vector<double> u0) {
  if (!(p > 1.0)) throw ParameterError("p must lie in (1,inf)");
  if (!(q > 1.0 && q <= 2.0)) throw ParameterError("q must lie in (1,2]");
  cfg.validate();
  const double theta = 2.0 / (p + 1.0);
  Integrator<ScalarSource> in(grid, params.n, params.boundary, cfg,
                              ScalarSource{Power(q), Power(p)}, {theta}, {std::move(u0)}, 0.0);
  return drive(in, grid, cfg, monitors_truncation(params));
}

RunResult run_scalar(const SystemParams& params, const RadialGrid& grid, const SolverConfig& cfg) {
  params.validate();
  return run_scalar(params.p1, params.q1, params, grid, cfg,
                    initial_profile(grid, params, params.init.amplitude_u));
}

std::vector<double> log1p_field(const std::vector<double>& w) {
  std::vector<double> out(w.size());
  std::transform(w.begin(), w.end(), out.begin(), [](double x) { return std::log1p(x); });
  return out;
}

namespace {

std::vector<double> exp_minus_one(const std::vector<double>& u) {
  std::vector<double> w(u.size());
  std::transform(u.begin(), u.end(), w.begin(), [](double x) { return std::expm1(x); });
  return w;
}

// w beyond this is about e^690; the next reaction step would overflow.
constexpr double kTransformOverflow = 1e300;

}  // namespace

RunResult transform_oracle(double p, const SystemParams& params, const RadialGrid& grid,
                           const SolverConfig& cfg, const std::vector<double>& u0) {
  if (!(p > 1.0)) throw ParameterError("p must lie in (1,inf)");
  SolverConfig c = cfg;
  c.validate();
  c.m_stop = std::min(c.m_stop, kTransformOverflow);
  const double theta = 2.0 / (p + 1.0);
  Integrator<TransformSource> in(grid, params.n, params.boundary, c, TransformSource{Power(p)},
                                 {theta}, {exp_minus_one(u0)}, 0.0);
  return drive(in, grid, c, monitors_truncation(params));
}

TransformComparison compare_transform(double p, const SystemParams& params,
                                      const RadialGrid& grid, const SolverConfig& cfg,
                                      const std::vector<double>& u0, double u_cap) {
  cfg.validate();
  const double theta = 2.0 / (p + 1.0);
  Integrator<ScalarSource> direct(grid, params.n, params.boundary, cfg,
                                  ScalarSource{Power(2.0), Power(p)}, {theta}, {u0}, 0.0);
  Integrator<TransformSource> mapped(grid, params.n, params.boundary, cfg,
                                     TransformSource{Power(p)}, {theta}, {exp_minus_one(u0)}, 0.0);
  TransformComparison out;
  auto measure = [&] {
    const auto& u = direct.field(0);
    const auto& w = mapped.field(0);
    double umax = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
      out.max_abs_diff = std::max(out.max_abs_diff, std::abs(u[i] - std::log1p(w[i])));
      umax = std::max(umax, u[i]);
    }
    out.max_u_end = umax;
    out.t_end = direct.t();
  };
  measure();
  while (out.max_u_end < u_cap && direct.t() < cfg.t_max) {
    double dt = std::min(direct.propose_dt(), mapped.propose_dt());
    int attempt = 0;
    for (;; ++attempt) {
      if (attempt == 64) throw IntegrationFault("step size underflow in transform comparison");
      const auto a = direct.trial(dt);
      const auto b = mapped.trial(dt);
      if (a == TrialStatus::nonfinite || b == TrialStatus::nonfinite)
        throw IntegrationFault("non-finite values in transform comparison");
      if (a == TrialStatus::accepted && b == TrialStatus::accepted) break;
      dt *= 0.5;
    }
    direct.commit();
    mapped.commit();
    ++out.steps;
    // Only states with max u <= u_cap enter the comparison window.
    const auto& u = direct.field(0);
    if (*std::max_element(u.begin(), u.end()) > u_cap) break;
    measure();
  }
  return out;
}

}  // namespace blowup
