#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "blowup/grid.hpp"
#include "blowup/solver.hpp"

using namespace blowup;

namespace {

SystemParams ode_params(double p, double a) {
  SystemParams s;
  s.p1 = s.p2 = p;
  s.domain = DomainKind::truncated_space;
  s.boundary = Boundary::neumann;
  s.init.kind = InitKind::constant;
  s.init.amplitude_u = s.init.amplitude_v = a;
  return s;
}

SystemParams theorem_params() {
  SystemParams s;
  s.p1 = 2.0;
  s.p2 = 3.0;
  s.q1 = s.q2 = 1.2;
  s.init.amplitude_u = s.init.amplitude_v = 3.0;
  return s;
}

double vmax(const std::vector<double>& f) { return *std::max_element(f.begin(), f.end()); }

}  // namespace

TEST_CASE("zero data is an equilibrium") {
  SystemParams s;
  s.init.amplitude_u = s.init.amplitude_v = 0.0;
  const RadialGrid g(21, 1.0);
  const auto e = compute_exponents(s);
  const auto x = make_initial_state(g, s);
  const auto [y, dt] = step(x, g, s, e, SolverConfig{});
  CHECK(dt > 0.0);
  CHECK(vmax(y.u) == 0.0);
  CHECK(vmax(y.v) == 0.0);

  SolverConfig c;
  c.t_max = 0.01;
  const auto r = run_to_blowup(s, e, g, c);
  CHECK(r.stop_reason == StopReason::t_max);
  CHECK(vmax(r.series.M_u) == 0.0);
  CHECK(vmax(r.series.M_v) == 0.0);
  CHECK(r.final_state.t >= 0.01);
}

TEST_CASE("constant data take the ODE Euler step") {
  for (double p : {1.5, 2.0, 3.0}) {
    const auto s = ode_params(p, 1.3);
    const RadialGrid g(5, 1.0);
    const auto [y, dt] = step(make_initial_state(g, s), g, s, compute_exponents(s), SolverConfig{});
    const double expect = 1.3 + dt * std::pow(1.3, p);
    for (std::size_t i = 0; i < g.size(); ++i) {
      CHECK(y.u[i] == doctest::Approx(expect).epsilon(1e-15));
      CHECK(y.v[i] == doctest::Approx(expect).epsilon(1e-15));
    }
  }
}

TEST_CASE("step respects the diffusive and reaction caps") {
  const auto s = theorem_params();
  const auto e = compute_exponents(s);
  const SolverConfig c;
  for (std::size_t N : {51, 201}) {
    const RadialGrid g(N, 1.0);
    auto x = make_initial_state(g, s);
    for (int k = 0; k < 200; ++k) {
      const auto [y, dt] = step(x, g, s, e, c);
      CHECK(dt <= c.safety * g.h() * g.h() / 2.0 * (1 + 1e-12));
      CHECK(vmax(y.u) <= (1.0 + c.reaction_cap) * vmax(x.u));
      CHECK(vmax(y.v) <= (1.0 + c.reaction_cap) * vmax(x.v));
      CHECK(y.t == doctest::Approx(x.t + dt));
      x = y;
    }
  }
}

TEST_CASE("spatially constant data follow u' = u^2") {
  const auto s = ode_params(2.0, 1.0);
  const RadialGrid g(3, 1.0);
  SolverConfig c;
  c.m_stop = 1e6;
  c.reaction_cap = 1e-4;
  const auto r = run_to_blowup(s, compute_exponents(s), g, c);
  CHECK(r.stop_reason == StopReason::threshold);
  CHECK(std::abs(r.final_state.t - (1.0 - 1e-6)) <= 2e-4);
}

TEST_CASE("threshold times converge to T = a^{1-p}/(p-1) under refinement") {
  const auto s = ode_params(3.0, 1.0);
  const RadialGrid g(3, 1.0);
  double prev = 1.0;
  for (double cap : {1e-2, 1e-3, 1e-4}) {
    SolverConfig c;
    c.m_stop = 1e6;
    c.reaction_cap = cap;
    const auto r = run_to_blowup(s, compute_exponents(s), g, c);
    // time at which 1/sqrt(1 - 2t) reaches 1e6
    const double err = std::abs(r.final_state.t - 0.5 * (1.0 - 1e-12));
    CHECK(err < prev);
    prev = err;
  }
  CHECK(prev < 2e-4);
}

TEST_CASE("constant-data trajectory matches the closed form while u <= 1e3") {
  // closed form a (1 - (p-1) a^{p-1} t)^{-1/(p-1)} with p = 2, a = 1. Euler
  // with relative step c lags the exact blow-up time by about c, which is
  // 1e-3 of T - t once u = 1e3 when c = 1e-6, hence the smaller cap.
  const auto s = ode_params(2.0, 1.0);
  const RadialGrid g(3, 1.0);
  SolverConfig c;
  c.m_stop = 2e3;
  c.reaction_cap = 4e-7;
  c.record_every = 1000;
  const auto r = run_to_blowup(s, compute_exponents(s), g, c);
  double worst = 0.0;
  for (std::size_t i = 0; i < r.series.size(); ++i) {
    if (r.series.max_u[i] > 1e3) break;
    const double exact = 1.0 / (1.0 - r.series.t[i]);
    worst = std::max(worst, std::abs(r.series.max_u[i] / exact - 1.0));
  }
  CHECK(worst <= 1e-3);
}

TEST_CASE("symmetric system stays symmetric and equals the scalar equation") {
  SystemParams s;
  s.p1 = s.p2 = 2.0;
  s.q1 = s.q2 = 1.4;
  const RadialGrid g(81, 1.0);
  SolverConfig c;
  c.m_stop = 1e5;
  const auto sys = run_to_blowup(s, compute_exponents(s), g, c);
  const auto sca = run_scalar(s, g, c);
  CHECK(sys.stop_reason == StopReason::threshold);
  REQUIRE(sys.snapshots.size() == sca.snapshots.size());
  for (std::size_t k = 0; k < sys.snapshots.size(); ++k) {
    const auto& a = sys.snapshots[k].state;
    const auto& b = sca.snapshots[k].state;
    const double scale = vmax(a.u);
    CHECK(a.t == b.t);
    for (std::size_t i = 0; i < g.size(); ++i) {
      CHECK(std::abs(a.u[i] - a.v[i]) <= 1e-10 * scale);
      CHECK(std::abs(a.u[i] - b.u[i]) <= 1e-10 * scale);
    }
  }
  REQUIRE(sys.series.size() == sca.series.size());
  for (std::size_t i = 0; i < sys.series.size(); ++i)
    CHECK(sys.series.M_u[i] == doctest::Approx(sca.series.M_u[i]).epsilon(1e-10));
}

TEST_CASE("larger initial data give larger solutions") {
  // the reaction cap is set loose enough that both runs take the diffusive
  // step, so recorded frames line up in time
  struct Pair {
    InitKind kind;
    double a_lo, a_hi;
  };
  for (const auto& pr : {Pair{InitKind::gaussian, 0.5, 0.6}, Pair{InitKind::gaussian, 0.2, 0.8},
                         Pair{InitKind::cosine_bump, 0.4, 0.5}}) {
    auto lo = theorem_params();
    lo.init.kind = pr.kind;
    lo.init.width = 0.5;
    auto hi = lo;
    lo.init.amplitude_u = lo.init.amplitude_v = pr.a_lo;
    hi.init.amplitude_u = hi.init.amplitude_v = pr.a_hi;
    const RadialGrid g(41, 1.0);
    SolverConfig c;
    c.reaction_cap = 0.9;
    c.t_max = 0.05;
    c.record_every = 10;
    const auto e = compute_exponents(lo);
    const auto rl = run_to_blowup(lo, e, g, c);
    const auto rh = run_to_blowup(hi, e, g, c);
    const auto m = std::min(rl.snapshots.size(), rh.snapshots.size());
    REQUIRE(m > 3);
    for (std::size_t k = 0; k < m; ++k) {
      const auto& a = rl.snapshots[k].state;
      const auto& b = rh.snapshots[k].state;
      if (a.t != b.t) continue;  // doubling frames need not align
      for (std::size_t i = 0; i < g.size(); ++i) {
        CHECK(a.u[i] <= b.u[i]);
        CHECK(a.v[i] <= b.v[i]);
      }
    }
  }
}

TEST_CASE("nonnegativity and stop at threshold") {
  const auto s = theorem_params();
  const RadialGrid g(101, 1.0);
  SolverConfig c;
  c.m_stop = 1e4;
  const auto r = run_to_blowup(s, compute_exponents(s), g, c);
  CHECK(r.stop_reason == StopReason::threshold);
  for (const auto& sn : r.snapshots) {
    CHECK(*std::min_element(sn.state.u.begin(), sn.state.u.end()) >= 0.0);
    CHECK(*std::min_element(sn.state.v.begin(), sn.state.v.end()) >= 0.0);
  }
  CHECK(std::max(r.series.M_u.back(), r.series.M_v.back()) >= 1e4);
  for (std::size_t i = 1; i < r.series.size(); ++i) CHECK(r.series.M_u[i] >= r.series.M_u[i - 1]);
}

TEST_CASE("transform oracle") {
  SystemParams s;
  s.p1 = s.p2 = 3.0;
  s.q1 = s.q2 = 2.0;
  s.init.width = 0.5;
  const RadialGrid g(101, 1.0);
  SUBCASE("zero data") {
    const std::vector<double> zero(g.size(), 0.0);
    SolverConfig c;
    c.t_max = 0.01;
    const auto r = transform_oracle(3.0, s, g, c, zero);
    CHECK(vmax(r.final_state.u) == 0.0);
    CHECK(vmax(log1p_field(r.final_state.u)) == 0.0);
  }
  SUBCASE("initial transform is inverted exactly") {
    const auto u0 = initial_profile(g, s, 2.0);
    SolverConfig c;
    c.t_max = 1e-12;
    const auto r = transform_oracle(3.0, s, g, c, u0);
    const auto back = log1p_field(r.snapshots.front().state.u);
    for (std::size_t i = 0; i < g.size(); ++i) CHECK(back[i] == doctest::Approx(u0[i]).epsilon(1e-14));
  }
  SUBCASE("direct and transformed runs agree and converge") {
    s.radius = 2.0;
    s.init.amplitude_u = 3.0;
    double prev = 0.0;
    for (std::size_t N : {101, 201}) {
      const RadialGrid gg(N, 2.0);
      const auto cmp = compare_transform(3.0, s, gg, SolverConfig{}, initial_profile(gg, s, 3.0), 6.0);
      CHECK(cmp.max_u_end <= 6.0);  // the window ends just below the cap
      CHECK(cmp.max_u_end > 5.8);
      if (prev > 0.0) CHECK(prev / cmp.max_abs_diff > 3.0);
      prev = cmp.max_abs_diff;
    }
    CHECK(prev < 1e-2);
  }
}

TEST_CASE("config validation") {
  SolverConfig c;
  c.reaction_cap = 1.5;
  CHECK_THROWS_AS(c.validate(), ParameterError);
  c = {};
  c.record_every = 0;
  CHECK_THROWS_AS(c.validate(), ParameterError);
}
