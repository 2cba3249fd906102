#pragma once

#include <cmath>
#include <numbers>
#include <vector>

#include "blowup/grid.hpp"

namespace blowup::testing {

// u* = e^{-t} cos(k r), k = pi/2 on the unit ball, forced so that it solves
// u_t = Lap u + S. Integrated with RK4 at dt ~ h^2 so the time error is
// far below the spatial one; returns the max-norm error at t_end.
inline double mms_error(std::size_t N, int n, double t_end) {
  const RadialGrid g(N, 1.0);
  const double k = std::numbers::pi / 2.0;
  auto exact = [&](double r, double t) { return std::exp(-t) * std::cos(k * r); };
  auto source = [&](double r, double t) {
    const double s_over_r = r > 0.0 ? std::sin(k * r) / r : k;
    return std::exp(-t) * ((k * k - 1.0) * std::cos(k * r) + (n - 1) * k * s_over_r);
  };
  std::vector<double> u(N);
  for (std::size_t i = 0; i < N; ++i) u[i] = exact(g.r(i), 0.0);
  auto rhs = [&](const std::vector<double>& w, double t) {
    auto d = radial_laplacian(g, w, n);
    for (std::size_t i = 0; i < N; ++i) d[i] += source(g.r(i), t);
    d[N - 1] = 0.0;  // Dirichlet node held at u*(R,t) = 0
    return d;
  };
  const auto steps = static_cast<int>(std::ceil(t_end / (0.2 * g.h() * g.h() / n)));
  const double dt = t_end / steps;
  double t = 0.0;
  std::vector<double> tmp(N);
  for (int s = 0; s < steps; ++s) {
    const auto k1 = rhs(u, t);
    for (std::size_t i = 0; i < N; ++i) tmp[i] = u[i] + 0.5 * dt * k1[i];
    const auto k2 = rhs(tmp, t + 0.5 * dt);
    for (std::size_t i = 0; i < N; ++i) tmp[i] = u[i] + 0.5 * dt * k2[i];
    const auto k3 = rhs(tmp, t + 0.5 * dt);
    for (std::size_t i = 0; i < N; ++i) tmp[i] = u[i] + dt * k3[i];
    const auto k4 = rhs(tmp, t + dt);
    for (std::size_t i = 0; i < N; ++i) u[i] += dt / 6.0 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
    t += dt;
  }
  double err = 0.0;
  for (std::size_t i = 0; i < N; ++i) err = std::max(err, std::abs(u[i] - exact(g.r(i), t)));
  return err;
}

}  // namespace blowup::testing
