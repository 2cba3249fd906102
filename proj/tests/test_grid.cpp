#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "blowup/grid.hpp"
#include "mms.hpp"

using namespace blowup;
using std::numbers::pi;
using blowup::testing::mms_error;

namespace {

std::vector<double> sample(const RadialGrid& g, double (*f)(double)) {
  std::vector<double> out(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) out[i] = f(g.r(i));
  return out;
}

double max_abs(const std::vector<double>& a) {
  double m = 0.0;
  for (double x : a) m = std::max(m, std::abs(x));
  return m;
}

}  // namespace

TEST_CASE("grid construction") {
  const RadialGrid g(5, 2.0);
  CHECK(g.size() == 5);
  CHECK(g.h() == doctest::Approx(0.5));
  CHECK(g.r(4) == doctest::Approx(2.0));
  CHECK_THROWS(RadialGrid(2, 1.0));
}

TEST_CASE("laplacian is exact on quadratics") {
  for (int n = 1; n <= 3; ++n) {
    const RadialGrid g(41, 1.0);
    const auto f = sample(g, [](double r) { return 1.0 - r * r; });
    const auto L = radial_laplacian(g, f, n);
    for (std::size_t i = 0; i + 1 < g.size(); ++i) CHECK(std::abs(L[i] + 2.0 * n) <= 1e-12 * 2 * n);
    const auto c = radial_laplacian(g, std::vector<double>(g.size(), 3.5), n);
    CHECK(max_abs(c) == 0.0);
  }
}

TEST_CASE("laplacian of r^4 in three dimensions converges at second order") {
  // analytic: f'' + (2/r) f' = 12 r^2 + 8 r^2 = 20 r^2, which is 5 at r = 0.5
  double prev = 0.0;
  for (std::size_t N : {21, 41, 81, 161}) {
    const RadialGrid g(N, 1.0);
    const auto L = radial_laplacian(g, sample(g, [](double r) { return r * r * r * r; }), 3);
    const double err = std::abs(L[(N - 1) / 2] - 5.0);
    if (prev > 0.0) CHECK(prev / err > 3.6);
    prev = err;
  }
  CHECK(prev < 1e-3);
}

TEST_CASE("gradient magnitude") {
  const RadialGrid g(41, 1.0);
  const auto d = gradient_magnitude(g, sample(g, [](double r) { return 1.0 - r * r; }));
  CHECK(d[0] == 0.0);
  for (std::size_t i = 1; i < g.size(); ++i) CHECK(d[i] == doctest::Approx(2.0 * g.r(i)).epsilon(1e-12));
  CHECK(max_abs(gradient_magnitude(g, std::vector<double>(g.size(), 2.0))) == 0.0);

  double prev = 0.0;
  for (std::size_t N : {21, 41, 81, 161}) {
    const RadialGrid gg(N, 1.0);
    const auto dc = gradient_magnitude(gg, sample(gg, [](double r) { return std::cos(pi * r / 2.0); }));
    double err = 0.0;
    for (std::size_t i = 0; i < N; ++i)
      err = std::max(err, std::abs(dc[i] - pi / 2.0 * std::abs(std::sin(pi * gg.r(i) / 2.0))));
    if (prev > 0.0) CHECK(prev / err > 3.6);
    prev = err;
  }
}

TEST_CASE("operators are linear") {
  const RadialGrid g(33, 1.0);
  const auto a = sample(g, [](double r) { return std::exp(-r * r); });
  const auto b = sample(g, [](double r) { return std::cos(3.0 * r); });
  std::vector<double> s(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) s[i] = 2.0 * a[i] - 0.5 * b[i];
  const auto La = radial_laplacian(g, a, 2);
  const auto Lb = radial_laplacian(g, b, 2);
  const auto Ls = radial_laplacian(g, s, 2);
  for (std::size_t i = 0; i < g.size(); ++i) CHECK(Ls[i] == doctest::Approx(2.0 * La[i] - 0.5 * Lb[i]).epsilon(1e-12));
}

TEST_CASE("manufactured solution converges at second order") {
  for (int n = 1; n <= 3; ++n) {
    const double e1 = mms_error(21, n, 0.1);
    const double e2 = mms_error(41, n, 0.1);
    const double e3 = mms_error(81, n, 0.1);
    CAPTURE(n);
    CHECK(std::log2(e1 / e2) >= 1.9);
    CHECK(std::log2(e2 / e3) >= 1.9);
  }
}

TEST_CASE("sup functional") {
  Exponents e;
  e.theta1 = e.theta2 = 0.5;
  SUBCASE("zero fields") {
    const RadialGrid g(11, 1.0);
    FieldState s{0.0, std::vector<double>(11, 0.0), std::vector<double>(11, 0.0)};
    const auto [mu, mv] = sup_functional(s, g, e);
    CHECK(mu == 0.0);
    CHECK(mv == 0.0);
  }
  SUBCASE("1 - r^2 against a dense scan of the continuum expression") {
    double best = 0.0;
    for (int k = 0; k <= 1000000; ++k) {
      const double r = k * 1e-6;
      best = std::max(best, 1.0 - r * r + std::sqrt(2.0 * r));
    }
    const RadialGrid g(200, 1.0);  // r = 0.5 is not a node
    FieldState s{0.0, sample(g, [](double r) { return 1.0 - r * r; }), std::vector<double>(200, 2.0)};
    const auto [mu, mv] = sup_functional(s, g, e);
    CHECK(std::abs(mu - best) < g.h() * g.h());
    CHECK(mv == 2.0);  // constant field has no gradient
  }
}

TEST_CASE("initial profiles") {
  SystemParams p;
  p.init.width = 0.3;
  const RadialGrid g(101, 1.0);
  const auto u = initial_profile(g, p, 5.0);
  CHECK(u[0] == doctest::Approx(5.0));
  CHECK(u.back() == 0.0);
  for (std::size_t i = 1; i < u.size(); ++i) CHECK(u[i] <= u[i - 1]);
  p.init.kind = InitKind::cosine_bump;
  const auto c = initial_profile(g, p, 2.0);
  CHECK(c[0] == doctest::Approx(2.0));
  CHECK(c[15] == doctest::Approx(2.0 * std::pow(std::cos(pi * 0.15 / 0.6), 2)));
  CHECK(c[40] == 0.0);
}
