#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "blowup/model.hpp"

namespace blowup {

/// Uniform radial grid r_i = i h on [0, radius].
class RadialGrid {
 public:
  RadialGrid(std::size_t nodes, double radius);

  std::size_t size() const { return r_.size(); }
  double h() const { return h_; }
  double radius() const { return radius_; }
  double r(std::size_t i) const { return r_[i]; }
  std::span<const double> coords() const { return r_; }

 private:
  double h_;
  double radius_;
  std::vector<double> r_;
};

struct FieldState {
  double t = 0.0;
  std::vector<double> u;
  std::vector<double> v;
};

/// Radial Laplacian f'' + (n-1)/r f'. The origin uses the symmetry limit
/// 2n (f_1 - f_0)/h^2; the last node uses a mirrored ghost (zero flux), which
/// is what the Neumann update needs and is overwritten under Dirichlet data.
void radial_laplacian(const RadialGrid& grid, std::span<const double> f, int n,
                      std::span<double> out);
std::vector<double> radial_laplacian(const RadialGrid& grid, std::span<const double> f, int n);

/// |f'(r_i)|: central differences inside, zero at the origin (even extension),
/// one-sided second order at the outer node.
void gradient_magnitude(const RadialGrid& grid, std::span<const double> f, std::span<double> out);
std::vector<double> gradient_magnitude(const RadialGrid& grid, std::span<const double> f);

/// sup_i f_i + g_i^theta for a field f and its gradient magnitude g.
double powered_sup(std::span<const double> f, std::span<const double> grad, double theta);

/// Instantaneous sups of u + |grad u|^theta1 and v + |grad v|^theta2.
std::pair<double, double> sup_functional(const FieldState& state, const RadialGrid& grid,
                                         const Exponents& exps);

/// Samples the initial data described by params.init on the grid.
FieldState make_initial_state(const RadialGrid& grid, const SystemParams& params);

/// Initial profile for one amplitude, shared by the system and scalar runs.
std::vector<double> initial_profile(const RadialGrid& grid, const SystemParams& params,
                                    double amplitude);

}  // namespace blowup
