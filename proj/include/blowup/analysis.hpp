#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "blowup/grid.hpp"
#include "blowup/model.hpp"
#include "blowup/solver.hpp"

namespace blowup {

class AnalysisError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Blow-up time
// ---------------------------------------------------------------------------

struct BlowupTimeOptions {
  double ignore_decades = 0.5;  // skipped below the last recorded M_u
  double span_decades = 1.0;    // width of the extrapolation window in log10 M_u
  double max_discrepancy = 0.05;
};

struct BlowupTimeEstimate {
  double T_est = 0.0;        // extrapolation of M_u^{-1/alpha} to zero
  double T_geometric = 0.0;  // t_J + dt_J rho / (1 - rho), rho = 2^{-1/alpha}
  double t_last_doubling = 0.0;
  double discrepancy = 0.0;  // |T_est - T_geometric| / (T_est - t_last_doubling)
  int points_used = 0;
};

/// M_u ~ C (T - t)^{-alpha} makes M_u^{-1/alpha} affine in t, so T is its
/// root. The geometric doubling sum is reported alongside; disagreement above
/// max_discrepancy raises AnalysisError.
BlowupTimeEstimate estimate_blowup_time(const SupNormSeries& series, double alpha,
                                        const BlowupTimeOptions& opts = {});

// ---------------------------------------------------------------------------
// Rate fits
// ---------------------------------------------------------------------------

enum class Channel { M_u, M_v, max_u, max_v, grad_u, grad_v };
std::string to_string(Channel c);
Channel channel_from_string(const std::string& name);
inline constexpr Channel kAllChannels[] = {Channel::M_u,   Channel::M_v,    Channel::max_u,
                                           Channel::max_v, Channel::grad_u, Channel::grad_v};

/// Channel samples; the gradient channels are max|grad|^theta.
std::vector<double> channel_values(const SupNormSeries& series, Channel c, const Exponents& exps);
double predicted_exponent(Channel c, const Exponents& exps);

struct FitWindow {
  double lo = 1e-3;  // in units of T_est
  double hi = 1e-1;
};

struct RateFit {
  Channel channel = Channel::M_u;
  double T_est = 0.0;
  double exponent = 0.0;
  double predicted = 0.0;
  double amplitude = 0.0;
  double rms_residual = 0.0;  // log10 units
  double tau_lo = 0.0;
  double tau_hi = 0.0;
  int points_used = 0;

  double rel_error() const { return std::abs(exponent - predicted) / std::abs(predicted); }
};

RateFit fit_rate(const SupNormSeries& series, double T_est, Channel channel, const Exponents& exps,
                 const FitWindow& window = {});

struct ProductBound {
  double min = 0.0;
  double median = 0.0;
  double max = 0.0;
  bool bounded = false;  // running max within [median/factor, factor*median]
};

/// max|grad f|^theta (T_est - t)^rate over the fit window.
ProductBound gradient_product(const SupNormSeries& series, double T_est, Channel channel,
                              const Exponents& exps, const FitWindow& window = {},
                              double factor = 3.0);

// ---------------------------------------------------------------------------
// Doubling, ratio trace
// ---------------------------------------------------------------------------

struct DoublingReport {
  std::vector<double> t_j;
  std::vector<double> M_j;
  std::vector<double> D_j;      // M_u(t_j)^{1/alpha} (t_{j+1} - t_j); NaN on the last entry
  std::vector<double> ratio_j;  // (t_{j+2} - t_{j+1}) / (t_{j+1} - t_j); NaN on the last two
  double sup_D = 0.0;

  std::size_t doublings() const { return t_j.empty() ? 0 : t_j.size() - 1; }
};

/// Doubling times of M_u from its value at t_start, located by
/// piecewise-linear interpolation of log M_u.
DoublingReport doubling_analysis(const SupNormSeries& series, double alpha, double t_start = 0.0,
                                 std::size_t min_doublings = 5);

struct RatioTrace {
  double phi_min = 0.0;
  double phi_max = 0.0;
  std::vector<double> t;
  std::vector<double> phi;
};

/// Phi(t) = M_u^{-1/(2 alpha)} M_v^{1/(2 beta)} for t >= t_from.
RatioTrace ratio_trace(const SupNormSeries& series, double alpha, double beta, double t_from);

// ---------------------------------------------------------------------------
// Rescaled frames
// ---------------------------------------------------------------------------

struct FrameOptions {
  double K = 5.0;
  double center_min = 0.5;
  double center_relaxed = 0.45;
};

/// Fields phi1 = gamma^{2 alpha} u(x* + gamma y, t* + gamma^2 s) and the
/// v counterpart on the line through x* along the radial ray, at the
/// recorded time levels s in [-1, 0].
struct RescaledFrame {
  double gamma = 0.0;
  double M_u0 = 0.0;
  double x_star = 0.0;
  double t_star = 0.0;
  int n = 1;
  double h_y = 0.0;
  std::vector<double> y;
  std::vector<double> rho;  // |x* + gamma y| / gamma
  std::vector<double> s;    // increasing, last entry 0
  std::vector<std::vector<double>> phi1;
  std::vector<std::vector<double>> phi2;
  double s_lo = 0.0;
  double s_hi = 0.0;
  double center_value = 0.0;  // phi1 + |grad phi1|^theta1 at (0,0)
  double sup_value = 0.0;     // sup over the frame of the same
  bool relaxed = false;       // x* realised between center_relaxed and center_min

  std::size_t center_index() const { return (y.size() - 1) / 2; }
};

RescaledFrame build_rescaled_frame(const std::vector<Snapshot>& snapshots,
                                   const SupNormSeries& series, double t0, const Exponents& exps,
                                   const RadialGrid& grid, int n, const FrameOptions& opts = {});

struct RescaledResidual {
  double res1 = 0.0;
  double res2 = 0.0;
  double grad_term1 = 0.0;  // max gamma^mu1 |grad phi1|^q1
  double grad_term2 = 0.0;
  double share1 = 0.0;      // grad_term1 over the sum of all term norms in equation 1
  double share2 = 0.0;
};

RescaledResidual rescaled_residual(const RescaledFrame& frame, const SystemParams& params,
                                   const Exponents& exps);

// ---------------------------------------------------------------------------
// Blow-up set
// ---------------------------------------------------------------------------

enum class BlowupSetKind { single_point, regional, global };
std::string to_string(BlowupSetKind k);

struct WidthOptions {
  double theta = 0.5;
  double single_point_below = 0.2;  // fraction of the radius
  double global_above = 0.5;
  std::size_t min_snapshots = 3;
};

struct WidthTrace {
  std::vector<double> t;
  std::vector<double> max_u;
  std::vector<double> width;
  BlowupSetKind kind = BlowupSetKind::regional;
  double final_width = 0.0;
  double min_width = 0.0;
  // Resolved window: from the first snapshot whose max has doubled the
  // initial max, so the diffusive start-up transient is excluded.
  double resolved_from = 0.0;
  double resolved_min_width = 0.0;
};

/// Largest radius where f >= theta max f. The crossing is interpolated in
/// (r^2, log f), which is exact on Gaussians.
double superlevel_radius(const RadialGrid& grid, const std::vector<double>& f, double theta);

WidthTrace blowup_set_width(const std::vector<Snapshot>& snapshots, const RadialGrid& grid,
                            const WidthOptions& opts = {});

}  // namespace blowup
