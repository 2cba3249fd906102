#include "blowup/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace blowup {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double rms = 0.0;
};

// Ordinary least squares on centred data.
LineFit least_squares(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  const double xm = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double ym = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0;
  double sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - xm) * (x[i] - xm);
    sxy += (x[i] - xm) * (y[i] - ym);
  }
  if (!(sxx > 0.0)) throw AnalysisError("degenerate abscissae in least-squares fit");
  LineFit f;
  f.slope = sxy / sxx;
  f.intercept = ym - f.slope * xm;
  double ss = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - (f.intercept + f.slope * x[i]);
    ss += r * r;
  }
  f.rms = std::sqrt(ss / n);
  return f;
}

// First time M reaches level, interpolated linearly in log M. M must be
// nondecreasing; returns NaN if the level is never reached.
double crossing_time(const std::vector<double>& t, const std::vector<double>& M, double level) {
  const auto it = std::lower_bound(M.begin(), M.end(), level);
  if (it == M.end()) return kNaN;
  const auto i = static_cast<std::size_t>(it - M.begin());
  if (i == 0 || M[i] == level) return t[i];
  const double a = std::log(M[i - 1]);
  const double b = std::log(M[i]);
  const double frac = (std::log(level) - a) / (b - a);
  return t[i - 1] + frac * (t[i] - t[i - 1]);
}

double value_at(const std::vector<double>& t, const std::vector<double>& M, double at) {
  if (at <= t.front()) return M.front();
  if (at >= t.back()) return M.back();
  const auto it = std::upper_bound(t.begin(), t.end(), at);
  const auto i = static_cast<std::size_t>(it - t.begin());
  const double frac = (at - t[i - 1]) / (t[i] - t[i - 1]);
  if (M[i - 1] > 0.0 && M[i] > 0.0)
    return std::exp(std::log(M[i - 1]) + frac * (std::log(M[i]) - std::log(M[i - 1])));
  return M[i - 1] + frac * (M[i] - M[i - 1]);
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

}  // namespace

BlowupTimeEstimate estimate_blowup_time(const SupNormSeries& series, double alpha,
                                        const BlowupTimeOptions& opts) {
  if (!(alpha > 0.0)) throw AnalysisError("alpha must be positive");
  if (series.size() < 4) throw AnalysisError("series too short to estimate the blow-up time");
  const auto& M = series.M_u;
  const double top = M.back() * std::pow(10.0, -opts.ignore_decades);
  const double bottom = top * std::pow(10.0, -opts.span_decades);

  std::vector<double> ts;
  std::vector<double> ys;
  double last_M = 0.0;
  for (std::size_t i = 0; i < series.size(); ++i) {
    if (M[i] < bottom || M[i] > top || !(M[i] > last_M)) continue;
    ts.push_back(series.t[i]);
    ys.push_back(std::pow(M[i], -1.0 / alpha));
    last_M = M[i];
  }
  if (ts.size() < 4) throw AnalysisError("fewer than 4 increasing samples in the extrapolation window");
  const auto fit = least_squares(ts, ys);
  if (!(fit.slope < 0.0)) throw AnalysisError("M_u^{-1/alpha} is not decreasing; no blow-up detected");

  BlowupTimeEstimate est;
  est.points_used = static_cast<int>(ts.size());
  est.T_est = -fit.intercept / fit.slope;

  // geometric-series estimator from the doubling sequence below the window top
  const auto first = std::find_if(M.begin(), M.end(), [](double m) { return m > 0.0; });
  if (first == M.end()) throw AnalysisError("M_u is identically zero");
  const double base = *first;
  std::vector<double> tj;
  for (int k = 0;; ++k) {
    const double level = std::ldexp(base, k);
    if (level > top) break;
    tj.push_back(crossing_time(series.t, M, level));
  }
  if (tj.size() < 5) throw AnalysisError("fewer than 4 doublings of M_u before the extrapolation window top");
  const double rho = std::pow(2.0, -1.0 / alpha);
  const double tJ = tj.back();
  const double dJ = tj.back() - tj[tj.size() - 2];
  est.t_last_doubling = tJ;
  est.T_geometric = tJ + dJ * rho / (1.0 - rho);
  const double scale = est.T_est - tJ;
  est.discrepancy = scale > 0.0 ? std::abs(est.T_est - est.T_geometric) / scale
                                : std::numeric_limits<double>::infinity();
  if (est.discrepancy > opts.max_discrepancy)
    throw AnalysisError("blow-up time estimators disagree: extrapolated " +
                        std::to_string(est.T_est) + " vs geometric " +
                        std::to_string(est.T_geometric));
  return est;
}

std::string to_string(Channel c) {
  switch (c) {
    case Channel::M_u:
      return "M_u";
    case Channel::M_v:
      return "M_v";
    case Channel::max_u:
      return "max_u";
    case Channel::max_v:
      return "max_v";
    case Channel::grad_u:
      return "max_grad_u^theta1";
    case Channel::grad_v:
      return "max_grad_v^theta2";
  }
  return "?";
}

Channel channel_from_string(const std::string& name) {
  for (auto c : kAllChannels)
    if (to_string(c) == name) return c;
  if (name == "grad_u" || name == "max_grad_u") return Channel::grad_u;
  if (name == "grad_v" || name == "max_grad_v") return Channel::grad_v;
  throw std::invalid_argument("unknown channel '" + name + "'");
}

std::vector<double> channel_values(const SupNormSeries& series, Channel c, const Exponents& exps) {
  switch (c) {
    case Channel::M_u:
      return series.M_u;
    case Channel::M_v:
      return series.M_v;
    case Channel::max_u:
      return series.max_u;
    case Channel::max_v:
      return series.max_v;
    case Channel::grad_u:
    case Channel::grad_v: {
      const auto& g = c == Channel::grad_u ? series.max_grad_u : series.max_grad_v;
      const double th = c == Channel::grad_u ? exps.theta1 : exps.theta2;
      std::vector<double> out(g.size());
      std::transform(g.begin(), g.end(), out.begin(), [th](double x) { return std::pow(x, th); });
      return out;
    }
  }
  return {};
}

double predicted_exponent(Channel c, const Exponents& exps) {
  switch (c) {
    case Channel::M_u:
    case Channel::max_u:
    case Channel::grad_u:
      return exps.alpha;
    default:
      return exps.beta;
  }
}

namespace {

std::vector<std::size_t> window_indices(const SupNormSeries& series, double T_est,
                                        const FitWindow& window) {
  if (!(window.lo > 0.0 && window.hi > window.lo)) throw AnalysisError("empty fit window");
  const double lo = window.lo * T_est;
  const double hi = window.hi * T_est;
  if (series.empty()) throw AnalysisError("empty series");
  const double tau_min = T_est - series.t.back();
  const double tau_max = T_est - series.t.front();
  if (!(tau_min < hi) || !(tau_max > lo)) throw AnalysisError("fit window lies outside the data range");
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < series.size(); ++i) {
    const double tau = T_est - series.t[i];
    if (tau >= lo && tau <= hi) idx.push_back(i);
  }
  return idx;
}

}  // namespace

RateFit fit_rate(const SupNormSeries& series, double T_est, Channel channel, const Exponents& exps,
                 const FitWindow& window) {
  const auto idx = window_indices(series, T_est, window);
  const auto values = channel_values(series, channel, exps);
  std::vector<double> x;
  std::vector<double> y;
  for (auto i : idx) {
    if (!(values[i] > 0.0)) continue;
    x.push_back(std::log10(T_est - series.t[i]));
    y.push_back(std::log10(values[i]));
  }
  if (x.size() < 8) throw AnalysisError("insufficient points in the fit window for " + to_string(channel));
  const auto f = least_squares(x, y);
  RateFit r;
  r.channel = channel;
  r.T_est = T_est;
  r.exponent = -f.slope;
  r.predicted = predicted_exponent(channel, exps);
  r.amplitude = std::pow(10.0, f.intercept);
  r.rms_residual = f.rms;
  r.tau_lo = window.lo * T_est;
  r.tau_hi = window.hi * T_est;
  r.points_used = static_cast<int>(x.size());
  return r;
}

ProductBound gradient_product(const SupNormSeries& series, double T_est, Channel channel,
                              const Exponents& exps, const FitWindow& window, double factor) {
  const auto idx = window_indices(series, T_est, window);
  if (idx.size() < 3) throw AnalysisError("insufficient points for the gradient product");
  const auto values = channel_values(series, channel, exps);
  const double rate = predicted_exponent(channel, exps);
  std::vector<double> P;
  for (auto i : idx) P.push_back(values[i] * std::pow(T_est - series.t[i], rate));
  ProductBound b;
  b.min = *std::min_element(P.begin(), P.end());
  b.max = *std::max_element(P.begin(), P.end());
  b.median = median(P);
  // running max is nondecreasing: its first value is P[0], its last is max P
  b.bounded = P.front() >= b.median / factor && b.max <= factor * b.median;
  return b;
}

DoublingReport doubling_analysis(const SupNormSeries& series, double alpha, double t_start,
                                 std::size_t min_doublings) {
  if (series.empty()) throw AnalysisError("empty series");
  const auto& M = series.M_u;
  const double base = value_at(series.t, M, t_start);
  if (!(base > 0.0)) throw AnalysisError("M_u must be positive at the doubling start");
  DoublingReport rep;
  rep.t_j.push_back(std::max(t_start, series.t.front()));
  rep.M_j.push_back(base);
  for (int k = 1;; ++k) {
    const double level = std::ldexp(base, k);
    if (level > M.back()) break;
    rep.t_j.push_back(crossing_time(series.t, M, level));
    rep.M_j.push_back(level);
  }
  if (rep.doublings() < min_doublings)
    throw AnalysisError("only " + std::to_string(rep.doublings()) + " doublings of M_u recorded");
  const std::size_t J = rep.t_j.size();
  rep.D_j.assign(J, kNaN);
  rep.ratio_j.assign(J, kNaN);
  for (std::size_t j = 0; j + 1 < J; ++j) {
    rep.D_j[j] = std::pow(rep.M_j[j], 1.0 / alpha) * (rep.t_j[j + 1] - rep.t_j[j]);
    rep.sup_D = std::max(rep.sup_D, rep.D_j[j]);
  }
  for (std::size_t j = 0; j + 2 < J; ++j)
    rep.ratio_j[j] = (rep.t_j[j + 2] - rep.t_j[j + 1]) / (rep.t_j[j + 1] - rep.t_j[j]);
  return rep;
}

RatioTrace ratio_trace(const SupNormSeries& series, double alpha, double beta, double t_from) {
  RatioTrace tr;
  for (std::size_t i = 0; i < series.size(); ++i) {
    if (series.t[i] < t_from) continue;
    const double mu = series.M_u[i];
    const double mv = series.M_v[i];
    if (!(mu > 0.0) || !(mv > 0.0)) throw AnalysisError("zero sup-functional inside the ratio window");
    tr.t.push_back(series.t[i]);
    tr.phi.push_back(std::exp(-std::log(mu) / (2.0 * alpha) + std::log(mv) / (2.0 * beta)));
  }
  if (tr.phi.empty()) throw AnalysisError("ratio window contains no samples");
  tr.phi_min = *std::min_element(tr.phi.begin(), tr.phi.end());
  tr.phi_max = *std::max_element(tr.phi.begin(), tr.phi.end());
  return tr;
}

// ---------------------------------------------------------------------------

namespace {

struct NodeMax {
  double value = -1.0;
  std::size_t node = 0;
};

NodeMax powered_argmax(const RadialGrid& grid, const std::vector<double>& f, double theta) {
  const auto g = gradient_magnitude(grid, f);
  NodeMax best;
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double v = f[i] + (g[i] > 0.0 ? std::pow(g[i], theta) : 0.0);
    if (v > best.value) best = {v, i};
  }
  return best;
}

// |d phi / dy| along the frame line; one-sided second order at the ends.
std::vector<double> line_gradient(const std::vector<double>& phi, double hy) {
  const std::size_t m = phi.size();
  std::vector<double> g(m);
  for (std::size_t j = 1; j + 1 < m; ++j) g[j] = std::abs(phi[j + 1] - phi[j - 1]) / (2.0 * hy);
  g[0] = std::abs(-3.0 * phi[0] + 4.0 * phi[1] - phi[2]) / (2.0 * hy);
  g[m - 1] = std::abs(3.0 * phi[m - 1] - 4.0 * phi[m - 2] + phi[m - 3]) / (2.0 * hy);
  return g;
}

FieldState interpolate_state(const std::vector<Snapshot>& snaps, double t) {
  auto it = std::lower_bound(snaps.begin(), snaps.end(), t,
                             [](const Snapshot& s, double x) { return s.state.t < x; });
  if (it == snaps.end()) throw AnalysisError("no snapshot at or after the requested time");
  if (it->state.t == t || it == snaps.begin()) {
    if (it->state.t != t) throw AnalysisError("no snapshot before the requested time");
    return it->state;
  }
  const auto& b = it->state;
  const auto& a = std::prev(it)->state;
  const double w = (t - a.t) / (b.t - a.t);
  FieldState s;
  s.t = t;
  s.u.resize(a.u.size());
  s.v.resize(a.v.size());
  for (std::size_t i = 0; i < a.u.size(); ++i) {
    s.u[i] = (1.0 - w) * a.u[i] + w * b.u[i];
    s.v[i] = (1.0 - w) * a.v[i] + w * b.v[i];
  }
  return s;
}

}  // namespace

RescaledFrame build_rescaled_frame(const std::vector<Snapshot>& snapshots,
                                   const SupNormSeries& series, double t0, const Exponents& exps,
                                   const RadialGrid& grid, int n, const FrameOptions& opts) {
  if (snapshots.empty()) throw AnalysisError("no snapshots recorded");
  double M0 = 0.0;
  for (std::size_t i = 0; i < series.size() && series.t[i] <= t0; ++i) M0 = std::max(M0, series.M_u[i]);
  for (const auto& s : snapshots)
    if (s.state.t <= t0) M0 = std::max(M0, s.M_u);
  if (!(M0 > 0.0)) throw AnalysisError("M_u(t0) is zero");

  RescaledFrame fr;
  fr.n = n;
  fr.M_u0 = M0;
  fr.gamma = std::pow(M0, -1.0 / (2.0 * exps.alpha));
  const double gamma = fr.gamma;

  // (x*, t*): the recorded point with the largest u + |grad u|^theta1 up to t0
  NodeMax best;
  std::size_t best_snap = 0;
  for (std::size_t k = 0; k < snapshots.size(); ++k) {
    if (snapshots[k].state.t > t0) break;
    const auto m = powered_argmax(grid, snapshots[k].state.u, exps.theta1);
    if (m.value >= best.value) {
      best = m;
      best_snap = k;
    }
  }
  const double attained = best.value / M0;
  if (attained < opts.center_relaxed)
    throw AnalysisError("no recorded point reaches the required fraction of M_u(t0)");
  fr.relaxed = attained < opts.center_min;
  fr.x_star = grid.r(best.node);
  fr.t_star = snapshots[best_snap].state.t;

  const double h = grid.h();
  const auto J = static_cast<long>(std::floor(opts.K * gamma / h));
  if (J < 2) throw AnalysisError("rescaled frame is under-resolved (K gamma < 2h)");
  const auto istar = static_cast<long>(best.node);
  const auto last = static_cast<long>(grid.size()) - 1;
  if (opts.K * gamma > grid.radius() || istar + J > last)
    throw AnalysisError("requested y-range exits the rescaled domain (t0 too early?)");
  fr.h_y = h / gamma;
  std::vector<std::size_t> node;
  for (long j = -J; j <= J; ++j) {
    const long pos = istar + j;
    node.push_back(static_cast<std::size_t>(std::labs(pos)));
    fr.y.push_back(static_cast<double>(j) * fr.h_y);
    fr.rho.push_back(std::abs(static_cast<double>(pos)) * h / gamma);
  }

  // time levels: recorded frames inside [t* - gamma^2, t*], else interpolated
  const double g2 = gamma * gamma;
  std::vector<FieldState> levels;
  for (std::size_t k = 0; k <= best_snap; ++k) {
    const auto& st = snapshots[k].state;
    if (st.t >= fr.t_star - g2 && (levels.empty() || st.t > levels.back().t)) levels.push_back(st);
  }
  if (levels.size() < 3) {
    levels.clear();
    const double t_lo = std::max(fr.t_star - g2, snapshots.front().state.t);
    for (double frac : {1.0, 0.5, 0.0}) {
      try {
        levels.push_back(interpolate_state(snapshots, fr.t_star - frac * (fr.t_star - t_lo)));
      } catch (const AnalysisError&) {
      }
    }
    if (levels.empty() || levels.back().t != fr.t_star) levels.push_back(snapshots[best_snap].state);
  }

  const double su = std::pow(gamma, 2.0 * exps.alpha);
  const double sv = std::pow(gamma, 2.0 * exps.beta);
  for (const auto& st : levels) {
    fr.s.push_back((st.t - fr.t_star) / g2);
    std::vector<double> p1(node.size());
    std::vector<double> p2(node.size());
    for (std::size_t j = 0; j < node.size(); ++j) {
      p1[j] = su * st.u[node[j]];
      p2[j] = sv * st.v[node[j]];
    }
    const auto g = line_gradient(p1, fr.h_y);
    for (std::size_t j = 0; j < p1.size(); ++j)
      fr.sup_value = std::max(fr.sup_value, p1[j] + std::pow(g[j], exps.theta1));
    fr.phi1.push_back(std::move(p1));
    fr.phi2.push_back(std::move(p2));
  }
  fr.s_lo = fr.s.front();
  fr.s_hi = fr.s.back();
  const auto c = fr.center_index();
  const auto g0 = line_gradient(fr.phi1.back(), fr.h_y);
  fr.center_value = fr.phi1.back()[c] + std::pow(g0[c], exps.theta1);
  return fr;
}

RescaledResidual rescaled_residual(const RescaledFrame& frame, const SystemParams& params,
                                   const Exponents& exps) {
  const std::size_t L = frame.s.size();
  if (L < 3) throw AnalysisError("rescaled residual needs at least 3 time levels");
  const double x0 = frame.s[L - 3];
  const double x1 = frame.s[L - 2];
  const double x2 = frame.s[L - 1];
  // derivative at x2 of the quadratic through the last three levels
  const double w0 = (x2 - x1) / ((x0 - x1) * (x0 - x2));
  const double w1 = (x2 - x0) / ((x1 - x0) * (x1 - x2));
  const double w2 = (2.0 * x2 - x0 - x1) / ((x2 - x0) * (x2 - x1));

  const double hy = frame.h_y;
  const double nd = static_cast<double>(frame.n);
  const double gmu1 = std::pow(frame.gamma, exps.mu1);
  const double gmu2 = std::pow(frame.gamma, exps.mu2);

  struct Norms {
    double res = 0.0, ds = 0.0, lap = 0.0, grad = 0.0, react = 0.0;
  };
  auto evaluate = [&](const std::vector<std::vector<double>>& phi,
                      const std::vector<double>& partner, double gmu, double q, double p) {
    Norms nm;
    const auto& f = phi[L - 1];
    const std::size_t m = f.size();
    for (std::size_t j = 1; j + 1 < m; ++j) {
      const double ds = w0 * phi[L - 3][j] + w1 * phi[L - 2][j] + w2 * f[j];
      const double dy = (f[j + 1] - f[j - 1]) / (2.0 * hy);
      const double dyy = (f[j + 1] - 2.0 * f[j] + f[j - 1]) / (hy * hy);
      const double rho = frame.rho[j];
      double lap;
      if (rho < 0.5 * hy) {
        lap = nd * dyy;
      } else {
        const double sgn = frame.x_star + frame.gamma * frame.y[j] >= 0.0 ? 1.0 : -1.0;
        lap = dyy + (nd - 1.0) * sgn * dy / rho;
      }
      const double grad = gmu * std::pow(std::abs(dy), q);
      const double react = std::pow(partner[j], p);
      nm.res = std::max(nm.res, std::abs(ds - lap - grad - react));
      nm.ds = std::max(nm.ds, std::abs(ds));
      nm.lap = std::max(nm.lap, std::abs(lap));
      nm.grad = std::max(nm.grad, grad);
      nm.react = std::max(nm.react, react);
    }
    return nm;
  };
  const auto a = evaluate(frame.phi1, frame.phi2[L - 1], gmu1, params.q1, params.p1);
  const auto b = evaluate(frame.phi2, frame.phi1[L - 1], gmu2, params.q2, params.p2);
  auto share = [](const Norms& nm) {
    const double total = nm.ds + nm.lap + nm.grad + nm.react;
    return total > 0.0 ? nm.grad / total : 0.0;
  };
  RescaledResidual r;
  r.res1 = a.res;
  r.res2 = b.res;
  r.grad_term1 = a.grad;
  r.grad_term2 = b.grad;
  r.share1 = share(a);
  r.share2 = share(b);
  return r;
}

// ---------------------------------------------------------------------------

std::string to_string(BlowupSetKind k) {
  switch (k) {
    case BlowupSetKind::single_point:
      return "single-point";
    case BlowupSetKind::regional:
      return "regional";
    case BlowupSetKind::global:
      return "global";
  }
  return "?";
}

double superlevel_radius(const RadialGrid& grid, const std::vector<double>& f, double theta) {
  if (f.size() != grid.size()) throw std::invalid_argument("superlevel_radius: length mismatch");
  const double fmax = *std::max_element(f.begin(), f.end());
  if (!(fmax > 0.0)) return 0.0;
  const double level = theta * fmax;
  std::size_t i = f.size() - 1;
  while (f[i] < level) --i;
  if (i == f.size() - 1) return grid.radius();
  const double r0 = grid.r(i);
  const double r1 = grid.r(i + 1);
  if (f[i + 1] > 0.0) {
    const double a = std::log(f[i]);
    const double b = std::log(f[i + 1]);
    const double frac = (std::log(level) - a) / (b - a);
    return std::sqrt(r0 * r0 + frac * (r1 * r1 - r0 * r0));
  }
  const double frac = (f[i] - level) / (f[i] - f[i + 1]);
  return r0 + frac * (r1 - r0);
}

WidthTrace blowup_set_width(const std::vector<Snapshot>& snapshots, const RadialGrid& grid,
                            const WidthOptions& opts) {
  if (snapshots.size() < opts.min_snapshots) throw AnalysisError("too few snapshots for the blow-up set");
  if (!(opts.theta > 0.0 && opts.theta < 1.0)) throw AnalysisError("theta must lie in (0,1)");
  WidthTrace tr;
  for (const auto& s : snapshots) {
    tr.t.push_back(s.state.t);
    tr.max_u.push_back(*std::max_element(s.state.u.begin(), s.state.u.end()));
    tr.width.push_back(superlevel_radius(grid, s.state.u, opts.theta));
  }
  const double R = grid.radius();
  tr.final_width = tr.width.back();
  tr.min_width = *std::min_element(tr.width.begin(), tr.width.end());
  std::size_t first = 0;
  while (first + 1 < tr.width.size() && tr.max_u[first] < 2.0 * tr.max_u.front()) ++first;
  tr.resolved_from = tr.t[first];
  tr.resolved_min_width = *std::min_element(tr.width.begin() + static_cast<long>(first), tr.width.end());
  const std::size_t m = tr.width.size();
  const std::size_t late = m - std::max<std::size_t>(m / 3, 2);
  const bool shrinking = tr.final_width < tr.width[late];
  if (tr.final_width < opts.single_point_below * R && shrinking)
    tr.kind = BlowupSetKind::single_point;
  else if (tr.resolved_min_width >= opts.global_above * R)
    tr.kind = BlowupSetKind::global;
  else
    tr.kind = BlowupSetKind::regional;
  return tr;
}

}  // namespace blowup
