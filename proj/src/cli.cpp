#include "blowup/cli.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iomanip>
#include <optional>
#include <sstream>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "blowup/analysis.hpp"
#include "blowup/grid.hpp"
#include "blowup/io.hpp"
#include "blowup/model.hpp"
#include "blowup/solver.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace blowup {

std::map<std::string, double> default_thresholds() {
  return {
      {"exponent", 0.15},       // relative error of fitted rate exponents
      {"grad_product", 3.0},    // factor band for max|grad|^theta (T-t)^rate
      {"ratio_bound", 10.0},    // phi_max / phi_min
      {"doubling_ratio", 0.25}, // relative deviation of increment ratios from 2^{-1/alpha}
      {"rescale_sup", 1.05},
      {"rescale_center", 0.45},
      {"ode_T", 1e-3},          // absolute
      {"ode_exponent", 0.02},   // relative
      {"transform_diff", 1e-3},
      {"transform_refine", 3.0},
      {"transform_cap", 6.0},   // stop the transform comparison once max u reaches this
      {"width_single", 0.2},    // fractions of the radius
      {"width_global", 0.5},
  };
}

namespace {

// Usage problems that surface after CLI11 is done (bad --tol, wrong config kind).
struct UsageError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

std::string fmt(double x, int prec = 4) {
  std::ostringstream o;
  o << std::setprecision(prec) << x;
  return o.str();
}

std::string pct(double x) { return fmt(100.0 * x, 3) + "%"; }

const char* verdict(bool ok) { return ok ? "PASS" : "FAIL"; }

json num(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

struct Outcome {
  std::string line;
  json data = json::object();
  int code = kExitPass;
};

struct Common {
  std::string config;
  std::string out = "out";
  std::vector<std::string> tol;
  bool json = false;
  std::map<std::string, double> thr = default_thresholds();

  double t(const std::string& name) const { return thr.at(name); }
};

void apply_tolerances(Common& c) {
  for (const auto& spec : c.tol) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos) throw UsageError("--tol expects name=value, got '" + spec + "'");
    const auto name = spec.substr(0, eq);
    if (!c.thr.count(name)) throw UsageError("unknown threshold '" + name + "'");
    try {
      std::size_t used = 0;
      const double v = std::stod(spec.substr(eq + 1), &used);
      if (used != spec.size() - eq - 1) throw std::invalid_argument("trailing");
      c.thr[name] = v;
    } catch (const std::logic_error&) {
      throw UsageError("bad value in --tol '" + spec + "'");
    }
  }
}

// A manifest replays through its config echo.
RunConfig load_any(const std::string& path) {
  if (path.empty()) throw UsageError("--config is required");
  if (fs::path(path).extension() == ".json") return parse_config(read_manifest(path).config_echo);
  return load_config(path);
}

struct PriorRun {
  RunConfig cfg;
  Exponents exps;
  SupNormSeries series;
};

PriorRun load_prior(const std::string& out) {
  const fs::path dir(out);
  if (!fs::exists(dir / "series.csv") || !fs::exists(dir / "config.toml"))
    throw IoError("no prior run in '" + out + "' (run `blowup run` first)");
  PriorRun p;
  p.cfg = load_config(dir / "config.toml");
  p.exps = compute_exponents(p.cfg.model);
  p.series = read_series_csv(dir / "series.csv");
  return p;
}

json exponents_json(const Exponents& e) {
  return {{"alpha", e.alpha},   {"beta", e.beta},     {"theta1", e.theta1},
          {"theta2", e.theta2}, {"mu1", e.mu1},       {"mu2", e.mu2},
          {"q1_bound", e.q1_bound}, {"q2_bound", e.q2_bound}};
}

json fit_json(const RateFit& f) {
  return {{"channel", to_string(f.channel)}, {"exponent", f.exponent},
          {"predicted", f.predicted},        {"rel_error", f.rel_error()},
          {"rms_residual", f.rms_residual},  {"points_used", f.points_used}};
}

struct FitBundle {
  std::optional<BlowupTimeEstimate> T;
  std::vector<RateFit> fits;
  std::string error;
};

FitBundle fit_all(const SupNormSeries& series, const Exponents& exps, const FitWindow& window) {
  FitBundle b;
  try {
    b.T = estimate_blowup_time(series, exps.alpha);
  } catch (const AnalysisError& e) {
    b.error = e.what();
    return b;
  }
  for (Channel ch : kAllChannels) {
    try {
      b.fits.push_back(fit_rate(series, b.T->T_est, ch, exps, window));
    } catch (const AnalysisError& e) {
      if (b.error.empty()) b.error = to_string(ch) + ": " + e.what();
    }
  }
  return b;
}

const RateFit* find_fit(const std::vector<RateFit>& fits, Channel ch) {
  for (const auto& f : fits)
    if (f.channel == ch) return &f;
  return nullptr;
}

void plot_series(const fs::path& path, const SupNormSeries& s, const FitBundle& b) {
  std::vector<double> x;
  std::vector<double> y;
  std::optional<PlotLine> line;
  if (b.T) {
    for (std::size_t i = 0; i < s.size(); ++i) {
      x.push_back(b.T->T_est - s.t[i]);
      y.push_back(s.M_u[i]);
    }
    if (const auto* f = find_fit(b.fits, Channel::M_u))
      line = PlotLine{-f->exponent, std::log10(f->amplitude)};
    emit_svg(path, "M_u against T - t", x, y, "T - t", "M_u", line);
  } else {
    emit_svg(path, "M_u against t", s.t, s.M_u, "t", "M_u");
  }
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---------------------------------------------------------------------------

Outcome cmd_check(const Common& c) {
  const auto cfg = load_any(c.config);
  const auto rep = check_theorem_hypotheses(cfg.model);
  Outcome o;
  o.data = {{"exponents", exponents_json(rep.exps)},
            {"cond_fujita", rep.cond_fujita},
            {"cond_q", rep.cond_q},
            {"margin_fujita", rep.margin_fujita},
            {"margin_q1", rep.margin_q1},
            {"margin_q2", rep.margin_q2},
            {"hypotheses_hold", rep.all_hold()}};
  std::ostringstream l;
  l << "alpha " << fmt(rep.exps.alpha) << " beta " << fmt(rep.exps.beta) << " theta1 "
    << fmt(rep.exps.theta1) << " theta2 " << fmt(rep.exps.theta2) << " mu1 " << fmt(rep.exps.mu1)
    << " mu2 " << fmt(rep.exps.mu2) << "\n"
    << "max(alpha,beta) >= n/2: " << (rep.cond_fujita ? "yes" : "no") << " (margin "
    << fmt(rep.margin_fujita) << ")\n"
    << "q1 < " << fmt(rep.exps.q1_bound) << ", q2 < " << fmt(rep.exps.q2_bound) << ": "
    << (rep.cond_q ? "yes" : "no") << "\n"
    << "check: hypotheses " << (rep.all_hold() ? "hold" : "fail");
  o.line = l.str();
  o.code = rep.all_hold() ? kExitPass : kExitHypotheses;
  return o;
}

Outcome cmd_run(const Common& c) {
  const auto cfg = load_any(c.config);
  const auto exps = compute_exponents(cfg.model);
  const auto hyp = check_theorem_hypotheses(cfg.model);
  const RadialGrid grid(cfg.nodes, cfg.model.radius);
  const auto t0 = std::chrono::steady_clock::now();
  const auto res = run_to_blowup(cfg.model, exps, grid, cfg.solver);
  const double wall = seconds_since(t0);

  const fs::path dir(c.out);
  fs::create_directories(dir);
  write_series_csv(dir / "series.csv", res.series);
  const auto echo = config_to_toml(cfg);
  write_text(dir / "config.toml", echo);
  const auto b = fit_all(res.series, exps, cfg.fit);
  write_fit_csv(dir / "fit.csv", b.fits);
  plot_series(dir / "series.svg", res.series, b);

  RunManifest m;
  m.config_echo = echo;
  m.exponents = exps;
  m.hypotheses = hyp;
  m.stop_reason = to_string(res.stop_reason);
  m.steps = res.steps_taken;
  if (b.T) m.T_est = b.T->T_est;
  m.fits = b.fits;
  m.wall_seconds = wall;
  write_manifest(dir / "manifest.json", m);

  Outcome o;
  o.data = {{"stop_reason", m.stop_reason}, {"steps", m.steps},
            {"t_end", res.final_state.t},   {"wall_seconds", wall},
            {"T_est", b.T ? num(b.T->T_est) : json(nullptr)},
            {"hypotheses_hold", hyp.all_hold()}, {"fits", json::array()}};
  for (const auto& f : b.fits) o.data["fits"].push_back(fit_json(f));
  std::ostringstream l;
  l << "run: " << m.stop_reason << " at t " << fmt(res.final_state.t, 8) << " after " << m.steps
    << " steps";
  if (b.T) l << ", T_est " << fmt(b.T->T_est, 8);
  if (const auto* f = find_fit(b.fits, Channel::M_u))
    l << ", M_u exponent " << fmt(f->exponent, 3) << " vs alpha " << fmt(f->predicted, 3);
  if (!b.error.empty()) l << " (fit: " << b.error << ")";
  if (!hyp.all_hold()) l << " [hypotheses fail: no rate guarantee]";
  o.line = l.str();
  return o;
}

Outcome cmd_fit(const Common& c) {
  const auto prior = load_prior(c.out);
  const auto& e = prior.exps;
  const auto b = fit_all(prior.series, e, prior.cfg.fit);
  if (!b.T) throw AnalysisError(b.error);
  const fs::path dir(c.out);
  write_fit_csv(dir / "fit.csv", b.fits);
  plot_series(dir / "series.svg", prior.series, b);

  const auto* fu = find_fit(b.fits, Channel::M_u);
  const auto* fv = find_fit(b.fits, Channel::M_v);
  if (!fu || !fv) throw AnalysisError("M_u/M_v fits unavailable: " + b.error);
  const double tol = c.t("exponent");
  bool ok = fu->rel_error() <= tol && fv->rel_error() <= tol;

  Outcome o;
  o.data = {{"T_est", b.T->T_est}, {"T_geometric", b.T->T_geometric}, {"fits", json::array()},
            {"products", json::object()}};
  for (const auto& f : b.fits) o.data["fits"].push_back(fit_json(f));
  std::ostringstream prod;
  for (Channel ch : {Channel::grad_u, Channel::grad_v}) {
    try {
      const auto pb =
          gradient_product(prior.series, b.T->T_est, ch, e, prior.cfg.fit, c.t("grad_product"));
      ok = ok && pb.bounded;
      o.data["products"][to_string(ch)] = {
          {"min", pb.min}, {"median", pb.median}, {"max", pb.max}, {"bounded", pb.bounded}};
      prod << ", " << to_string(ch) << " product " << (pb.bounded ? "bounded" : "unbounded");
    } catch (const AnalysisError& ex) {
      ok = false;
      prod << ", " << to_string(ch) << " product unavailable (" << ex.what() << ")";
    }
  }
  std::ostringstream l;
  l << "fit: T_est " << fmt(b.T->T_est, 8) << ", exponent " << fmt(fu->exponent, 3) << " vs alpha "
    << fmt(fu->predicted, 3) << " (" << pct(fu->rel_error()) << "), " << fmt(fv->exponent, 3)
    << " vs beta " << fmt(fv->predicted, 3) << " (" << pct(fv->rel_error()) << ")" << prod.str()
    << " " << verdict(ok) << "@" << pct(tol);
  o.line = l.str();
  o.code = ok ? kExitPass : kExitVerdict;
  return o;
}

struct DoublingVerdict {
  bool ok = false;
  bool bounded = false;
  bool monotone_growth = false;
  std::vector<double> last_ratios;
  double target = 0.0;
  std::string note;
};

DoublingVerdict judge_doubling(const DoublingReport& d, double alpha, double tol) {
  DoublingVerdict v;
  v.target = std::pow(2.0, -1.0 / alpha);
  std::vector<double> D;
  for (double x : d.D_j)
    if (std::isfinite(x)) D.push_back(x);
  for (double x : d.ratio_j)
    if (std::isfinite(x)) v.last_ratios.push_back(x);
  v.bounded = std::isfinite(d.sup_D);
  if (D.size() < 8 || v.last_ratios.size() < 5) {
    v.note = "fewer than 8 doublings resolved";
    return v;
  }
  v.monotone_growth = true;
  for (std::size_t j = D.size() - 7; j < D.size(); ++j)
    v.monotone_growth = v.monotone_growth && D[j] > D[j - 1];
  v.last_ratios.erase(v.last_ratios.begin(), v.last_ratios.end() - 5);
  bool ratios_ok = true;
  for (double r : v.last_ratios) ratios_ok = ratios_ok && std::abs(r - v.target) <= tol * v.target;
  v.ok = v.bounded && !v.monotone_growth && ratios_ok;
  return v;
}

Outcome cmd_doubling(const Common& c) {
  const auto prior = load_prior(c.out);
  const auto d = doubling_analysis(prior.series, prior.exps.alpha);
  write_doubling_csv(fs::path(c.out) / "doubling.csv", d);
  const auto v = judge_doubling(d, prior.exps.alpha, c.t("doubling_ratio"));
  Outcome o;
  o.data = {{"doublings", d.doublings()}, {"sup_D", num(d.sup_D)},
            {"target_ratio", v.target},   {"last_ratios", v.last_ratios},
            {"monotone_growth", v.monotone_growth}};
  std::ostringstream l;
  l << "doubling: " << d.doublings() << " doublings, sup D " << fmt(d.sup_D) << ", last ratios";
  for (double r : v.last_ratios) l << " " << fmt(r);
  l << " vs 2^(-1/alpha) " << fmt(v.target);
  if (v.monotone_growth) l << ", D_j growing";
  if (!v.note.empty()) l << " (" << v.note << ")";
  l << " " << verdict(v.ok) << "@" << pct(c.t("doubling_ratio"));
  o.line = l.str();
  o.code = v.ok ? kExitPass : kExitVerdict;
  return o;
}

Outcome cmd_ratio(const Common& c) {
  const auto prior = load_prior(c.out);
  const auto& s = prior.series;
  if (s.size() == 0) throw AnalysisError("empty series");
  const double t_from = 0.5 * s.t.back();
  const auto tr = ratio_trace(s, prior.exps.alpha, prior.exps.beta, t_from);
  write_ratio_csv(fs::path(c.out) / "ratio.csv", tr);
  const double spread = tr.phi_max / tr.phi_min;
  const bool ok = spread <= c.t("ratio_bound");
  Outcome o;
  o.data = {{"phi_min", tr.phi_min}, {"phi_max", tr.phi_max}, {"spread", spread}, {"t_from", t_from}};
  o.line = "ratio: Φ ∈ [" + fmt(tr.phi_min) + "," + fmt(tr.phi_max) + "], max/min " +
           fmt(spread) + " " + verdict(ok) + "@" + fmt(c.t("ratio_bound"));
  o.code = ok ? kExitPass : kExitVerdict;
  return o;
}

struct RescaleLevel {
  int level = 0;
  RescaledFrame fine;
  RescaledResidual res_coarse;
  RescaledResidual res_fine;
};

Outcome cmd_rescale(const Common& c, int first_level, int levels) {
  const auto cfg = load_any(c.config);
  const auto exps = compute_exponents(cfg.model);
  if (levels < 2) throw UsageError("--levels must be >= 2");
  const RadialGrid coarse(cfg.nodes, cfg.model.radius);
  const RadialGrid fine(2 * cfg.nodes - 1, cfg.model.radius);
  const auto rc = run_to_blowup(cfg.model, exps, coarse, cfg.solver);
  const auto rf = run_to_blowup(cfg.model, exps, fine, cfg.solver);
  const auto dc = doubling_analysis(rc.series, exps.alpha);
  const auto df = doubling_analysis(rf.series, exps.alpha);
  const auto top = static_cast<std::size_t>(first_level + levels);
  if (dc.t_j.size() < top || df.t_j.size() < top)
    throw AnalysisError("not enough doublings for the requested levels");

  std::vector<RescaleLevel> lv;
  for (int j = first_level; j < first_level + levels; ++j) {
    RescaleLevel L;
    L.level = j;
    const auto fc = build_rescaled_frame(rc.snapshots, rc.series, dc.t_j[j], exps, coarse, cfg.model.n);
    L.fine = build_rescaled_frame(rf.snapshots, rf.series, df.t_j[j], exps, fine, cfg.model.n);
    L.res_coarse = rescaled_residual(fc, cfg.model, exps);
    L.res_fine = rescaled_residual(L.fine, cfg.model, exps);
    lv.push_back(std::move(L));
  }

  bool ok = true;
  std::ostringstream csv;
  csv << "level,t0,gamma,x_star,sup_value,center_value,relaxed,res1_coarse,res1_fine,res2_coarse,"
         "res2_fine,share1,share2\n";
  json rows = json::array();
  for (std::size_t k = 0; k < lv.size(); ++k) {
    const auto& L = lv[k];
    const auto& F = L.fine;
    const bool refine_ok =
        L.res_fine.res1 < L.res_coarse.res1 && L.res_fine.res2 < L.res_coarse.res2;
    const bool share_ok = k == 0 || (L.res_fine.share1 < lv[k - 1].res_fine.share1 &&
                                     L.res_fine.share2 < lv[k - 1].res_fine.share2);
    ok = ok && F.sup_value <= c.t("rescale_sup") && F.center_value >= c.t("rescale_center") &&
         refine_ok && share_ok;
    csv << L.level << "," << format_double(F.t_star) << "," << format_double(F.gamma) << ","
        << format_double(F.x_star) << "," << format_double(F.sup_value) << ","
        << format_double(F.center_value) << "," << (F.relaxed ? 1 : 0) << ","
        << format_double(L.res_coarse.res1) << "," << format_double(L.res_fine.res1) << ","
        << format_double(L.res_coarse.res2) << "," << format_double(L.res_fine.res2) << ","
        << format_double(L.res_fine.share1) << "," << format_double(L.res_fine.share2) << "\n";
    rows.push_back({{"level", L.level}, {"gamma", F.gamma}, {"sup_value", F.sup_value},
                    {"center_value", F.center_value}, {"res1_coarse", L.res_coarse.res1},
                    {"res1_fine", L.res_fine.res1}, {"res2_coarse", L.res_coarse.res2},
                    {"res2_fine", L.res_fine.res2}, {"share1", L.res_fine.share1},
                    {"share2", L.res_fine.share2}});
  }
  fs::create_directories(c.out);
  write_text(fs::path(c.out) / "rescale.csv", csv.str());

  Outcome o;
  o.data = {{"levels", rows}, {"nodes_coarse", coarse.size()}, {"nodes_fine", fine.size()}};
  std::ostringstream l;
  l << "rescale-verify:";
  for (const auto& L : lv)
    l << " [level " << L.level << " sup " << fmt(L.fine.sup_value) << " center "
      << fmt(L.fine.center_value) << " res1 " << fmt(L.res_coarse.res1, 3) << "->"
      << fmt(L.res_fine.res1, 3) << " share1 " << fmt(L.res_fine.share1, 3) << "]";
  l << " " << verdict(ok);
  o.line = l.str();
  o.code = ok ? kExitPass : kExitVerdict;
  return o;
}

Outcome cmd_oracle_ode(const Common& c, double reaction_cap) {
  auto cfg = load_any(c.config);
  if (cfg.model.boundary != Boundary::neumann || cfg.model.init.kind != InitKind::constant)
    throw UsageError("oracle-ode needs neumann boundary and constant initial data");
  cfg.solver.reaction_cap = reaction_cap;
  cfg.solver.validate();
  const auto exps = compute_exponents(cfg.model);
  const auto& m = cfg.model;
  const double T_exact = ode_blowup_time(m.p1, m.p2, m.init.amplitude_u, m.init.amplitude_v);
  const RadialGrid grid(cfg.nodes, m.radius);
  const auto res = run_to_blowup(m, exps, grid, cfg.solver);
  const auto T = estimate_blowup_time(res.series, exps.alpha);
  const auto f = fit_rate(res.series, T.T_est, Channel::max_u, exps, cfg.fit);
  const double dT = std::abs(T.T_est - T_exact);
  const bool ok = dT <= c.t("ode_T") && f.rel_error() <= c.t("ode_exponent");
  Outcome o;
  o.data = {{"T_exact", T_exact}, {"T_est", T.T_est}, {"abs_error", dT},
            {"exponent", f.exponent}, {"predicted", f.predicted}, {"rel_error", f.rel_error()}};
  o.line = "oracle-ode: T_est " + fmt(T.T_est, 6) + " vs " + fmt(T_exact, 6) + " ± " +
           fmt(c.t("ode_T")) + ", exponent " + fmt(f.exponent, 4) + " vs " + fmt(f.predicted, 4) +
           " " + verdict(ok);
  o.code = ok ? kExitPass : kExitVerdict;
  return o;
}

Outcome cmd_oracle_transform(const Common& c) {
  const auto cfg = load_any(c.config);
  const auto& m = cfg.model;
  if (m.q1 != 2.0) throw UsageError("oracle-transform needs q1 = 2");
  std::vector<TransformComparison> cmp;
  std::vector<std::size_t> nodes{cfg.nodes, 2 * cfg.nodes - 1};
  for (auto N : nodes) {
    const RadialGrid grid(N, m.radius);
    cmp.push_back(compare_transform(m.p1, m, grid, cfg.solver,
                                    initial_profile(grid, m, m.init.amplitude_u),
                                    c.t("transform_cap")));
  }
  const double shrink = cmp[0].max_abs_diff / cmp[1].max_abs_diff;
  const bool ok = cmp[0].max_abs_diff <= c.t("transform_diff") && shrink >= c.t("transform_refine");
  std::ostringstream csv;
  csv << "nodes,max_abs_diff,t_end,max_u_end,steps\n";
  json rows = json::array();
  for (std::size_t k = 0; k < cmp.size(); ++k) {
    csv << nodes[k] << "," << format_double(cmp[k].max_abs_diff) << ","
        << format_double(cmp[k].t_end) << "," << format_double(cmp[k].max_u_end) << ","
        << cmp[k].steps << "\n";
    rows.push_back({{"nodes", nodes[k]}, {"max_abs_diff", cmp[k].max_abs_diff},
                    {"t_end", cmp[k].t_end}, {"max_u_end", cmp[k].max_u_end}});
  }
  fs::create_directories(c.out);
  write_text(fs::path(c.out) / "transform.csv", csv.str());
  Outcome o;
  o.data = {{"runs", rows}, {"shrink", shrink}};
  o.line = "oracle-transform: |u - log(1+w)| " + fmt(cmp[0].max_abs_diff, 3) + " at N=" +
           std::to_string(nodes[0]) + ", " + fmt(cmp[1].max_abs_diff, 3) + " at N=" +
           std::to_string(nodes[1]) + " (x" + fmt(shrink, 3) + ") " + verdict(ok);
  o.code = ok ? kExitPass : kExitVerdict;
  return o;
}

Outcome cmd_blowup_set(const Common& c) {
  const auto cfg = load_any(c.config);
  const auto& m = cfg.model;
  const RadialGrid grid(cfg.nodes, m.radius);
  const auto res = run_scalar(m, grid, cfg.solver);
  WidthOptions wo;
  wo.single_point_below = c.t("width_single");
  wo.global_above = c.t("width_global");
  const auto tr = blowup_set_width(res.snapshots, grid, wo);
  fs::create_directories(c.out);
  write_width_csv(fs::path(c.out) / "width.csv", tr);

  // the expected picture is only known for q = 2 (ball: p > 2 single point, p < 2 global)
  std::string expect = "none";
  bool ok = true;
  const double R = m.radius;
  if (m.q1 == 2.0 && m.p1 > 2.0) {
    expect = "single-point";
    ok = tr.final_width < wo.single_point_below * R;
  } else if (m.q1 == 2.0 && m.p1 < 2.0) {
    expect = "global";
    ok = tr.resolved_min_width > wo.global_above * R;
  }
  Outcome o;
  o.data = {{"kind", to_string(tr.kind)},          {"expected", expect},
            {"final_width", tr.final_width},       {"min_width", tr.min_width},
            {"resolved_min_width", tr.resolved_min_width},
            {"resolved_from", tr.resolved_from},   {"stop_reason", to_string(res.stop_reason)}};
  o.line = "blowup-set: " + to_string(tr.kind) + ", final width " + fmt(tr.final_width / R) +
           "R, min over resolved window " + fmt(tr.resolved_min_width / R) + "R";
  if (expect != "none") o.line += std::string(", expected ") + expect + " " + verdict(ok);
  o.code = ok ? kExitPass : kExitVerdict;
  return o;
}

// ---------------------------------------------------------------------------
// sweep

struct Axis {
  std::string key;
  std::vector<double> values;
};

Axis parse_axis(const std::string& spec) {
  const auto eq = spec.find('=');
  if (eq == std::string::npos) throw UsageError("--vary expects key=lo:hi:step");
  Axis a;
  a.key = spec.substr(0, eq);
  if (!is_overridable_key(a.key)) throw UsageError("cannot vary unknown key '" + a.key + "'");
  std::vector<double> parts;
  std::stringstream ss(spec.substr(eq + 1));
  std::string tok;
  try {
    while (std::getline(ss, tok, ':')) parts.push_back(std::stod(tok));
  } catch (const std::logic_error&) {
    throw UsageError("bad number in --vary '" + spec + "'");
  }
  if (parts.size() != 3) throw UsageError("--vary expects key=lo:hi:step");
  const double lo = parts[0], hi = parts[1], st = parts[2];
  if (!(st > 0.0) || !(hi >= lo)) throw UsageError("empty --vary range '" + spec + "'");
  const auto count = static_cast<std::size_t>(std::floor((hi - lo) / st + 1e-9)) + 1;
  for (std::size_t k = 0; k < count; ++k) a.values.push_back(lo + static_cast<double>(k) * st);
  return a;
}

struct Cell {
  std::vector<double> at;
  std::string row;
  bool ok = false;
};

std::string csv_safe(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char ch : s) {
    if (ch == '\n') ch = ' ';
    if (ch == '"') q += '"';
    q += ch;
  }
  return q + "\"";
}

void run_cell(const RunConfig& base, const std::vector<Axis>& axes, const fs::path& dir, Cell& cell) {
  std::ostringstream r;
  for (double v : cell.at) r << format_double(v) << ",";
  try {
    RunConfig cfg = base;
    for (std::size_t a = 0; a < axes.size(); ++a) cfg = with_override(cfg, axes[a].key, cell.at[a]);
    const auto& m = cfg.model;
    const auto hyp = check_theorem_hypotheses(m);
    r << format_double(m.p1) << "," << format_double(m.p2) << "," << format_double(m.q1) << ","
      << format_double(m.q2) << "," << m.n << "," << format_double(hyp.exps.alpha) << ","
      << format_double(hyp.exps.beta) << "," << hyp.cond_fujita << "," << hyp.cond_q << ",";
    const RadialGrid grid(cfg.nodes, m.radius);
    const auto res = run_to_blowup(m, hyp.exps, grid, cfg.solver);
    fs::create_directories(dir);
    write_text(dir / "config.toml", config_to_toml(cfg));
    write_series_csv(dir / "series.csv", res.series);
    const auto b = fit_all(res.series, hyp.exps, cfg.fit);
    write_fit_csv(dir / "fit.csv", b.fits);
    r << to_string(res.stop_reason) << "," << (b.T ? format_double(b.T->T_est) : "nan");
    for (Channel ch : {Channel::M_u, Channel::M_v}) {
      const auto* f = find_fit(b.fits, ch);
      r << "," << (f ? format_double(f->exponent) : "nan") << ","
        << format_double(predicted_exponent(ch, hyp.exps)) << ","
        << (f ? format_double(f->rel_error()) : "nan");
    }
    r << "," << csv_safe(b.error);
    cell.ok = b.error.empty();
  } catch (const std::exception& e) {
    // keep the column count fixed whatever stage failed
    std::string s = r.str();
    const auto have = static_cast<std::size_t>(std::count(s.begin(), s.end(), ','));
    const std::size_t want = axes.size() + 17;
    for (std::size_t k = have; k < want; ++k) s += "nan,";
    s += csv_safe(e.what());
    cell.row = s;
    return;
  }
  cell.row = r.str();
}

Outcome cmd_sweep(const Common& c, const std::vector<std::string>& vary, int jobs) {
  if (vary.empty() || vary.size() > 2) throw UsageError("sweep needs one or two --vary axes");
  if (jobs < 1) throw UsageError("--jobs must be >= 1");
  const auto base = load_any(c.config);
  std::vector<Axis> axes;
  for (const auto& v : vary) axes.push_back(parse_axis(v));

  std::vector<Cell> cells;
  for (double a : axes[0].values) {
    if (axes.size() == 1) {
      cells.push_back({{a}, "", false});
    } else {
      for (double b : axes[1].values) cells.push_back({{a, b}, "", false});
    }
  }
  const fs::path root(c.out);
  fs::create_directories(root);
  auto cell_dir = [&](std::size_t k) {
    char name[32];
    std::snprintf(name, sizeof name, "cell_%04zu", k);
    return root / name;
  };

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k; (k = next++) < cells.size();) run_cell(base, axes, cell_dir(k), cells[k]);
  };
  std::vector<std::thread> pool;
  const auto nthreads = std::min<std::size_t>(static_cast<std::size_t>(jobs), cells.size());
  for (std::size_t k = 1; k < nthreads; ++k) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  std::ostringstream csv;
  csv << "cell";
  for (const auto& a : axes) csv << ",vary:" << a.key;
  csv << ",p1,p2,q1,q2,n,alpha,beta,cond_fujita,cond_q,stop_reason,T_est,exponent_M_u,"
         "predicted_M_u,rel_error_M_u,exponent_M_v,predicted_M_v,rel_error_M_v,error\n";
  std::size_t good = 0;
  for (std::size_t k = 0; k < cells.size(); ++k) {
    csv << k << "," << cells[k].row << "\n";
    good += cells[k].ok;
  }
  write_text(root / "phase.csv", csv.str());
  Outcome o;
  o.data = {{"cells", cells.size()}, {"fitted", good}, {"phase_csv", (root / "phase.csv").string()}};
  o.line = "sweep: " + std::to_string(cells.size()) + " cells, " + std::to_string(good) +
           " fitted, table in " + (root / "phase.csv").string();
  return o;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Blow-up laboratory for u_t = Lap u + |grad u|^q1 + v^p1, v_t = Lap v + |grad v|^q2 + u^p2"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kToolVersion));

  Common c;
  int first_level = 1;
  int levels = 3;
  double ode_cap = 1e-4;
  std::vector<std::string> vary;
  int jobs = 1;

  auto add_common = [&](CLI::App* sub, bool needs_config) {
    auto* opt = sub->add_option("--config", c.config, "TOML config, or a manifest.json to replay");
    if (needs_config) opt->required();
    sub->add_option("--out", c.out, "output directory")->capture_default_str();
    sub->add_option("--tol", c.tol, "override a verdict threshold, name=value");
    sub->add_flag("--json", c.json, "machine-readable output");
    return sub;
  };
  auto* check = add_common(app.add_subcommand("check", "exponents and hypothesis report"), true);
  auto* run = add_common(app.add_subcommand("run", "integrate to blow-up and fit rates"), true);
  auto* fit = add_common(app.add_subcommand("fit", "refit the rates of a prior run"), false);
  auto* dbl = add_common(app.add_subcommand("doubling", "doubling-time analysis of a prior run"), false);
  auto* ratio = add_common(app.add_subcommand("ratio", "M_u/M_v ratio trace of a prior run"), false);
  auto* resc = add_common(app.add_subcommand("rescale-verify", "rescaled frames at doubling levels"), true);
  resc->add_option("--first-level", first_level, "first doubling level")->capture_default_str();
  resc->add_option("--levels", levels, "number of levels")->capture_default_str();
  auto* ode = add_common(app.add_subcommand("oracle-ode", "spatially constant data against the ODE"), true);
  ode->add_option("--reaction-cap", ode_cap, "reaction cap used for the oracle run")
      ->capture_default_str();
  auto* tro = add_common(app.add_subcommand("oracle-transform", "q = 2 against w = e^u - 1"), true);
  auto* bset = add_common(app.add_subcommand("blowup-set", "half-max width of the scalar q run"), true);
  auto* sweep = add_common(app.add_subcommand("sweep", "parameter sweep into phase.csv"), true);
  sweep->add_option("--vary", vary, "key=lo:hi:step (one or two)")->required();
  sweep->add_option("--jobs", jobs, "worker threads")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    app.exit(e, out, err);
    return kExitPass;
  } catch (const CLI::CallForVersion& e) {
    app.exit(e, out, err);
    return kExitPass;
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitUsage;
  }

  Outcome o;
  try {
    apply_tolerances(c);
    if (check->parsed()) o = cmd_check(c);
    else if (run->parsed()) o = cmd_run(c);
    else if (fit->parsed()) o = cmd_fit(c);
    else if (dbl->parsed()) o = cmd_doubling(c);
    else if (ratio->parsed()) o = cmd_ratio(c);
    else if (resc->parsed()) o = cmd_rescale(c, first_level, levels);
    else if (ode->parsed()) o = cmd_oracle_ode(c, ode_cap);
    else if (tro->parsed()) o = cmd_oracle_transform(c);
    else if (bset->parsed()) o = cmd_blowup_set(c);
    else if (sweep->parsed()) o = cmd_sweep(c, vary, jobs);
  } catch (const std::invalid_argument& e) {  // config, parameter and usage errors
    o.code = kExitUsage;
    o.line = std::string("error: ") + e.what();
  } catch (const IoError& e) {
    o.code = kExitUsage;
    o.line = std::string("error: ") + e.what();
  } catch (const std::exception& e) {  // analysis or integration failure: no verdict possible
    o.code = kExitVerdict;
    o.line = std::string("FAIL: ") + e.what();
  }

  if (c.json) {
    json j = o.data;
    j["command"] = app.get_subcommands().front()->get_name();
    j["summary"] = o.line;
    j["exit_code"] = o.code;
    out << j.dump(2) << "\n";
  } else {
    (o.code == kExitUsage ? err : out) << o.line << "\n";
  }
  return o.code;
}

}  // namespace blowup
