// End-to-end acceptance run: one PASS/FAIL line per criterion, exit 1 if any fails.
// Pipeline criteria go through the CLI entry point with --json so the
// verdicts are exactly the ones a user would get.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "blowup/analysis.hpp"
#include "blowup/cli.hpp"
#include "blowup/grid.hpp"
#include "blowup/io.hpp"
#include "blowup/model.hpp"
#include "blowup/solver.hpp"
#include "mms.hpp"

using namespace blowup;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const fs::path kConfigs = BLOWUP_CONFIG_DIR;
const fs::path kOut = fs::current_path() / "acceptance_out";

struct Cli {
  int code = -1;
  json j;
};

Cli cli(std::vector<std::string> args) {
  args.insert(args.begin(), "blowup");
  args.push_back("--json");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  Cli r;
  r.code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  try {
    r.j = json::parse(out.str());
  } catch (const json::exception&) {
    r.j = {{"summary", err.str()}};
  }
  return r;
}

std::string fmt(double x, int prec = 4) {
  std::ostringstream o;
  o.precision(prec);
  o << x;
  return o.str();
}

int failures = 0;

// Runs one criterion; body returns pass/fail and fills the detail line.
void criterion(int id, const std::string& name, double limit_s,
               const std::function<bool(std::string&)>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  std::string detail;
  bool ok = false;
  try {
    ok = body(detail);
  } catch (const std::exception& e) {
    detail += std::string(" exception: ") + e.what();
  }
  const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (limit_s > 0.0 && s > limit_s) {
    ok = false;
    detail += " (over the " + fmt(limit_s) + " s limit)";
  }
  failures += !ok;
  std::printf("%s  %2d %s: %s [%.1f s]\n", ok ? "PASS" : "FAIL", id, name.c_str(), detail.c_str(), s);
  std::fflush(stdout);
}

bool rel_close(double a, double b, double tol) { return std::abs(a - b) <= tol * std::abs(b); }

SupNormSeries exact_power_law(double alpha, double beta) {
  SupNormSeries s;
  for (int k = 0; k <= 8 * 26; ++k) {
    const double tau = std::pow(2.0, -k / (8.0 * alpha));
    s.push(-tau, std::pow(tau, -alpha), std::pow(tau, -beta), 0, 0, 0, 0, 0);
  }
  return s;
}

std::string write_variant(const fs::path& base, const std::string& key, double value,
                          const std::string& name) {
  const auto cfg = with_override(load_config(base), key, value);
  const auto p = kOut / name;
  write_text(p, config_to_toml(cfg));
  return p.string();
}

}  // namespace

int main() {
  fs::create_directories(kOut);
  const auto thm = (kOut / "theorem").string();
  const auto sym = (kOut / "scalar_rate").string();

  criterion(1, "exponent arithmetic", 1.0, [](std::string& d) {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> P(1.05, 6.0), Q(1.01, 2.0);
    double worst = 0.0;
    auto rel = [](double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); };
    for (int k = 0; k < 100; ++k) {
      SystemParams s;
      s.p1 = P(rng);
      s.p2 = P(rng);
      s.q1 = Q(rng);
      s.q2 = Q(rng);
      const auto e = compute_exponents(s);
      for (double r : {rel(s.p1 * e.beta, e.alpha + 1), rel(s.p2 * e.alpha, e.beta + 1),
                       rel(e.theta1, 2 * e.alpha / (2 * e.alpha + 1)),
                       rel(e.theta2, 2 * e.beta / (2 * e.beta + 1)),
                       rel(e.q1_bound, 1 + 1 / (2 * e.alpha + 1)),
                       rel(e.mu1, (2 * e.alpha + 1) * (e.q1_bound - s.q1)),
                       rel(e.mu2, (2 * e.beta + 1) * (e.q2_bound - s.q2))})
        worst = std::max(worst, r);
    }
    SystemParams s;
    s.p1 = 2;
    s.p2 = 3;
    const auto e = compute_exponents(s);
    const bool exact = rel(e.alpha, 0.6) <= 1e-15 && rel(e.beta, 0.8) <= 1e-15 &&
                       rel(e.theta1, 6.0 / 11) <= 1e-15 && rel(e.theta2, 8.0 / 13) <= 1e-15;
    d = "worst identity error " + fmt(worst, 2) + " over 100 sets; (2,3) -> alpha " + fmt(e.alpha, 17) +
        " beta " + fmt(e.beta, 17);
    return worst <= 1e-12 && exact;
  });

  criterion(2, "operator exactness and order", 10.0, [](std::string& d) {
    double worst = 0.0;
    for (int n = 1; n <= 3; ++n) {
      const RadialGrid g(64, 1.0);
      std::vector<double> f(g.size());
      for (std::size_t i = 0; i < g.size(); ++i) f[i] = 1.0 - g.r(i) * g.r(i);
      const auto L = radial_laplacian(g, f, n);
      const auto G = gradient_magnitude(g, f);
      for (std::size_t i = 0; i + 1 < g.size(); ++i) {
        worst = std::max(worst, std::abs(L[i] + 2.0 * n) / (2.0 * n));
        if (i > 0) worst = std::max(worst, std::abs(G[i] - 2 * g.r(i)) / (2 * g.r(i)));
      }
    }
    double order = 1e9;
    for (int n = 1; n <= 3; ++n) {
      const double e1 = testing::mms_error(21, n, 0.1);
      const double e2 = testing::mms_error(41, n, 0.1);
      const double e3 = testing::mms_error(81, n, 0.1);
      order = std::min({order, std::log2(e1 / e2), std::log2(e2 / e3)});
    }
    d = "quadratic error " + fmt(worst, 2) + ", MMS order " + fmt(order, 3) + " (min over n=1..3)";
    return worst <= 1e-12 && order >= 1.9;
  });

  criterion(3, "ODE oracle", 30.0, [](std::string& d) {
    const auto r = cli({"oracle-ode", "--config", (kConfigs / "ode.toml").string()});
    d = r.j.value("summary", "");
    return r.code == kExitPass && std::abs(r.j["T_est"].get<double>() - 1.0) <= 1e-3 &&
           r.j["rel_error"].get<double>() <= 0.02;
  });

  criterion(4, "transform oracle", 120.0, [](std::string& d) {
    const auto r = cli({"oracle-transform", "--config", (kConfigs / "transform.toml").string(),
                        "--out", (kOut / "transform").string()});
    d = r.j.value("summary", "");
    const auto& runs = r.j["runs"];
    return r.code == kExitPass && runs[0]["nodes"] == 2001 &&
           runs[0]["max_abs_diff"].get<double>() <= 1e-3 && runs[0]["max_u_end"].get<double>() <= 6.0 &&
           r.j["shrink"].get<double>() >= 3.0;
  });

  criterion(5, "scalar rate", 180.0, [&](std::string& d) {
    const auto cfg = load_config(kConfigs / "scalar_rate.toml");
    const auto e = compute_exponents(cfg.model);
    const RadialGrid g(cfg.nodes, cfg.model.radius);
    const auto res = run_scalar(cfg.model, g, cfg.solver);
    const auto T = estimate_blowup_time(res.series, e.alpha);
    const auto f = fit_rate(res.series, T.T_est, Channel::M_u, e, cfg.fit);
    d = "M_u exponent " + fmt(f.exponent) + " vs 1/(p-1) = 1 (" + fmt(100 * f.rel_error(), 3) + "%)";
    return std::abs(f.exponent - 1.0) <= 0.15;
  });

  criterion(6, "system rate", 300.0, [&](std::string& d) {
    const auto run = cli({"run", "--config", (kConfigs / "theorem.toml").string(), "--out", thm});
    const auto check = cli({"check", "--config", (kConfigs / "theorem.toml").string()});
    const auto fit = cli({"fit", "--out", thm});
    d = fit.j.value("summary", run.j.value("summary", ""));
    if (run.code != kExitPass || check.code != kExitPass) return false;
    bool ok = fit.code == kExitPass;
    for (const auto& f : fit.j["fits"]) {
      const auto ch = f["channel"].get<std::string>();
      if (ch == "M_u" || ch == "M_v") ok = ok && f["rel_error"].get<double>() <= 0.15;
    }
    for (const auto& [k, p] : fit.j["products"].items()) ok = ok && p["bounded"].get<bool>();
    return ok && fit.j["products"].size() == 2;
  });

  criterion(7, "ratio bound", 0.0, [&](std::string& d) {
    const auto sym_run = cli({"run", "--config", (kConfigs / "scalar_rate.toml").string(), "--out", sym});
    const auto s = cli({"ratio", "--out", sym});
    const auto a = cli({"ratio", "--out", thm});
    const double smin = s.j["phi_min"], smax = s.j["phi_max"];
    d = "symmetric Φ ∈ [" + fmt(smin, 17) + "," + fmt(smax, 17) + "]; " + a.j.value("summary", "");
    return sym_run.code == kExitPass && std::abs(smin - 1) <= 1e-10 && std::abs(smax - 1) <= 1e-10 &&
           a.code == kExitPass && a.j["spread"].get<double>() <= 10.0;
  });

  criterion(8, "doubling bound", 0.0, [&](std::string& d) {
    const auto r = cli({"doubling", "--out", thm});
    const double target = std::pow(2.0, -1.0 / 0.6);
    bool ok = r.code == kExitPass && r.j["last_ratios"].size() == 5 && !r.j["monotone_growth"].get<bool>();
    for (const auto& x : r.j["last_ratios"]) ok = ok && rel_close(x.get<double>(), target, 0.25);
    // synthetic exact power law
    const auto rep = doubling_analysis(exact_power_law(0.6, 0.8), 0.6, -1.0);
    double worst = 0.0;
    for (std::size_t j = 0; j + 2 < rep.t_j.size(); ++j) worst = std::max(worst, std::abs(rep.ratio_j[j] - target));
    d = r.j.value("summary", "") + "; synthetic ratio error " + fmt(worst, 2);
    return ok && std::isfinite(r.j["sup_D"].get<double>()) && worst <= 1e-10;
  });

  criterion(9, "rescaling verification", 0.0, [&](std::string& d) {
    // coarse grid 201 nodes, refined 401 = 2*201 - 1 (the criterion-6 resolution)
    const auto cfg = write_variant(kConfigs / "theorem.toml", "nodes", 201, "theorem_201.toml");
    const auto r = cli({"rescale-verify", "--config", cfg, "--out", (kOut / "rescale").string()});
    d = r.j.value("summary", "");
    const auto& lv = r.j["levels"];
    bool ok = r.code == kExitPass && lv.size() == 3;
    for (std::size_t k = 0; k < lv.size(); ++k) {
      ok = ok && lv[k]["sup_value"].get<double>() <= 1.05 && lv[k]["center_value"].get<double>() >= 0.45;
      ok = ok && lv[k]["res1_fine"].get<double>() < lv[k]["res1_coarse"].get<double>();
      ok = ok && lv[k]["res2_fine"].get<double>() < lv[k]["res2_coarse"].get<double>();
      if (k > 0) ok = ok && lv[k]["share1"].get<double>() < lv[k - 1]["share1"].get<double>();
      if (k > 0) ok = ok && lv[k]["share2"].get<double>() < lv[k - 1]["share2"].get<double>();
    }
    return ok;
  });

  criterion(10, "blow-up set, p = 3", 300.0, [&](std::string& d) {
    const auto r = cli({"blowup-set", "--config", (kConfigs / "blowup_set_p30.toml").string(), "--out",
                        (kOut / "set_p3").string()});
    d = r.j.value("summary", "");
    return r.code == kExitPass && r.j["final_width"].get<double>() < 0.2;
  });

  criterion(10, "blow-up set, p = 1.5", 300.0, [&](std::string& d) {
    const auto r = cli({"blowup-set", "--config", (kConfigs / "blowup_set_p15.toml").string(), "--out",
                        (kOut / "set_p15").string()});
    d = r.j.value("summary", "");
    return r.code == kExitPass && r.j["resolved_min_width"].get<double>() > 0.5;
  });

  criterion(11, "determinism and round trip", 0.0, [&](std::string& d) {
    const auto replay = (kOut / "theorem_replay").string();
    const auto r = cli({"run", "--config", thm + "/manifest.json", "--out", replay});
    const bool same = r.code == kExitPass &&
                      read_text(fs::path(replay) / "series.csv") == read_text(fs::path(thm) / "series.csv");

    const auto s = read_series_csv(fs::path(thm) / "series.csv");
    write_series_csv(kOut / "roundtrip.csv", s);
    const auto s2 = read_series_csv(kOut / "roundtrip.csv");
    bool lossless = s.size() == s2.size() && s.size() > 0;
    const std::vector<double>* cols[][2] = {{&s.t, &s2.t},         {&s.M_u, &s2.M_u},
                                            {&s.M_v, &s2.M_v},     {&s.max_u, &s2.max_u},
                                            {&s.max_v, &s2.max_v}, {&s.max_grad_u, &s2.max_grad_u},
                                            {&s.max_grad_v, &s2.max_grad_v},
                                            {&s.argmax_r_u, &s2.argmax_r_u}};
    for (auto& c : cols)
      lossless = lossless && std::memcmp(c[0]->data(), c[1]->data(), c[0]->size() * sizeof(double)) == 0;

    const auto cfg = write_variant(kConfigs / "scalar_rate.toml", "nodes", 101, "sweep_base.toml");
    const auto a = (kOut / "sweep_j1").string();
    const auto b = (kOut / "sweep_j4").string();
    const auto r1 = cli({"sweep", "--config", cfg, "--vary", "p1=1.5:3.0:0.5", "--vary", "q1=1.1:1.3:0.1",
                         "--jobs", "1", "--out", a});
    const auto r4 = cli({"sweep", "--config", cfg, "--vary", "p1=1.5:3.0:0.5", "--vary", "q1=1.1:1.3:0.1",
                         "--jobs", "4", "--out", b});
    const bool sweep_same = r1.code == kExitPass && r4.code == kExitPass &&
                            read_text(fs::path(a) / "phase.csv") == read_text(fs::path(b) / "phase.csv");
    d = std::string("replay ") + (same ? "identical" : "differs") + ", csv round trip " +
        (lossless ? "lossless" : "lossy") + " (" + std::to_string(s.size()) + " rows), sweep --jobs 1 vs 4 " +
        (sweep_same ? "identical" : "differs");
    return same && lossless && sweep_same;
  });

  std::printf("%s: %d criteria failed\n", failures ? "FAIL" : "PASS", failures);
  return failures ? 1 : 0;
}
