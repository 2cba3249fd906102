#include "blowup/io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <variant>

#include <json.hpp>

namespace blowup {

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

// ---------------------------------------------------------------------------
// Minimal TOML reader: [tables], key = number | "string" | true/false, comments.
// ---------------------------------------------------------------------------

namespace {

using TomlValue = std::variant<double, std::string, bool>;
using TomlTable = std::map<std::string, std::map<std::string, TomlValue>>;

std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

std::string strip_comment(const std::string& line) {
  bool in_string = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"' && (i == 0 || line[i - 1] != '\\')) in_string = !in_string;
    if (line[i] == '#' && !in_string) return line.substr(0, i);
  }
  return line;
}

bool is_bare_key(const std::string& k) {
  return !k.empty() && std::all_of(k.begin(), k.end(), [](unsigned char c) {
    return std::isalnum(c) || c == '_' || c == '-';
  });
}

std::optional<double> parse_number(std::string s) {
  s.erase(std::remove(s.begin(), s.end(), '_'), s.end());
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.erase(0, 1);
  double x = 0.0;
  const auto* first = s.data();
  const auto* last = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(first, last, x);
  if (ec != std::errc() || ptr != last) return std::nullopt;
  return x;
}

TomlTable parse_toml(const std::string& text) {
  TomlTable out;
  std::string section;
  std::istringstream in(text);
  std::string raw;
  int lineno = 0;
  auto fail = [&](const std::string& msg) {
    throw ConfigError("config line " + std::to_string(lineno) + ": " + msg);
  };
  while (std::getline(in, raw)) {
    ++lineno;
    const auto line = trim(strip_comment(raw));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']' || line.size() < 3 || line[1] == '[') fail("malformed table header");
      section = trim(line.substr(1, line.size() - 2));
      if (!is_bare_key(section)) fail("unsupported table name '" + section + "'");
      if (out.count(section)) fail("duplicate table [" + section + "]");
      out[section];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail("expected key = value");
    const auto key = trim(line.substr(0, eq));
    const auto val = trim(line.substr(eq + 1));
    if (!is_bare_key(key)) fail("unsupported key '" + key + "'");
    if (section.empty()) fail("key '" + key + "' outside of a table");
    auto& tbl = out[section];
    if (tbl.count(key)) fail("duplicate key '" + key + "'");
    if (val.empty()) fail("missing value for '" + key + "'");
    if (val.front() == '"') {
      if (val.size() < 2 || val.back() != '"') fail("unterminated string");
      tbl[key] = val.substr(1, val.size() - 2);
    } else if (val == "true" || val == "false") {
      tbl[key] = val == "true";
    } else if (auto num = parse_number(val)) {
      tbl[key] = *num;
    } else {
      fail("cannot parse value '" + val + "' for '" + key + "'");
    }
  }
  return out;
}

// Numeric keys, shared by the parser, the echo and sweep overrides.
struct NumericKey {
  const char* section;
  const char* key;
  std::function<double&(RunConfig&)> ref;
};

const std::vector<NumericKey>& numeric_keys() {
  static const std::vector<NumericKey> keys = {
      {"model", "p1", [](RunConfig& c) -> double& { return c.model.p1; }},
      {"model", "p2", [](RunConfig& c) -> double& { return c.model.p2; }},
      {"model", "q1", [](RunConfig& c) -> double& { return c.model.q1; }},
      {"model", "q2", [](RunConfig& c) -> double& { return c.model.q2; }},
      {"domain", "radius", [](RunConfig& c) -> double& { return c.model.radius; }},
      {"time", "safety", [](RunConfig& c) -> double& { return c.solver.safety; }},
      {"time", "reaction_cap", [](RunConfig& c) -> double& { return c.solver.reaction_cap; }},
      {"time", "m_stop", [](RunConfig& c) -> double& { return c.solver.m_stop; }},
      {"time", "t_max", [](RunConfig& c) -> double& { return c.solver.t_max; }},
      {"init", "amplitude_u", [](RunConfig& c) -> double& { return c.model.init.amplitude_u; }},
      {"init", "amplitude_v", [](RunConfig& c) -> double& { return c.model.init.amplitude_v; }},
      {"init", "width", [](RunConfig& c) -> double& { return c.model.init.width; }},
      {"fit", "window_lo", [](RunConfig& c) -> double& { return c.fit.lo; }},
      {"fit", "window_hi", [](RunConfig& c) -> double& { return c.fit.hi; }},
  };
  return keys;
}

const std::map<std::string, std::vector<std::string>>& allowed_keys() {
  static const std::map<std::string, std::vector<std::string>> keys = {
      {"model", {"p1", "p2", "q1", "q2", "n"}},
      {"domain", {"kind", "radius", "boundary"}},
      {"grid", {"nodes"}},
      {"time", {"safety", "reaction_cap", "m_stop", "t_max", "record_every"}},
      {"init", {"kind", "amplitude_u", "amplitude_v", "width"}},
      {"fit", {"window_lo", "window_hi"}},
  };
  return keys;
}

double as_number(const TomlValue& v, const std::string& name) {
  if (const auto* d = std::get_if<double>(&v)) return *d;
  throw ConfigError("'" + name + "' must be a number");
}

long as_integer(const TomlValue& v, const std::string& name) {
  const double d = as_number(v, name);
  if (std::floor(d) != d || std::abs(d) > 1e15) throw ConfigError("'" + name + "' must be an integer");
  return static_cast<long>(d);
}

std::string as_string(const TomlValue& v, const std::string& name) {
  if (const auto* s = std::get_if<std::string>(&v)) return *s;
  throw ConfigError("'" + name + "' must be a string");
}

void validate_config(const RunConfig& cfg) {
  try {
    cfg.model.validate();
    cfg.solver.validate();
  } catch (const ParameterError& e) {
    throw ConfigError(e.what());
  }
  if (cfg.nodes < 3) throw ConfigError("nodes must be >= 3 (N >= 3)");
  if (!(cfg.fit.lo > 0.0 && cfg.fit.hi > cfg.fit.lo && cfg.fit.hi < 1.0))
    throw ConfigError("fit window must satisfy 0 < window_lo < window_hi < 1");
}

}  // namespace

RunConfig parse_config(const std::string& text) {
  const auto toml = parse_toml(text);
  for (const auto& [section, kv] : toml) {
    const auto it = allowed_keys().find(section);
    if (it == allowed_keys().end()) throw ConfigError("unknown table [" + section + "]");
    for (const auto& [key, _] : kv) {
      if (std::find(it->second.begin(), it->second.end(), key) == it->second.end())
        throw ConfigError("unknown key '" + key + "' in [" + section + "]");
    }
  }
  auto find = [&](const char* section, const char* key) -> const TomlValue* {
    const auto s = toml.find(section);
    if (s == toml.end()) return nullptr;
    const auto k = s->second.find(key);
    return k == s->second.end() ? nullptr : &k->second;
  };

  RunConfig cfg;
  for (const char* key : {"p1", "p2", "q1", "q2"})
    if (!find("model", key)) throw ConfigError(std::string("missing required key [model] ") + key);

  bool width_given = false;
  for (const auto& nk : numeric_keys()) {
    if (const auto* v = find(nk.section, nk.key)) {
      nk.ref(cfg) = as_number(*v, nk.key);
      width_given = width_given || std::string(nk.key) == "width";
    }
  }
  if (const auto* v = find("model", "n")) {
    const long n = as_integer(*v, "n");
    if (n < 1) throw ConfigError("n must be >= 1");
    cfg.model.n = static_cast<int>(n);
  }
  if (const auto* v = find("grid", "nodes")) {
    const long nodes = as_integer(*v, "nodes");
    if (nodes < 3) throw ConfigError("nodes must be >= 3 (N >= 3)");
    cfg.nodes = static_cast<std::size_t>(nodes);
  }
  if (const auto* v = find("time", "record_every")) {
    const long r = as_integer(*v, "record_every");
    if (r < 1) throw ConfigError("record_every must be >= 1");
    cfg.solver.record_every = static_cast<int>(r);
  }
  if (const auto* v = find("domain", "kind")) {
    const auto s = as_string(*v, "kind");
    if (s == "ball") cfg.model.domain = DomainKind::ball;
    else if (s == "truncated-space") cfg.model.domain = DomainKind::truncated_space;
    else throw ConfigError("domain kind must be \"ball\" or \"truncated-space\"");
  }
  if (const auto* v = find("domain", "boundary")) {
    const auto s = as_string(*v, "boundary");
    if (s == "dirichlet") cfg.model.boundary = Boundary::dirichlet;
    else if (s == "neumann") cfg.model.boundary = Boundary::neumann;
    else throw ConfigError("boundary must be \"dirichlet\" or \"neumann\"");
  }
  if (const auto* v = find("init", "kind")) {
    const auto s = as_string(*v, "kind");
    if (s == "gaussian") cfg.model.init.kind = InitKind::gaussian;
    else if (s == "cosine_bump") cfg.model.init.kind = InitKind::cosine_bump;
    else if (s == "constant") cfg.model.init.kind = InitKind::constant;
    else throw ConfigError("init kind must be \"gaussian\", \"cosine_bump\" or \"constant\"");
  }
  if (!width_given) cfg.model.init.width = 0.3 * cfg.model.radius;
  validate_config(cfg);
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) { return parse_config(read_text(path)); }

std::string config_to_toml(const RunConfig& c) {
  std::ostringstream o;
  const auto& m = c.model;
  o << "[model]\n"
    << "p1 = " << format_double(m.p1) << "\n"
    << "p2 = " << format_double(m.p2) << "\n"
    << "q1 = " << format_double(m.q1) << "\n"
    << "q2 = " << format_double(m.q2) << "\n"
    << "n = " << m.n << "\n\n"
    << "[domain]\n"
    << "kind = \"" << to_string(m.domain) << "\"\n"
    << "radius = " << format_double(m.radius) << "\n"
    << "boundary = \"" << to_string(m.boundary) << "\"\n\n"
    << "[grid]\n"
    << "nodes = " << c.nodes << "\n\n"
    << "[time]\n"
    << "safety = " << format_double(c.solver.safety) << "\n"
    << "reaction_cap = " << format_double(c.solver.reaction_cap) << "\n"
    << "m_stop = " << format_double(c.solver.m_stop) << "\n"
    << "t_max = " << format_double(c.solver.t_max) << "\n"
    << "record_every = " << c.solver.record_every << "\n\n"
    << "[init]\n"
    << "kind = \"" << to_string(m.init.kind) << "\"\n"
    << "amplitude_u = " << format_double(m.init.amplitude_u) << "\n"
    << "amplitude_v = " << format_double(m.init.amplitude_v) << "\n"
    << "width = " << format_double(m.init.width) << "\n\n"
    << "[fit]\n"
    << "window_lo = " << format_double(c.fit.lo) << "\n"
    << "window_hi = " << format_double(c.fit.hi) << "\n";
  return o.str();
}

bool is_overridable_key(const std::string& key) {
  std::string section;
  std::string name = key;
  if (const auto dot = key.find('.'); dot != std::string::npos) {
    section = key.substr(0, dot);
    name = key.substr(dot + 1);
  }
  for (const auto& nk : numeric_keys())
    if (name == nk.key && (section.empty() || section == nk.section)) return true;
  return (name == "n" && (section.empty() || section == "model")) ||
         (name == "nodes" && (section.empty() || section == "grid")) ||
         (name == "record_every" && (section.empty() || section == "time"));
}

RunConfig with_override(const RunConfig& cfg, const std::string& key, double value) {
  std::string section;
  std::string name = key;
  if (const auto dot = key.find('.'); dot != std::string::npos) {
    section = key.substr(0, dot);
    name = key.substr(dot + 1);
  }
  RunConfig out = cfg;
  for (const auto& nk : numeric_keys()) {
    if (name == nk.key && (section.empty() || section == nk.section)) {
      nk.ref(out) = value;
      validate_config(out);
      return out;
    }
  }
  auto integral = [&](const char* what) {
    if (std::floor(value) != value) throw ConfigError(std::string(what) + " must be an integer");
    return static_cast<long>(value);
  };
  if (name == "n" && (section.empty() || section == "model")) {
    out.model.n = static_cast<int>(integral("n"));
  } else if (name == "nodes" && (section.empty() || section == "grid")) {
    const long v = integral("nodes");
    if (v < 3) throw ConfigError("nodes must be >= 3 (N >= 3)");
    out.nodes = static_cast<std::size_t>(v);
  } else if (name == "record_every" && (section.empty() || section == "time")) {
    out.solver.record_every = static_cast<int>(integral("record_every"));
  } else {
    throw ConfigError("cannot vary unknown numeric key '" + key + "'");
  }
  validate_config(out);
  return out;
}

// ---------------------------------------------------------------------------
// Files
// ---------------------------------------------------------------------------

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path.string() + "' for writing");
  f << text;
  if (!f) throw IoError("write failed for '" + path.string() + "'");
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path.string() + "'");
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

namespace {

void write_rows(const std::filesystem::path& path, const std::string& header,
                const std::vector<std::vector<double>>& columns) {
  std::ostringstream o;
  o << header << "\n";
  const std::size_t rows = columns.empty() ? 0 : columns.front().size();
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t c = 0; c < columns.size(); ++c) o << (c ? "," : "") << format_double(columns[c][i]);
    o << "\n";
  }
  write_text(path, o.str());
}

// Splits one record; double-quoted cells may contain the separator ("" escapes a quote).
std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') out.back() += line[++i];
      else if (c == '"') quoted = false;
      else out.back() += c;
    } else if (c == '"') {
      quoted = true;
    } else if (c == sep) {
      out.emplace_back();
    } else {
      out.back() += c;
    }
  }
  return out;
}

double to_double(const std::string& s) {
  // from_chars keeps subnormals that stod rejects, and reads nan/inf
  double x = 0.0;
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
  if (ec == std::errc::invalid_argument || end != s.data() + s.size())
    throw IoError("bad number '" + s + "' in csv");
  return x;
}

}  // namespace

CsvTable read_csv(const std::filesystem::path& path) {
  std::istringstream in(read_text(path));
  CsvTable t;
  std::string line;
  if (!std::getline(in, line)) throw IoError("empty csv '" + path.string() + "'");
  t.header = split(line, ',');
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto row = split(line, ',');
    if (row.size() != t.header.size()) throw IoError("ragged csv row in '" + path.string() + "'");
    t.rows.push_back(std::move(row));
  }
  return t;
}

void write_series_csv(const std::filesystem::path& path, const SupNormSeries& s) {
  write_rows(path, "t,M_u,M_v,max_u,max_v,max_grad_u,max_grad_v,argmax_r_u",
             {s.t, s.M_u, s.M_v, s.max_u, s.max_v, s.max_grad_u, s.max_grad_v, s.argmax_r_u});
}

SupNormSeries read_series_csv(const std::filesystem::path& path) {
  const auto t = read_csv(path);
  const std::vector<std::string> expected = {"t",     "M_u",        "M_v",        "max_u",
                                             "max_v", "max_grad_u", "max_grad_v", "argmax_r_u"};
  if (t.header != expected) throw IoError("unexpected series.csv header in '" + path.string() + "'");
  SupNormSeries s;
  for (const auto& r : t.rows) {
    s.push(to_double(r[0]), to_double(r[1]), to_double(r[2]), to_double(r[3]), to_double(r[4]),
           to_double(r[5]), to_double(r[6]), to_double(r[7]));
  }
  return s;
}

void write_fit_csv(const std::filesystem::path& path, const std::vector<RateFit>& fits) {
  std::ostringstream o;
  o << "channel,T_est,exponent,predicted_exponent,rel_error,amplitude,rms_residual,window_lo,"
       "window_hi,points_used\n";
  for (const auto& f : fits) {
    o << to_string(f.channel) << "," << format_double(f.T_est) << "," << format_double(f.exponent)
      << "," << format_double(f.predicted) << "," << format_double(f.rel_error()) << ","
      << format_double(f.amplitude) << "," << format_double(f.rms_residual) << ","
      << format_double(f.tau_lo) << "," << format_double(f.tau_hi) << "," << f.points_used << "\n";
  }
  write_text(path, o.str());
}

void write_doubling_csv(const std::filesystem::path& path, const DoublingReport& rep) {
  std::vector<double> j(rep.t_j.size());
  for (std::size_t i = 0; i < j.size(); ++i) j[i] = static_cast<double>(i);
  write_rows(path, "j,t_j,D_j,ratio_j", {j, rep.t_j, rep.D_j, rep.ratio_j});
}

void write_ratio_csv(const std::filesystem::path& path, const RatioTrace& trace) {
  write_rows(path, "t,phi", {trace.t, trace.phi});
}

void write_width_csv(const std::filesystem::path& path, const WidthTrace& trace) {
  write_rows(path, "t,max_u,width", {trace.t, trace.max_u, trace.width});
}

// ---------------------------------------------------------------------------
// SVG
// ---------------------------------------------------------------------------

void emit_svg(const std::filesystem::path& path, const std::string& title,
              const std::vector<double>& x, const std::vector<double>& y,
              const std::string& x_label, const std::string& y_label, std::optional<PlotLine> fit) {
  constexpr double W = 640, H = 480, L = 70, Rm = 20, T = 40, B = 60;
  std::vector<std::pair<double, double>> pts;
  for (std::size_t i = 0; i < std::min(x.size(), y.size()); ++i)
    if (x[i] > 0.0 && y[i] > 0.0 && std::isfinite(x[i]) && std::isfinite(y[i]))
      pts.emplace_back(std::log10(x[i]), std::log10(y[i]));
  double x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (!pts.empty()) {
    x0 = x1 = pts[0].first;
    y0 = y1 = pts[0].second;
    for (auto [a, b] : pts) {
      x0 = std::min(x0, a);
      x1 = std::max(x1, a);
      y0 = std::min(y0, b);
      y1 = std::max(y1, b);
    }
    if (x1 == x0) x1 = x0 + 1;
    if (y1 == y0) y1 = y0 + 1;
  }
  auto px = [&](double a) { return L + (a - x0) / (x1 - x0) * (W - L - Rm); };
  auto py = [&](double b) { return H - B - (b - y0) / (y1 - y0) * (H - T - B); };

  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n"
    << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">" << title
    << "</text>\n"
    << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - Rm << "\" y2=\"" << H - B
    << "\" stroke=\"black\"/>\n"
    << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B
    << "\" stroke=\"black\"/>\n";
  for (int k = static_cast<int>(std::ceil(x0)); k <= static_cast<int>(std::floor(x1)); ++k)
    o << "<text x=\"" << px(k) << "\" y=\"" << H - B + 18 << "\" text-anchor=\"middle\" font-size=\"11\">1e"
      << k << "</text>\n";
  for (int k = static_cast<int>(std::ceil(y0)); k <= static_cast<int>(std::floor(y1)); ++k)
    o << "<text x=\"" << L - 6 << "\" y=\"" << py(k) + 4 << "\" text-anchor=\"end\" font-size=\"11\">1e"
      << k << "</text>\n";
  o << "<text x=\"" << W / 2 << "\" y=\"" << H - 15 << "\" text-anchor=\"middle\" font-size=\"13\">"
    << x_label << "</text>\n"
    << "<text x=\"18\" y=\"" << H / 2 << "\" transform=\"rotate(-90 18 " << H / 2
    << ")\" text-anchor=\"middle\" font-size=\"13\">" << y_label << "</text>\n";
  if (!pts.empty()) {
    o << "<polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"1.5\" points=\"";
    for (auto [a, b] : pts) o << px(a) << "," << py(b) << " ";
    o << "\"/>\n";
  }
  if (fit) {
    const double ya = fit->intercept + fit->slope * x0;
    const double yb = fit->intercept + fit->slope * x1;
    o << "<line x1=\"" << px(x0) << "\" y1=\"" << py(ya) << "\" x2=\"" << px(x1) << "\" y2=\""
      << py(yb) << "\" stroke=\"crimson\" stroke-dasharray=\"6,4\"/>\n";
  }
  o << "</svg>\n";
  write_text(path, o.str());
}

// ---------------------------------------------------------------------------
// Manifest
// ---------------------------------------------------------------------------

namespace {

nlohmann::json exponents_json(const Exponents& e) {
  return {{"alpha", e.alpha},       {"beta", e.beta},         {"mu1", e.mu1},
          {"mu2", e.mu2},           {"theta1", e.theta1},     {"theta2", e.theta2},
          {"q1_bound", e.q1_bound}, {"q2_bound", e.q2_bound}, {"cond_fujita", e.cond_fujita},
          {"cond_q", e.cond_q}};
}

Exponents exponents_from(const nlohmann::json& j) {
  Exponents e;
  e.alpha = j.at("alpha");
  e.beta = j.at("beta");
  e.mu1 = j.at("mu1");
  e.mu2 = j.at("mu2");
  e.theta1 = j.at("theta1");
  e.theta2 = j.at("theta2");
  e.q1_bound = j.at("q1_bound");
  e.q2_bound = j.at("q2_bound");
  e.cond_fujita = j.at("cond_fujita");
  e.cond_q = j.at("cond_q");
  return e;
}

}  // namespace

void write_manifest(const std::filesystem::path& path, const RunManifest& m) {
  nlohmann::json j;
  j["config_echo"] = m.config_echo;
  j["exponents"] = exponents_json(m.exponents);
  j["hypotheses"] = {{"cond_fujita", m.hypotheses.cond_fujita},
                     {"cond_q", m.hypotheses.cond_q},
                     {"margin_q1", m.hypotheses.margin_q1},
                     {"margin_q2", m.hypotheses.margin_q2},
                     {"margin_fujita", m.hypotheses.margin_fujita}};
  j["stop_reason"] = m.stop_reason;
  j["steps"] = m.steps;
  j["T_est"] = m.T_est ? nlohmann::json(*m.T_est) : nlohmann::json(nullptr);
  j["fits"] = nlohmann::json::array();
  for (const auto& f : m.fits) {
    j["fits"].push_back({{"channel", to_string(f.channel)},
                         {"T_est", f.T_est},
                         {"exponent", f.exponent},
                         {"predicted_exponent", f.predicted},
                         {"amplitude", f.amplitude},
                         {"rms_residual", f.rms_residual},
                         {"window_lo", f.tau_lo},
                         {"window_hi", f.tau_hi},
                         {"points_used", f.points_used}});
  }
  j["tool_version"] = m.tool_version;
  j["wall_seconds"] = m.wall_seconds;
  write_text(path, j.dump(2) + "\n");
}

RunManifest read_manifest(const std::filesystem::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_text(path));
  } catch (const nlohmann::json::exception& e) {
    throw IoError("malformed manifest '" + path.string() + "': " + e.what());
  }
  RunManifest m;
  m.config_echo = j.at("config_echo");
  m.exponents = exponents_from(j.at("exponents"));
  const auto& h = j.at("hypotheses");
  m.hypotheses.exps = m.exponents;
  m.hypotheses.cond_fujita = h.at("cond_fujita");
  m.hypotheses.cond_q = h.at("cond_q");
  m.hypotheses.margin_q1 = h.at("margin_q1");
  m.hypotheses.margin_q2 = h.at("margin_q2");
  m.hypotheses.margin_fujita = h.at("margin_fujita");
  m.stop_reason = j.at("stop_reason");
  m.steps = j.at("steps");
  if (!j.at("T_est").is_null()) m.T_est = j.at("T_est").get<double>();
  for (const auto& f : j.at("fits")) {
    RateFit r;
    r.channel = channel_from_string(f.at("channel"));
    r.T_est = f.at("T_est");
    r.exponent = f.at("exponent");
    r.predicted = f.at("predicted_exponent");
    r.amplitude = f.at("amplitude");
    r.rms_residual = f.at("rms_residual");
    r.tau_lo = f.at("window_lo");
    r.tau_hi = f.at("window_hi");
    r.points_used = f.at("points_used");
    m.fits.push_back(r);
  }
  m.tool_version = j.at("tool_version");
  m.wall_seconds = j.at("wall_seconds");
  return m;
}

}  // namespace blowup
