#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "blowup/analysis.hpp"
#include "blowup/model.hpp"
#include "blowup/solver.hpp"

namespace blowup {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr const char* kToolVersion = "0.3.0";

/// Everything one run needs, as read from a config file.
struct RunConfig {
  SystemParams model;
  std::size_t nodes = 401;
  SolverConfig solver;
  FitWindow fit;
};

/// Parses the TOML config. p1, p2, q1, q2 are required; everything else
/// falls back to the defaults table in README.md. Unknown tables or keys are
/// rejected. Throws ConfigError.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);

/// Fully resolved config in the same format; parse_config(config_to_toml(c))
/// reproduces c bit for bit.
std::string config_to_toml(const RunConfig& cfg);

/// Applies "section.key=value" or "key=value" overrides (used by sweep).
RunConfig with_override(const RunConfig& cfg, const std::string& key, double value);
bool is_overridable_key(const std::string& key);

std::string format_double(double x);  // 17 significant digits

// CSV -----------------------------------------------------------------------

void write_series_csv(const std::filesystem::path& path, const SupNormSeries& series);
SupNormSeries read_series_csv(const std::filesystem::path& path);

void write_fit_csv(const std::filesystem::path& path, const std::vector<RateFit>& fits);
void write_doubling_csv(const std::filesystem::path& path, const DoublingReport& rep);
void write_ratio_csv(const std::filesystem::path& path, const RatioTrace& trace);
void write_width_csv(const std::filesystem::path& path, const WidthTrace& trace);

/// Generic reader: header names plus rows of numbers ("nan" allowed).
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};
CsvTable read_csv(const std::filesystem::path& path);

// SVG -----------------------------------------------------------------------

struct PlotLine {
  double slope = 0.0;      // in log10-log10 coordinates
  double intercept = 0.0;
};

/// Log-log polyline chart with axes; optional fitted line overlaid.
void emit_svg(const std::filesystem::path& path, const std::string& title,
              const std::vector<double>& x, const std::vector<double>& y,
              const std::string& x_label, const std::string& y_label,
              std::optional<PlotLine> fit = std::nullopt);

// Manifest ------------------------------------------------------------------

struct RunManifest {
  std::string config_echo;
  Exponents exponents;
  HypothesisReport hypotheses;
  std::string stop_reason;
  std::size_t steps = 0;
  std::optional<double> T_est;
  std::vector<RateFit> fits;
  std::string tool_version = kToolVersion;
  double wall_seconds = 0.0;
};

void write_manifest(const std::filesystem::path& path, const RunManifest& m);
RunManifest read_manifest(const std::filesystem::path& path);

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

}  // namespace blowup
