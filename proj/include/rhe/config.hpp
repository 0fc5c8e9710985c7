#pragma once

// Flat "key = value" experiment configuration. Presets supply every key;
// a config file or command-line overrides replace them key by key.

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rhe/energy.hpp"
#include "rhe/grid.hpp"

namespace rhe {

enum class Experiment { speed, obstacle, compare, border, probe, custom };

std::string_view experiment_name(Experiment e) noexcept;
std::optional<Experiment> parse_experiment(std::string_view name) noexcept;

struct EnergyConfig {
  EnergyModel::Kind kind = EnergyModel::Kind::power;
  double m = 2.0;
  double c = 0.5;
  EnergyModel model() const;
  bool operator==(const EnergyConfig&) const = default;
};

enum class InitKind { uniform, ball, table };

struct InitConfig {
  InitKind kind = InitKind::uniform;
  Point center{0.0, 0.0};
  double radius = 0.0;
  std::string table;  // CSV whose last column holds one value per cell
  bool operator==(const InitConfig&) const = default;
};

struct ExperimentConfig {
  Experiment experiment = Experiment::custom;
  int dim = 1;
  Point domain_min{0.0, 0.0};
  Point domain_max{1.0, 1.0};
  std::array<int, 2> resolution{100, 1};
  double tau = 1.0;
  double epsilon = 0.5;
  std::size_t steps = 1;
  double speed_limit = 1.0;
  EnergyConfig energy;
  std::vector<Box> obstacles;
  InitConfig init;
  std::string output_dir = "out";
  double tol = 1e-8;
  std::size_t max_iter = 10000;
  bool log_domain = false;
  bool stop_at_steady = false;
  double steady_tol = 1e-10;
  std::optional<Point> anchor;
  // Second energy of the compare experiment; the first is `energy`.
  EnergyConfig compare_energy{EnergyModel::Kind::power, 5.0, 1.0};
  // Probe ladder: delta_k = epsilon_k = 2^-k for k in [probe_k_min, probe_k_max].
  int probe_k_min = 2;
  int probe_k_max = 6;
  double probe_log_domain_below = 0.02;
  bool dump_kernel = false;
  bool dump_scaling = false;

  bool operator==(const ExperimentConfig&) const = default;
};

/// Defaults for a preset. Parameters follow the published runs except for
/// the grid resolution, which is reduced unless `full_scale` is set.
ExperimentConfig preset(Experiment e, bool full_scale = false);

/// Resolution of the published run of a preset.
std::array<int, 2> full_scale_resolution(Experiment e);

/// One "key = value" assignment with its origin for diagnostics.
struct Setting {
  std::string key;
  std::string value;
  std::string origin;  // e.g. "run.cfg:12" or "--set"
};

/// Parses "key = value" lines; '#' starts a comment. Throws ConfigError
/// naming the line on malformed input.
std::vector<Setting> parse_settings(std::string_view text, std::string_view source);
std::vector<Setting> read_settings_file(const std::string& path);

/// Applies settings in order. Unknown keys and bad values throw
/// ConfigError naming the key and its origin.
void apply_settings(ExperimentConfig& cfg, const std::vector<Setting>& settings);

/// Preset selected by an "experiment" setting (custom if absent) with all
/// settings applied, then validated.
ExperimentConfig resolve_config(const std::vector<Setting>& settings, bool full_scale = false);

/// Positivity and consistency checks; throws ConfigError.
void validate(const ExperimentConfig& cfg);

/// Every key with its resolved value, parseable by parse_settings.
std::string to_text(const ExperimentConfig& cfg);

/// "200", "50x150" or "50,150".
std::array<int, 2> parse_resolution(std::string_view text, int dim);

}  // namespace rhe
