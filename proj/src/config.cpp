#include "rhe/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>

#include "rhe/errors.hpp"

namespace rhe {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

[[noreturn]] void fail(const Setting& s, const std::string& why) {
  throw ConfigError(s.origin + ": key '" + s.key + "': " + why);
}

double to_double(const Setting& s, std::string_view text) {
  text = trim(text);
  double x = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), x);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty() || !std::isfinite(x)) {
    fail(s, "expected a number, got '" + std::string(text) + "'");
  }
  return x;
}

long long to_integer(const Setting& s, std::string_view text) {
  text = trim(text);
  long long x = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), x);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
    fail(s, "expected an integer, got '" + std::string(text) + "'");
  }
  return x;
}

std::size_t to_count(const Setting& s) {
  const long long x = to_integer(s, s.value);
  if (x < 0) fail(s, "must be nonnegative");
  return static_cast<std::size_t>(x);
}

bool to_bool(const Setting& s) {
  const std::string_view v = trim(s.value);
  if (v == "true" || v == "yes" || v == "on" || v == "1") return true;
  if (v == "false" || v == "no" || v == "off" || v == "0") return false;
  fail(s, "expected true or false");
}

std::vector<double> to_list(const Setting& s, std::string_view text) {
  std::vector<double> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = text.find(',', start);
    const auto end = comma == std::string_view::npos ? text.size() : comma;
    out.push_back(to_double(s, text.substr(start, end - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

Point to_point(const Setting& s, int dim) {
  const std::vector<double> v = to_list(s, s.value);
  if (static_cast<int>(v.size()) != dim) {
    fail(s, "expected " + std::to_string(dim) + " comma-separated values");
  }
  return {v[0], dim == 2 ? v[1] : 0.0};
}

std::string point_text(const Point& p, int dim) {
  return dim == 2 ? fmt(p[0]) + ", " + fmt(p[1]) : fmt(p[0]);
}

EnergyModel::Kind to_kind(const Setting& s) {
  const std::string_view v = trim(s.value);
  if (v == "power") return EnergyModel::Kind::power;
  if (v == "boltzmann") return EnergyModel::Kind::boltzmann;
  fail(s, "expected power or boltzmann");
}

std::string_view kind_name(EnergyModel::Kind k) {
  return k == EnergyModel::Kind::power ? "power" : "boltzmann";
}

std::string_view init_name(InitKind k) {
  switch (k) {
    case InitKind::uniform: return "uniform";
    case InitKind::ball: return "ball";
    case InitKind::table: return "table";
  }
  return "uniform";
}

std::vector<Box> to_boxes(const Setting& s, int dim) {
  std::vector<Box> boxes;
  const std::string_view all = trim(s.value);
  if (all.empty() || all == "none") return boxes;
  std::size_t start = 0;
  while (start <= all.size()) {
    const auto semi = all.find(';', start);
    const auto end = semi == std::string_view::npos ? all.size() : semi;
    const std::string_view part = trim(all.substr(start, end - start));
    if (!part.empty()) {
      const std::vector<double> v = to_list(s, part);
      Box b;
      if (dim == 1 && v.size() == 2) {
        b.lo = {v[0], 0.0};
        b.hi = {v[1], 0.0};
      } else if (dim == 2 && v.size() == 4) {
        b.lo = {v[0], v[1]};
        b.hi = {v[2], v[3]};
      } else {
        fail(s, "each box needs " + std::to_string(2 * dim) + " values (lower corner, upper corner)");
      }
      boxes.push_back(b);
    }
    if (semi == std::string_view::npos) break;
    start = semi + 1;
  }
  return boxes;
}

std::string boxes_text(const std::vector<Box>& boxes, int dim) {
  if (boxes.empty()) return "none";
  std::string out;
  for (std::size_t k = 0; k < boxes.size(); ++k) {
    if (k) out += "; ";
    out += point_text(boxes[k].lo, dim) + ", " + point_text(boxes[k].hi, dim);
  }
  return out;
}

using Handler = std::function<void(ExperimentConfig&, const Setting&)>;

const std::map<std::string, Handler, std::less<>>& handlers() {
  static const std::map<std::string, Handler, std::less<>> table = {
      {"experiment",
       [](ExperimentConfig& c, const Setting& s) {
         const auto e = parse_experiment(trim(s.value));
         if (!e) fail(s, "unknown experiment '" + s.value + "'");
         c.experiment = *e;
       }},
      {"domain.min",
       [](ExperimentConfig& c, const Setting& s) {
         const std::vector<double> v = to_list(s, s.value);
         if (v.size() != 1 && v.size() != 2) fail(s, "expected one or two values");
         c.dim = static_cast<int>(v.size());
         c.domain_min = {v[0], c.dim == 2 ? v[1] : 0.0};
         if (c.dim == 1) c.domain_max[1] = 1.0;
       }},
      {"domain.max",
       [](ExperimentConfig& c, const Setting& s) {
         c.domain_max = to_point(s, c.dim);
         if (c.dim == 1) c.domain_max[1] = 1.0;
       }},
      {"grid.resolution",
       [](ExperimentConfig& c, const Setting& s) {
         try {
           c.resolution = parse_resolution(s.value, c.dim);
         } catch (const ConfigError& e) {
           fail(s, e.what());
         }
       }},
      {"tau", [](ExperimentConfig& c, const Setting& s) { c.tau = to_double(s, s.value); }},
      {"epsilon", [](ExperimentConfig& c, const Setting& s) { c.epsilon = to_double(s, s.value); }},
      {"steps", [](ExperimentConfig& c, const Setting& s) { c.steps = to_count(s); }},
      {"speed_limit", [](ExperimentConfig& c, const Setting& s) { c.speed_limit = to_double(s, s.value); }},
      {"energy.kind", [](ExperimentConfig& c, const Setting& s) { c.energy.kind = to_kind(s); }},
      {"energy.m", [](ExperimentConfig& c, const Setting& s) { c.energy.m = to_double(s, s.value); }},
      {"energy.c", [](ExperimentConfig& c, const Setting& s) { c.energy.c = to_double(s, s.value); }},
      {"compare.kind", [](ExperimentConfig& c, const Setting& s) { c.compare_energy.kind = to_kind(s); }},
      {"compare.m", [](ExperimentConfig& c, const Setting& s) { c.compare_energy.m = to_double(s, s.value); }},
      {"compare.c", [](ExperimentConfig& c, const Setting& s) { c.compare_energy.c = to_double(s, s.value); }},
      {"init.kind",
       [](ExperimentConfig& c, const Setting& s) {
         const std::string_view v = trim(s.value);
         if (v == "uniform") {
           c.init.kind = InitKind::uniform;
         } else if (v == "ball") {
           c.init.kind = InitKind::ball;
         } else if (v == "table") {
           c.init.kind = InitKind::table;
         } else {
           fail(s, "expected uniform, ball or table");
         }
       }},
      {"init.center", [](ExperimentConfig& c, const Setting& s) { c.init.center = to_point(s, c.dim); }},
      {"init.radius", [](ExperimentConfig& c, const Setting& s) { c.init.radius = to_double(s, s.value); }},
      {"init.table", [](ExperimentConfig& c, const Setting& s) { c.init.table = std::string(trim(s.value)); }},
      {"obstacles", [](ExperimentConfig& c, const Setting& s) { c.obstacles = to_boxes(s, c.dim); }},
      {"output.dir", [](ExperimentConfig& c, const Setting& s) { c.output_dir = std::string(trim(s.value)); }},
      {"output.dump_kernel", [](ExperimentConfig& c, const Setting& s) { c.dump_kernel = to_bool(s); }},
      {"output.dump_scaling", [](ExperimentConfig& c, const Setting& s) { c.dump_scaling = to_bool(s); }},
      {"solver.tol", [](ExperimentConfig& c, const Setting& s) { c.tol = to_double(s, s.value); }},
      {"solver.max_iter", [](ExperimentConfig& c, const Setting& s) { c.max_iter = to_count(s); }},
      {"solver.log_domain", [](ExperimentConfig& c, const Setting& s) { c.log_domain = to_bool(s); }},
      {"flow.stop_at_steady", [](ExperimentConfig& c, const Setting& s) { c.stop_at_steady = to_bool(s); }},
      {"flow.steady_tol", [](ExperimentConfig& c, const Setting& s) { c.steady_tol = to_double(s, s.value); }},
      {"anchor",
       [](ExperimentConfig& c, const Setting& s) {
         if (trim(s.value) == "center") {
           c.anchor.reset();
         } else {
           c.anchor = to_point(s, c.dim);
         }
       }},
      {"probe.k_min", [](ExperimentConfig& c, const Setting& s) { c.probe_k_min = static_cast<int>(to_integer(s, s.value)); }},
      {"probe.k_max", [](ExperimentConfig& c, const Setting& s) { c.probe_k_max = static_cast<int>(to_integer(s, s.value)); }},
      {"probe.log_domain_below",
       [](ExperimentConfig& c, const Setting& s) { c.probe_log_domain_below = to_double(s, s.value); }},
  };
  return table;
}

}  // namespace

std::string_view experiment_name(Experiment e) noexcept {
  switch (e) {
    case Experiment::speed: return "speed";
    case Experiment::obstacle: return "obstacle";
    case Experiment::compare: return "compare";
    case Experiment::border: return "border";
    case Experiment::probe: return "probe";
    case Experiment::custom: return "custom";
  }
  return "custom";
}

std::optional<Experiment> parse_experiment(std::string_view name) noexcept {
  for (Experiment e : {Experiment::speed, Experiment::obstacle, Experiment::compare, Experiment::border,
                       Experiment::probe, Experiment::custom}) {
    if (experiment_name(e) == name) return e;
  }
  return std::nullopt;
}

EnergyModel EnergyConfig::model() const {
  return kind == EnergyModel::Kind::boltzmann ? EnergyModel::boltzmann() : EnergyModel::power(m, c);
}

std::array<int, 2> full_scale_resolution(Experiment e) {
  switch (e) {
    case Experiment::speed: return {400, 1200};
    case Experiment::obstacle: return {100, 300};
    case Experiment::compare: return {1000, 1};
    case Experiment::border: return {1000, 1};
    case Experiment::probe: return {64, 1};
    case Experiment::custom: return {100, 1};
  }
  return {100, 1};
}

ExperimentConfig preset(Experiment e, bool full_scale) {
  ExperimentConfig c;
  c.experiment = e;
  c.output_dir = "out/" + std::string(experiment_name(e));
  switch (e) {
    case Experiment::speed:
      c.dim = 2;
      c.domain_min = {-1.0, -3.0};
      c.domain_max = {1.0, 3.0};
      c.resolution = {50, 150};
      c.tau = 1.0;
      c.epsilon = 0.5;
      c.energy = {EnergyModel::Kind::power, 2.0, 0.5};
      c.init = {InitKind::ball, {0.0, -2.8}, 0.8, ""};
      c.steps = 4;
      c.anchor = Point{0.0, -2.8};
      break;
    case Experiment::obstacle:
      c.dim = 2;
      c.domain_min = {-1.0, -3.0};
      c.domain_max = {1.0, 3.0};
      c.resolution = {50, 150};
      c.tau = 0.5;
      c.epsilon = 0.1;
      c.energy = {EnergyModel::Kind::power, 2.0, 0.5};
      c.obstacles = {Box{{-0.5, -0.3}, {0.5, 0.3}}};
      c.init = {InitKind::ball, {0.0, -1.2}, 0.3, ""};
      c.steps = 6;
      c.anchor = Point{0.0, -1.2};
      break;
    case Experiment::compare:
      c.dim = 1;
      c.domain_min = {-3.0, 0.0};
      c.domain_max = {3.0, 1.0};
      c.resolution = {200, 1};
      c.tau = 0.02;
      c.epsilon = 0.04;
      c.steps = 50;
      c.energy = {EnergyModel::Kind::boltzmann, 1.0, 1.0};
      // Unit-height block on [-1, 1]. Stored densities carry unit mass, and a
      // mass-M datum under h = r^m evolves like the unit-mass one under
      // h = M^(m-1) r^m, hence c = 2^4.
      c.compare_energy = {EnergyModel::Kind::power, 5.0, 16.0};
      c.init = {InitKind::ball, {0.0, 0.0}, 1.0, ""};
      c.max_iter = 50000;
      c.anchor = Point{0.0, 0.0};
      break;
    case Experiment::border:
      c.dim = 1;
      c.domain_min = {0.0, 0.0};
      c.domain_max = {10.0, 1.0};
      c.resolution = {1000, 1};
      c.tau = 2.0;
      c.epsilon = 2.0;
      c.energy = {EnergyModel::Kind::power, 2.0, 0.5};
      c.init = {InitKind::uniform, {0.0, 0.0}, 0.0, ""};
      c.steps = 500;
      c.stop_at_steady = true;
      c.anchor = Point{5.0, 0.0};
      break;
    case Experiment::probe:
      c.dim = 1;
      c.domain_min = {0.0, 0.0};
      c.domain_max = {1.0, 1.0};
      c.resolution = {64, 1};
      c.tau = 0.3;
      c.epsilon = 1.0 / 64.0;
      c.steps = 1;
      c.energy = {EnergyModel::Kind::power, 2.0, 0.5};
      c.init = {InitKind::ball, {0.5, 0.0}, 0.25, ""};
      c.anchor = Point{0.5, 0.0};
      break;
    case Experiment::custom:
      break;
  }
  if (full_scale && e != Experiment::custom) c.resolution = full_scale_resolution(e);
  return c;
}

std::array<int, 2> parse_resolution(std::string_view text, int dim) {
  std::string t(trim(text));
  for (char& ch : t) {
    if (ch == 'x' || ch == 'X') ch = ',';
  }
  std::vector<long long> v;
  std::stringstream ss(t);
  std::string part;
  while (std::getline(ss, part, ',')) {
    const std::string_view p = trim(part);
    long long x = 0;
    const auto [ptr, ec] = std::from_chars(p.data(), p.data() + p.size(), x);
    if (ec != std::errc() || ptr != p.data() + p.size() || p.empty()) {
      throw ConfigError("bad resolution '" + std::string(text) + "'");
    }
    v.push_back(x);
  }
  if (v.empty() || v.size() > 2) throw ConfigError("bad resolution '" + std::string(text) + "'");
  if (static_cast<int>(v.size()) != dim) {
    throw ConfigError("resolution '" + std::string(text) + "' does not match dimension " + std::to_string(dim));
  }
  for (long long x : v) {
    if (x < 1 || x > 1'000'000) throw ConfigError("resolution entries must be in [1, 1e6]");
  }
  return {static_cast<int>(v[0]), v.size() == 2 ? static_cast<int>(v[1]) : 1};
}

std::vector<Setting> parse_settings(std::string_view text, std::string_view source) {
  std::vector<Setting> out;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    const auto nl = text.find('\n', start);
    std::string_view line = text.substr(start, nl == std::string_view::npos ? text.size() - start : nl - start);
    start = nl == std::string_view::npos ? text.size() : nl + 1;
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::string origin = std::string(source) + ":" + std::to_string(line_no);
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError(origin + ": expected 'key = value'");
    const std::string_view key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError(origin + ": empty key");
    out.push_back({std::string(key), std::string(trim(line.substr(eq + 1))), origin});
  }
  return out;
}

std::vector<Setting> read_settings_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  std::vector<Setting> settings = parse_settings(buf.str(), path);
  // Tables are looked up next to the config file.
  const std::filesystem::path dir = std::filesystem::path(path).parent_path();
  for (Setting& s : settings) {
    if (s.key == "init.table" && !s.value.empty() && std::filesystem::path(s.value).is_relative()) {
      s.value = (dir / s.value).string();
    }
  }
  return settings;
}

void apply_settings(ExperimentConfig& cfg, const std::vector<Setting>& settings) {
  const auto& table = handlers();
  for (const Setting& s : settings) {
    const auto it = table.find(s.key);
    if (it == table.end()) throw ConfigError(s.origin + ": unknown key '" + s.key + "'");
    it->second(cfg, s);
  }
}

ExperimentConfig resolve_config(const std::vector<Setting>& settings, bool full_scale) {
  Experiment e = Experiment::custom;
  for (const Setting& s : settings) {
    if (s.key != "experiment") continue;
    const auto parsed = parse_experiment(trim(s.value));
    if (!parsed) fail(s, "unknown experiment '" + s.value + "'");
    e = *parsed;
  }
  ExperimentConfig cfg = preset(e, full_scale);
  apply_settings(cfg, settings);
  validate(cfg);
  return cfg;
}

void validate(const ExperimentConfig& c) {
  auto bad = [](const std::string& key, const std::string& why) {
    throw ConfigError("key '" + key + "': " + why);
  };
  if (c.dim != 1 && c.dim != 2) bad("domain.min", "dimension must be 1 or 2");
  for (int a = 0; a < c.dim; ++a) {
    if (!(c.domain_max[a] > c.domain_min[a])) bad("domain.max", "must exceed domain.min on every axis");
  }
  if (c.resolution[0] < 1 || c.resolution[1] < 1) bad("grid.resolution", "must be at least 1");
  if (c.dim == 1 && c.resolution[1] != 1) bad("grid.resolution", "one-dimensional grids take one count");
  if (!(c.tau > 0.0)) bad("tau", "must be positive");
  if (!(c.epsilon > 0.0)) bad("epsilon", "must be positive");
  if (!(c.speed_limit > 0.0)) bad("speed_limit", "must be positive");
  for (const auto& [name, e] : {std::pair{"energy", c.energy}, std::pair{"compare", c.compare_energy}}) {
    if (e.kind == EnergyModel::Kind::power) {
      if (!(e.m > 1.0)) bad(std::string(name) + ".m", "must exceed 1");
      if (!(e.c > 0.0)) bad(std::string(name) + ".c", "must be positive");
    }
  }
  if (c.init.kind == InitKind::ball && !(c.init.radius > 0.0)) bad("init.radius", "must be positive");
  if (c.init.kind == InitKind::table && c.init.table.empty()) bad("init.table", "path required");
  if (!(c.tol > 0.0)) bad("solver.tol", "must be positive");
  if (c.max_iter < 2) bad("solver.max_iter", "must be at least 2");
  if (!(c.steady_tol > 0.0)) bad("flow.steady_tol", "must be positive");
  if (c.output_dir.empty()) bad("output.dir", "must not be empty");
  for (const Box& b : c.obstacles) {
    for (int a = 0; a < c.dim; ++a) {
      if (!(b.hi[a] >= b.lo[a])) bad("obstacles", "upper corner below lower corner");
    }
  }
  if (c.experiment == Experiment::probe) {
    if (c.dim != 1) bad("domain.min", "the probe runs in one dimension");
    if (c.probe_k_min < 1 || c.probe_k_max > 20 || c.probe_k_min > c.probe_k_max) {
      bad("probe.k_min", "need 1 <= probe.k_min <= probe.k_max <= 20");
    }
  }
}

std::string to_text(const ExperimentConfig& c) {
  std::ostringstream o;
  o << "experiment = " << experiment_name(c.experiment) << '\n';
  o << "domain.min = " << point_text(c.domain_min, c.dim) << '\n';
  o << "domain.max = " << point_text(c.domain_max, c.dim) << '\n';
  o << "grid.resolution = " << c.resolution[0];
  if (c.dim == 2) o << 'x' << c.resolution[1];
  o << '\n';
  o << "tau = " << fmt(c.tau) << '\n';
  o << "epsilon = " << fmt(c.epsilon) << '\n';
  o << "steps = " << c.steps << '\n';
  o << "speed_limit = " << fmt(c.speed_limit) << '\n';
  o << "energy.kind = " << kind_name(c.energy.kind) << '\n';
  o << "energy.m = " << fmt(c.energy.m) << '\n';
  o << "energy.c = " << fmt(c.energy.c) << '\n';
  o << "compare.kind = " << kind_name(c.compare_energy.kind) << '\n';
  o << "compare.m = " << fmt(c.compare_energy.m) << '\n';
  o << "compare.c = " << fmt(c.compare_energy.c) << '\n';
  o << "init.kind = " << init_name(c.init.kind) << '\n';
  o << "init.center = " << point_text(c.init.center, c.dim) << '\n';
  o << "init.radius = " << fmt(c.init.radius) << '\n';
  o << "init.table = " << c.init.table << '\n';
  o << "obstacles = " << boxes_text(c.obstacles, c.dim) << '\n';
  o << "anchor = " << (c.anchor ? point_text(*c.anchor, c.dim) : std::string("center")) << '\n';
  o << "solver.tol = " << fmt(c.tol) << '\n';
  o << "solver.max_iter = " << c.max_iter << '\n';
  o << "solver.log_domain = " << (c.log_domain ? "true" : "false") << '\n';
  o << "flow.stop_at_steady = " << (c.stop_at_steady ? "true" : "false") << '\n';
  o << "flow.steady_tol = " << fmt(c.steady_tol) << '\n';
  o << "probe.k_min = " << c.probe_k_min << '\n';
  o << "probe.k_max = " << c.probe_k_max << '\n';
  o << "probe.log_domain_below = " << fmt(c.probe_log_domain_below) << '\n';
  o << "output.dir = " << c.output_dir << '\n';
  o << "output.dump_kernel = " << (c.dump_kernel ? "true" : "false") << '\n';
  o << "output.dump_scaling = " << (c.dump_scaling ? "true" : "false") << '\n';
  return o.str();
}

}  // namespace rhe
