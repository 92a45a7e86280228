#include "vpl/config.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <limits>
#include <sstream>

namespace vpl {

ConfigError::ConfigError(std::vector<std::string> violations)
    : Error([&] {
        std::string msg = "invalid configuration:";
        for (const auto& v : violations) msg += "\n  - " + v;
        return msg;
      }()),
      violations_(std::move(violations)) {}

std::string to_string(RunMode mode) {
  switch (mode) {
    case RunMode::nonlinear:
      return "nonlinear";
    case RunMode::linearized:
      return "linearized";
    case RunMode::operator_test:
      return "operator_test";
  }
  return "?";
}

std::string to_string(InitialFamily family) {
  switch (family) {
    case InitialFamily::single_mode:
      return "single_mode";
    case InitialFamily::two_mode:
      return "two_mode";
    case InitialFamily::random_bandlimited:
      return "random_bandlimited";
  }
  return "?";
}

InitialFamily parse_initial_family(const std::string& name) {
  if (name == "single_mode") return InitialFamily::single_mode;
  if (name == "two_mode") return InitialFamily::two_mode;
  if (name == "random_bandlimited") return InitialFamily::random_bandlimited;
  throw ParameterError("unknown initial family '" + name + "' (expected single_mode, two_mode or random_bandlimited)");
}

RunMode RunConfig::mode() const {
  if (operator_test_mode) return RunMode::operator_test;
  if (linearized_mode) return RunMode::linearized;
  return RunMode::nonlinear;
}

PhaseGrid RunConfig::grid() const {
  return PhaseGrid{SpatialGrid(dim_x, n_x, box_length), VelocityGrid(n_v, velocity_cutoff)};
}

WeightSpec RunConfig::weights() const {
  return model == Model::landau ? WeightSpec::landau(gamma, k) : WeightSpec::boltzmann(gamma, s, k);
}

TimeStepConfig RunConfig::step_config() const {
  TimeStepConfig c;
  c.dt = dt;
  c.scheme = scheme;
  c.picard_tol = picard_tol;
  c.picard_max_iters = picard_max_iters;
  c.conservative_correction = conservative_correction;
  c.linearized = linearized_mode;
  return c;
}

namespace {

bool power_of_two_at_least_4(int n) { return n >= 4 && (n & (n - 1)) == 0; }

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::vector<std::string> RunConfig::violations() const {
  std::vector<std::string> out;
  if (model == Model::landau) {
    if (!(gamma >= -3.0 && gamma <= 1.0)) out.push_back("gamma=" + fmt(gamma) + " outside [-3, 1] for Landau");
    if (!(k >= kLandauK0)) out.push_back("k below k0=10 for Landau");
  } else {
    if (!(gamma > -3.0 && gamma <= 1.0)) out.push_back("gamma=" + fmt(gamma) + " outside (-3, 1] for Boltzmann weights");
    if (!(s >= 0.5 && s < 1.0)) out.push_back("s=" + fmt(s) + " outside [1/2, 1) for Boltzmann weights");
    if (!(gamma + 2.0 * s > -1.0)) out.push_back("gamma + 2s = " + fmt(gamma + 2.0 * s) + " must exceed -1");
    if (!(k >= kBoltzmannK0)) out.push_back("k below k0=17 for Boltzmann weights");
  }
  if (!(l >= 0.0 && l <= k)) out.push_back("l must lie in [0, k]");
  if (dim_x < 1 || dim_x > 3) out.push_back("dim_x must be 1, 2 or 3");
  if (!power_of_two_at_least_4(n_x)) out.push_back("n_x must be a power of two >= 4");
  if (!power_of_two_at_least_4(n_v)) out.push_back("n_v must be a power of two >= 4");
  if (!(velocity_cutoff > 0.0)) out.push_back("velocity cutoff L must be positive");
  if (!(box_length > 0.0)) out.push_back("box length must be positive");
  if (!(dt > 0.0) || !std::isfinite(dt)) out.push_back("dt must be positive");
  if (!(t_final > 0.0) || !std::isfinite(t_final)) out.push_back("t_final must be positive");
  if (!(picard_tol > 0.0)) out.push_back("picard_tol must be positive");
  if (picard_max_iters < 1) out.push_back("picard_max_iters must be at least 1");
  if (!(initial.amplitude >= 0.0) || !std::isfinite(initial.amplitude))
    out.push_back("initial amplitude must be finite and non-negative");
  const std::size_t needed = initial.family == InitialFamily::two_mode ? 2 : 1;
  if (initial.modes.size() < needed)
    out.push_back("initial family " + to_string(initial.family) + " needs " + std::to_string(needed) + " mode number(s)");
  for (std::size_t i = 0; i < std::min(needed, initial.modes.size()); ++i)
    if (const int m = initial.modes[i]; m < 0 || (n_x >= 4 && m >= n_x / 2)) out.push_back("mode " + std::to_string(m) + " outside [0, n_x/2)");
  if (initial.family == InitialFamily::single_mode && !initial.modes.empty() && initial.modes[0] == 0)
    out.push_back("single_mode needs a nonzero mode number");
  if (initial.family == InitialFamily::random_bandlimited && !initial.modes.empty() && initial.modes[0] < 1)
    out.push_back("random_bandlimited needs a band limit >= 1");
  if (linearized_mode && operator_test_mode) out.push_back("linearized_mode and operator_test_mode are exclusive");
  if (diagnostics_every < 1) out.push_back("diagnostics_every must be at least 1");
  if (checkpoint_every < 0) out.push_back("checkpoint_every must be non-negative");
  if (!(transient_fraction >= 0.0 && transient_fraction < 1.0)) out.push_back("transient_fraction must lie in [0, 1)");
  if (fit_t_start && fit_t_end && !(*fit_t_start < *fit_t_end)) out.push_back("fit window start must precede its end");
  if (output_dir.empty()) out.push_back("output_dir must not be empty");
  return out;
}

namespace {

using Setter = std::function<void(RunConfig&, const std::string&)>;
using Getter = std::function<std::string(const RunConfig&)>;

struct KeySpec {
  std::string key;
  Setter set;
  Getter get;
};

double to_double(const std::string& s) {
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size() || errno == ERANGE) throw ParameterError("'" + s + "' is not a number");
  return v;
}

long long to_integer(const std::string& s) {
  errno = 0;
  char* end = nullptr;
  const long long v = std::strtoll(s.c_str(), &end, 10);
  if (s.empty() || end != s.c_str() + s.size() || errno == ERANGE) throw ParameterError("'" + s + "' is not an integer");
  return v;
}

int to_int(const std::string& s) {
  const long long v = to_integer(s);
  if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max())
    throw ParameterError("'" + s + "' is out of integer range");
  return static_cast<int>(v);
}

bool to_bool(const std::string& s) {
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw ParameterError("'" + s + "' is not a boolean");
}

std::vector<int> to_int_list(const std::string& s) {
  std::vector<int> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b == std::string::npos) throw ParameterError("empty entry in list '" + s + "'");
    out.push_back(to_int(item.substr(b, e - b + 1)));
  }
  if (out.empty()) throw ParameterError("empty list");
  return out;
}

std::string from_bool(bool b) { return b ? "true" : "false"; }

std::string from_list(const std::vector<int>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + std::to_string(v[i]);
  return out;
}

std::string from_optional(const std::optional<double>& v) { return v ? fmt(*v) : "auto"; }

std::optional<double> to_optional(const std::string& s) {
  if (s == "auto") return std::nullopt;
  return to_double(s);
}

#define VPL_DOUBLE(name, field) \
  {name, [](RunConfig& c, const std::string& v) { c.field = to_double(v); }, [](const RunConfig& c) { return fmt(c.field); }}
#define VPL_INT(name, field) \
  {name, [](RunConfig& c, const std::string& v) { c.field = to_int(v); }, \
   [](const RunConfig& c) { return std::to_string(c.field); }}
#define VPL_BOOL(name, field) \
  {name, [](RunConfig& c, const std::string& v) { c.field = to_bool(v); }, \
   [](const RunConfig& c) { return from_bool(c.field); }}

const std::vector<KeySpec>& key_table() {
  static const std::vector<KeySpec> table = {
      {"physics.model", [](RunConfig& c, const std::string& v) { c.model = parse_model(v); },
       [](const RunConfig& c) { return to_string(c.model); }},
      VPL_DOUBLE("physics.gamma", gamma),
      VPL_DOUBLE("physics.s", s),
      VPL_DOUBLE("physics.k", k),
      VPL_DOUBLE("physics.l", l),
      VPL_INT("grid.dim_x", dim_x),
      VPL_INT("grid.n_x", n_x),
      VPL_INT("grid.n_v", n_v),
      VPL_DOUBLE("grid.L", velocity_cutoff),
      VPL_DOUBLE("grid.box_length", box_length),
      VPL_DOUBLE("time.dt", dt),
      VPL_DOUBLE("time.t_final", t_final),
      {"time.scheme", [](RunConfig& c, const std::string& v) { c.scheme = parse_collision_scheme(v); },
       [](const RunConfig& c) { return to_string(c.scheme); }},
      VPL_DOUBLE("time.picard_tol", picard_tol),
      VPL_INT("time.picard_max_iters", picard_max_iters),
      {"initial.family", [](RunConfig& c, const std::string& v) { c.initial.family = parse_initial_family(v); },
       [](const RunConfig& c) { return to_string(c.initial.family); }},
      VPL_DOUBLE("initial.amplitude", initial.amplitude),
      {"initial.modes", [](RunConfig& c, const std::string& v) { c.initial.modes = to_int_list(v); },
       [](const RunConfig& c) { return from_list(c.initial.modes); }},
      {"initial.seed",
       [](RunConfig& c, const std::string& v) {
         const long long s = to_integer(v);
         if (s < 0) throw ParameterError("seed must be non-negative");
         c.initial.seed = static_cast<std::uint64_t>(s);
       },
       [](const RunConfig& c) { return std::to_string(c.initial.seed); }},
      VPL_BOOL("run.conservative_correction", conservative_correction),
      VPL_BOOL("run.linearized_mode", linearized_mode),
      VPL_BOOL("run.operator_test_mode", operator_test_mode),
      VPL_INT("run.diagnostics_every", diagnostics_every),
      VPL_BOOL("run.dissipation", dissipation),
      VPL_INT("run.checkpoint_every", checkpoint_every),
      {"run.seed",
       [](RunConfig& c, const std::string& v) {
         const long long s = to_integer(v);
         if (s < 0) throw ParameterError("seed must be non-negative");
         c.seed = static_cast<std::uint64_t>(s);
       },
       [](const RunConfig& c) { return std::to_string(c.seed); }},
      VPL_DOUBLE("fit.transient_fraction", transient_fraction),
      {"fit.t_start", [](RunConfig& c, const std::string& v) { c.fit_t_start = to_optional(v); },
       [](const RunConfig& c) { return from_optional(c.fit_t_start); }},
      {"fit.t_end", [](RunConfig& c, const std::string& v) { c.fit_t_end = to_optional(v); },
       [](const RunConfig& c) { return from_optional(c.fit_t_end); }},
      {"output.dir", [](RunConfig& c, const std::string& v) { c.output_dir = v; },
       [](const RunConfig& c) { return c.output_dir; }},
  };
  return table;
}

#undef VPL_DOUBLE
#undef VPL_INT
#undef VPL_BOOL

const KeySpec* find_key(const std::string& key) {
  for (const auto& k : key_table())
    if (k.key == key) return &k;
  return nullptr;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

void assign(RunConfig& config, const std::string& key, const std::string& value, const std::string& where,
            std::vector<std::string>& errors) {
  const KeySpec* spec = find_key(key);
  if (!spec) {
    errors.push_back(where + "unknown key '" + key + "'");
    return;
  }
  try {
    spec->set(config, value);
  } catch (const Error& e) {
    errors.push_back(where + key + ": " + e.what());
  }
}

void finish(const RunConfig& config, std::vector<std::string> errors) {
  for (auto& v : config.violations()) errors.push_back(std::move(v));
  if (!errors.empty()) throw ConfigError(std::move(errors));
}

}  // namespace

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> out;
    for (const auto& k : key_table()) out.push_back(k.key);
    return out;
  }();
  return keys;
}

RunConfig parse_config(const std::string& text) {
  RunConfig config;
  std::vector<std::string> errors;
  std::istringstream in(text);
  std::string raw;
  std::string section;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string where = "line " + std::to_string(line_no) + ": ";
    std::string line = raw;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        errors.push_back(where + "malformed section header");
        continue;
      }
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      errors.push_back(where + "expected key = value");
      continue;
    }
    const std::string name = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const std::string key = name.find('.') == std::string::npos && !section.empty() ? section + "." + name : name;
    assign(config, key, value, where, errors);
  }
  finish(config, std::move(errors));
  return config;
}

RunConfig apply_overrides(RunConfig base, const std::map<std::string, std::string>& overrides) {
  std::vector<std::string> errors;
  for (const auto& [key, value] : overrides) assign(base, key, value, "override: ", errors);
  finish(base, std::move(errors));
  return base;
}

std::string echo_config(const RunConfig& config) {
  std::string out;
  std::string section;
  for (const auto& k : key_table()) {
    const auto dot = k.key.find('.');
    const std::string sec = k.key.substr(0, dot);
    if (sec != section) {
      out += (section.empty() ? "" : "\n") + std::string("[") + sec + "]\n";
      section = sec;
    }
    out += k.key.substr(dot + 1) + " = " + k.get(config) + "\n";
  }
  return out;
}

}  // namespace vpl
