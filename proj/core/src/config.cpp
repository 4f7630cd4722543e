#include "cit/config.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include "cit/error.hpp"

namespace cit {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

struct BadValue {};

template <class T>
T parse_number(const std::string& s) {
  T value{};
  const char* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, value);
  if (ec != std::errc() || ptr != end) throw BadValue{};
  return value;
}

bool parse_bool(const std::string& s) {
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw BadValue{};
}

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string join(const std::vector<std::string>& items) {
  std::string s;
  for (std::size_t i = 0; i < items.size(); ++i) s += (i ? "," : "") + items[i];
  return s;
}

struct Key {
  std::string name;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

template <class T, class M>
Key number_key(const std::string& name, M member) {
  return {name, [member](RunConfig& c, const std::string& v) { std::invoke(member, c) = parse_number<T>(v); },
          [member](const RunConfig& c) {
            if constexpr (std::is_floating_point_v<T>)
              return format_double(std::invoke(member, c));
            else
              return std::to_string(std::invoke(member, c));
          }};
}

template <class M>
Key bool_key(const std::string& name, M member) {
  return {name, [member](RunConfig& c, const std::string& v) { std::invoke(member, c) = parse_bool(v); },
          [member](const RunConfig& c) { return std::string(std::invoke(member, c) ? "true" : "false"); }};
}

#define CIT_REF(expr) [](auto& c) -> auto& { return expr; }

const std::vector<Key>& keys() {
  static const std::vector<Key> table = [] {
    std::vector<Key> k;
    k.push_back(number_key<std::uint64_t>("a", CIT_REF(c.scheme.a)));
    k.push_back(number_key<std::uint32_t>("b", CIT_REF(c.scheme.b)));
    k.push_back(number_key<double>("beta", CIT_REF(c.scheme.beta)));
    k.push_back(number_key<double>("eps", CIT_REF(c.scheme.eps)));
    k.push_back(number_key<double>("alpha", CIT_REF(c.scheme.alpha)));
    k.push_back(number_key<double>("nu", CIT_REF(c.scheme.nu)));
    k.push_back(number_key<double>("r", CIT_REF(c.scheme.r)));
    k.push_back(number_key<double>("L_noise", CIT_REF(c.scheme.L_noise)));
    k.push_back(number_key<int>("q_max", CIT_REF(c.scheme.q_max)));
    k.push_back(bool_key("desk_mode", CIT_REF(c.scheme.desk_mode)));
    k.push_back(bool_key("strict_pow2", CIT_REF(c.scheme.strict_pow2)));
    k.push_back(number_key<int>("n", CIT_REF(c.n)));
    k.push_back(number_key<double>("dt", CIT_REF(c.dt)));
    k.push_back(number_key<double>("horizon", CIT_REF(c.horizon)));
    k.push_back(number_key<std::uint64_t>("seed", CIT_REF(c.seed)));
    k.push_back(number_key<int>("ensemble", CIT_REF(c.ensemble)));
    k.push_back({"mode",
                 [](RunConfig& c, const std::string& v) {
                   if (v == "nse")
                     c.mode = RunMode::nse;
                   else if (v == "euler")
                     c.mode = RunMode::euler;
                   else
                     throw BadValue{};
                 },
                 [](const RunConfig& c) { return std::string(c.mode == RunMode::euler ? "euler" : "nse"); }});
    k.push_back({"checks", [](RunConfig& c, const std::string& v) { c.checks = split_list(v); },
                 [](const RunConfig& c) { return join(c.checks); }});
    k.push_back({"out", [](RunConfig& c, const std::string& v) { c.out_dir = v; },
                 [](const RunConfig& c) { return c.out_dir.string(); }});
    k.push_back(number_key<double>("noise_amp", CIT_REF(c.noise.amplitude)));
    k.push_back(number_key<double>("noise_decay", CIT_REF(c.noise.decay_s)));
    k.push_back(number_key<double>("noise_sigma", CIT_REF(c.noise.sigma_reg)));
    k.push_back(number_key<double>("noise_mode_cut", CIT_REF(c.noise.mode_cut)));
    k.push_back({"directions",
                 [](RunConfig& c, const std::string& v) {
                   const auto parts = split_list(v);
                   if (parts.size() != 2) throw BadValue{};
                   c.directions0 = parts[0];
                   c.directions1 = parts[1];
                 },
                 [](const RunConfig& c) { return c.directions0 + "," + c.directions1; }});
    k.push_back(number_key<int>("lambda", CIT_REF(c.lambda)));
    k.push_back(bool_key("bifurcate", CIT_REF(c.bifurcate)));
    k.push_back(number_key<double>("bifurcation_lo", CIT_REF(c.bifurcation_lo)));
    k.push_back(number_key<double>("bifurcation_hi", CIT_REF(c.bifurcation_hi)));
    k.push_back(number_key<double>("theta", CIT_REF(c.theta)));
    k.push_back({"ergodic_horizons",
                 [](RunConfig& c, const std::string& v) {
                   c.ergodic_horizons.clear();
                   for (const auto& item : split_list(v)) c.ergodic_horizons.push_back(parse_number<double>(item));
                 },
                 [](const RunConfig& c) {
                   std::vector<std::string> items;
                   for (double h : c.ergodic_horizons) items.push_back(format_double(h));
                   return join(items);
                 }});
    k.push_back(bool_key("export_fields", CIT_REF(c.export_fields)));
    k.push_back(number_key<int>("workers", CIT_REF(c.workers)));
    return k;
  }();
  return table;
}

#undef CIT_REF

void validate(const RunConfig& c) {
  if (c.n < 8 || c.n % 2 != 0) throw ConfigError("n must be even and at least 8");
  if (!(c.dt > 0)) throw ConfigError("dt must be positive");
  if (!(c.horizon > 0)) throw ConfigError("horizon must be positive");
  if (c.ensemble < 1) throw ConfigError("ensemble must be at least 1");
  if (c.workers < 1) throw ConfigError("workers must be at least 1");
  if (c.scheme.q_max < 0) throw ConfigError("q_max must be non-negative");
  if (!(c.theta > 0 && c.theta < 1)) throw ConfigError("theta must lie in (0, 1)");
  if (c.noise.amplitude < 0) throw ConfigError("noise_amp must be non-negative");
  if (c.lambda < 0) throw ConfigError("lambda must be non-negative");
  if (c.bifurcate && !(c.bifurcation_lo < c.bifurcation_hi))
    throw ConfigError("bifurcation_lo must be below bifurcation_hi");
  for (double h : c.ergodic_horizons)
    if (!(h > 0)) throw ConfigError("ergodic horizons must be positive");
  if (c.checks.empty()) throw ConfigError("checks must name at least one check or 'all'");
  for (const auto& name : c.checks) {
    const auto& known = check_names();
    if (name != "all" && std::find(known.begin(), known.end(), name) == known.end())
      throw ConfigError("unknown check '" + name + "'");
  }
}

}  // namespace

const std::vector<std::string>& check_names() {
  static const std::vector<std::string> names{"partition",   "noise_bounds",  "amplitude_identity", "incompressibility",
                                              "consistency", "oscillation",   "bifurcation"};
  return names;
}

const std::vector<std::string>& required_config_keys() {
  static const std::vector<std::string> names{"n", "dt", "horizon", "seed", "mode"};
  return names;
}

bool RunConfig::check_enabled(const std::string& name) const {
  return std::find(checks.begin(), checks.end(), "all") != checks.end() ||
         std::find(checks.begin(), checks.end(), name) != checks.end();
}

RunConfig parse_config(const std::string& text) {
  RunConfig c;
  c.noise.amplitude = 2e-4;
  std::set<std::string> seen;
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = trim(raw.substr(0, raw.find('#')));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = "line " + std::to_string(line_no) + ": ";
    if (eq == std::string::npos) throw ConfigError(where + "expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto& table = keys();
    const auto it = std::find_if(table.begin(), table.end(), [&](const Key& k) { return k.name == key; });
    if (it == table.end()) throw ConfigError(where + "unknown key '" + key + "'");
    if (!seen.insert(key).second) throw ConfigError(where + "duplicate key '" + key + "'");
    try {
      it->set(c, value);
    } catch (const BadValue&) {
      throw ConfigError(where + "malformed value '" + value + "' for key '" + key + "'");
    }
  }
  if (c.mode == RunMode::euler && seen.count("nu") && c.scheme.nu != 0)
    throw ConfigError("mode = euler forbids nu != 0 (got nu = " + format_double(c.scheme.nu) + ")");
  std::vector<std::string> missing;
  for (const auto& k : required_config_keys())
    if (!seen.count(k)) missing.push_back(k);
  if (!missing.empty()) throw ConfigError("missing required keys: " + join(missing));
  validate(c);
  if (c.mode == RunMode::euler) c.scheme.nu = 0;
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string echo_config(const RunConfig& config) {
  std::string out = "# resolved configuration\n";
  for (const auto& k : keys()) out += k.name + " = " + k.get(config) + "\n";
  return out;
}

}  // namespace cit
