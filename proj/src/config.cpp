#include "sdprecode/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <type_traits>

namespace sdp {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw ConfigError((where.empty() ? std::string("/") : where) + ": " + what);
}

// Object reader that remembers its JSON pointer and rejects keys it was never asked about.
class Section {
 public:
  Section(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) fail(where_, "expected an object");
  }

  bool has(const char* key) const { return j_.contains(key); }
  std::string path(const char* key) const { return where_ + "/" + key; }

  Section section(const char* key) const {
    claim(key);
    return Section(j_.at(key), path(key));
  }

  template <typename T>
  void read(const char* key, T& out) const {
    if (!has(key)) return;
    claim(key);
    const json& v = j_.at(key);
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) fail(path(key), "expected a boolean");
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) fail(path(key), "expected a string");
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) fail(path(key), "expected an integer");
      if constexpr (std::is_unsigned_v<T>) {
        if (!v.is_number_unsigned()) fail(path(key), "expected a non-negative integer");
      }
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) fail(path(key), "expected a number");
    }
    out = v.get<T>();
  }

  void read(const char* key, std::vector<double>& out) const {
    if (!has(key)) return;
    claim(key);
    const json& v = j_.at(key);
    if (!v.is_array()) fail(path(key), "expected an array of numbers");
    out.clear();
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number()) fail(path(key) + "/" + std::to_string(i), "expected a number");
      out.push_back(v[i].get<double>());
    }
  }

  void read_pair(const char* key, double& lo, double& hi) const {
    std::vector<double> v;
    read(key, v);
    if (!has(key)) return;
    if (v.size() != 2) fail(path(key), "expected [low, high]");
    lo = v[0];
    hi = v[1];
  }

  template <typename E, typename Parse>
  void read_enum(const char* key, E& out, Parse parse) const {
    std::string s;
    read(key, s);
    if (!has(key)) return;
    try {
      out = parse(s);
    } catch (const std::invalid_argument& e) {
      fail(path(key), e.what());
    }
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (std::find(claimed_.begin(), claimed_.end(), it.key()) == claimed_.end()) {
        fail(where_ + "/" + it.key(), "unknown key");
      }
    }
  }

 private:
  void claim(const char* key) const { claimed_.emplace_back(key); }

  const json& j_;
  std::string where_;
  mutable std::vector<std::string> claimed_;
};

ConstellationKind parse_constellation_kind(const std::string& s) {
  if (s == "psk") return ConstellationKind::psk;
  if (s == "qam") return ConstellationKind::qam;
  throw std::invalid_argument("unknown constellation '" + s + "' (expected psk or qam)");
}

std::vector<double> expand_grid(const Section& g) {
  double start = -90.0;
  double stop = 90.0;
  double step = 1.0;
  g.read("start", start);
  g.read("stop", stop);
  g.read("step", step);
  g.finish();
  if (!(step > 0.0) || stop < start) fail(g.path("step"), "grid needs step > 0 and start <= stop");
  std::vector<double> out;
  const long long count = static_cast<long long>(std::floor((stop - start) / step + 1e-9)) + 1;
  for (long long i = 0; i < count; ++i) out.push_back(start + static_cast<double>(i) * step);
  return out;
}

std::pair<std::size_t, std::size_t> line_column(const std::string& text, std::size_t byte) {
  std::size_t line = 1;
  std::size_t col = 1;
  for (std::size_t i = 0; i + 1 < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

}  // namespace

SimConfig config_from_json(const json& j) {
  SimConfig c;
  const Section root(j, "");

  if (root.has("array")) {
    const auto a = root.section("array");
    a.read("n_antennas", c.n_antennas);
    a.read("spacing", c.spacing);
    a.finish();
  }
  if (root.has("channel")) {
    const auto ch = root.section("channel");
    ch.read_enum("model", c.channel.model, parse_channel_model);
    ch.read("n_users", c.channel.n_users);
    ch.read("random_angles", c.channel.random_angles);
    ch.read("angles_deg", c.channel.angles_deg);
    ch.read_pair("angle_range_deg", c.channel.angle_min_deg, c.channel.angle_max_deg);
    ch.read("min_separation_deg", c.channel.min_separation_deg);
    ch.read_enum("gain", c.channel.gain, parse_gain_model);
    ch.read("r0", c.channel.r0);
    ch.read_pair("r_range", c.channel.r_min, c.channel.r_max);
    ch.finish();
  }
  if (root.has("constellation")) {
    const auto k = root.section("constellation");
    k.read_enum("kind", c.constellation, parse_constellation_kind);
    k.read("order", c.order);
    k.finish();
  }
  if (root.has("scheme")) {
    const auto s = root.section("scheme");
    s.read_enum("name", c.scheme.kind, parse_scheme);
    s.read_enum("modulator", c.scheme.modulator, parse_modulator);
    s.read("dither", c.scheme.dither);
    s.read("unit_amplitude", c.scheme.unit_amplitude);
    s.read("clamp", c.scheme.clamp);
    if (s.has("solver")) {
      const auto v = s.section("solver");
      v.read("smoothing", c.scheme.solver.smoothing);
      v.read("regularization", c.scheme.solver.regularization);
      v.read("tolerance", c.scheme.solver.tolerance);
      v.read("max_iters", c.scheme.solver.max_iters);
      v.read("continuation_stages", c.scheme.solver.continuation_stages);
      v.finish();
    }
    s.finish();
  }
  root.read("total_power", c.total_power);
  root.read("snr_db", c.snr_db);
  root.read("trials", c.trials);
  root.read("block_length", c.block_length);
  root.read("max_errors", c.max_errors);
  root.read("batch_size", c.batch_size);
  root.read("seed", c.seed);
  if (root.has("spectrum")) {
    const auto s = root.section("spectrum");
    if (s.has("grid_deg")) {
      if (j.at("spectrum").at("grid_deg").is_object()) {
        c.spectrum_grid_deg = expand_grid(s.section("grid_deg"));
      } else {
        s.read("grid_deg", c.spectrum_grid_deg);
      }
    }
    s.read("trials", c.spectrum_trials);
    s.finish();
  }
  if (root.has("scatter")) {
    const auto s = root.section("scatter");
    s.read("realizations", c.scatter_realizations);
    s.finish();
  }
  root.finish();
  return c;
}

json config_to_json(const SimConfig& c) {
  json j;
  j["array"] = {{"n_antennas", c.n_antennas}, {"spacing", c.spacing}};
  j["channel"] = {
      {"model", to_string(c.channel.model)},
      {"n_users", c.channel.n_users},
      {"random_angles", c.channel.random_angles},
      {"angles_deg", c.channel.angles_deg},
      {"angle_range_deg", {c.channel.angle_min_deg, c.channel.angle_max_deg}},
      {"min_separation_deg", c.channel.min_separation_deg},
      {"gain", to_string(c.channel.gain)},
      {"r0", c.channel.r0},
      {"r_range", {c.channel.r_min, c.channel.r_max}},
  };
  j["constellation"] = {{"kind", c.constellation == ConstellationKind::psk ? "psk" : "qam"}, {"order", c.order}};
  j["scheme"] = {
      {"name", to_string(c.scheme.kind)},
      {"modulator", to_string(c.scheme.modulator)},
      {"dither", c.scheme.dither},
      {"unit_amplitude", c.scheme.unit_amplitude},
      {"clamp", c.scheme.clamp},
      {"solver",
       {{"smoothing", c.scheme.solver.smoothing},
        {"regularization", c.scheme.solver.regularization},
        {"tolerance", c.scheme.solver.tolerance},
        {"max_iters", c.scheme.solver.max_iters},
        {"continuation_stages", c.scheme.solver.continuation_stages}}},
  };
  j["total_power"] = c.total_power;
  j["snr_db"] = c.snr_db;
  j["trials"] = c.trials;
  j["block_length"] = c.block_length;
  j["max_errors"] = c.max_errors;
  j["batch_size"] = c.batch_size;
  j["seed"] = c.seed;
  j["spectrum"] = {{"grid_deg", c.spectrum_grid_deg}, {"trials", c.spectrum_trials}};
  j["scatter"] = {{"realizations", c.scatter_realizations}};
  return j;
}

SimConfig parse_config(const std::string& text, bool validate) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    const auto [line, col] = line_column(text, e.byte);
    throw ConfigError("line " + std::to_string(line) + ", column " + std::to_string(col) +
                      ": malformed JSON");
  }
  SimConfig c = config_from_json(j);
  if (validate) {
    try {
      c.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("/: ") + e.what());
    }
  }
  return c;
}

SimConfig load_config(const std::string& path, bool validate) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open config file");
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return parse_config(ss.str(), validate);
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

}  // namespace sdp
