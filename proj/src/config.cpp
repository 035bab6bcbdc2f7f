#include "solidslam/config.hpp"

#include <charconv>
#include <cmath>
#include <functional>
#include <map>
#include <numbers>
#include <sstream>

#include "solidslam/io.hpp"

namespace solidslam {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    throw ValidationError(key, "cannot parse '" + value + "'");
  }
  if constexpr (std::is_floating_point_v<T>) {
    if (!std::isfinite(out)) throw ValidationError(key, "must be finite");
  }
  return out;
}

std::string shortest(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return {buf, ptr};
}

// One binding per config key: how to parse into and print out of a Config.
struct Binding {
  std::function<void(Config&, const std::string&, const std::string&)> set;
  std::function<std::optional<std::string>(const Config&)> get;
};

template <typename T>
Binding bind(T Config::*section_member, auto field) {
  Binding b;
  b.set = [section_member, field](Config& c, const std::string& key, const std::string& v) {
    auto& target = (c.*section_member).*field;
    target = parse_number<std::remove_reference_t<decltype(target)>>(key, v);
  };
  b.get = [section_member, field](const Config& c) -> std::optional<std::string> {
    const auto& value = (c.*section_member).*field;
    if constexpr (std::is_floating_point_v<std::remove_cvref_t<decltype(value)>>) {
      return shortest(value);
    } else {
      return std::to_string(value);
    }
  };
  return b;
}

template <typename T>
Binding bind_occupancy(T OccupancyParams::*field) {
  Binding b;
  b.set = [field](Config& c, const std::string& key, const std::string& v) {
    c.mapping.occupancy.*field = parse_number<T>(key, v);
  };
  b.get = [field](const Config& c) -> std::optional<std::string> {
    return shortest(c.mapping.occupancy.*field);
  };
  return b;
}

using Table = std::map<std::string, std::map<std::string, Binding>>;

const Table& table() {
  static const Table t = [] {
    Table t;
    auto& s = t["sensor"];
    s["alpha_min_deg"] = bind(&Config::sensor, &SensorConfig::alpha_min_deg);
    s["alpha_max_deg"] = bind(&Config::sensor, &SensorConfig::alpha_max_deg);
    s["theta_min_deg"] = bind(&Config::sensor, &SensorConfig::theta_min_deg);
    s["theta_max_deg"] = bind(&Config::sensor, &SensorConfig::theta_max_deg);
    s["alpha_res_deg"] = bind(&Config::sensor, &SensorConfig::alpha_res_deg);
    s["theta_res_deg"] = bind(&Config::sensor, &SensorConfig::theta_res_deg);
    s["range_min"] = bind(&Config::sensor, &SensorConfig::range_min);
    s["range_max"] = bind(&Config::sensor, &SensorConfig::range_max);
    s["range_margin"] = bind(&Config::sensor, &SensorConfig::range_margin);
    s["max_vertical_sectors"] = bind(&Config::sensor, &SensorConfig::max_vertical_sectors);
    s["max_horizontal_sectors"] = bind(&Config::sensor, &SensorConfig::max_horizontal_sectors);

    auto& e = t["extraction"];
    e["lambda"] = bind(&Config::extraction, &ExtractionParams::lambda);
    e["sigma_edge"] = bind(&Config::extraction, &ExtractionParams::sigma_edge);
    e["sigma_plane"] = bind(&Config::extraction, &ExtractionParams::sigma_plane);
    e["max_edges"] = bind(&Config::extraction, &ExtractionParams::max_edges);
    e["max_planars"] = bind(&Config::extraction, &ExtractionParams::max_planars);
    e["min_neighbors"] = Binding{
        [](Config& c, const std::string& key, const std::string& v) {
          c.extraction.min_neighbors = parse_number<int>(key, v);
        },
        [](const Config& c) -> std::optional<std::string> {
          if (!c.extraction.min_neighbors) return std::nullopt;
          return std::to_string(*c.extraction.min_neighbors);
        }};

    auto& o = t["odometry"];
    o["window_size"] = bind(&Config::odometry, &OdometryParams::window_size);
    o["edge_max_dist"] = bind(&Config::odometry, &OdometryParams::edge_max_dist);
    o["plane_max_dist"] = bind(&Config::odometry, &OdometryParams::plane_max_dist);
    o["convergence_eps"] = bind(&Config::odometry, &OdometryParams::convergence_eps);
    o["max_iterations"] = bind(&Config::odometry, &OdometryParams::max_iterations);
    o["max_step_halvings"] = bind(&Config::odometry, &OdometryParams::max_step_halvings);
    o["edge_voxel"] = bind(&Config::odometry, &OdometryParams::edge_voxel);
    o["plane_voxel"] = bind(&Config::odometry, &OdometryParams::plane_voxel);
    o["min_correspondences"] = bind(&Config::odometry, &OdometryParams::min_correspondences);
    o["max_condition"] = bind(&Config::odometry, &OdometryParams::max_condition);

    auto& m = t["mapping"];
    m["resolution"] = bind_occupancy(&OccupancyParams::resolution);
    m["prior"] = bind_occupancy(&OccupancyParams::prior);
    m["p_hit"] = bind_occupancy(&OccupancyParams::p_hit);
    m["p_miss"] = bind_occupancy(&OccupancyParams::p_miss);
    m["p_min"] = bind_occupancy(&OccupancyParams::p_min);
    m["p_max"] = bind_occupancy(&OccupancyParams::p_max);
    m["keyframe_min_translation"] =
        bind(&Config::mapping, &MappingConfig::keyframe_min_translation);
    m["keyframe_min_rotation_deg"] =
        bind(&Config::mapping, &MappingConfig::keyframe_min_rotation_deg);
    m["keyframe_max_interval"] = bind(&Config::mapping, &MappingConfig::keyframe_max_interval);
    m["occupancy_threshold"] = bind(&Config::mapping, &MappingConfig::occupancy_threshold);

    auto& sim = t["sim"];
    sim["rays_vertical"] = bind(&Config::sim, &SimConfig::rays_vertical);
    sim["rays_horizontal"] = bind(&Config::sim, &SimConfig::rays_horizontal);
    sim["noise_sigma"] = bind(&Config::sim, &SimConfig::noise_sigma);
    sim["seed"] = bind(&Config::sim, &SimConfig::seed);
    sim["rate"] = bind(&Config::sim, &SimConfig::rate);

    t["run"]["max_frames"] = bind(&Config::run, &RunConfig::max_frames);
    return t;
  }();
  return t;
}

}  // namespace

SensorSpec SensorConfig::spec() const {
  SensorSpec s;
  s.alpha_min = alpha_min_deg * kDeg;
  s.alpha_max = alpha_max_deg * kDeg;
  s.theta_min = theta_min_deg * kDeg;
  s.theta_max = theta_max_deg * kDeg;
  s.alpha_res = alpha_res_deg * kDeg;
  s.theta_res = theta_res_deg * kDeg;
  s.range_min = range_min;
  s.range_max = range_max;
  s.range_margin = range_margin;
  s.max_rows = max_vertical_sectors;
  s.max_cols = max_horizontal_sectors;
  return s;
}

KeyframePolicy MappingConfig::keyframe_policy() const {
  return {keyframe_min_translation, keyframe_min_rotation_deg * kDeg, keyframe_max_interval};
}

void Config::validate() const {
  const auto prefixed = [](const char* section, const ValidationError& e) {
    return ValidationError(std::string(section) + "." + e.key(), e.what());
  };
  try {
    sensor.spec().validate();
  } catch (const ValidationError& e) {
    throw prefixed("sensor", e);
  }
  try {
    extraction.validate();
  } catch (const ValidationError& e) {
    throw prefixed("extraction", e);
  }
  try {
    odometry.validate();
  } catch (const ValidationError& e) {
    throw prefixed("odometry", e);
  }
  try {
    mapping.occupancy.validate();
    mapping.keyframe_policy().validate();
  } catch (const ValidationError& e) {
    throw prefixed("mapping", e);
  }
  if (!(mapping.occupancy_threshold > 0.0 && mapping.occupancy_threshold < 1.0)) {
    throw ValidationError("mapping.occupancy_threshold", "must be in (0, 1)");
  }
  if (sim.rays_vertical < 2) throw ValidationError("sim.rays_vertical", "must be >= 2");
  if (sim.rays_horizontal < 2) throw ValidationError("sim.rays_horizontal", "must be >= 2");
  if (!(sim.noise_sigma >= 0.0)) throw ValidationError("sim.noise_sigma", "must be >= 0");
  if (!(sim.rate > 0.0)) throw ValidationError("sim.rate", "must be > 0");
}

Config parse_config(const std::string& text) {
  Config config;
  const auto& t = table();
  std::istringstream in(text);
  std::string raw;
  std::string section;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = trim(raw);
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ParseError("unterminated section header", line_no);
      section = trim(line.substr(1, line.size() - 2));
      if (!t.contains(section)) throw ValidationError(section, "unknown section");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError("expected key = value", line_no);
    const std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (const auto hash = value.find('#'); hash != std::string::npos) {
      value = trim(value.substr(0, hash));
    }
    if (section.empty()) throw ValidationError(key, "key outside of any section");
    const auto& keys = t.at(section);
    const auto it = keys.find(key);
    if (it == keys.end()) throw ValidationError(section + "." + key, "unknown key");
    it->second.set(config, section + "." + key, value);
  }
  config.validate();
  return config;
}

Config load_config(const std::filesystem::path& path) { return parse_config(read_text(path)); }

std::string serialize_config(const Config& config) {
  std::string out;
  for (const auto& [section, keys] : table()) {
    out += "[" + section + "]\n";
    for (const auto& [key, binding] : keys) {
      if (const auto v = binding.get(config)) out += key + " = " + *v + "\n";
    }
    out += "\n";
  }
  return out;
}

}  // namespace solidslam
