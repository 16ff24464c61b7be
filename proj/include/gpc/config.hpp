#pragma once

// Run configuration and its text file format:
//
//   # comment
//   [scene]
//   geometry = linear:5:0.08
//   doa_deg = 30
//   [run]
//   mode = mwf_inst
//   tau = 1.0
//
// Section headers only group keys; key names are global. Precedence is
// command-line flags over the file over built-in defaults.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "gpc/beamformer.hpp"
#include "gpc/error.hpp"
#include "gpc/spatial.hpp"
#include "gpc/stft.hpp"
#include "gpc/tracker.hpp"

namespace gpc {

struct RunConfig {
  FilterMode mode = FilterMode::mwf_inst;
  std::vector<FilterMode> sweep_modes{FilterMode::mvdr, FilterMode::mwf_smooth, FilterMode::mwf_inst};
  double tau = 1.0;
  std::vector<double> sweep_taus{0.1, 0.5, 1.0, 2.0};
  StftConfig stft;
  std::string geometry = "linear:5:0.08";
  double doa_deg = 0.0;
  double speed_of_sound = 343.0;
  double snr_db = 5.0;
  double duration_s = 10.0;
  std::uint64_t seed = 1;
  bool metrics = false;
  bool babble_shaped = false;
  DiffuseSource diffuse = DiffuseSource::instantaneous;
  std::optional<double> gain_floor_db;
  unsigned workers = 1;
  std::string input;
  std::string output;
  std::string reference;
  std::string source;

  ArrayScene scene() const {
    ArrayScene s;
    s.mic_positions = parse_geometry(geometry);
    s.doa_deg = doa_deg;
    s.speed_of_sound = speed_of_sound;
    s.sample_rate = stft.sample_rate;
    s.frame_len = stft.frame_len;
    return s;
  }

  void validate() const {
    if (!(tau > 0.0)) throw InvalidConfig("tau must be positive");
    for (double t : sweep_taus)
      if (!(t > 0.0)) throw InvalidConfig("sweep taus must be positive");
    if (sweep_taus.empty()) throw InvalidConfig("sweep needs at least one tau");
    if (sweep_modes.empty()) throw InvalidConfig("sweep needs at least one mode");
    if (!(duration_s > 0.0)) throw InvalidConfig("duration must be positive");
    if (std::isnan(snr_db)) throw InvalidConfig("snr_db must be a number");
    stft.validate();
    scene().validate();
  }
};

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
  }
  return out;
}

inline double parse_double(const std::string& key, const std::string& v) {
  if (v == "inf" || v == "+inf" || v == "clean") return std::numeric_limits<double>::infinity();
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used == v.size()) return d;
  } catch (const std::exception&) {
  }
  throw InvalidConfig("config: '" + key + "' expects a number, got '" + v + "'");
}

inline std::uint64_t parse_uint(const std::string& key, const std::string& v) {
  if (!v.empty() && v.find_first_not_of("0123456789") == std::string::npos) {
    try {
      return std::stoull(v);
    } catch (const std::exception&) {
    }
  }
  throw InvalidConfig("config: '" + key + "' expects a non-negative integer, got '" + v + "'");
}

inline bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw InvalidConfig("config: '" + key + "' expects true/false, got '" + v + "'");
}

/// Reads `key = value` pairs. Unknown keys are rejected.
inline std::map<std::string, std::string> parse_config_text(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::stringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    // '#' or ';' starts a comment line; inline comments need " #" since
    // explicit geometries use ';' as a separator
    const auto first = line.find_first_not_of(" \t");
    if (first != std::string::npos && (line[first] == '#' || line[first] == ';')) continue;
    for (std::size_t i = 1; i < line.size(); ++i)
      if (line[i] == '#' && (line[i - 1] == ' ' || line[i - 1] == '\t')) {
        line.resize(i);
        break;
      }
    const auto b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos) continue;
    line = line.substr(b, line.find_last_not_of(" \t\r") - b + 1);
    if (line.front() == '[') {
      if (line.back() != ']') throw InvalidConfig("config line " + std::to_string(lineno) + ": malformed section header");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw InvalidConfig("config line " + std::to_string(lineno) + ": expected key = value");
    std::string key = line.substr(0, eq), value = line.substr(eq + 1);
    key = key.substr(0, key.find_last_not_of(" \t") + 1);
    const auto vb = value.find_first_not_of(" \t");
    value = vb == std::string::npos ? "" : value.substr(vb);
    kv[key] = value;
  }
  return kv;
}

/// Applies one setting to the configuration. Keys mirror the CLI flags with
/// dashes replaced by underscores.
inline void apply_setting(RunConfig& cfg, const std::string& key, const std::string& value) {
  if (key == "mode") cfg.mode = parse_mode(value);
  else if (key == "modes") {
    cfg.sweep_modes.clear();
    for (const auto& m : split_list(value)) cfg.sweep_modes.push_back(parse_mode(m));
  } else if (key == "tau") cfg.tau = parse_double(key, value);
  else if (key == "taus") {
    cfg.sweep_taus.clear();
    for (const auto& t : split_list(value)) cfg.sweep_taus.push_back(parse_double(key, t));
  } else if (key == "frame_len") {
    cfg.stft.frame_len = static_cast<std::size_t>(parse_uint(key, value));
    cfg.stft.hop = cfg.stft.frame_len / 2;
  } else if (key == "sample_rate") cfg.stft.sample_rate = parse_double(key, value);
  else if (key == "geometry") cfg.geometry = value;
  else if (key == "doa_deg") cfg.doa_deg = parse_double(key, value);
  else if (key == "speed_of_sound") cfg.speed_of_sound = parse_double(key, value);
  else if (key == "snr_db") cfg.snr_db = parse_double(key, value);
  else if (key == "duration") cfg.duration_s = parse_double(key, value);
  else if (key == "seed") cfg.seed = parse_uint(key, value);
  else if (key == "metrics") cfg.metrics = parse_bool(key, value);
  else if (key == "babble") cfg.babble_shaped = parse_bool(key, value);
  else if (key == "hybrid_diffuse")
    cfg.diffuse = parse_bool(key, value) ? DiffuseSource::smooth : DiffuseSource::instantaneous;
  else if (key == "gain_floor_db") cfg.gain_floor_db = parse_double(key, value);
  else if (key == "workers") cfg.workers = static_cast<unsigned>(parse_uint(key, value));
  else if (key == "input") cfg.input = value;
  else if (key == "output") cfg.output = value;
  else if (key == "reference") cfg.reference = value;
  else if (key == "source") cfg.source = value;
  else throw InvalidConfig("config: unknown key '" + key + "'");
}

inline void apply_config_file(RunConfig& cfg, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  for (const auto& [k, v] : parse_config_text(ss.str())) apply_setting(cfg, k, v);
}

}  // namespace gpc
