#pragma once

// Presumed-known spatial quantities: the spherically isotropic diffuse
// coherence matrix per bin and the far-field relative transfer function.

#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "gpc/error.hpp"
#include "gpc/linalg.hpp"

namespace gpc {

using Point3 = std::array<double, 3>;

struct ArrayScene {
  std::vector<Point3> mic_positions;  // meters
  double doa_deg = 0.0;               // relative to broadside
  double speed_of_sound = 343.0;      // m/s
  double sample_rate = 16000.0;
  std::size_t frame_len = 512;

  std::size_t mics() const { return mic_positions.size(); }
  std::size_t bins() const { return frame_len / 2 + 1; }
  double bin_frequency(std::size_t k) const { return static_cast<double>(k) * sample_rate / static_cast<double>(frame_len); }

  double distance(std::size_t i, std::size_t j) const {
    double s = 0.0;
    for (int d = 0; d < 3; ++d) {
      const double diff = mic_positions[i][d] - mic_positions[j][d];
      s += diff * diff;
    }
    return std::sqrt(s);
  }

  void validate() const {
    if (mics() < 2) throw InvalidConfig("scene: at least two microphones are required");
    for (const Point3& p : mic_positions)
      for (double c : p)
        if (!std::isfinite(c)) throw InvalidConfig("scene: microphone coordinates must be finite");
    if (!(speed_of_sound > 0.0)) throw InvalidConfig("scene: speed of sound must be positive");
    if (!(sample_rate > 0.0)) throw InvalidConfig("scene: sample rate must be positive");
    if (frame_len < 2 || frame_len % 2) throw InvalidConfig("scene: frame length must be even");
    if (!std::isfinite(doa_deg)) throw InvalidConfig("scene: DOA must be finite");
  }
};

/// Uniform linear array along x, first microphone at the origin.
inline std::vector<Point3> linear_array(std::size_t mics, double spacing) {
  std::vector<Point3> pos(mics);
  for (std::size_t m = 0; m < mics; ++m) pos[m] = {static_cast<double>(m) * spacing, 0.0, 0.0};
  return pos;
}

/// Parses "linear:M:spacing_m" or a semicolon-separated list of
/// "x,y,z" triples in meters.
inline std::vector<Point3> parse_geometry(const std::string& text) {
  if (text.rfind("linear:", 0) == 0) {
    const std::string rest = text.substr(7);
    const auto colon = rest.find(':');
    if (colon == std::string::npos) throw InvalidConfig("geometry: expected linear:M:spacing_m, got '" + text + "'");
    try {
      std::size_t used = 0;
      const long mics = std::stol(rest.substr(0, colon), &used);
      if (used != colon || mics < 1) throw InvalidConfig("");
      const std::string sp = rest.substr(colon + 1);
      const double spacing = std::stod(sp, &used);
      if (used != sp.size()) throw InvalidConfig("");
      return linear_array(static_cast<std::size_t>(mics), spacing);
    } catch (const std::exception&) {
      throw InvalidConfig("geometry: expected linear:M:spacing_m with integer M and spacing in meters, got '" + text + "'");
    }
  }
  std::vector<Point3> pos;
  std::stringstream all(text);
  std::string triple;
  while (std::getline(all, triple, ';')) {
    if (triple.find_first_not_of(" \t") == std::string::npos) continue;
    std::stringstream ts(triple);
    Point3 p{};
    std::string item;
    int n = 0;
    while (std::getline(ts, item, ',')) {
      if (n >= 3) throw InvalidConfig("geometry: point '" + triple + "' has more than three coordinates");
      try {
        p[n++] = std::stod(item);
      } catch (const std::exception&) {
        throw InvalidConfig("geometry: cannot parse coordinate '" + item + "'");
      }
    }
    if (n != 3) throw InvalidConfig("geometry: point '" + triple + "' needs x,y,z");
    pos.push_back(p);
  }
  if (pos.empty()) throw InvalidConfig("geometry: no microphone positions given");
  return pos;
}

/// sin(x)/x with sinc(0) = 1.
inline double sinc(double x) { return x == 0.0 ? 1.0 : std::sin(x) / x; }

inline constexpr double kDefaultCoherenceLoading = 1e-3;

/// Spherically isotropic coherence Gamma_ij = sinc(2 pi f d_ij / c) at
/// bin k, loaded as (Gamma + eps I) / (1 + eps) to keep a unit diagonal.
inline HermitianMatrix diffuse_coherence(const ArrayScene& scene, std::size_t k,
                                         double loading = kDefaultCoherenceLoading) {
  const std::size_t m = scene.mics();
  const double f = scene.bin_frequency(k);
  HermitianMatrix g(m);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j <= i; ++j) {
      const double raw = i == j ? 1.0 : sinc(2.0 * std::numbers::pi * f * scene.distance(i, j) / scene.speed_of_sound);
      g.set(i, j, (raw + (i == j ? loading : 0.0)) / (1.0 + loading));
    }
  return g;
}

/// Unit propagation direction for the scene DOA, in the array's x-y plane
/// with broadside along y. Positive angles delay microphones at larger x.
inline Point3 propagation_direction(double doa_deg) {
  const double a = doa_deg * std::numbers::pi / 180.0;
  return {std::sin(a), std::cos(a), 0.0};
}

/// Plane-wave delay of each microphone relative to the first, in seconds.
inline std::vector<double> relative_delays(const ArrayScene& scene) {
  const Point3 u = propagation_direction(scene.doa_deg);
  std::vector<double> tau(scene.mics());
  for (std::size_t m = 0; m < scene.mics(); ++m) {
    double proj = 0.0;
    for (int d = 0; d < 3; ++d) proj += (scene.mic_positions[m][d] - scene.mic_positions[0][d]) * u[d];
    tau[m] = proj / scene.speed_of_sound;
  }
  tau[0] = 0.0;
  return tau;
}

/// Free-field RETF h_m = exp(-j 2 pi f tau_m), so h_1 = 1 and |h_m| = 1.
inline CVector steering_retf(const ArrayScene& scene, std::size_t k) {
  const double f = scene.bin_frequency(k);
  const std::vector<double> tau = relative_delays(scene);
  CVector h(scene.mics());
  for (std::size_t m = 0; m < h.size(); ++m) h[m] = std::polar(1.0, -2.0 * std::numbers::pi * f * tau[m]);
  h[0] = 1.0;
  return h;
}

/// Per-bin loaded coherence matrices and steering vectors.
struct SpatialModel {
  std::vector<HermitianMatrix> coherence;
  std::vector<CVector> retf;
  double loading = kDefaultCoherenceLoading;

  static SpatialModel build(const ArrayScene& scene, double loading = kDefaultCoherenceLoading) {
    scene.validate();
    SpatialModel model;
    model.loading = loading;
    for (std::size_t k = 0; k < scene.bins(); ++k) {
      model.coherence.push_back(diffuse_coherence(scene, k, loading));
      model.retf.push_back(steering_retf(scene, k));
    }
    return model;
  }
};

}  // namespace gpc
