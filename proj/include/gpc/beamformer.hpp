#pragma once

// MVDR beamformer and the single-channel Wiener gain that together form
// the multichannel Wiener filter w = mvdr * g.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>

#include "gpc/error.hpp"
#include "gpc/linalg.hpp"
#include "gpc/stft.hpp"

namespace gpc {

enum class FilterMode { passthrough, mvdr, mwf_smooth, mwf_inst };

inline std::string to_string(FilterMode mode) {
  switch (mode) {
    case FilterMode::passthrough: return "passthrough";
    case FilterMode::mvdr: return "mvdr";
    case FilterMode::mwf_smooth: return "mwf_smooth";
    case FilterMode::mwf_inst: return "mwf_inst";
  }
  return "?";
}

inline FilterMode parse_mode(const std::string& s) {
  if (s == "passthrough") return FilterMode::passthrough;
  if (s == "mvdr") return FilterMode::mvdr;
  if (s == "mwf_smooth") return FilterMode::mwf_smooth;
  if (s == "mwf_inst") return FilterMode::mwf_inst;
  throw InvalidConfig("unknown mode '" + s + "' (expected passthrough, mvdr, mwf_smooth or mwf_inst)");
}

/// MVDR weights and the noise-reduction denominator h^H gamma^{-1} h.
struct MvdrFilter {
  CVector weights;
  double hgh = 0.0;
};

/// w = gamma^{-1} h / (h^H gamma^{-1} h), so that w^H h = 1.
inline MvdrFilter mvdr_filter(const HermitianMatrix& gamma, std::span<const cplx> h) {
  if (norm2(h) == 0.0) throw DegenerateInput("mvdr: steering vector is zero");
  CVector gi = hermitian_inverse_apply(gamma, h);
  const double hgh = dot(h, gi).real();
  if (!(hgh > 0.0)) throw SingularMatrix("mvdr: h^H gamma^{-1} h is not positive");
  for (cplx& z : gi) z /= hgh;
  return {std::move(gi), hgh};
}

inline CVector mvdr(const HermitianMatrix& gamma, std::span<const cplx> h) { return mvdr_filter(gamma, h).weights; }

/// g = phi_s / (phi_s + phi_d / (h^H gamma^{-1} h)), the gain that turns the
/// MVDR output into phi_s Psi_y^{-1} h. `hgh` is h^H gamma^{-1} h; 0/0 is 0.
inline double mwf_gain(double phi_s, double phi_d, double hgh) {
  const double num = phi_s * hgh;
  const double den = num + phi_d;
  if (!(den > 0.0)) return 0.0;
  return std::clamp(num / den, 0.0, 1.0);
}

inline double mwf_gain(double phi_s, double phi_d, std::span<const cplx> h, const HermitianMatrix& gamma) {
  return mwf_gain(phi_s, phi_d, mvdr_filter(gamma, h).hgh);
}

/// Optional lower bound on the spectral gain, in dB. Off by default.
inline double apply_gain_floor(double g, std::optional<double> floor_db) {
  if (!floor_db) return g;
  return std::max(g, std::pow(10.0, *floor_db / 20.0));
}

/// w^H y
inline cplx filter_output(std::span<const cplx> w, std::span<const cplx> y) { return dot(w, y); }

/// Filters every (frame, bin) of a multichannel spectrogram with weights
/// supplied by `weights(l, k)`, producing a one-channel spectrogram.
template <typename WeightFn>
Spectrogram apply(const Spectrogram& spec, WeightFn&& weights) {
  Spectrogram out(spec.frames(), spec.bins(), 1, spec.signal_length());
  for (std::size_t l = 0; l < spec.frames(); ++l)
    for (std::size_t k = 0; k < spec.bins(); ++k) {
      const auto& w = weights(l, k);
      if (w.size() != spec.channels()) throw DimensionMismatch("beamformer: weight size differs from channel count");
      out(l, k, 0) = filter_output(w, spec.at(l, k));
    }
  return out;
}

/// Selects channel `m` of a spectrogram, the passthrough output.
inline Spectrogram select_channel(const Spectrogram& spec, std::size_t m) {
  if (m >= spec.channels()) throw DimensionMismatch("select_channel: channel out of range");
  Spectrogram out(spec.frames(), spec.bins(), 1, spec.signal_length());
  for (std::size_t l = 0; l < spec.frames(); ++l)
    for (std::size_t k = 0; k < spec.bins(); ++k) out(l, k, 0) = spec(l, k, m);
  return out;
}

}  // namespace gpc
