#pragma once

// Per-bin recursive correlation tracking and eigenspace-based estimation
// of the early-speech PSD phi_s and the diffuse PSD phi_d.
//
// Two estimators share one recursively averaged correlation matrix and its
// generalized eigenvectors P:
//   smooth         - the generalized eigenvalues of the averaged matrix
//   instantaneous  - |p_m^H y|^2, the current frame projected onto each
//                    eigenvector
// Both feed the same eigenvalue-to-PSD mapping.

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>

#include "gpc/error.hpp"
#include "gpc/linalg.hpp"

namespace gpc {

/// zeta = exp(-R / (f_s tau)).
inline double forgetting_factor(double tau_seconds, std::size_t hop, double sample_rate) {
  if (!(tau_seconds > 0.0)) throw InvalidTau("time constant must be positive, got " + std::to_string(tau_seconds));
  if (!(sample_rate > 0.0)) throw InvalidConfig("sample rate must be positive");
  return std::exp(-static_cast<double>(hop) / (sample_rate * tau_seconds));
}

inline constexpr double kInitialCorrelationScale = 1e-6;

/// Recursively averaged microphone correlation matrix of one bin.
class CorrelationTracker {
 public:
  CorrelationTracker(const HermitianMatrix& initial, double zeta) : psi_(initial), zeta_(zeta) {
    if (!(zeta >= 0.0 && zeta < 1.0)) throw InvalidConfig("forgetting factor must lie in [0, 1)");
  }

  /// Starts from delta * gamma, which keeps the first decompositions regular.
  static CorrelationTracker from_coherence(const HermitianMatrix& gamma, double zeta,
                                           double delta = kInitialCorrelationScale) {
    return CorrelationTracker(delta * gamma, zeta);
  }

  /// psi <- zeta psi + (1 - zeta) y y^H
  void update(std::span<const cplx> y) {
    if (y.size() != psi_.dim()) throw DimensionMismatch("tracker: frame has " + std::to_string(y.size()) +
                                                        " channels, expected " + std::to_string(psi_.dim()));
    psi_.rank_one_update(zeta_, 1.0 - zeta_, y);
    ++frames_;
  }

  const HermitianMatrix& correlation() const { return psi_; }
  double zeta() const { return zeta_; }
  std::size_t frames() const { return frames_; }

 private:
  HermitianMatrix psi_;
  double zeta_;
  std::size_t frames_ = 0;
};

/// Smooth generalized eigenvalues (descending) and eigenvectors of the
/// tracked correlation matrix against gamma.
inline GevdResult smooth_eigs(const CorrelationTracker& state, const HermitianMatrix& gamma) {
  return gevd(state.correlation(), gamma);
}

/// |p_m^H y|^2 for every column p_m of P, in P's column order.
inline RVector instantaneous_eigs(const ComplexMatrix& p, std::span<const cplx> y) {
  if (p.rows() != y.size()) throw DimensionMismatch("instantaneous_eigs: eigenvector and frame sizes differ");
  RVector out(p.cols());
  for (std::size_t m = 0; m < p.cols(); ++m) {
    cplx s{};
    for (std::size_t i = 0; i < p.rows(); ++i) s += std::conj(p(i, m)) * y[i];
    out[m] = abs2(s);
  }
  return out;
}

struct PsdEstimate {
  double phi_s = 0.0;
  double phi_d = 0.0;
  double lambda_xe1 = 0.0;
  bool clamped = false;  // lambda_1 - phi_d was negative and set to zero
};

/// |h^H gamma p1|^2 / (h^H h)^2, the projection of the rank-one estimate
/// gamma p1 p1^H gamma onto h h^H.
inline double speech_projection(std::span<const cplx> p1, const HermitianMatrix& gamma, std::span<const cplx> h) {
  const CVector gp = gamma * p1;
  const double hh = dot(h, h).real();
  return abs2(dot(h, gp)) / (hh * hh);
}

/// Eigenvalue-to-PSD mapping without an ordering check. lambda[0] must
/// belong to the eigenvector p1. phi_d is the mean of lambda[1..M) unless
/// `phi_d_override` supplies it.
inline PsdEstimate psd_from_components(std::span<const double> lambda, std::span<const cplx> p1,
                                       const HermitianMatrix& gamma, std::span<const cplx> h,
                                       std::optional<double> phi_d_override = std::nullopt) {
  const std::size_t m = lambda.size();
  if (m < 2) throw InvalidConfig("psd estimation needs at least two eigenvalues");
  if (p1.size() != m || h.size() != m || gamma.dim() != m) throw DimensionMismatch("psd estimation: sizes differ");
  PsdEstimate est;
  if (phi_d_override) {
    est.phi_d = *phi_d_override;
  } else {
    double tail = 0.0;
    for (std::size_t i = 1; i < m; ++i) tail += lambda[i];
    est.phi_d = tail / static_cast<double>(m - 1);
  }
  est.lambda_xe1 = lambda[0] - est.phi_d;
  if (est.lambda_xe1 < 0.0) {
    est.lambda_xe1 = 0.0;
    est.clamped = true;
  }
  // Round-off can push smooth eigenvalues of a PSD matrix slightly negative.
  if (est.phi_d < 0.0) est.phi_d = 0.0;
  est.phi_s = est.lambda_xe1 * speech_projection(p1, gamma, h);
  return est;
}

/// Eigenvalue-to-PSD mapping for descending eigenvalues.
inline PsdEstimate psd_from_eigs(std::span<const double> lambda, std::span<const cplx> p1,
                                 const HermitianMatrix& gamma, std::span<const cplx> h) {
  for (std::size_t i = 1; i < lambda.size(); ++i)
    if (lambda[i] > lambda[i - 1])
      throw InvalidOrder("psd_from_eigs: eigenvalues must be sorted descending (index " + std::to_string(i) + ")");
  return psd_from_components(lambda, p1, gamma, h);
}

/// Where the instantaneous estimator takes its diffuse PSD from.
enum class DiffuseSource {
  instantaneous,  // mean of the instantaneous eigenvalues 2..M
  smooth,         // hybrid: mean of the smooth eigenvalues 2..M
};

struct EigenTracks {
  RVector smooth;
  RVector instantaneous;
  ComplexMatrix eigenvectors;
};

struct BinEstimate {
  EigenTracks tracks;
  PsdEstimate smooth;
  PsdEstimate instantaneous;
};

/// One frame of one bin: update the tracker with y, decompose, and map
/// both eigenvalue sets to PSDs.
inline BinEstimate track_bin(CorrelationTracker& state, std::span<const cplx> y, const HermitianMatrix& gamma,
                             std::span<const cplx> h, DiffuseSource diffuse = DiffuseSource::instantaneous) {
  state.update(y);
  GevdResult g = smooth_eigs(state, gamma);
  BinEstimate out;
  out.tracks.instantaneous = instantaneous_eigs(g.eigenvectors, y);
  const CVector p1 = g.eigenvectors.column(0);
  out.smooth = psd_from_eigs(g.eigenvalues, p1, gamma, h);
  out.instantaneous = psd_from_components(out.tracks.instantaneous, p1, gamma, h,
                                          diffuse == DiffuseSource::smooth ? std::optional(out.smooth.phi_d)
                                                                           : std::nullopt);
  out.tracks.smooth = std::move(g.eigenvalues);
  out.tracks.eigenvectors = std::move(g.eigenvectors);
  return out;
}

}  // namespace gpc
