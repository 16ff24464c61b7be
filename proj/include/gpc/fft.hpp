#pragma once

// Thin RAII wrapper around FFTW real transforms of a fixed even length.

#include <fftw3.h>

#include <complex>
#include <cstddef>
#include <mutex>
#include <span>

#include "gpc/error.hpp"

namespace gpc {

class RealFft {
 public:
  explicit RealFft(std::size_t n) : n_(n) {
    if (n < 2 || n % 2 != 0) throw InvalidConfig("fft length must be even and >= 2");
    time_ = fftw_alloc_real(n);
    freq_ = fftw_alloc_complex(n / 2 + 1);
    std::lock_guard lock(planner_mutex());  // the FFTW planner is not reentrant
    forward_ = fftw_plan_dft_r2c_1d(static_cast<int>(n), time_, freq_, FFTW_ESTIMATE);
    inverse_ = fftw_plan_dft_c2r_1d(static_cast<int>(n), freq_, time_, FFTW_ESTIMATE);
  }

  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  ~RealFft() {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(forward_);
    fftw_destroy_plan(inverse_);
    fftw_free(time_);
    fftw_free(freq_);
  }

  std::size_t size() const { return n_; }
  std::size_t bins() const { return n_ / 2 + 1; }

  /// Unnormalized forward DFT, X[k] = sum_n x[n] e^{-j 2 pi k n / N}.
  void forward(std::span<const double> in, std::span<std::complex<double>> out) {
    for (std::size_t i = 0; i < n_; ++i) time_[i] = in[i];
    fftw_execute(forward_);
    for (std::size_t k = 0; k < bins(); ++k) out[k] = {freq_[k][0], freq_[k][1]};
  }

  /// Inverse DFT including the 1/N factor. Imaginary parts of the DC and
  /// Nyquist bins are ignored.
  void inverse(std::span<const std::complex<double>> in, std::span<double> out) {
    for (std::size_t k = 0; k < bins(); ++k) {
      freq_[k][0] = in[k].real();
      freq_[k][1] = in[k].imag();
    }
    fftw_execute(inverse_);
    const double scale = 1.0 / static_cast<double>(n_);
    for (std::size_t i = 0; i < n_; ++i) out[i] = time_[i] * scale;
  }

 private:
  static std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
  }

  std::size_t n_;
  double* time_ = nullptr;
  fftw_complex* freq_ = nullptr;
  fftw_plan forward_ = nullptr;
  fftw_plan inverse_ = nullptr;
};

}  // namespace gpc
