#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "gpc/beamformer.hpp"
#include "gpc/spatial.hpp"
#include "test_support.hpp"

using namespace gpc;
using namespace gpc::test;
using Catch::Approx;

namespace {

double quad(const HermitianMatrix& a, const CVector& w) { return dot(w, a * w).real(); }

}  // namespace

TEST_CASE("mvdr weights", "[beamformer]") {
  std::mt19937_64 rng(41);
  SECTION("identity coherence averages the channels") {
    const CVector w = mvdr(HermitianMatrix::identity(5), CVector(5, cplx(1.0)));
    for (cplx z : w) CHECK(std::abs(z - cplx(0.2)) <= 1e-15);
  }
  SECTION("matches the normal-equation oracle and is distortionless") {
    for (int trial = 0; trial < 200; ++trial) {
      const std::size_t m = 2 + std::size_t(trial) % 7;
      const HermitianMatrix g = random_hpd(rng, m);
      CVector h = random_vector(rng, m);
      h[0] = 1.0;
      const MvdrFilter f = mvdr_filter(g, h);
      const CVector gi = solve(dense(g), h);
      cplx hgh{};
      for (std::size_t i = 0; i < m; ++i) hgh += std::conj(h[i]) * gi[i];
      CHECK(f.hgh == Approx(hgh.real()).epsilon(1e-10));
      for (std::size_t i = 0; i < m; ++i) CHECK(std::abs(f.weights[i] - gi[i] / hgh) <= 1e-10 * norm2(f.weights));
      CHECK(std::abs(dot(f.weights, h) - cplx(1.0)) <= 1e-12);
    }
  }
  SECTION("no feasible perturbation lowers the output noise power") {
    for (int trial = 0; trial < 50; ++trial) {
      const std::size_t m = 2 + std::size_t(trial) % 5;
      const HermitianMatrix g = random_hpd(rng, m);
      const CVector h = random_vector(rng, m);
      const CVector w = mvdr(g, h);
      const double best = quad(g, w);
      CHECK(best == Approx(1.0 / mvdr_filter(g, h).hgh).epsilon(1e-10));
      for (int k = 0; k < 20; ++k) {
        // u orthogonal to h keeps w^H h = 1
        CVector u = random_vector(rng, m);
        const cplx c = dot(h, u) / dot(h, h);
        for (std::size_t i = 0; i < m; ++i) u[i] -= c * h[i];
        CVector v = w;
        for (std::size_t i = 0; i < m; ++i) v[i] += 0.1 * u[i];
        CHECK(std::abs(dot(v, h) - cplx(1.0)) <= 1e-10);
        CHECK(quad(g, v) >= best * (1 - 1e-12));
      }
    }
  }
  SECTION("two microphones, real coherence, grid search") {
    HermitianMatrix g = HermitianMatrix::identity(2);
    g.set(1, 0, 0.6);
    const CVector h{1.0, 1.0};
    const CVector w = mvdr(g, h);
    // w = (a, 1 - a): cost a^2 + (1-a)^2 + 1.2 a (1-a)
    double best_a = 0.0, best = 1e9;
    for (int i = 0; i <= 2000; ++i) {
      const double a = -0.5 + i * 0.001;
      const double cost = a * a + (1 - a) * (1 - a) + 1.2 * a * (1 - a);
      if (cost < best) best = cost, best_a = a;
    }
    CHECK(w[0].real() == Approx(best_a).margin(1e-3));
    CHECK(quad(g, w) == Approx(best).epsilon(1e-6));
  }
  SECTION("errors") {
    CHECK_THROWS_AS(mvdr(HermitianMatrix::identity(2), CVector(2)), DegenerateInput);
    HermitianMatrix singular(2);
    singular.set(0, 0, 1.0);
    CHECK_THROWS_AS(mvdr(singular, CVector{1.0, 1.0}), SingularMatrix);
  }
}

TEST_CASE("mwf gain", "[beamformer]") {
  CHECK(mwf_gain(0.0, 1.0, 5.0) == 0.0);
  CHECK(mwf_gain(1.0, 0.0, 5.0) == 1.0);
  CHECK(mwf_gain(1.0, 1.0, 5.0) == Approx(5.0 / 6.0).epsilon(1e-15));
  CHECK(mwf_gain(1.0, 5.0, 1.0) == Approx(1.0 / 6.0).epsilon(1e-15));
  CHECK(mwf_gain(0.0, 0.0, 5.0) == 0.0);
  CHECK(mwf_gain(1.0, 1.0, CVector(5, cplx(1.0)), HermitianMatrix::identity(5)) == Approx(5.0 / 6.0));

  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  for (int i = 0; i < 1000; ++i) {
    const double g = mwf_gain(u(rng), u(rng), 0.1 + u(rng));
    CHECK(g >= 0.0);
    CHECK(g <= 1.0);
  }

  SECTION("gain floor") {
    CHECK(apply_gain_floor(0.0, std::nullopt) == 0.0);
    CHECK(apply_gain_floor(0.0, -20.0) == Approx(0.1));
    CHECK(apply_gain_floor(0.5, -20.0) == 0.5);
  }
}

TEST_CASE("multichannel Wiener filter factorizes into MVDR and a gain", "[beamformer]") {
  std::mt19937_64 rng(43);
  std::uniform_real_distribution<double> u(0.01, 5.0);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t m = 2 + std::size_t(trial) % 7;
    const HermitianMatrix g = random_hpd(rng, m);
    CVector h = random_vector(rng, m);
    h[0] = 1.0;
    const double phi_s = u(rng), phi_d = u(rng);
    Dense psi = dense(g);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < m; ++j) psi[i][j] = phi_d * psi[i][j] + phi_s * h[i] * std::conj(h[j]);
    CVector wiener = solve(psi, h);
    for (cplx& z : wiener) z *= phi_s;
    const MvdrFilter f = mvdr_filter(g, h);
    const double gain = mwf_gain(phi_s, phi_d, f.hgh);
    for (std::size_t i = 0; i < m; ++i) CHECK(std::abs(wiener[i] - gain * f.weights[i]) <= 1e-8 * norm2(wiener));
  }
}

TEST_CASE("apply and select_channel", "[beamformer]") {
  std::mt19937_64 rng(44);
  const std::size_t frames = 6, bins = 9, m = 3;
  Spectrogram y(frames, bins, m, 2000);
  for (std::size_t l = 0; l < frames; ++l)
    for (std::size_t k = 0; k < bins; ++k) {
      const CVector v = random_vector(rng, m);
      for (std::size_t c = 0; c < m; ++c) y(l, k, c) = v[c];
    }
  SECTION("unit weight on channel 1 is passthrough") {
    CVector e(m);
    e[0] = 1.0;
    const Spectrogram out = apply(y, [&](std::size_t, std::size_t) -> const CVector& { return e; });
    const Spectrogram ref = select_channel(y, 0);
    for (std::size_t l = 0; l < frames; ++l)
      for (std::size_t k = 0; k < bins; ++k) CHECK(out(l, k, 0) == ref(l, k, 0));
    CHECK(out.signal_length() == 2000);
  }
  SECTION("distortionless on a steered field") {
    const CVector h = random_vector(rng, m);
    const CVector w = mvdr(random_hpd(rng, m), h);
    Spectrogram steered(frames, bins, m, 2000);
    for (std::size_t l = 0; l < frames; ++l)
      for (std::size_t k = 0; k < bins; ++k)
        for (std::size_t c = 0; c < m; ++c) steered(l, k, c) = h[c] * y(l, k, 0);
    const Spectrogram out = apply(steered, [&](std::size_t, std::size_t) -> const CVector& { return w; });
    for (std::size_t l = 0; l < frames; ++l)
      for (std::size_t k = 0; k < bins; ++k) CHECK(std::abs(out(l, k, 0) - y(l, k, 0)) <= 1e-12 * std::abs(y(l, k, 0)) + 1e-15);
  }
  SECTION("zero weights give silence") {
    const CVector z(m);
    const Spectrogram out = apply(y, [&](std::size_t, std::size_t) -> const CVector& { return z; });
    for (std::size_t l = 0; l < frames; ++l)
      for (std::size_t k = 0; k < bins; ++k) CHECK(out(l, k, 0) == cplx{});
  }
  SECTION("errors") {
    const CVector bad(2);
    CHECK_THROWS_AS(apply(y, [&](std::size_t, std::size_t) -> const CVector& { return bad; }), DimensionMismatch);
    CHECK_THROWS_AS(select_channel(y, 3), DimensionMismatch);
  }
}

TEST_CASE("mode names", "[beamformer]") {
  for (FilterMode mode : {FilterMode::passthrough, FilterMode::mvdr, FilterMode::mwf_smooth, FilterMode::mwf_inst})
    CHECK(parse_mode(to_string(mode)) == mode);
  CHECK_THROWS_AS(parse_mode("wiener"), InvalidConfig);
}
