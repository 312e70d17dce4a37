#include <doctest.h>

#include <cmath>

#include "ngrad/activation.hpp"
#include "ngrad/quadrature.hpp"
#include "ngrad/rng.hpp"

using namespace ngrad;
using doctest::Approx;

TEST_SUITE("quadrature") {

TEST_CASE("Gauss-Hermite integrates normal moments exactly") {
  quad::GaussHermite gh(64);
  CHECK(gh.expect([](double) { return 1.0; }) == Approx(1.0).epsilon(1e-14));
  CHECK(std::abs(gh.expect([](double v) { return v; })) < 1e-14);
  CHECK(gh.expect([](double v) { return v * v; }) == Approx(1.0).epsilon(1e-13));
  CHECK(gh.expect([](double v) { return v * v * v * v; }) == Approx(3.0).epsilon(1e-13));
  CHECK(gh.expect([](double v) { return std::pow(v, 6); }) == Approx(15.0).epsilon(1e-12));
}

TEST_CASE("panel rule matches Gauss-Hermite on easy integrands") {
  quad::GaussHermite gh(96);
  quad::GaussianExpectation pr(32);
  auto f = [](double v) { return std::exp(-0.3 * v) * std::cos(v); };
  CHECK(pr.expect(f, 0.0, 1.0) == Approx(gh.expect(f)).epsilon(1e-12));
}

TEST_CASE("activation phi and phi' agree with finite differences") {
  // 100 pseudo-random points per activation; ReLU checked away from the kink.
  RngStream rng(2024, StreamDomain::Probe, 0x61637431);
  for (Activation act : {Activation::ReLU, Activation::Tanh, Activation::Sigmoid,
                         Activation::Linear}) {
    for (int i = 0; i < 100; ++i) {
      double u = 4.0 * (rng.next_unit() - 0.5);
      if (act == Activation::ReLU && std::abs(u) < 1e-3) u += 2e-3;
      const double h = 1e-6;
      const double fd = (phi(act, u + h) - phi(act, u - h)) / (2 * h);
      CHECK(std::abs(fd - dphi(act, u)) < 1e-6);
    }
  }
}

TEST_CASE("relu derivative at the kink is 0") {
  CHECK(dphi(Activation::ReLU, 0.0) == 0.0);
  CHECK(phi(Activation::ReLU, 0.0) == 0.0);
}

TEST_CASE("doubling the order changes sharp expectations by < 1e-10") {
  // The meanfield integrands at tau^2 up to 100; this is what plain
  // Gauss-Hermite cannot do (its 64 vs 128 node gap is ~1e-3 at tau^2 = 100).
  quad::GaussianExpectation r64(64), r128(128);
  for (Activation act : {Activation::Tanh, Activation::Sigmoid}) {
    for (double tau2 : {0.01, 1.0, 2.0, 10.0, 100.0}) {
      const double tau = std::sqrt(tau2);
      auto f = [&](double v) { const double p = phi(act, tau * v); return p * p; };
      auto g = [&](double v) { const double d = dphi(act, tau * v); return d * d; };
      CHECK(std::abs(r64.expect(f, 0.0, 1.0 / tau) - r128.expect(f, 0.0, 1.0 / tau)) < 1e-10);
      CHECK(std::abs(r64.expect(g, 0.0, 1.0 / tau) - r128.expect(g, 0.0, 1.0 / tau)) < 1e-10);
    }
  }
}

TEST_CASE("split panels integrate step functions exactly") {
  quad::GaussianExpectation pr(32);
  // E[1_{v > a}] = Phi(-a)
  for (double a : {-1.5, -0.3, 0.0, 0.7, 2.0}) {
    const double got = pr.expect([a](double v) { return v > a ? 1.0 : 0.0; }, a, 1.0, true);
    const double want = 0.5 * std::erfc(a * M_SQRT1_2);
    CHECK(got == Approx(want).epsilon(1e-13));
  }
}

}  // TEST_SUITE
