#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "oracles/bessel_k_table.hpp"
#include "vbgp/bessel.hpp"
#include "vbgp/error.hpp"

namespace {

using vbgp::bessel_k;

TEST(BesselK, MatchesHighPrecisionTable) {
  double worst = 0.0;
  for (const auto& row : vbgp::test::kBesselKTable) {
    const double got = bessel_k(row.nu, row.x);
    const double rel = std::abs(got - row.value) / row.value;
    worst = std::max(worst, rel);
    EXPECT_LE(rel, 1e-10) << "nu=" << row.nu << " x=" << row.x;
  }
  RecordProperty("worst_relative_error", std::to_string(worst));
}

TEST(BesselK, HalfOrderClosedForm) {
  const double expected = std::sqrt(std::numbers::pi / 2.0) * std::exp(-1.0);
  EXPECT_NEAR(bessel_k(0.5, 1.0), expected, 1e-15);
  EXPECT_NEAR(bessel_k(0.5, 1.0), 0.4610685044478945, 1e-15);
  for (double x : {1e-6, 0.01, 0.7, 1.9, 2.0, 2.1, 9.0, 45.0}) {
    const double closed = std::sqrt(std::numbers::pi / (2.0 * x)) * std::exp(-x);
    EXPECT_NEAR(bessel_k(0.5, x) / closed, 1.0, 1e-13) << x;
  }
}

TEST(BesselK, OrderPointSixAtPointThree) {
  EXPECT_NEAR(bessel_k(0.6, 0.3) / vbgp::test::kBesselK_0_6_at_0_3, 1.0, 1e-12);
}

TEST(BesselK, ThreeHalvesClosedForm) {
  for (double x : {0.05, 1.0, 2.0, 3.5, 20.0}) {
    const double closed =
        std::sqrt(std::numbers::pi / (2.0 * x)) * std::exp(-x) * (1.0 + 1.0 / x);
    EXPECT_NEAR(bessel_k(1.5, x) / closed, 1.0, 1e-13) << x;
  }
}

TEST(BesselK, RecurrenceIdentity) {
  // K_{v+1}(x) = K_{v-1}(x) + (2v/x) K_v(x)
  for (double nu : {1.2, 2.6, 3.3}) {
    for (double x : {0.4, 1.7, 2.3, 12.0}) {
      const double lhs = bessel_k(nu + 1.0, x);
      const double rhs = bessel_k(nu - 1.0, x) + 2.0 * nu / x * bessel_k(nu, x);
      EXPECT_NEAR(lhs / rhs, 1.0, 1e-12) << nu << ' ' << x;
    }
  }
}

TEST(BesselK, ContinuousAcrossAlgorithmSwitch) {
  for (double nu : {0.3, 0.6, 2.5}) {
    const double below = bessel_k(nu, std::nextafter(2.0, 0.0));
    const double at = bessel_k(nu, 2.0);
    EXPECT_NEAR(below / at, 1.0, 1e-13);
  }
}

TEST(BesselK, DecreasingInArgument) {
  double prev = bessel_k(0.6, 1e-8);
  for (double x = 1e-3; x < 50.0; x *= 1.3) {
    const double v = bessel_k(0.6, x);
    EXPECT_LT(v, prev);
    prev = v;
  }
}

TEST(BesselK, DomainErrors) {
  EXPECT_THROW(bessel_k(0.5, 0.0), vbgp::DomainError);
  EXPECT_THROW(bessel_k(0.5, -1.0), vbgp::DomainError);
  EXPECT_THROW(bessel_k(0.0, 1.0), vbgp::DomainError);
  EXPECT_THROW(bessel_k(-0.5, 1.0), vbgp::DomainError);
  EXPECT_THROW(bessel_k(std::nan(""), 1.0), vbgp::DomainError);
}

TEST(BesselK, OverflowIsSignalled) {
  EXPECT_THROW(bessel_k(5.0, 1e-80), vbgp::OverflowError);
  EXPECT_NO_THROW(bessel_k(5.0, 1e-8));
}

}  // namespace
