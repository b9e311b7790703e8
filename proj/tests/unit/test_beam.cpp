#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "check_error.hpp"
#include "oracles.hpp"
#include "tunevault/beam.hpp"

using namespace tunevault;

namespace {
double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }
}  // namespace

TEST_CASE("constants") {
  CHECK(kAmuMeV == 931.494);
  CHECK(kRigidityMeVPerTm == 299.792458);
  CHECK(kMachineBetaLimit == 0.2);
}

TEST_CASE("non-relativistic limit") {
  const auto k = kinematics({1.0, 1, 0.1});
  CHECK(rel(k.beta_gamma, std::sqrt(2.0 * 0.1 / 931.494)) < 1e-3);
}

TEST_CASE("uranium 38+ at 5 MeV/u") {
  const auto k = kinematics({238.0, 38, 5.0});
  const auto big = oracle::kinematics(238.0, 38, 5.0);
  CHECK(std::abs(big.rigidity_tm - 2.019) < 5e-4);
  CHECK(rel(k.rigidity_tm, big.rigidity_tm) <= 1e-12);
  CHECK(rel(k.gamma, big.gamma) <= 1e-12);
  CHECK(rel(k.beta, big.beta) <= 1e-12);
  CHECK(rel(k.pc_total_mev, big.pc_total_mev) <= 1e-12);
}

TEST_CASE("beta limit crossing") {
  const double e = oracle::energy_at_beta(0.2);
  CHECK(std::abs(e - 19.208) < 0.01);
  CHECK(kinematics({1.0, 1, e * 0.999}).beta < 0.2);
  CHECK(kinematics({1.0, 1, e * 1.001}).beta > 0.2);
  // Beta depends on energy per nucleon only.
  CHECK(kinematics({238.0, 30, 10.0}).beta == kinematics({16.0, 8, 10.0}).beta);
}

TEST_CASE("kinematics match the arbitrary-precision oracle") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> mass(1.0, 240.0), energy(0.01, 200.0);
  std::uniform_int_distribution<int> q(1, kMaxChargeState);
  double worst = 0;
  for (int i = 0; i < 300; ++i) {
    const BeamParameters b{mass(rng), q(rng), energy(rng)};
    const auto k = kinematics(b);
    const auto big = oracle::kinematics(b.mass_amu, b.charge_state, b.energy_mev_u);
    worst = std::max({worst, rel(k.gamma, big.gamma), rel(k.beta, big.beta),
                      rel(k.beta_gamma, big.beta_gamma), rel(k.pc_total_mev, big.pc_total_mev),
                      rel(k.rigidity_tm, big.rigidity_tm),
                      rel(electric_rigidity_mv(b), big.electric_rigidity_mv)});
  }
  CHECK(worst <= 1e-12);
}

TEST_CASE("scale factors") {
  const BeamParameters a{39.9624, 9, 6.0};
  const auto id = scale_factors(a, a);
  CHECK(id.magnetic == 1.0);
  CHECK(id.electrostatic == 1.0);
  CHECK(id.rf_amplitude == 1.0);
  CHECK(id.none == 1.0);

  // Same mass and energy: pc cancels, leaving q_old / q_new.
  const auto q = scale_factors({16.0, 5, 5.0}, {16.0, 8, 5.0});
  CHECK(rel(q.magnetic, 0.625) < 1e-15);
  CHECK(rel(q.electrostatic, 0.625) < 1e-15);
  CHECK(rel(q.rf_amplitude, 0.625) < 1e-15);

  const BeamParameters b{16.0, 8, 5.0};
  const auto f = scale_factors(a, b);
  const auto big = oracle::factors(a.mass_amu, a.charge_state, a.energy_mev_u, b.mass_amu,
                                   b.charge_state, b.energy_mev_u);
  CHECK(rel(f.magnetic, big.magnetic) <= 1e-12);
  CHECK(rel(f.electrostatic, big.electrostatic) <= 1e-12);
  CHECK(rel(f.rf_amplitude, big.rf_amplitude) <= 1e-12);
  CHECK(f.factor(ScalingLaw::None) == 1.0);
  CHECK(f.factor(ScalingLaw::Magnetic) == f.magnetic);
}

TEST_CASE("monotonicity") {
  double last = 0;
  for (double e = 0.1; e < 30.0; e += 0.37) {
    const double r = kinematics({40.0, 9, e}).rigidity_tm;
    CHECK(r > last);
    last = r;
  }
  double prev = std::numeric_limits<double>::infinity();
  for (int q = 1; q <= 40; ++q) {
    const double f = scale_factors({40.0, 9, 6.0}, {40.0, q, 6.0}).magnetic;
    CHECK(f < prev);
    prev = f;
  }
}

TEST_CASE("beam validation") {
  CHECK(is_valid({1.0, 1, 0.01}));
  CHECK(is_valid({238.0, 120, 100.0}));
  for (const BeamParameters& b :
       {BeamParameters{0.0, 1, 1.0}, BeamParameters{-1.0, 1, 1.0}, BeamParameters{1.0, 0, 1.0},
        BeamParameters{1.0, 121, 1.0}, BeamParameters{1.0, 1, 0.0},
        BeamParameters{std::nan(""), 1, 1.0}, BeamParameters{1.0, 1, INFINITY}}) {
    CHECK_FALSE(is_valid(b));
    CHECK_ERROR_CODE(kinematics(b), ErrorCode::InvalidBeam);
  }
}

TEST_CASE("scaling law names") {
  for (auto law : {ScalingLaw::Magnetic, ScalingLaw::Electrostatic, ScalingLaw::RfAmplitude,
                   ScalingLaw::None})
    CHECK(parse_scaling_law(to_string(law)) == law);
  CHECK_FALSE(parse_scaling_law("quadratic"));
}
