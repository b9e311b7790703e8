#include "tunevault/beam.hpp"

#include <cmath>
#include <sstream>

#include "tunevault/error.hpp"

namespace tunevault {

bool is_valid(const BeamParameters& beam) noexcept {
  return std::isfinite(beam.mass_amu) && beam.mass_amu > 0.0 && beam.charge_state >= 1 &&
         beam.charge_state <= kMaxChargeState && std::isfinite(beam.energy_mev_u) &&
         beam.energy_mev_u > 0.0;
}

void validate(const BeamParameters& beam) {
  if (is_valid(beam)) return;
  std::ostringstream os;
  os << "invalid beam (mass_amu=" << beam.mass_amu << ", charge_state=" << beam.charge_state
     << ", energy_mev_u=" << beam.energy_mev_u << "): need mass_amu > 0, 1 <= charge_state <= "
     << kMaxChargeState << ", energy_mev_u > 0";
  throw Error(ErrorCode::InvalidBeam, os.str());
}

Kinematics kinematics(const BeamParameters& beam) {
  validate(beam);
  Kinematics k{};
  const double t = beam.energy_mev_u / kAmuMeV;
  k.gamma = 1.0 + t;
  // gamma^2 - 1 written as t (t + 2); the direct form cancels at low energy.
  k.beta_gamma = std::sqrt(t * (t + 2.0));
  k.beta = k.beta_gamma / k.gamma;
  k.pc_total_mev = beam.mass_amu * kAmuMeV * k.beta_gamma;
  k.rigidity_tm = k.pc_total_mev / (kRigidityMeVPerTm * beam.charge_state);
  return k;
}

double electric_rigidity_mv(const BeamParameters& beam) {
  const auto k = kinematics(beam);
  return k.pc_total_mev * k.beta / beam.charge_state;
}

std::string_view to_string(ScalingLaw law) {
  switch (law) {
    case ScalingLaw::Magnetic: return "magnetic";
    case ScalingLaw::Electrostatic: return "electrostatic";
    case ScalingLaw::RfAmplitude: return "rf_amplitude";
    case ScalingLaw::None: return "none";
  }
  return "?";
}

std::optional<ScalingLaw> parse_scaling_law(std::string_view s) {
  if (s == "magnetic") return ScalingLaw::Magnetic;
  if (s == "electrostatic") return ScalingLaw::Electrostatic;
  if (s == "rf_amplitude") return ScalingLaw::RfAmplitude;
  if (s == "none") return ScalingLaw::None;
  return std::nullopt;
}

double ScaleFactorSet::factor(ScalingLaw law) const {
  switch (law) {
    case ScalingLaw::Magnetic: return magnetic;
    case ScalingLaw::Electrostatic: return electrostatic;
    case ScalingLaw::RfAmplitude: return rf_amplitude;
    case ScalingLaw::None: return none;
  }
  return 1.0;
}

namespace {
double energy_gain_per_charge(const BeamParameters& b) {
  return b.mass_amu * b.energy_mev_u / b.charge_state;
}
}  // namespace

ScaleFactorSet scale_factors(const BeamParameters& from, const BeamParameters& to) {
  ScaleFactorSet f;
  f.magnetic = kinematics(to).rigidity_tm / kinematics(from).rigidity_tm;
  f.electrostatic = electric_rigidity_mv(to) / electric_rigidity_mv(from);
  f.rf_amplitude = energy_gain_per_charge(to) / energy_gain_per_charge(from);
  f.none = 1.0;
  return f;
}

}  // namespace tunevault
