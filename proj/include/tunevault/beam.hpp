#pragma once

#include <optional>
#include <string_view>

namespace tunevault {

/// Atomic mass unit rest energy, MeV.
inline constexpr double kAmuMeV = 931.494;
/// Converts pc in MeV and charge in units of e to rigidity in T*m.
inline constexpr double kRigidityMeVPerTm = 299.792458;
/// Machine velocity limit; beams above it are accepted but flagged.
inline constexpr double kMachineBetaLimit = 0.2;

inline constexpr int kMaxChargeState = 120;

/// Ion species and kinetic energy that a tune is bound to.
struct BeamParameters {
  double mass_amu = 0.0;      // u
  int charge_state = 0;       // e
  double energy_mev_u = 0.0;  // kinetic, MeV per nucleon

  friend bool operator==(const BeamParameters&, const BeamParameters&) = default;
};

/// Throws Error(InvalidBeam) when any field is outside its domain.
void validate(const BeamParameters& beam);
bool is_valid(const BeamParameters& beam) noexcept;

struct Kinematics {
  double gamma;
  double beta;
  double beta_gamma;
  double pc_total_mev;
  double rigidity_tm;
};

Kinematics kinematics(const BeamParameters& beam);

/// Electric rigidity p*beta*c/q in MV.
double electric_rigidity_mv(const BeamParameters& beam);

enum class ScalingLaw { Magnetic, Electrostatic, RfAmplitude, None };

std::string_view to_string(ScalingLaw law);
std::optional<ScalingLaw> parse_scaling_law(std::string_view s);

/// Per-law multipliers taking setpoints from one beam to another.
struct ScaleFactorSet {
  double magnetic = 1.0;
  double electrostatic = 1.0;
  double rf_amplitude = 1.0;
  double none = 1.0;

  double factor(ScalingLaw law) const;
};

/// Magnetic elements track magnetic rigidity p/q, electrostatic elements
/// track electric rigidity p*beta*c/q and resonator amplitudes track the
/// energy gain per charge m*E/q.
ScaleFactorSet scale_factors(const BeamParameters& from, const BeamParameters& to);

}  // namespace tunevault
