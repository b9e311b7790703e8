#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "tunevault/archive_store.hpp"
#include "tunevault/query_engine.hpp"

// Reference implementations the production code is checked against. They
// share no code with the library beyond its data types.
namespace tunevault::oracle {

/// The stated kinematics formulas evaluated in 50-digit decimal arithmetic.
struct BigKinematics {
  double gamma;
  double beta;
  double beta_gamma;
  double pc_total_mev;
  double rigidity_tm;
  double electric_rigidity_mv;
};
BigKinematics kinematics(double mass_amu, int charge_state, double energy_mev_u);

/// Kinetic energy per nucleon at which beta reaches `beta`, solved in closed
/// form from gamma = 1 / sqrt(1 - beta^2).
double energy_at_beta(double beta);

/// Per-law scale factors from the oracle kinematics.
struct BigFactors {
  double magnetic;
  double electrostatic;
  double rf_amplitude;
};
BigFactors factors(double m0, int q0, double e0, double m1, int q1, double e1);

/// Scan, filter, sort and slice a table the obvious way.
QueryResult reference_query(const std::vector<Row>& table_rows, const TableSchema& schema,
                            const QuerySpec& spec);

/// Strings built to break naive record or query encodings.
const std::vector<std::string>& adversarial_strings();

/// Fills resonators, cryo_alarms, beam_measurement, camac_modules and
/// snapshot_values with `rows_per_table` random rows each. Text cells mix
/// ordinary names and adversarial strings; nullable cells are sometimes NULL.
void seed_query_tables(ArchiveStore& store, std::mt19937_64& rng, std::size_t rows_per_table);

/// A random valid spec over one of the seeded tables. Literals are often
/// drawn from existing cells so filters actually select something.
QuerySpec random_query(std::mt19937_64& rng, const std::string& table,
                       const std::vector<Row>& rows);

/// Tables that seed_query_tables populates.
const std::vector<std::string>& seeded_tables();

}  // namespace tunevault::oracle
