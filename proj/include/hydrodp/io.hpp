#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "hydrodp/oracle.hpp"
#include "hydrodp/scenario.hpp"
#include "hydrodp/solve.hpp"

namespace hydrodp {

// Scenario files are JSON. Unknown keys are rejected so a misspelled price
// field cannot silently change the economics. Reservoirs carrying head
// curves are treated as volume-denominated and converted to energy units on
// ingestion. Parse failures throw ParseError (with the byte offset for
// malformed JSON); the parsed scenario must also pass validate, else
// ValidationError.
Scenario load_scenario(const std::string& path);
Scenario parse_scenario_text(const std::string& text);

// Round-trip serialization of a scenario (pretty-printed JSON).
std::string scenario_to_text(const Scenario& scenario);

// Writes value_###.csv and policy_###.csv per stage plus metrics.csv and a
// manifest.json listing every file with its FNV-1a checksum.
void write_result_bundle(const SolveResult& result, const std::string& out_dir);

// Rebuilds the policy side of a bundle written by write_result_bundle so a
// scenario can be simulated without re-solving. Throws ApplicabilityError
// when the bundle does not match the scenario's dimensions.
SolveResult read_policy_bundle(const Scenario& scenario, const std::string& bundle_dir);

// Trace CSVs (one per path) plus summary.csv with cost and water statistics.
void write_simulation_bundle(const std::vector<RolloutTrace>& traces,
                             const std::string& out_dir);

// Realized inflows for simulate: header row, then one row per period with
// one column per reservoir. Markov scenarios prepend a period-0 row carrying
// the pre-horizon inflow.
std::vector<std::vector<double>> read_inflow_csv(const std::string& path,
                                                 std::size_t reservoir_count,
                                                 bool markov_prefix);

std::string format_g12(double v); // 12 significant digits
std::uint64_t fnv1a64(std::string_view data);

} // namespace hydrodp
