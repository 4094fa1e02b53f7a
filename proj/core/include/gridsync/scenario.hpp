#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "gridsync/analysis.hpp"

namespace gridsync {

// Parses a JSON scenario config (sections: network, generators, equilibrium,
// controllers, initial, sim). Angles are degrees in the config, radians in
// the returned Scenario. Edges without susceptances trigger automatic
// derivation; the residual is recorded in Scenario setup and surfaced by the
// CLI. Throws ConfigError naming the offending key on schema violations.
Scenario parse_scenario(const std::string& text);
Scenario load_scenario(const std::string& path);

// Canonical serialization; parse(serialize(s)) reproduces s exactly.
std::string serialize_scenario(const Scenario& scenario);

// Four-area ring benchmark scenario (nodes 1-4, lines 12/23/34/41) with the
// published machine, equilibrium, and controller constants; line susceptances
// are derived from equilibrium consistency.
Scenario builtin_four_area();

// Deterministic random scenario for the consensus property suite: connected
// graph with up to max_nodes nodes, parameters sampled inside the type
// invariants, equilibrium inputs made consistent by construction.
Scenario random_scenario(int max_nodes, std::uint64_t seed);

struct RunReport {
  SimMode mode = SimMode::closed_loop;
  double dt = 0.0;
  double horizon = 0.0;
  std::int64_t steps = 0;
  bool aborted = false;
  std::string abort_reason;
  double final_consensus_delta = 0.0;
  double final_consensus_v = 0.0;
  double max_rate_w_minus = 0.0;  // max observed Lyapunov increase rates
  double max_rate_w_plus = 0.0;
  double residual_p = 0.0;  // equilibrium residual of the inputs actually used
  double residual_q = 0.0;
  std::vector<CheckResult> checks;  // trace-level dissipation/monotonicity verdicts
  double wall_seconds = 0.0;
};

RunReport make_run_report(const Scenario& scenario_used, const Trace& trace, double wall_seconds);

std::string report_text(const RunReport& report);
std::string report_json(const RunReport& report);

// Trace emission. CSV header:
//   t,delta_i...,omega_hz_i...,vmag_i...,xcd_l...,xcv_l...,pst_i...,qst_i...,
//   w_minus,w_plus,consensus_delta,consensus_v
// delta columns are absolute rotor angles in radians; omega_hz absolute bus
// frequency in Hz; vmag absolute voltage magnitude in p.u.
void write_trace_csv(std::ostream& out, const Scenario& scenario, const Trace& trace);
void write_trace_json(std::ostream& out, const Scenario& scenario, const Trace& trace);

// Shortest-width decimal with the given number of significant digits;
// deterministic formatting used by all emitters.
std::string format_significant(double value, int digits = 12);

}  // namespace gridsync
