#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "gridsync/simulation.hpp"

namespace gridsync {

// --- Storage functions (one per subsystem family) ---

// S^delta_p = M/2 * freq_dev^2
double angle_plant_storage(const GeneratorParams& params, double freq_dev);
// S^delta_c = x^2 / (2 K1)
double angle_controller_storage(const AngleControllerParams& params, double state);
// S^V_p = gamma/2 * volt_dev^2
double voltage_plant_storage(const GeneratorParams& params, double volt_dev);
// S^V_c = tau x^2 / (2 K1)
double voltage_controller_storage(const VoltageControllerParams& params, double state);

struct StorageValues {
  Eigen::VectorXd angle_plant;
  Eigen::VectorXd angle_controller;
  Eigen::VectorXd voltage_plant;
  Eigen::VectorXd voltage_controller;
};
StorageValues storage_values(const Scenario& scenario, const Eigen::VectorXd& stacked_state);

// --- Lyapunov candidates ---

// W- = sum_i S^V_p + sum_l S^V_c (voltage loop).
double lyapunov_negative(const Scenario& scenario, const Eigen::VectorXd& volt_dev,
                         const Eigen::VectorXd& volt_ctrl);

// W+ = sum_i S^delta_p + sum_l S^delta_c - y_hat^T x + sum_l K2 y_hat^2 / 2
// (angle loop; the last term is the closed-form feedthrough integral for
// g(u) = -K2 u).
double lyapunov_positive(const Scenario& scenario, const Eigen::VectorXd& freq_dev,
                         const Eigen::VectorXd& y_hat, const Eigen::VectorXd& angle_ctrl);

// Completed-square twin of lyapunov_positive:
//   sum_i M/2 freq^2 + sum_l (x - K1 y_hat)^2/(2 K1) + sum_l (K2 - K1) y_hat^2 / 2.
// Equal to lyapunov_positive as an algebraic identity.
double lyapunov_positive_completed_square(const Scenario& scenario,
                                          const Eigen::VectorXd& freq_dev,
                                          const Eigen::VectorXd& y_hat,
                                          const Eigen::VectorXd& angle_ctrl);

// -integral_0^upper g(xi) dxi by the midpoint rule; fallback for non-affine
// feedthrough maps in the W+ construction.
double feedthrough_integral(const std::function<double(double)>& feedthrough, double upper,
                            int resolution = 256);

// --- Dissipation inequality checks ---

enum class DissipationKind { passive, osp, ni, osni };

DissipationKind parse_dissipation_kind(std::string_view text);
std::string_view to_string(DissipationKind kind);

// Uniformly sampled scalar-channel trajectory of one subsystem.
struct DissipationSeries {
  double dt = 0.0;
  std::vector<double> storage;       // S(x_k)
  std::vector<double> input;         // u_k
  std::vector<double> output;        // y_k
  std::vector<double> state_output;  // h(x_k); equals output when no feedthrough
};

struct DissipationReport {
  double max_violation = 0.0;  // before tolerance clipping
  int violation_count = 0;
  double epsilon_used = 0.0;
  int samples_checked = 0;
};

// Central-difference check of the selected inequality at every interior
// sample; a sample violates when the defect exceeds tol = tol_coeff * dt^2.
// NI/OSNI use the state-output rate dh/dt in place of dy/dt.
DissipationReport check_dissipation(const DissipationSeries& series, DissipationKind kind,
                                    double epsilon, double tol_coeff = 10.0);

// --- Subsystem trajectory extraction and driven simulation ---

enum class Subsystem { angle_plant, voltage_plant, angle_controller, voltage_controller };

// Rebuilds one subsystem's (S, u, y, h) series from a recorded grid trace.
DissipationSeries extract_series(const Trace& trace, const Scenario& scenario,
                                 Subsystem subsystem, int index);

// Deterministic smooth test input: sum of `terms` sinusoids with seed-derived
// amplitudes, frequencies (up to max_freq_hz), and phases.
std::function<double(double)> random_smooth_signal(std::uint64_t seed, double amplitude = 1.0,
                                                   double max_freq_hz = 0.5, int terms = 4);

DissipationSeries simulate_angle_plant(const GeneratorParams& params, double freq0, double angle0,
                                       const std::function<double(double)>& input, double dt,
                                       double horizon);
DissipationSeries simulate_voltage_plant(const GeneratorParams& params, double volt0,
                                         const std::function<double(double)>& input, double dt,
                                         double horizon);
DissipationSeries simulate_angle_controller(const AngleControllerParams& params, double state0,
                                            const std::function<double(double)>& input, double dt,
                                            double horizon);
DissipationSeries simulate_voltage_controller(const VoltageControllerParams& params, double state0,
                                              const std::function<double(double)>& input,
                                              double dt, double horizon);

// --- Steady-state sign conditions ---

enum class Verdict { pass, fail, vacuous };
std::string_view to_string(Verdict verdict);

struct SteadyStateReport {
  bool settled = false;
  double input = 0.0;
  double final_output = 0.0;
  double product = 0.0;  // input * settled output
  double margin = 0.0;   // gamma_c = K2 - K1 for the angle controller, else 0
  Verdict verdict = Verdict::fail;
};

// Drives the subsystem with a constant input until the output settles.
// Angle controller: pass when product <= -margin * input^2.
// Voltage controller / voltage plant: pass when product >= 0.
// Angle plant: the output never settles (pole at the origin) -> vacuous.
SteadyStateReport steady_state_sign_check(const AngleControllerParams& params, double input,
                                          double settle_time = 40.0, double dt = 1e-3);
SteadyStateReport steady_state_sign_check(const VoltageControllerParams& params, double input,
                                          double settle_time = 40.0, double dt = 1e-3);
SteadyStateReport steady_state_sign_check_angle_plant(const GeneratorParams& params, double input,
                                                      double settle_time = 40.0, double dt = 1e-3);
SteadyStateReport steady_state_sign_check_voltage_plant(const GeneratorParams& params,
                                                        double input, double settle_time = 40.0,
                                                        double dt = 1e-3);

// --- Consensus metrics ---

// Max pairwise |y_i - y_j| (scalar outputs).
double consensus_metric(const Eigen::VectorXd& outputs);
// Max pairwise Euclidean distance (vector outputs).
double consensus_metric(const std::vector<Eigen::VectorXd>& outputs);

// --- Trace-level Lyapunov monotonicity ---

struct MonotonicityReport {
  double max_rate_w_minus = 0.0;  // max central-difference dW-/dt
  double max_rate_w_plus = 0.0;
  double min_w_minus = 0.0;
  double min_w_plus = 0.0;
  int interior_samples = 0;
  double tol = 0.0;  // tol_coeff * dt^2
  bool monotone() const {
    return max_rate_w_minus <= tol && max_rate_w_plus <= tol && min_w_minus >= -1e-12 &&
           min_w_plus >= -1e-12;
  }
};
MonotonicityReport check_lyapunov_monotonicity(const Trace& trace, double tol_coeff = 10.0);

// --- Aggregated verification suite (CLI `verify`) ---

struct CheckResult {
  std::string name;
  std::string kind;
  double epsilon = 0.0;
  double max_violation = 0.0;
  Verdict verdict = Verdict::fail;
  std::string detail;
};

bool all_passed(const std::vector<CheckResult>& results);

// Checks evaluated on an already-recorded trace: Lyapunov monotonicity and
// non-negativity, the W+ two-form identity, and the four per-subsystem
// dissipation inequalities along the trajectory. Vacuous for aborted or
// open-loop traces. The scenario must be the one the trace was run with
// (after equilibrium-input preparation).
std::vector<CheckResult> trace_checks(const Scenario& used, const Trace& trace);

// Runs the full analysis battery on the scenario: closed-loop trace checks
// (Lyapunov monotonicity, per-subsystem dissipation along the trajectory),
// random-input dissipation suite with the documented epsilon margins plus the
// deliberate falsification case, steady-state sign checks, equilibrium
// residual, and the decoupling comparison.
std::vector<CheckResult> run_verification_suite(const Scenario& scenario, std::uint64_t seed,
                                                int trajectories_per_system = 20);

}  // namespace gridsync
