#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "gridsync/control.hpp"

namespace gridsync {

enum class SimMode { closed_loop, decoupled, open_loop };

SimMode parse_sim_mode(std::string_view text);
std::string_view to_string(SimMode mode);

struct SimConfig {
  double dt = 1e-3;
  double horizon = 40.0;
  SimMode mode = SimMode::closed_loop;
  int decimate = 1;              // record every decimate-th step
  bool raw_equilibrium = false;  // skip consistent_equilibrium_inputs before running
  double voltage_floor = 0.1;    // abort when any |V_i| falls below this
  double residual_bound = 0.05;  // max tolerated raw equilibrium residual
  std::int64_t max_steps = 20'000'000;

  std::int64_t step_count() const;  // round(horizon/dt), validated
  void validate() const;
};

struct Scenario {
  Network network;
  LineParams lines;
  std::vector<GeneratorParams> generators;
  EquilibriumSpec equilibrium;
  std::vector<AngleControllerParams> angle_controllers;
  std::vector<VoltageControllerParams> voltage_controllers;
  GridState initial;
  Eigen::VectorXd initial_angle_ctrl;  // x^delta per edge, defaults to zero
  Eigen::VectorXd initial_volt_ctrl;   // x^V per edge, defaults to zero
  SimConfig sim;

  int node_count() const noexcept { return network.node_count(); }
  int edge_count() const noexcept { return network.edge_count(); }
  int state_size() const noexcept { return 3 * node_count() + 2 * edge_count(); }

  void validate() const;
  Scenario with_consistent_inputs() const;
};

// Stacked state layout: [freq_dev(N) | angle_dev(N) | volt_dev(N) | x^delta(L) | x^V(L)].
namespace layout {
inline Eigen::VectorBlock<const Eigen::VectorXd> freq_dev(const Eigen::VectorXd& x, int n) {
  return x.segment(0, n);
}
inline Eigen::VectorBlock<const Eigen::VectorXd> angle_dev(const Eigen::VectorXd& x, int n) {
  return x.segment(n, n);
}
inline Eigen::VectorBlock<const Eigen::VectorXd> volt_dev(const Eigen::VectorXd& x, int n) {
  return x.segment(2 * n, n);
}
inline Eigen::VectorBlock<const Eigen::VectorXd> angle_ctrl(const Eigen::VectorXd& x, int n,
                                                            int l) {
  return x.segment(3 * n, l);
}
inline Eigen::VectorBlock<const Eigen::VectorXd> volt_ctrl(const Eigen::VectorXd& x, int n,
                                                           int l) {
  return x.segment(3 * n + l, l);
}
}  // namespace layout

Eigen::VectorXd stack_state(const GridState& state, const Eigen::VectorXd& angle_ctrl,
                            const Eigen::VectorXd& volt_ctrl);
GridState unstack_grid_state(const Eigen::VectorXd& stacked, int node_count);

// Classical fixed-step RK4 for an autonomous derivative map. Throws
// NumericError on non-finite stage derivatives or a non-finite result.
template <typename F>
Eigen::VectorXd rk4_step(F&& deriv, const Eigen::VectorXd& state, double dt) {
  const Eigen::VectorXd k1 = deriv(state);
  const Eigen::VectorXd k2 = deriv(state + (0.5 * dt) * k1);
  const Eigen::VectorXd k3 = deriv(state + (0.5 * dt) * k2);
  const Eigen::VectorXd k4 = deriv(state + dt * k3);
  if (!k1.allFinite() || !k2.allFinite() || !k3.allFinite() || !k4.allFinite()) {
    throw NumericError("non-finite derivative");
  }
  return state + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

// Stacked derivative maps. The scenario passed here is used as-is (no
// equilibrium re-derivation); see run() for that policy.
Eigen::VectorXd closed_loop_derivative(const Scenario& scenario, const Eigen::VectorXd& state);
Eigen::VectorXd decoupled_derivative(const Scenario& scenario, const Eigen::VectorXd& state);
Eigen::VectorXd open_loop_derivative(const Scenario& scenario, const Eigen::VectorXd& state);

struct Trace {
  double dt = 0.0;  // recorded sample spacing: sim.dt * decimate
  int node_count = 0;
  int edge_count = 0;
  std::vector<double> time;
  std::vector<Eigen::VectorXd> state;      // stacked state per sample
  std::vector<Eigen::VectorXd> p_storage;  // applied P^ST per sample
  std::vector<Eigen::VectorXd> q_storage;  // applied Q^ST per sample
  std::vector<double> w_minus;
  std::vector<double> w_plus;
  std::vector<double> consensus_delta;
  std::vector<double> consensus_v;
  bool aborted = false;  // integration stopped early (collapse / non-finite)
  std::string abort_reason;

  std::size_t size() const noexcept { return time.size(); }
};

// The scenario as run() integrates it: consistent equilibrium inputs applied
// unless sim.raw_equilibrium is set.
Scenario prepared_scenario(const Scenario& scenario);

// Integrates the scenario in its configured mode. Applies
// consistent_equilibrium_inputs first unless sim.raw_equilibrium is set.
// Numerical failures (voltage collapse, non-finite values) terminate the run
// early and are reported through Trace::aborted rather than by throwing.
Trace run(const Scenario& scenario);

// Mode-forcing conveniences.
Trace run_closed_loop(Scenario scenario);
Trace run_decoupled(Scenario scenario);
Trace run_open_loop(Scenario scenario);

// Max over samples and stacked-state components of |a - b|. Throws
// ConfigError when the time grids or layouts differ.
double compare_traces(const Trace& a, const Trace& b);

}  // namespace gridsync
