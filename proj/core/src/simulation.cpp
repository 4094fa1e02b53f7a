#include "gridsync/simulation.hpp"

#include <cmath>
#include <sstream>
#include <utility>

#include "gridsync/analysis.hpp"

namespace gridsync {

SimMode parse_sim_mode(std::string_view text) {
  if (text == "closed_loop") return SimMode::closed_loop;
  if (text == "decoupled") return SimMode::decoupled;
  if (text == "open_loop") return SimMode::open_loop;
  throw ConfigError("unknown sim mode '" + std::string(text) +
                    "' (expected closed_loop, decoupled, or open_loop)");
}

std::string_view to_string(SimMode mode) {
  switch (mode) {
    case SimMode::closed_loop:
      return "closed_loop";
    case SimMode::decoupled:
      return "decoupled";
    case SimMode::open_loop:
      return "open_loop";
  }
  return "closed_loop";
}

std::int64_t SimConfig::step_count() const {
  return static_cast<std::int64_t>(std::llround(horizon / dt));
}

void SimConfig::validate() const {
  if (!(dt > 0.0) || !std::isfinite(dt)) {
    throw ConfigError("sim.dt must be positive");
  }
  if (!(horizon >= dt) || !std::isfinite(horizon)) {
    throw ConfigError("sim.horizon must be at least dt");
  }
  const std::int64_t steps = step_count();
  if (steps < 1 || std::abs(static_cast<double>(steps) * dt - horizon) >
                       1e-9 * std::max(1.0, std::abs(horizon))) {
    throw ConfigError("sim.horizon must be an integer multiple of sim.dt");
  }
  if (steps > max_steps) {
    std::ostringstream msg;
    msg << "sim.horizon/sim.dt = " << steps << " exceeds the step budget " << max_steps;
    throw ConfigError(msg.str());
  }
  if (decimate < 1) {
    throw ConfigError("sim.decimate must be at least 1");
  }
  if (steps % decimate != 0) {
    throw ConfigError("sim.decimate must divide the step count for a uniform trace grid");
  }
  if (!(voltage_floor >= 0.0)) {
    throw ConfigError("sim.voltage_floor must be non-negative");
  }
  if (!(residual_bound > 0.0)) {
    throw ConfigError("sim.residual_bound must be positive");
  }
}

void Scenario::validate() const {
  const int n = node_count();
  const int l = edge_count();
  if (n < 1) {
    throw ConfigError("scenario has no network");
  }
  if (static_cast<int>(generators.size()) != n) {
    throw ConfigError("generator count does not match node count");
  }
  for (int i = 0; i < n; ++i) generators[static_cast<std::size_t>(i)].validate(i);
  equilibrium.validate(network);
  lines.validate(network);
  if (static_cast<int>(angle_controllers.size()) != l) {
    throw ConfigError("angle controller count does not match edge count");
  }
  if (static_cast<int>(voltage_controllers.size()) != l) {
    throw ConfigError("voltage controller count does not match edge count");
  }
  for (int e = 0; e < l; ++e) {
    angle_controllers[static_cast<std::size_t>(e)].validate(e);
    voltage_controllers[static_cast<std::size_t>(e)].validate(e);
  }
  if (initial.angle_dev.size() != n || initial.freq_dev.size() != n ||
      initial.volt_dev.size() != n) {
    throw ConfigError("initial deviation vectors must have one entry per node");
  }
  if (!initial.angle_dev.allFinite() || !initial.freq_dev.allFinite() ||
      !initial.volt_dev.allFinite()) {
    throw ConfigError("initial deviations must be finite");
  }
  for (int i = 0; i < n; ++i) {
    if (!(equilibrium.v_nom + initial.volt_dev(i) > 0.0)) {
      std::ostringstream msg;
      msg << "initial voltage magnitude non-positive at node " << i + 1;
      throw ConfigError(msg.str());
    }
  }
  if (initial_angle_ctrl.size() != l || initial_volt_ctrl.size() != l) {
    throw ConfigError("controller initial state vectors must have one entry per edge");
  }
  if (!initial_angle_ctrl.allFinite() || !initial_volt_ctrl.allFinite()) {
    throw ConfigError("controller initial states must be finite");
  }
  sim.validate();
  const double residual = equilibrium_residual(network, lines, generators, equilibrium).max_abs();
  if (!(residual <= sim.residual_bound)) {
    std::ostringstream msg;
    msg << "equilibrium residual " << residual << " exceeds sim.residual_bound "
        << sim.residual_bound << " (fix the equilibrium data or raise the bound)";
    throw ConfigError(msg.str());
  }
}

Scenario Scenario::with_consistent_inputs() const {
  Scenario adjusted = *this;
  adjusted.generators = consistent_equilibrium_inputs(network, lines, generators, equilibrium);
  return adjusted;
}

Eigen::VectorXd stack_state(const GridState& state, const Eigen::VectorXd& angle_ctrl,
                            const Eigen::VectorXd& volt_ctrl) {
  const int n = static_cast<int>(state.angle_dev.size());
  const int l = static_cast<int>(angle_ctrl.size());
  Eigen::VectorXd stacked(3 * n + 2 * l);
  stacked.segment(0, n) = state.freq_dev;
  stacked.segment(n, n) = state.angle_dev;
  stacked.segment(2 * n, n) = state.volt_dev;
  stacked.segment(3 * n, l) = angle_ctrl;
  stacked.segment(3 * n + l, l) = volt_ctrl;
  return stacked;
}

GridState unstack_grid_state(const Eigen::VectorXd& stacked, int node_count) {
  GridState state;
  state.freq_dev = stacked.segment(0, node_count);
  state.angle_dev = stacked.segment(node_count, node_count);
  state.volt_dev = stacked.segment(2 * node_count, node_count);
  return state;
}

namespace {

struct LoopSignals {
  Eigen::VectorXd angle_ctrl_rate;
  Eigen::VectorXd volt_ctrl_rate;
  Eigen::VectorXd u_p_delta;  // node-aggregated angle-loop control
  Eigen::VectorXd u_p_volt;   // node-aggregated voltage-loop control
};

// Edge inputs from node outputs, controller evaluation, node aggregation.
LoopSignals loop_signals(const Scenario& scenario, const Eigen::VectorXd& state) {
  const int n = scenario.node_count();
  const int l = scenario.edge_count();
  const auto angle_dev = layout::angle_dev(state, n);
  const auto volt_dev = layout::volt_dev(state, n);
  const auto x_delta = layout::angle_ctrl(state, n, l);
  const auto x_volt = layout::volt_ctrl(state, n, l);

  LoopSignals signals;
  signals.angle_ctrl_rate.resize(l);
  signals.volt_ctrl_rate.resize(l);
  Eigen::VectorXd y_delta(l);
  Eigen::VectorXd y_volt(l);
  for (int e = 0; e < l; ++e) {
    const Edge& edge = scenario.network.edge(e);
    const double u_delta = angle_dev(edge.from) - angle_dev(edge.to);
    const double u_volt = volt_dev(edge.from) - volt_dev(edge.to);
    const ControllerRate a =
        angle_controller(scenario.angle_controllers[static_cast<std::size_t>(e)], x_delta(e),
                         u_delta);
    const ControllerRate v =
        voltage_controller(scenario.voltage_controllers[static_cast<std::size_t>(e)], x_volt(e),
                           u_volt);
    signals.angle_ctrl_rate(e) = a.state_rate;
    signals.volt_ctrl_rate(e) = v.state_rate;
    y_delta(e) = a.output;
    y_volt(e) = v.output;
  }
  signals.u_p_delta = node_inputs(scenario.network, y_delta, FeedbackSign::positive);
  signals.u_p_volt = node_inputs(scenario.network, y_volt, FeedbackSign::negative);
  return signals;
}

Eigen::VectorXd assemble(const Eigen::VectorXd& freq_rate, const Eigen::VectorXd& angle_rate,
                         const Eigen::VectorXd& volt_rate, const Eigen::VectorXd& xd_rate,
                         const Eigen::VectorXd& xv_rate) {
  const int n = static_cast<int>(freq_rate.size());
  const int l = static_cast<int>(xd_rate.size());
  Eigen::VectorXd deriv(3 * n + 2 * l);
  deriv.segment(0, n) = freq_rate;
  deriv.segment(n, n) = angle_rate;
  deriv.segment(2 * n, n) = volt_rate;
  deriv.segment(3 * n, l) = xd_rate;
  deriv.segment(3 * n + l, l) = xv_rate;
  return deriv;
}

}  // namespace

Eigen::VectorXd closed_loop_derivative(const Scenario& scenario, const Eigen::VectorXd& state) {
  const int n = scenario.node_count();
  const LoopSignals signals = loop_signals(scenario, state);

  GridState grid = unstack_grid_state(state, n);
  const Eigen::VectorXd angle = scenario.equilibrium.angle + grid.angle_dev;
  const Eigen::VectorXd volt =
      Eigen::VectorXd::Constant(n, scenario.equilibrium.v_nom) + grid.volt_dev;
  const Eigen::VectorXd p_storage = battery_real_dispatch(
      scenario.network, scenario.lines, scenario.equilibrium, signals.u_p_delta, angle, volt);
  const Eigen::VectorXd q_storage = battery_reactive_dispatch(
      scenario.network, scenario.lines, scenario.equilibrium, signals.u_p_volt, angle, volt);

  const PlantDerivatives plant =
      full_plant_derivatives(scenario.network, scenario.lines, scenario.generators,
                             scenario.equilibrium, grid, p_storage, q_storage);
  return assemble(plant.freq_rate, grid.freq_dev, plant.volt_rate, signals.angle_ctrl_rate,
                  signals.volt_ctrl_rate);
}

Eigen::VectorXd decoupled_derivative(const Scenario& scenario, const Eigen::VectorXd& state) {
  const int n = scenario.node_count();
  const LoopSignals signals = loop_signals(scenario, state);
  const auto freq_dev = layout::freq_dev(state, n);
  const auto volt_dev = layout::volt_dev(state, n);

  Eigen::VectorXd freq_rate(n);
  Eigen::VectorXd volt_rate(n);
  for (int i = 0; i < n; ++i) {
    const GeneratorParams& p = scenario.generators[static_cast<std::size_t>(i)];
    const DecoupledCoefficients coeff = decoupled_coefficients(p);
    freq_rate(i) = (-p.damping * freq_dev(i) + signals.u_p_delta(i)) / p.inertia;
    volt_rate(i) = (-coeff.alpha * volt_dev(i) + signals.u_p_volt(i)) / coeff.gamma;
  }
  return assemble(freq_rate, freq_dev, volt_rate, signals.angle_ctrl_rate,
                  signals.volt_ctrl_rate);
}

Eigen::VectorXd open_loop_derivative(const Scenario& scenario, const Eigen::VectorXd& state) {
  const int n = scenario.node_count();
  const int l = scenario.edge_count();
  GridState grid = unstack_grid_state(state, n);
  const Eigen::VectorXd zero_dispatch = Eigen::VectorXd::Zero(n);
  const PlantDerivatives plant =
      full_plant_derivatives(scenario.network, scenario.lines, scenario.generators,
                             scenario.equilibrium, grid, zero_dispatch, zero_dispatch);
  // Controllers are disconnected: their states are frozen.
  return assemble(plant.freq_rate, grid.freq_dev, plant.volt_rate, Eigen::VectorXd::Zero(l),
                  Eigen::VectorXd::Zero(l));
}

Scenario prepared_scenario(const Scenario& scenario) {
  return scenario.sim.raw_equilibrium ? scenario : scenario.with_consistent_inputs();
}

namespace {

std::pair<Eigen::VectorXd, Eigen::VectorXd> dispatch_from_state(const Scenario& scenario,
                                                                const Eigen::VectorXd& state) {
  const int n = scenario.node_count();
  if (scenario.sim.mode == SimMode::open_loop) {
    return {Eigen::VectorXd::Zero(n), Eigen::VectorXd::Zero(n)};
  }
  const LoopSignals signals = loop_signals(scenario, state);
  const Eigen::VectorXd angle = scenario.equilibrium.angle + layout::angle_dev(state, n);
  const Eigen::VectorXd volt =
      Eigen::VectorXd::Constant(n, scenario.equilibrium.v_nom) + layout::volt_dev(state, n);
  return {battery_real_dispatch(scenario.network, scenario.lines, scenario.equilibrium,
                                signals.u_p_delta, angle, volt),
          battery_reactive_dispatch(scenario.network, scenario.lines, scenario.equilibrium,
                                    signals.u_p_volt, angle, volt)};
}

void record_sample(Trace& trace, const Scenario& scenario, double time,
                   const Eigen::VectorXd& state) {
  const int n = scenario.node_count();
  const int l = scenario.edge_count();
  trace.time.push_back(time);
  trace.state.push_back(state);
  auto [p_storage, q_storage] = dispatch_from_state(scenario, state);
  trace.p_storage.push_back(std::move(p_storage));
  trace.q_storage.push_back(std::move(q_storage));
  trace.w_minus.push_back(
      lyapunov_negative(scenario, layout::volt_dev(state, n), layout::volt_ctrl(state, n, l)));
  const Eigen::VectorXd y_hat = edge_inputs(scenario.network, layout::angle_dev(state, n));
  trace.w_plus.push_back(
      lyapunov_positive(scenario, layout::freq_dev(state, n), y_hat,
                        layout::angle_ctrl(state, n, l)));
  if (n >= 2) {
    trace.consensus_delta.push_back(consensus_metric(layout::angle_dev(state, n)));
    trace.consensus_v.push_back(consensus_metric(layout::volt_dev(state, n)));
  } else {
    trace.consensus_delta.push_back(0.0);
    trace.consensus_v.push_back(0.0);
  }
}

// Index of the lowest voltage, for abort diagnostics.
int weakest_node(const Eigen::VectorXd& volt_dev) {
  int index = 0;
  volt_dev.minCoeff(&index);
  return index;
}

}  // namespace

Trace run(const Scenario& input) {
  input.validate();
  const Scenario scenario = prepared_scenario(input);
  const SimConfig& sim = scenario.sim;
  const std::int64_t steps = sim.step_count();
  const int n = scenario.node_count();

  Trace trace;
  trace.dt = sim.dt * sim.decimate;
  trace.node_count = n;
  trace.edge_count = scenario.edge_count();

  Eigen::VectorXd state =
      stack_state(scenario.initial, scenario.initial_angle_ctrl, scenario.initial_volt_ctrl);
  record_sample(trace, scenario, 0.0, state);

  const auto derivative = [&scenario](const Eigen::VectorXd& x) {
    switch (scenario.sim.mode) {
      case SimMode::closed_loop:
        return closed_loop_derivative(scenario, x);
      case SimMode::decoupled:
        return decoupled_derivative(scenario, x);
      case SimMode::open_loop:
        return open_loop_derivative(scenario, x);
    }
    return closed_loop_derivative(scenario, x);
  };

  for (std::int64_t k = 1; k <= steps; ++k) {
    const double t = static_cast<double>(k) * sim.dt;
    try {
      state = rk4_step(derivative, state, sim.dt);
    } catch (const NumericError& e) {
      std::ostringstream msg;
      msg << e.what() << " at step " << k << " (t=" << t << ")";
      trace.aborted = true;
      trace.abort_reason = msg.str();
      break;
    }
    if (!state.allFinite()) {
      std::ostringstream msg;
      msg << "non-finite state at step " << k << " (t=" << t << ")";
      trace.aborted = true;
      trace.abort_reason = msg.str();
      break;
    }
    const auto volt_dev = layout::volt_dev(state, n);
    const double min_volt = scenario.equilibrium.v_nom + volt_dev.minCoeff();
    if (min_volt < sim.voltage_floor) {
      std::ostringstream msg;
      msg << "voltage collapse: |V| = " << min_volt << " below floor " << sim.voltage_floor
          << " at node " << weakest_node(volt_dev) + 1 << ", step " << k << " (t=" << t << ")";
      trace.aborted = true;
      trace.abort_reason = msg.str();
      break;
    }
    if (k % sim.decimate == 0) {
      record_sample(trace, scenario, t, state);
    }
  }
  return trace;
}

Trace run_closed_loop(Scenario scenario) {
  scenario.sim.mode = SimMode::closed_loop;
  return run(scenario);
}

Trace run_decoupled(Scenario scenario) {
  scenario.sim.mode = SimMode::decoupled;
  return run(scenario);
}

Trace run_open_loop(Scenario scenario) {
  scenario.sim.mode = SimMode::open_loop;
  return run(scenario);
}

double compare_traces(const Trace& a, const Trace& b) {
  if (a.node_count != b.node_count || a.edge_count != b.edge_count) {
    throw ConfigError("compare_traces: state layouts differ");
  }
  if (a.size() != b.size() || a.dt != b.dt) {
    throw ConfigError("compare_traces: time grids differ");
  }
  double max_diff = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (a.time[k] != b.time[k]) {
      throw ConfigError("compare_traces: time grids differ");
    }
    max_diff = std::max(max_diff, (a.state[k] - b.state[k]).cwiseAbs().maxCoeff());
  }
  return max_diff;
}

}  // namespace gridsync
