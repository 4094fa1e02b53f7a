#include "gridsync/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace gridsync {

double angle_plant_storage(const GeneratorParams& params, double freq_dev) {
  return 0.5 * params.inertia * freq_dev * freq_dev;
}

double angle_controller_storage(const AngleControllerParams& params, double state) {
  return state * state / (2.0 * params.k1);
}

double voltage_plant_storage(const GeneratorParams& params, double volt_dev) {
  return 0.5 * decoupled_coefficients(params).gamma * volt_dev * volt_dev;
}

double voltage_controller_storage(const VoltageControllerParams& params, double state) {
  return params.tau * state * state / (2.0 * params.k1);
}

StorageValues storage_values(const Scenario& scenario, const Eigen::VectorXd& stacked_state) {
  const int n = scenario.node_count();
  const int l = scenario.edge_count();
  if (stacked_state.size() != scenario.state_size()) {
    throw ConfigError("storage_values: stacked state size mismatch");
  }
  const auto freq = layout::freq_dev(stacked_state, n);
  const auto volt = layout::volt_dev(stacked_state, n);
  const auto x_delta = layout::angle_ctrl(stacked_state, n, l);
  const auto x_volt = layout::volt_ctrl(stacked_state, n, l);

  StorageValues values;
  values.angle_plant.resize(n);
  values.voltage_plant.resize(n);
  values.angle_controller.resize(l);
  values.voltage_controller.resize(l);
  for (int i = 0; i < n; ++i) {
    const GeneratorParams& p = scenario.generators[static_cast<std::size_t>(i)];
    values.angle_plant(i) = angle_plant_storage(p, freq(i));
    values.voltage_plant(i) = voltage_plant_storage(p, volt(i));
  }
  for (int e = 0; e < l; ++e) {
    values.angle_controller(e) =
        angle_controller_storage(scenario.angle_controllers[static_cast<std::size_t>(e)],
                                 x_delta(e));
    values.voltage_controller(e) =
        voltage_controller_storage(scenario.voltage_controllers[static_cast<std::size_t>(e)],
                                   x_volt(e));
  }
  return values;
}

double lyapunov_negative(const Scenario& scenario, const Eigen::VectorXd& volt_dev,
                         const Eigen::VectorXd& volt_ctrl) {
  const int n = scenario.node_count();
  const int l = scenario.edge_count();
  if (volt_dev.size() != n || volt_ctrl.size() != l) {
    throw ConfigError("lyapunov_negative: dimension mismatch");
  }
  double value = 0.0;
  for (int i = 0; i < n; ++i) {
    value += voltage_plant_storage(scenario.generators[static_cast<std::size_t>(i)], volt_dev(i));
  }
  for (int e = 0; e < l; ++e) {
    value += voltage_controller_storage(
        scenario.voltage_controllers[static_cast<std::size_t>(e)], volt_ctrl(e));
  }
  return value;
}

double lyapunov_positive(const Scenario& scenario, const Eigen::VectorXd& freq_dev,
                         const Eigen::VectorXd& y_hat, const Eigen::VectorXd& angle_ctrl) {
  const int n = scenario.node_count();
  const int l = scenario.edge_count();
  if (freq_dev.size() != n || y_hat.size() != l || angle_ctrl.size() != l) {
    throw ConfigError("lyapunov_positive: dimension mismatch");
  }
  double value = 0.0;
  for (int i = 0; i < n; ++i) {
    value += angle_plant_storage(scenario.generators[static_cast<std::size_t>(i)], freq_dev(i));
  }
  for (int e = 0; e < l; ++e) {
    const AngleControllerParams& c = scenario.angle_controllers[static_cast<std::size_t>(e)];
    // S_c - y_hat * x + closed-form feedthrough integral of g(u) = -K2 u.
    value += angle_controller_storage(c, angle_ctrl(e)) - y_hat(e) * angle_ctrl(e) +
             0.5 * c.k2 * y_hat(e) * y_hat(e);
  }
  return value;
}

double lyapunov_positive_completed_square(const Scenario& scenario,
                                          const Eigen::VectorXd& freq_dev,
                                          const Eigen::VectorXd& y_hat,
                                          const Eigen::VectorXd& angle_ctrl) {
  const int n = scenario.node_count();
  const int l = scenario.edge_count();
  if (freq_dev.size() != n || y_hat.size() != l || angle_ctrl.size() != l) {
    throw ConfigError("lyapunov_positive_completed_square: dimension mismatch");
  }
  double value = 0.0;
  for (int i = 0; i < n; ++i) {
    value += angle_plant_storage(scenario.generators[static_cast<std::size_t>(i)], freq_dev(i));
  }
  for (int e = 0; e < l; ++e) {
    const AngleControllerParams& c = scenario.angle_controllers[static_cast<std::size_t>(e)];
    const double residue = angle_ctrl(e) - c.k1 * y_hat(e);
    value += residue * residue / (2.0 * c.k1) + 0.5 * (c.k2 - c.k1) * y_hat(e) * y_hat(e);
  }
  return value;
}

double feedthrough_integral(const std::function<double(double)>& feedthrough, double upper,
                            int resolution) {
  if (resolution < 1) {
    throw ConfigError("feedthrough_integral: resolution must be positive");
  }
  const double width = upper / resolution;
  double sum = 0.0;
  for (int k = 0; k < resolution; ++k) {
    sum += feedthrough((static_cast<double>(k) + 0.5) * width);
  }
  return -sum * width;
}

DissipationKind parse_dissipation_kind(std::string_view text) {
  if (text == "passive") return DissipationKind::passive;
  if (text == "osp") return DissipationKind::osp;
  if (text == "ni") return DissipationKind::ni;
  if (text == "osni") return DissipationKind::osni;
  throw ConfigError("unknown dissipation kind '" + std::string(text) + "'");
}

std::string_view to_string(DissipationKind kind) {
  switch (kind) {
    case DissipationKind::passive:
      return "passive";
    case DissipationKind::osp:
      return "osp";
    case DissipationKind::ni:
      return "ni";
    case DissipationKind::osni:
      return "osni";
  }
  return "passive";
}

DissipationReport check_dissipation(const DissipationSeries& series, DissipationKind kind,
                                    double epsilon, double tol_coeff) {
  const std::size_t count = series.storage.size();
  if (count < 3) {
    throw ConfigError("check_dissipation: trajectory needs at least 3 samples");
  }
  if (series.input.size() != count || series.output.size() != count ||
      series.state_output.size() != count || !(series.dt > 0.0)) {
    throw ConfigError("check_dissipation: inconsistent series");
  }

  DissipationReport report;
  report.epsilon_used = epsilon;
  report.samples_checked = static_cast<int>(count) - 2;
  const double tol = tol_coeff * series.dt * series.dt;
  const double inv_2dt = 1.0 / (2.0 * series.dt);
  double max_defect = -std::numeric_limits<double>::infinity();

  for (std::size_t k = 1; k + 1 < count; ++k) {
    const double s_rate = (series.storage[k + 1] - series.storage[k - 1]) * inv_2dt;
    const double u = series.input[k];
    double defect = 0.0;
    switch (kind) {
      case DissipationKind::passive:
        defect = s_rate - u * series.output[k];
        break;
      case DissipationKind::osp: {
        const double h = series.state_output[k];
        defect = s_rate - u * series.output[k] + epsilon * h * h;
        break;
      }
      case DissipationKind::ni:
      case DissipationKind::osni: {
        // State-output rate; for feedthrough systems this is dh/dt, not dy/dt.
        const double h_rate = (series.state_output[k + 1] - series.state_output[k - 1]) * inv_2dt;
        defect = s_rate - u * h_rate;
        if (kind == DissipationKind::osni) defect += epsilon * h_rate * h_rate;
        break;
      }
    }
    max_defect = std::max(max_defect, defect);
    if (defect > tol) ++report.violation_count;
  }
  report.max_violation = max_defect;
  return report;
}

DissipationSeries extract_series(const Trace& trace, const Scenario& scenario,
                                 Subsystem subsystem, int index) {
  const int n = scenario.node_count();
  const int l = scenario.edge_count();
  const bool node_level =
      subsystem == Subsystem::angle_plant || subsystem == Subsystem::voltage_plant;
  if (index < 0 || index >= (node_level ? n : l)) {
    throw ConfigError("extract_series: index out of range");
  }
  if (trace.node_count != n || trace.edge_count != l) {
    throw ConfigError("extract_series: trace does not match scenario");
  }

  DissipationSeries series;
  series.dt = trace.dt;
  const std::size_t count = trace.size();
  series.storage.reserve(count);
  series.input.reserve(count);
  series.output.reserve(count);
  series.state_output.reserve(count);

  for (std::size_t k = 0; k < count; ++k) {
    const Eigen::VectorXd& state = trace.state[k];
    const auto angle_dev = layout::angle_dev(state, n);
    const auto volt_dev = layout::volt_dev(state, n);
    const auto x_delta = layout::angle_ctrl(state, n, l);
    const auto x_volt = layout::volt_ctrl(state, n, l);

    switch (subsystem) {
      case Subsystem::angle_plant: {
        const Eigen::VectorXd u_hat = edge_inputs(scenario.network, angle_dev);
        Eigen::VectorXd y_c(l);
        for (int e = 0; e < l; ++e) {
          y_c(e) = angle_controller(scenario.angle_controllers[static_cast<std::size_t>(e)],
                                    x_delta(e), u_hat(e))
                       .output;
        }
        const Eigen::VectorXd u_p = node_inputs(scenario.network, y_c, FeedbackSign::positive);
        series.storage.push_back(angle_plant_storage(
            scenario.generators[static_cast<std::size_t>(index)], layout::freq_dev(state, n)(index)));
        series.input.push_back(u_p(index));
        series.output.push_back(angle_dev(index));
        series.state_output.push_back(angle_dev(index));
        break;
      }
      case Subsystem::voltage_plant: {
        const Eigen::VectorXd u_hat = edge_inputs(scenario.network, volt_dev);
        Eigen::VectorXd y_c(l);
        for (int e = 0; e < l; ++e) {
          y_c(e) = voltage_controller(scenario.voltage_controllers[static_cast<std::size_t>(e)],
                                      x_volt(e), u_hat(e))
                       .output;
        }
        const Eigen::VectorXd u_p = node_inputs(scenario.network, y_c, FeedbackSign::negative);
        series.storage.push_back(voltage_plant_storage(
            scenario.generators[static_cast<std::size_t>(index)], volt_dev(index)));
        series.input.push_back(u_p(index));
        series.output.push_back(volt_dev(index));
        series.state_output.push_back(volt_dev(index));
        break;
      }
      case Subsystem::angle_controller: {
        const double u = angle_dev(scenario.network.edge(index).from) -
                         angle_dev(scenario.network.edge(index).to);
        const AngleControllerParams& c =
            scenario.angle_controllers[static_cast<std::size_t>(index)];
        series.storage.push_back(angle_controller_storage(c, x_delta(index)));
        series.input.push_back(u);
        series.output.push_back(x_delta(index) - c.k2 * u);
        series.state_output.push_back(x_delta(index));
        break;
      }
      case Subsystem::voltage_controller: {
        const double u = volt_dev(scenario.network.edge(index).from) -
                         volt_dev(scenario.network.edge(index).to);
        const VoltageControllerParams& c =
            scenario.voltage_controllers[static_cast<std::size_t>(index)];
        series.storage.push_back(voltage_controller_storage(c, x_volt(index)));
        series.input.push_back(u);
        series.output.push_back(x_volt(index));
        series.state_output.push_back(x_volt(index));
        break;
      }
    }
  }
  return series;
}

std::function<double(double)> random_smooth_signal(std::uint64_t seed, double amplitude,
                                                   double max_freq_hz, int terms) {
  if (terms < 1) {
    throw ConfigError("random_smooth_signal: terms must be positive");
  }
  std::mt19937_64 rng(seed);
  const auto uniform = [&rng]() {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;  // [0, 1)
  };
  std::vector<double> weight(static_cast<std::size_t>(terms));
  std::vector<double> omega(static_cast<std::size_t>(terms));
  std::vector<double> phase(static_cast<std::size_t>(terms));
  double total = 0.0;
  for (int j = 0; j < terms; ++j) {
    weight[static_cast<std::size_t>(j)] = 0.5 + 0.5 * uniform();
    total += weight[static_cast<std::size_t>(j)];
    const double freq = max_freq_hz * (0.2 + 0.8 * uniform());
    omega[static_cast<std::size_t>(j)] = 2.0 * k_pi * freq;
    phase[static_cast<std::size_t>(j)] = 2.0 * k_pi * uniform();
  }
  for (double& w : weight) w *= amplitude / total;  // sum of |weights| = amplitude

  return [weight, omega, phase, terms](double t) {
    double value = 0.0;
    for (int j = 0; j < terms; ++j) {
      value += weight[static_cast<std::size_t>(j)] *
               std::sin(omega[static_cast<std::size_t>(j)] * t + phase[static_cast<std::size_t>(j)]);
    }
    return value;
  };
}

namespace {

std::int64_t driven_steps(double dt, double horizon) {
  if (!(dt > 0.0) || !(horizon >= dt)) {
    throw ConfigError("driven simulation: dt must be positive and horizon at least dt");
  }
  return static_cast<std::int64_t>(std::llround(horizon / dt));
}

}  // namespace

DissipationSeries simulate_angle_plant(const GeneratorParams& params, double freq0, double angle0,
                                       const std::function<double(double)>& input, double dt,
                                       double horizon) {
  const std::int64_t steps = driven_steps(dt, horizon);
  // Augmented autonomous state (freq, angle, t).
  const auto deriv = [&](const Eigen::VectorXd& s) {
    Eigen::VectorXd d(3);
    d(0) = (-params.damping * s(0) + input(s(2))) / params.inertia;
    d(1) = s(0);
    d(2) = 1.0;
    return d;
  };
  Eigen::VectorXd state(3);
  state << freq0, angle0, 0.0;

  DissipationSeries series;
  series.dt = dt;
  for (std::int64_t k = 0;; ++k) {
    series.storage.push_back(angle_plant_storage(params, state(0)));
    series.input.push_back(input(state(2)));
    series.output.push_back(state(1));
    series.state_output.push_back(state(1));
    if (k == steps) break;
    state = rk4_step(deriv, state, dt);
  }
  return series;
}

DissipationSeries simulate_voltage_plant(const GeneratorParams& params, double volt0,
                                         const std::function<double(double)>& input, double dt,
                                         double horizon) {
  const std::int64_t steps = driven_steps(dt, horizon);
  const DecoupledCoefficients coeff = decoupled_coefficients(params);
  const auto deriv = [&](const Eigen::VectorXd& s) {
    Eigen::VectorXd d(2);
    d(0) = (-coeff.alpha * s(0) + input(s(1))) / coeff.gamma;
    d(1) = 1.0;
    return d;
  };
  Eigen::VectorXd state(2);
  state << volt0, 0.0;

  DissipationSeries series;
  series.dt = dt;
  for (std::int64_t k = 0;; ++k) {
    series.storage.push_back(voltage_plant_storage(params, state(0)));
    series.input.push_back(input(state(1)));
    series.output.push_back(state(0));
    series.state_output.push_back(state(0));
    if (k == steps) break;
    state = rk4_step(deriv, state, dt);
  }
  return series;
}

DissipationSeries simulate_angle_controller(const AngleControllerParams& params, double state0,
                                            const std::function<double(double)>& input, double dt,
                                            double horizon) {
  const std::int64_t steps = driven_steps(dt, horizon);
  const auto deriv = [&](const Eigen::VectorXd& s) {
    Eigen::VectorXd d(2);
    d(0) = angle_controller(params, s(0), input(s(1))).state_rate;
    d(1) = 1.0;
    return d;
  };
  Eigen::VectorXd state(2);
  state << state0, 0.0;

  DissipationSeries series;
  series.dt = dt;
  for (std::int64_t k = 0;; ++k) {
    const double u = input(state(1));
    series.storage.push_back(angle_controller_storage(params, state(0)));
    series.input.push_back(u);
    series.output.push_back(state(0) - params.k2 * u);
    series.state_output.push_back(state(0));
    if (k == steps) break;
    state = rk4_step(deriv, state, dt);
  }
  return series;
}

DissipationSeries simulate_voltage_controller(const VoltageControllerParams& params, double state0,
                                              const std::function<double(double)>& input,
                                              double dt, double horizon) {
  const std::int64_t steps = driven_steps(dt, horizon);
  const auto deriv = [&](const Eigen::VectorXd& s) {
    Eigen::VectorXd d(2);
    d(0) = voltage_controller(params, s(0), input(s(1))).state_rate;
    d(1) = 1.0;
    return d;
  };
  Eigen::VectorXd state(2);
  state << state0, 0.0;

  DissipationSeries series;
  series.dt = dt;
  for (std::int64_t k = 0;; ++k) {
    series.storage.push_back(voltage_controller_storage(params, state(0)));
    series.input.push_back(input(state(1)));
    series.output.push_back(state(0));
    series.state_output.push_back(state(0));
    if (k == steps) break;
    state = rk4_step(deriv, state, dt);
  }
  return series;
}

std::string_view to_string(Verdict verdict) {
  switch (verdict) {
    case Verdict::pass:
      return "pass";
    case Verdict::fail:
      return "fail";
    case Verdict::vacuous:
      return "vacuous";
  }
  return "fail";
}

namespace {

struct SettleResult {
  bool settled = false;
  double final_output = 0.0;
};

// Integrates dx/dt = rate(x) under the constant input and watches the output
// map settle: the output at 90% of the horizon must match the final output.
template <typename Rate, typename Output>
SettleResult settle(Rate&& rate, Output&& output, double x0, double settle_time, double dt) {
  const std::int64_t steps = driven_steps(dt, settle_time);
  const std::int64_t probe = steps - std::max<std::int64_t>(1, steps / 10);
  double x = x0;
  double probe_output = output(x);
  const auto deriv = [&rate](const Eigen::VectorXd& s) {
    Eigen::VectorXd d(1);
    d(0) = rate(s(0));
    return d;
  };
  Eigen::VectorXd state(1);
  state << x0;
  for (std::int64_t k = 1; k <= steps; ++k) {
    state = rk4_step(deriv, state, dt);
    if (k == probe) probe_output = output(state(0));
  }
  SettleResult result;
  result.final_output = output(state(0));
  result.settled =
      std::abs(result.final_output - probe_output) <= 1e-8 * std::max(1.0, std::abs(result.final_output));
  return result;
}

}  // namespace

SteadyStateReport steady_state_sign_check(const AngleControllerParams& params, double input,
                                          double settle_time, double dt) {
  const SettleResult res = settle(
      [&](double x) { return angle_controller(params, x, input).state_rate; },
      [&](double x) { return x - params.k2 * input; }, 0.0, settle_time, dt);
  SteadyStateReport report;
  report.settled = res.settled;
  report.input = input;
  report.final_output = res.final_output;
  report.product = input * res.final_output;
  report.margin = params.k2 - params.k1;
  if (!res.settled) {
    report.verdict = Verdict::vacuous;
  } else {
    // Required: product <= -gamma_c * |input|^2 with gamma_c = K2 - K1.
    report.verdict = report.product <= -report.margin * input * input + 1e-9 ? Verdict::pass
                                                                             : Verdict::fail;
  }
  return report;
}

SteadyStateReport steady_state_sign_check(const VoltageControllerParams& params, double input,
                                          double settle_time, double dt) {
  const SettleResult res = settle(
      [&](double x) { return voltage_controller(params, x, input).state_rate; },
      [](double x) { return x; }, 0.0, settle_time, dt);
  SteadyStateReport report;
  report.settled = res.settled;
  report.input = input;
  report.final_output = res.final_output;
  report.product = input * res.final_output;
  report.verdict = !res.settled          ? Verdict::vacuous
                   : report.product >= -1e-9 ? Verdict::pass
                                             : Verdict::fail;
  return report;
}

SteadyStateReport steady_state_sign_check_angle_plant(const GeneratorParams& params, double input,
                                                      double settle_time, double dt) {
  // State (freq, angle); the output delta-tilde integrates freq -> no steady
  // state for nonzero input (pole at the origin).
  const std::int64_t steps = driven_steps(dt, settle_time);
  const std::int64_t probe = steps - std::max<std::int64_t>(1, steps / 10);
  const auto deriv = [&](const Eigen::VectorXd& s) {
    Eigen::VectorXd d(2);
    d(0) = (-params.damping * s(0) + input) / params.inertia;
    d(1) = s(0);
    return d;
  };
  Eigen::VectorXd state = Eigen::VectorXd::Zero(2);
  double probe_output = state(1);
  for (std::int64_t k = 1; k <= steps; ++k) {
    state = rk4_step(deriv, state, dt);
    if (k == probe) probe_output = state(1);
  }
  SteadyStateReport report;
  report.input = input;
  report.final_output = state(1);
  report.product = input * state(1);
  report.settled =
      std::abs(state(1) - probe_output) <= 1e-8 * std::max(1.0, std::abs(state(1)));
  report.verdict = report.settled ? (report.product >= -1e-9 ? Verdict::pass : Verdict::fail)
                                  : Verdict::vacuous;
  return report;
}

SteadyStateReport steady_state_sign_check_voltage_plant(const GeneratorParams& params,
                                                        double input, double settle_time,
                                                        double dt) {
  const DecoupledCoefficients coeff = decoupled_coefficients(params);
  const SettleResult res = settle(
      [&](double v) { return (-coeff.alpha * v + input) / coeff.gamma; },
      [](double v) { return v; }, 0.0, settle_time, dt);
  SteadyStateReport report;
  report.settled = res.settled;
  report.input = input;
  report.final_output = res.final_output;
  report.product = input * res.final_output;
  report.verdict = !res.settled          ? Verdict::vacuous
                   : report.product >= -1e-9 ? Verdict::pass
                                             : Verdict::fail;
  return report;
}

double consensus_metric(const Eigen::VectorXd& outputs) {
  if (outputs.size() < 2) {
    throw ConfigError("consensus_metric: needs at least 2 outputs");
  }
  return outputs.maxCoeff() - outputs.minCoeff();
}

double consensus_metric(const std::vector<Eigen::VectorXd>& outputs) {
  if (outputs.size() < 2) {
    throw ConfigError("consensus_metric: needs at least 2 outputs");
  }
  double max_distance = 0.0;
  for (std::size_t i = 0; i < outputs.size(); ++i) {
    for (std::size_t j = i + 1; j < outputs.size(); ++j) {
      max_distance = std::max(max_distance, (outputs[i] - outputs[j]).norm());
    }
  }
  return max_distance;
}

MonotonicityReport check_lyapunov_monotonicity(const Trace& trace, double tol_coeff) {
  if (trace.size() < 3) {
    throw ConfigError("check_lyapunov_monotonicity: trace needs at least 3 samples");
  }
  MonotonicityReport report;
  report.tol = tol_coeff * trace.dt * trace.dt;
  report.interior_samples = static_cast<int>(trace.size()) - 2;
  report.max_rate_w_minus = -std::numeric_limits<double>::infinity();
  report.max_rate_w_plus = -std::numeric_limits<double>::infinity();
  const double inv_2dt = 1.0 / (2.0 * trace.dt);
  for (std::size_t k = 1; k + 1 < trace.size(); ++k) {
    report.max_rate_w_minus = std::max(report.max_rate_w_minus,
                                       (trace.w_minus[k + 1] - trace.w_minus[k - 1]) * inv_2dt);
    report.max_rate_w_plus =
        std::max(report.max_rate_w_plus, (trace.w_plus[k + 1] - trace.w_plus[k - 1]) * inv_2dt);
  }
  report.min_w_minus = *std::min_element(trace.w_minus.begin(), trace.w_minus.end());
  report.min_w_plus = *std::min_element(trace.w_plus.begin(), trace.w_plus.end());
  return report;
}

bool all_passed(const std::vector<CheckResult>& results) {
  return std::none_of(results.begin(), results.end(),
                      [](const CheckResult& r) { return r.verdict == Verdict::fail; });
}

namespace {

std::string format_double(double value) {
  std::ostringstream out;
  out.precision(6);
  out << value;
  return out.str();
}

CheckResult trace_family_check(const Trace& trace, const Scenario& scenario, Subsystem subsystem,
                               const char* name, DissipationKind kind,
                               const std::function<double(int)>& epsilon_for, int instance_count,
                               bool applicable) {
  CheckResult result;
  result.name = name;
  result.kind = std::string(to_string(kind));
  if (!applicable) {
    result.verdict = Verdict::vacuous;
    result.detail = trace.aborted ? "trace aborted: " + trace.abort_reason
                                  : "not applicable in this mode";
    return result;
  }
  double max_violation = -std::numeric_limits<double>::infinity();
  double epsilon_used = 0.0;
  int violations = 0;
  for (int i = 0; i < instance_count; ++i) {
    const DissipationSeries series = extract_series(trace, scenario, subsystem, i);
    const double epsilon = epsilon_for(i);
    const DissipationReport report = check_dissipation(series, kind, epsilon);
    max_violation = std::max(max_violation, report.max_violation);
    violations += report.violation_count;
    epsilon_used = epsilon;
  }
  result.epsilon = epsilon_used;
  result.max_violation = max_violation;
  result.verdict = violations == 0 ? Verdict::pass : Verdict::fail;
  result.detail = std::to_string(violations) + " violations over " +
                  std::to_string(instance_count) + " instances";
  return result;
}

}  // namespace

std::vector<CheckResult> trace_checks(const Scenario& used, const Trace& trace) {
  const int n = used.node_count();
  const int l = used.edge_count();
  const bool trace_checkable = !trace.aborted && used.sim.mode != SimMode::open_loop;

  std::vector<CheckResult> results;

  // Lyapunov monotonicity and non-negativity along the recorded trajectory.
  {
    CheckResult minus{"lyapunov monotonicity W-", "monotonicity", 0.0, 0.0, Verdict::vacuous, ""};
    CheckResult plus{"lyapunov monotonicity W+", "monotonicity", 0.0, 0.0, Verdict::vacuous, ""};
    if (trace_checkable) {
      const MonotonicityReport report = check_lyapunov_monotonicity(trace);
      minus.max_violation = report.max_rate_w_minus;
      minus.verdict = (report.max_rate_w_minus <= report.tol && report.min_w_minus >= -1e-12)
                          ? Verdict::pass
                          : Verdict::fail;
      minus.detail = "min W- = " + format_double(report.min_w_minus) +
                     ", tol = " + format_double(report.tol);
      plus.max_violation = report.max_rate_w_plus;
      plus.verdict = (report.max_rate_w_plus <= report.tol && report.min_w_plus >= -1e-12)
                         ? Verdict::pass
                         : Verdict::fail;
      plus.detail = "min W+ = " + format_double(report.min_w_plus) +
                    ", tol = " + format_double(report.tol);
    } else {
      minus.detail = plus.detail =
          trace.aborted ? "trace aborted: " + trace.abort_reason : "open-loop trace";
    }
    results.push_back(std::move(minus));
    results.push_back(std::move(plus));
  }

  // W+ two-form identity along the trajectory.
  {
    CheckResult identity{"lyapunov W+ form identity", "identity", 0.0, 0.0, Verdict::vacuous, ""};
    if (trace_checkable) {
      double max_gap = 0.0;
      for (const Eigen::VectorXd& state : trace.state) {
        const Eigen::VectorXd y_hat = edge_inputs(used.network, layout::angle_dev(state, n));
        const double a = lyapunov_positive(used, layout::freq_dev(state, n), y_hat,
                                           layout::angle_ctrl(state, n, l));
        const double b = lyapunov_positive_completed_square(
            used, layout::freq_dev(state, n), y_hat, layout::angle_ctrl(state, n, l));
        max_gap = std::max(max_gap, std::abs(a - b));
      }
      identity.max_violation = max_gap;
      identity.verdict = max_gap <= 1e-12 ? Verdict::pass : Verdict::fail;
      identity.detail = "max |eq-form - completed-square| over samples";
    } else {
      identity.detail = trace.aborted ? "trace aborted" : "open-loop trace";
    }
    results.push_back(std::move(identity));
  }

  // Dissipation inequalities along the recorded grid trajectory.
  results.push_back(trace_family_check(
      trace, used, Subsystem::angle_plant, "trace dissipation: angle plants", DissipationKind::ni,
      [](int) { return 0.0; }, n, trace_checkable));
  results.push_back(trace_family_check(
      trace, used, Subsystem::voltage_plant, "trace dissipation: voltage plants",
      DissipationKind::osp,
      [&used](int i) {
        return 0.5 * decoupled_coefficients(used.generators[static_cast<std::size_t>(i)]).alpha;
      },
      n, trace_checkable));
  results.push_back(trace_family_check(
      trace, used, Subsystem::angle_controller, "trace dissipation: angle controllers",
      DissipationKind::osni,
      [&used](int e) {
        const AngleControllerParams& c = used.angle_controllers[static_cast<std::size_t>(e)];
        return 0.5 * c.tau / c.k1;
      },
      l, trace_checkable));
  results.push_back(trace_family_check(
      trace, used, Subsystem::voltage_controller, "trace dissipation: voltage controllers",
      DissipationKind::osp,
      [&used](int e) {
        return 0.5 / used.voltage_controllers[static_cast<std::size_t>(e)].k1;
      },
      l, trace_checkable));

  return results;
}

std::vector<CheckResult> run_verification_suite(const Scenario& scenario, std::uint64_t seed,
                                                int trajectories_per_system) {
  scenario.validate();
  const Scenario used = prepared_scenario(scenario);
  const int n = used.node_count();
  const int l = used.edge_count();
  const Trace trace = run(used);

  std::vector<CheckResult> results = trace_checks(used, trace);

  // Random-input dissipation suite on isolated subsystems.
  {
    const double dt = 1e-3;
    const double horizon = 6.0;
    struct FamilySpec {
      const char* name;
      DissipationKind kind;
      int count;
    };
    const std::vector<FamilySpec> families = {
        {"random-input dissipation: angle plant", DissipationKind::ni, n},
        {"random-input dissipation: voltage plant", DissipationKind::osp, n},
        {"random-input dissipation: angle controller", DissipationKind::osni, l},
        {"random-input dissipation: voltage controller", DissipationKind::osp, l},
    };
    for (std::size_t f = 0; f < families.size(); ++f) {
      const FamilySpec& family = families[f];
      double max_violation = -std::numeric_limits<double>::infinity();
      double epsilon_used = 0.0;
      int violations = 0;
      for (int k = 0; k < trajectories_per_system; ++k) {
        const int instance = k % family.count;
        const std::uint64_t signal_seed =
            seed ^ (0x9E3779B97F4A7C15ULL * (f + 1)) ^ static_cast<std::uint64_t>(k);
        const auto input = random_smooth_signal(signal_seed);
        DissipationSeries series;
        double epsilon = 0.0;
        switch (f) {
          case 0:
            series = simulate_angle_plant(used.generators[static_cast<std::size_t>(instance)],
                                          0.0, 0.0, input, dt, horizon);
            epsilon = 0.0;
            break;
          case 1: {
            const GeneratorParams& p = used.generators[static_cast<std::size_t>(instance)];
            series = simulate_voltage_plant(p, 0.0, input, dt, horizon);
            epsilon = 0.5 * decoupled_coefficients(p).alpha;
            break;
          }
          case 2: {
            const AngleControllerParams& c =
                used.angle_controllers[static_cast<std::size_t>(instance)];
            series = simulate_angle_controller(c, 0.0, input, dt, horizon);
            epsilon = 0.5 * c.tau / c.k1;
            break;
          }
          default: {
            const VoltageControllerParams& c =
                used.voltage_controllers[static_cast<std::size_t>(instance)];
            series = simulate_voltage_controller(c, 0.0, input, dt, horizon);
            epsilon = 0.5 / c.k1;
            break;
          }
        }
        const DissipationReport report = check_dissipation(series, family.kind, epsilon);
        max_violation = std::max(max_violation, report.max_violation);
        violations += report.violation_count;
        epsilon_used = epsilon;
      }
      CheckResult result;
      result.name = family.name;
      result.kind = std::string(to_string(family.kind));
      result.epsilon = epsilon_used;
      result.max_violation = max_violation;
      result.verdict = violations == 0 ? Verdict::pass : Verdict::fail;
      result.detail = std::to_string(violations) + " violations over " +
                      std::to_string(trajectories_per_system) + " trajectories";
      results.push_back(std::move(result));
    }

    // Deliberate falsification: double the OSP bound must be reported.
    {
      const VoltageControllerParams& c = used.voltage_controllers.front();
      const auto input = random_smooth_signal(seed ^ 0xD1B54A32D192ED03ULL);
      const DissipationSeries series = simulate_voltage_controller(c, 0.0, input, dt, horizon);
      const double epsilon = 2.0 / c.k1;
      const DissipationReport report = check_dissipation(series, DissipationKind::osp, epsilon);
      CheckResult result;
      result.name = "falsification: voltage controller osp with epsilon = 2/K1";
      result.kind = "osp";
      result.epsilon = epsilon;
      result.max_violation = report.max_violation;
      result.verdict = report.violation_count > 0 ? Verdict::pass : Verdict::fail;
      result.detail = std::to_string(report.violation_count) +
                      " violations (violations are expected here)";
      results.push_back(std::move(result));
    }
  }

  // Steady-state sign conditions.
  for (int e = 0; e < l; ++e) {
    const AngleControllerParams& c = used.angle_controllers[static_cast<std::size_t>(e)];
    const SteadyStateReport report = steady_state_sign_check(c, 1.0);
    CheckResult result;
    result.name = "steady-state: angle controller edge " + std::to_string(e + 1);
    result.kind = "steady-state";
    result.max_violation = report.product + report.margin;  // distance past -gamma_c u^2
    result.verdict = report.verdict;
    result.detail = "product = " + format_double(report.product) +
                    ", margin = " + format_double(report.margin);
    results.push_back(std::move(result));
  }
  for (int i = 0; i < n; ++i) {
    const SteadyStateReport report =
        steady_state_sign_check_angle_plant(used.generators[static_cast<std::size_t>(i)], 1.0);
    CheckResult result;
    result.name = "steady-state: angle plant node " + std::to_string(i + 1);
    result.kind = "steady-state";
    result.verdict = report.verdict;  // expected vacuous: integrator output
    result.detail = report.settled ? "settled (unexpected)" : "no steady state (pole at origin)";
    results.push_back(std::move(result));
  }
  for (int i = 0; i < n; ++i) {
    const SteadyStateReport report =
        steady_state_sign_check_voltage_plant(used.generators[static_cast<std::size_t>(i)], 1.0);
    CheckResult result;
    result.name = "steady-state: voltage plant node " + std::to_string(i + 1);
    result.kind = "steady-state";
    result.max_violation = -report.product;
    result.verdict = report.verdict;
    result.detail = "product = " + format_double(report.product);
    results.push_back(std::move(result));
  }

  // Equilibrium residual of the inputs actually integrated.
  {
    const EquilibriumResidual residual =
        equilibrium_residual(used.network, used.lines, used.generators, used.equilibrium);
    CheckResult result;
    result.name = "equilibrium residual";
    result.kind = "residual";
    result.max_violation = residual.max_abs();
    const double bound = used.sim.raw_equilibrium ? used.sim.residual_bound : 1e-9;
    result.verdict = residual.max_abs() <= bound ? Verdict::pass : Verdict::fail;
    result.detail = "bound = " + format_double(bound);
    results.push_back(std::move(result));
  }

  // Decoupling comparison.
  {
    CheckResult result;
    result.name = "decoupling discrepancy";
    result.kind = "decoupling";
    if (used.sim.mode == SimMode::open_loop) {
      result.verdict = Verdict::vacuous;
      result.detail = "open-loop mode";
    } else {
      const Trace closed = run_closed_loop(used);
      const Trace decoupled = run_decoupled(used);
      if (closed.aborted || decoupled.aborted) {
        result.verdict = Verdict::fail;
        result.detail = "comparison run aborted";
      } else {
        const double discrepancy = compare_traces(closed, decoupled);
        result.max_violation = discrepancy;
        if (used.sim.raw_equilibrium) {
          result.verdict = Verdict::vacuous;  // informational: raw inputs break exactness
          result.detail = "raw equilibrium inputs; discrepancy reported, not asserted";
        } else {
          result.verdict = discrepancy <= 1e-8 ? Verdict::pass : Verdict::fail;
          result.detail = "bound = 1e-8";
        }
      }
    }
    results.push_back(std::move(result));
  }

  return results;
}

}  // namespace gridsync
