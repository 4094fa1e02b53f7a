#include "gridsync/generator.hpp"

#include <cmath>
#include <sstream>

namespace gridsync {

namespace {

void require(bool condition, int node, const char* what) {
  if (!condition) {
    std::ostringstream msg;
    msg << "generator at node " << node + 1 << ": " << what;
    throw ConfigError(msg.str());
  }
}

}  // namespace

void GeneratorParams::validate(int node) const {
  require(std::isfinite(inertia) && inertia > 0.0, node, "M must be positive");
  require(std::isfinite(damping) && damping > 0.0, node, "D must be positive");
  require(std::isfinite(t_do_prime) && t_do_prime > 0.0, node, "T'_do must be positive");
  require(std::isfinite(x_d) && std::isfinite(x_d_prime) && reactance_gap() > 0.0, node,
          "X_d must exceed X'_d");
  require(std::isfinite(self_susceptance) && self_susceptance < 0.0, node,
          "B_ii must be negative");
  require(std::isfinite(mech_power), node, "P^G must be finite");
  require(std::isfinite(excitation), node, "E^ex must be finite");
}

DecoupledCoefficients decoupled_coefficients(const GeneratorParams& params) {
  const double gap = params.reactance_gap();
  return {1.0 / gap - params.self_susceptance, params.t_do_prime / gap};
}

void EquilibriumSpec::validate(const Network& net) const {
  if (angle.size() != net.node_count()) {
    throw ConfigError("equilibrium angle count does not match node count");
  }
  if (!angle.allFinite()) {
    throw ConfigError("equilibrium angles must be finite");
  }
  if (!(v_nom > 0.0) || !std::isfinite(v_nom)) {
    throw ConfigError("V_nom must be positive");
  }
  if (!(f_nom_hz > 0.0) || !std::isfinite(f_nom_hz)) {
    throw ConfigError("f_nom_hz must be positive");
  }
  for (int l = 0; l < net.edge_count(); ++l) {
    const Edge& e = net.edge(l);
    if (!(std::abs(angle(e.from) - angle(e.to)) < k_pi / 2.0)) {
      std::ostringstream msg;
      msg << "equilibrium angle difference on edge " << l + 1 << " (" << e.from + 1 << ", "
          << e.to + 1 << ") must stay below 90 degrees";
      throw ConfigError(msg.str());
    }
  }
}

void LineParams::validate(const Network& net) const {
  if (susceptance.size() != net.edge_count()) {
    throw ConfigError("line susceptance count does not match edge count");
  }
  for (int l = 0; l < net.edge_count(); ++l) {
    if (!(susceptance(l) > 0.0) || !std::isfinite(susceptance(l))) {
      std::ostringstream msg;
      msg << "susceptance on edge " << l + 1 << " must be positive";
      throw ConfigError(msg.str());
    }
  }
}

GridState GridState::zero(int node_count) {
  GridState state;
  state.angle_dev = Eigen::VectorXd::Zero(node_count);
  state.freq_dev = Eigen::VectorXd::Zero(node_count);
  state.volt_dev = Eigen::VectorXd::Zero(node_count);
  return state;
}

Eigen::VectorXd real_power_flow(const Network& net, const LineParams& lines,
                                const Eigen::VectorXd& angle, const Eigen::VectorXd& volt) {
  const int n = net.node_count();
  if (angle.size() != n || volt.size() != n) {
    throw ConfigError("real_power_flow: state dimension mismatch");
  }
  Eigen::VectorXd flow = Eigen::VectorXd::Zero(n);
  for (int l = 0; l < net.edge_count(); ++l) {
    const Edge& e = net.edge(l);
    const double term =
        lines.susceptance(l) * volt(e.from) * volt(e.to) * std::sin(angle(e.from) - angle(e.to));
    flow(e.from) += term;
    flow(e.to) -= term;  // sin is odd, so the reverse direction flips sign
  }
  return flow;
}

double reactive_generation(const GeneratorParams& params, double volt) {
  const double gap = params.reactance_gap();
  if (!(gap > 0.0)) {
    throw ConfigError("reactive_generation: X_d must exceed X'_d");
  }
  return volt * (params.excitation - volt) / gap;
}

Eigen::VectorXd reactive_power_flow(const Network& net, const LineParams& lines,
                                    const std::vector<GeneratorParams>& params,
                                    const Eigen::VectorXd& angle, const Eigen::VectorXd& volt) {
  const int n = net.node_count();
  if (angle.size() != n || volt.size() != n || static_cast<int>(params.size()) != n) {
    throw ConfigError("reactive_power_flow: state dimension mismatch");
  }
  Eigen::VectorXd flow(n);
  for (int i = 0; i < n; ++i) {
    flow(i) = -params[static_cast<std::size_t>(i)].self_susceptance * volt(i) * volt(i);
  }
  for (int l = 0; l < net.edge_count(); ++l) {
    const Edge& e = net.edge(l);
    const double coupling =
        lines.susceptance(l) * volt(e.from) * volt(e.to) * std::cos(angle(e.from) - angle(e.to));
    flow(e.from) -= coupling;  // cos is even, so both directions subtract equally
    flow(e.to) -= coupling;
  }
  return flow;
}

PlantDerivatives full_plant_derivatives(const Network& net, const LineParams& lines,
                                        const std::vector<GeneratorParams>& params,
                                        const EquilibriumSpec& equilibrium, const GridState& state,
                                        const Eigen::VectorXd& p_storage,
                                        const Eigen::VectorXd& q_storage) {
  const int n = net.node_count();
  const Eigen::VectorXd angle = equilibrium.angle + state.angle_dev;
  const Eigen::VectorXd volt = Eigen::VectorXd::Constant(n, equilibrium.v_nom) + state.volt_dev;
  for (int i = 0; i < n; ++i) {
    if (!(volt(i) > 0.0)) {
      std::ostringstream msg;
      msg << "voltage magnitude non-positive at node " << i + 1;
      throw NumericError(msg.str());
    }
  }

  const Eigen::VectorXd p_flow = real_power_flow(net, lines, angle, volt);
  const Eigen::VectorXd q_flow = reactive_power_flow(net, lines, params, angle, volt);

  PlantDerivatives deriv;
  deriv.freq_rate.resize(n);
  deriv.volt_rate.resize(n);
  for (int i = 0; i < n; ++i) {
    const GeneratorParams& p = params[static_cast<std::size_t>(i)];
    deriv.freq_rate(i) =
        (p.mech_power - p_flow(i) + p_storage(i) - p.damping * state.freq_dev(i)) / p.inertia;
    const double q_total = reactive_generation(p, volt(i)) - q_flow(i) + q_storage(i);
    deriv.volt_rate(i) = q_total * p.reactance_gap() / (p.t_do_prime * volt(i));
  }
  return deriv;
}

AnglePlant decoupled_angle_plant(const GeneratorParams& params) {
  AnglePlant plant;
  plant.A << -params.damping / params.inertia, 0.0, 1.0, 0.0;
  plant.B << 1.0 / params.inertia, 0.0;
  plant.C << 0.0, 1.0;
  return plant;
}

VoltagePlant decoupled_voltage_plant(const GeneratorParams& params) {
  const DecoupledCoefficients coeff = decoupled_coefficients(params);
  return {-coeff.alpha / coeff.gamma, 1.0 / coeff.gamma, 1.0};
}

double EquilibriumResidual::max_abs() const {
  const double p = real_power.size() > 0 ? real_power.cwiseAbs().maxCoeff() : 0.0;
  const double q = reactive_power.size() > 0 ? reactive_power.cwiseAbs().maxCoeff() : 0.0;
  return std::max(p, q);
}

EquilibriumResidual equilibrium_residual(const Network& net, const LineParams& lines,
                                         const std::vector<GeneratorParams>& params,
                                         const EquilibriumSpec& equilibrium) {
  const int n = net.node_count();
  const Eigen::VectorXd volt = Eigen::VectorXd::Constant(n, equilibrium.v_nom);
  const Eigen::VectorXd p_flow = real_power_flow(net, lines, equilibrium.angle, volt);
  const Eigen::VectorXd q_flow = reactive_power_flow(net, lines, params, equilibrium.angle, volt);

  EquilibriumResidual residual;
  residual.real_power.resize(n);
  residual.reactive_power.resize(n);
  for (int i = 0; i < n; ++i) {
    const GeneratorParams& p = params[static_cast<std::size_t>(i)];
    residual.real_power(i) = p.mech_power - p_flow(i);
    residual.reactive_power(i) = reactive_generation(p, equilibrium.v_nom) - q_flow(i);
  }
  return residual;
}

SusceptanceFit derive_line_susceptances(const Network& net,
                                        const std::vector<GeneratorParams>& params,
                                        const EquilibriumSpec& equilibrium, bool use_reactive,
                                        double residual_tol) {
  const int n = net.node_count();
  const int l_count = net.edge_count();
  if (static_cast<int>(params.size()) != n) {
    throw ConfigError("derive_line_susceptances: generator count mismatch");
  }
  if (l_count == 0) {
    throw ConfigError("derive_line_susceptances: network has no edges");
  }

  const double v2 = equilibrium.v_nom * equilibrium.v_nom;
  const int rows = use_reactive ? 2 * n : n;
  Eigen::MatrixXd system = Eigen::MatrixXd::Zero(rows, l_count);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(rows);

  // Real rows: sum_l q_il * B_l V^2 sin(db_i - db_j) = P^G_i.
  // Reactive rows: sum_l B_l V^2 cos(db_i - db_j) = -Q^G_i(V_nom) - B_ii V^2.
  for (int l = 0; l < l_count; ++l) {
    const Edge& e = net.edge(l);
    const double diff = equilibrium.angle(e.from) - equilibrium.angle(e.to);
    system(e.from, l) += v2 * std::sin(diff);
    system(e.to, l) -= v2 * std::sin(diff);
    if (use_reactive) {
      system(n + e.from, l) += v2 * std::cos(diff);
      system(n + e.to, l) += v2 * std::cos(diff);
    }
  }
  for (int i = 0; i < n; ++i) {
    const GeneratorParams& p = params[static_cast<std::size_t>(i)];
    rhs(i) = p.mech_power;
    if (use_reactive) {
      rhs(n + i) = -reactive_generation(p, equilibrium.v_nom) - p.self_susceptance * v2;
    }
  }

  SusceptanceFit fit;
  fit.lines.susceptance = system.colPivHouseholderQr().solve(rhs);
  fit.max_residual = (system * fit.lines.susceptance - rhs).cwiseAbs().maxCoeff();
  if (!(fit.max_residual <= residual_tol)) {
    std::ostringstream msg;
    msg << "susceptance fit residual " << fit.max_residual << " exceeds tolerance "
        << residual_tol;
    throw ConfigError(msg.str());
  }
  fit.lines.validate(net);
  return fit;
}

std::vector<GeneratorParams> consistent_equilibrium_inputs(
    const Network& net, const LineParams& lines, const std::vector<GeneratorParams>& params,
    const EquilibriumSpec& equilibrium) {
  const int n = net.node_count();
  if (static_cast<int>(params.size()) != n) {
    throw ConfigError("consistent_equilibrium_inputs: generator count mismatch");
  }
  const Eigen::VectorXd volt = Eigen::VectorXd::Constant(n, equilibrium.v_nom);
  const Eigen::VectorXd p_flow = real_power_flow(net, lines, equilibrium.angle, volt);
  const Eigen::VectorXd q_flow = reactive_power_flow(net, lines, params, equilibrium.angle, volt);

  std::vector<GeneratorParams> adjusted = params;
  for (int i = 0; i < n; ++i) {
    GeneratorParams& p = adjusted[static_cast<std::size_t>(i)];
    p.mech_power = p_flow(i);
    p.excitation = equilibrium.v_nom + p.reactance_gap() * q_flow(i) / equilibrium.v_nom;
  }
  return adjusted;
}

}  // namespace gridsync
