#include "gridsync/control.hpp"

#include <cmath>
#include <sstream>

namespace gridsync {

namespace {

void require(bool condition, int edge, const char* what) {
  if (!condition) {
    std::ostringstream msg;
    msg << "controller on edge " << edge + 1 << ": " << what;
    throw ConfigError(msg.str());
  }
}

}  // namespace

void AngleControllerParams::validate(int edge) const {
  require(std::isfinite(tau) && tau > 0.0, edge, "tau must be positive");
  require(std::isfinite(k1) && k1 > 0.0, edge, "K1 must be positive");
  require(std::isfinite(k2) && k2 > k1, edge, "K2 must exceed K1");
}

void VoltageControllerParams::validate(int edge) const {
  require(std::isfinite(tau) && tau > 0.0, edge, "tau must be positive");
  require(std::isfinite(k1) && k1 > 0.0, edge, "K1 must be positive");
}

ControllerRate angle_controller(const AngleControllerParams& params, double state, double input) {
  return {(-state + params.k1 * input) / params.tau, state - params.k2 * input};
}

ControllerRate voltage_controller(const VoltageControllerParams& params, double state,
                                  double input) {
  return {(-state + params.k1 * input) / params.tau, state};
}

Eigen::VectorXd battery_real_dispatch(const Network& net, const LineParams& lines,
                                      const EquilibriumSpec& equilibrium,
                                      const Eigen::VectorXd& u_delta, const Eigen::VectorXd& angle,
                                      const Eigen::VectorXd& volt) {
  const int n = net.node_count();
  if (u_delta.size() != n || angle.size() != n || volt.size() != n) {
    throw ConfigError("battery_real_dispatch: dimension mismatch");
  }
  const double v2 = equilibrium.v_nom * equilibrium.v_nom;
  Eigen::VectorXd dispatch = u_delta;
  for (int l = 0; l < net.edge_count(); ++l) {
    const Edge& e = net.edge(l);
    const double diff = angle(e.from) - angle(e.to);
    const double eq_diff = equilibrium.angle(e.from) - equilibrium.angle(e.to);
    const double term =
        lines.susceptance(l) * (v2 * std::sin(eq_diff) - volt(e.from) * volt(e.to) * std::sin(diff));
    dispatch(e.from) -= term;
    dispatch(e.to) += term;  // reverse orientation flips both sines
  }
  return dispatch;
}

Eigen::VectorXd battery_reactive_dispatch(const Network& net, const LineParams& lines,
                                          const EquilibriumSpec& equilibrium,
                                          const Eigen::VectorXd& u_volt,
                                          const Eigen::VectorXd& angle,
                                          const Eigen::VectorXd& volt) {
  const int n = net.node_count();
  if (u_volt.size() != n || angle.size() != n || volt.size() != n) {
    throw ConfigError("battery_reactive_dispatch: dimension mismatch");
  }
  for (int i = 0; i < n; ++i) {
    if (!(volt(i) > 0.0)) {
      std::ostringstream msg;
      msg << "battery_reactive_dispatch: voltage non-positive at node " << i + 1;
      throw NumericError(msg.str());
    }
  }
  Eigen::VectorXd bracket = u_volt;
  for (int l = 0; l < net.edge_count(); ++l) {
    const Edge& e = net.edge(l);
    const double cos_diff = std::cos(angle(e.from) - angle(e.to));
    const double cos_eq = std::cos(equilibrium.angle(e.from) - equilibrium.angle(e.to));
    bracket(e.from) +=
        lines.susceptance(l) * (equilibrium.v_nom * cos_eq - volt(e.to) * cos_diff);
    bracket(e.to) +=
        lines.susceptance(l) * (equilibrium.v_nom * cos_eq - volt(e.from) * cos_diff);
  }
  return volt.cwiseProduct(bracket);
}

}  // namespace gridsync
