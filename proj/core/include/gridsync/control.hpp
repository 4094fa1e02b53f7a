#pragma once

#include "gridsync/generator.hpp"

namespace gridsync {

// Angle-loop edge controller (OSNI):
//   tau xdot = -x + K1 u,  y = x - K2 u,  with K2 > K1 > 0.
struct AngleControllerParams {
  double tau = 1.0;
  double k1 = 0.0;
  double k2 = 0.0;
  void validate(int edge) const;
};

// Voltage-loop edge controller (output strictly passive):
//   tau xdot = -x + K1 u,  y = x.
struct VoltageControllerParams {
  double tau = 1.0;
  double k1 = 0.0;
  void validate(int edge) const;
};

struct ControllerRate {
  double state_rate = 0.0;
  double output = 0.0;
};

ControllerRate angle_controller(const AngleControllerParams& params, double state, double input);
ControllerRate voltage_controller(const VoltageControllerParams& params, double state,
                                  double input);

// Battery real-power dispatch realizing the angle-loop decoupling:
//   P^ST_i = u_i - sum_j B_ij (V_nom^2 sin(db_ij) - |V_i||V_j| sin(d_ij))
// where u is the node-aggregated angle-loop control (positive interconnection).
Eigen::VectorXd battery_real_dispatch(const Network& net, const LineParams& lines,
                                      const EquilibriumSpec& equilibrium,
                                      const Eigen::VectorXd& u_delta, const Eigen::VectorXd& angle,
                                      const Eigen::VectorXd& volt);

// Battery reactive-power dispatch realizing the voltage-loop decoupling:
//   Q^ST_i = |V_i| (u_i + sum_j B_ij (V_nom cos(db_ij) - |V_j| cos(d_ij)))
// where u is the node-aggregated voltage-loop control (negative interconnection).
Eigen::VectorXd battery_reactive_dispatch(const Network& net, const LineParams& lines,
                                          const EquilibriumSpec& equilibrium,
                                          const Eigen::VectorXd& u_volt,
                                          const Eigen::VectorXd& angle,
                                          const Eigen::VectorXd& volt);

}  // namespace gridsync
