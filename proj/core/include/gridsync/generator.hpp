#pragma once

#include <vector>

#include <Eigen/Dense>

#include "gridsync/network.hpp"

namespace gridsync {

inline constexpr double k_pi = 3.141592653589793238462643383279502884;

inline constexpr double deg_to_rad(double deg) noexcept { return deg * (k_pi / 180.0); }
inline constexpr double rad_to_deg(double rad) noexcept { return rad / (k_pi / 180.0); }

// Per-machine constants of the one-axis model, per unit unless noted.
struct GeneratorParams {
  double inertia = 0.0;           // M, p.u. * s^2
  double damping = 0.0;           // D, p.u. * s
  double t_do_prime = 0.0;        // T'_do, s
  double x_d = 0.0;               // direct-axis synchronous reactance
  double x_d_prime = 0.0;         // direct-axis transient reactance
  double self_susceptance = 0.0;  // B_ii, negative
  double mech_power = 0.0;        // P^G
  double excitation = 0.0;        // E^ex

  double reactance_gap() const noexcept { return x_d - x_d_prime; }
  // Throws ConfigError naming the (1-based) node on any invariant violation.
  void validate(int node) const;
};

// alpha = 1/(X_d - X'_d) - B_ii, gamma = T'_do/(X_d - X'_d); both positive
// whenever GeneratorParams invariants hold.
struct DecoupledCoefficients {
  double alpha = 0.0;
  double gamma = 0.0;
};
DecoupledCoefficients decoupled_coefficients(const GeneratorParams& params);

struct EquilibriumSpec {
  Eigen::VectorXd angle;         // delta_bar per node, rad
  double v_nom = 1.0;            // p.u.
  double f_nom_hz = 50.0;        // nominal frequency
  double omega_nom() const noexcept { return 2.0 * k_pi * f_nom_hz; }
  void validate(const Network& net) const;
};

struct LineParams {
  Eigen::VectorXd susceptance;  // B_ij per edge, positive
  void validate(const Network& net) const;
};

// Deviation coordinates around the equilibrium.
struct GridState {
  Eigen::VectorXd angle_dev;  // delta tilde, rad
  Eigen::VectorXd freq_dev;   // d/dt delta tilde, rad/s
  Eigen::VectorXd volt_dev;   // |V| - V_nom, p.u.
  static GridState zero(int node_count);
};

// P^E_i = sum_j B_ij |V_i||V_j| sin(delta_i - delta_j) over neighbors.
Eigen::VectorXd real_power_flow(const Network& net, const LineParams& lines,
                                const Eigen::VectorXd& angle, const Eigen::VectorXd& volt);

// Q^G = |V|(E^ex - |V|)/(X_d - X'_d).
double reactive_generation(const GeneratorParams& params, double volt);

// Q^E_i = -sum_j B_ij |V_i||V_j| cos(delta_i - delta_j), j = i included.
Eigen::VectorXd reactive_power_flow(const Network& net, const LineParams& lines,
                                    const std::vector<GeneratorParams>& params,
                                    const Eigen::VectorXd& angle, const Eigen::VectorXd& volt);

struct PlantDerivatives {
  Eigen::VectorXd freq_rate;  // delta double-dot, rad/s^2
  Eigen::VectorXd volt_rate;  // d|V|/dt, p.u./s
};

// Full nonlinear one-axis dynamics under the given storage dispatch:
//   M ddot(delta) = -D dot(delta) + P^G - P^E + P^ST
//   (T'_do/(X_d - X'_d)) |V| d|V|/dt = Q^G - Q^E + Q^ST
PlantDerivatives full_plant_derivatives(const Network& net, const LineParams& lines,
                                        const std::vector<GeneratorParams>& params,
                                        const EquilibriumSpec& equilibrium, const GridState& state,
                                        const Eigen::VectorXd& p_storage,
                                        const Eigen::VectorXd& q_storage);

// Decoupled angle plant, state (freq_dev, angle_dev):
//   A = [[-D/M, 0], [1, 0]], B = [1/M, 0]^T, C = [0, 1].
struct AnglePlant {
  Eigen::Matrix2d A;
  Eigen::Vector2d B;
  Eigen::RowVector2d C;
};
AnglePlant decoupled_angle_plant(const GeneratorParams& params);

// Decoupled voltage plant: a = -alpha/gamma, b = 1/gamma, c = 1.
struct VoltagePlant {
  double a = 0.0;
  double b = 0.0;
  double c = 1.0;
};
VoltagePlant decoupled_voltage_plant(const GeneratorParams& params);

struct EquilibriumResidual {
  Eigen::VectorXd real_power;      // P^G_i - P^E_i(delta_bar, V_nom)
  Eigen::VectorXd reactive_power;  // Q^G_i(V_nom) - Q^E_i(delta_bar, V_nom)
  double max_abs() const;
};
EquilibriumResidual equilibrium_residual(const Network& net, const LineParams& lines,
                                         const std::vector<GeneratorParams>& params,
                                         const EquilibriumSpec& equilibrium);

struct SusceptanceFit {
  LineParams lines;
  double max_residual = 0.0;  // inf-norm of the back-substituted equations
};

// Least-squares recovery of the line susceptances from the equilibrium
// consistency equations (N real-power rows, plus N reactive rows unless
// use_reactive is false). Throws ConfigError if the residual exceeds
// residual_tol or any fitted susceptance is non-positive.
SusceptanceFit derive_line_susceptances(const Network& net,
                                        const std::vector<GeneratorParams>& params,
                                        const EquilibriumSpec& equilibrium,
                                        bool use_reactive = true, double residual_tol = 0.05);

// Recomputes (P^G, E^ex) from (delta_bar, V_nom, B) so the equilibrium
// residual vanishes to machine precision.
std::vector<GeneratorParams> consistent_equilibrium_inputs(
    const Network& net, const LineParams& lines, const std::vector<GeneratorParams>& params,
    const EquilibriumSpec& equilibrium);

}  // namespace gridsync
