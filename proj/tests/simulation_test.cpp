#include "gridsync/simulation.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "gridsync/analysis.hpp"
#include "gridsync/errors.hpp"
#include "gridsync/scenario.hpp"

namespace gridsync {
namespace {

Eigen::VectorXd exponential_decay(const Eigen::VectorXd& x) { return -x; }

TEST(Rk4, SingleStepOfExponentialDecay) {
  Eigen::VectorXd x(1);
  x << 1.0;
  const Eigen::VectorXd next = rk4_step(exponential_decay, x, 0.1);
  // 1 - h + h^2/2 - h^3/6 + h^4/24 for h = 0.1.
  const double h = 0.1;
  const double expected = 1.0 - h + h * h / 2.0 - h * h * h / 6.0 + h * h * h * h / 24.0;
  EXPECT_DOUBLE_EQ(next(0), expected);
  EXPECT_NEAR(next(0), 0.90483750, 5e-9);
}

TEST(Rk4, FourthOrderConvergenceOnUnitInterval) {
  const auto integrate = [](double dt) {
    Eigen::VectorXd x(1);
    x << 1.0;
    const std::int64_t steps = std::llround(1.0 / dt);
    for (std::int64_t k = 0; k < steps; ++k) x = rk4_step(exponential_decay, x, dt);
    return std::abs(x(0) - std::exp(-1.0));
  };
  double dt = 0.1;
  for (int halving = 0; halving < 3; ++halving) {
    const double ratio = integrate(dt) / integrate(dt / 2.0);
    EXPECT_GE(ratio, 13.0) << "dt = " << dt;
    EXPECT_LE(ratio, 19.0) << "dt = " << dt;
    dt /= 2.0;
  }
}

TEST(Rk4, NonFiniteDerivativeThrows) {
  const auto bad = [](const Eigen::VectorXd& x) {
    return Eigen::VectorXd(x.array() / 0.0);
  };
  Eigen::VectorXd x(1);
  x << 1.0;
  EXPECT_THROW(rk4_step(bad, x, 0.1), NumericError);
}

TEST(SimMode, ParseAndPrint) {
  EXPECT_EQ(parse_sim_mode("closed_loop"), SimMode::closed_loop);
  EXPECT_EQ(parse_sim_mode("decoupled"), SimMode::decoupled);
  EXPECT_EQ(parse_sim_mode("open_loop"), SimMode::open_loop);
  EXPECT_EQ(to_string(SimMode::decoupled), "decoupled");
  EXPECT_THROW(parse_sim_mode("open"), ConfigError);
}

TEST(SimConfig, ValidatesStepGrid) {
  SimConfig config;
  config.dt = 0.3;
  config.horizon = 1.0;
  EXPECT_THROW(config.validate(), ConfigError);
  config.dt = 0.25;
  EXPECT_NO_THROW(config.validate());
  config.decimate = 3;  // 4 steps not divisible by 3
  EXPECT_THROW(config.validate(), ConfigError);
  config.decimate = 2;
  EXPECT_NO_THROW(config.validate());
  config.horizon = 0.1;  // below dt
  EXPECT_THROW(config.validate(), ConfigError);
}

TEST(SimConfig, RejectsNonPositiveAndOversized) {
  SimConfig config;
  config.dt = 0.0;
  EXPECT_THROW(config.validate(), ConfigError);
  config = SimConfig{};
  config.voltage_floor = -0.1;
  EXPECT_THROW(config.validate(), ConfigError);
  config = SimConfig{};
  config.dt = 1e-9;
  config.horizon = 100.0;  // exceeds max_steps
  EXPECT_THROW(config.validate(), ConfigError);
}

TEST(StackState, RoundTrip) {
  GridState state = GridState::zero(3);
  state.freq_dev << 1, 2, 3;
  state.angle_dev << 4, 5, 6;
  state.volt_dev << 7, 8, 9;
  Eigen::VectorXd xc(2), xv(2);
  xc << 10, 11;
  xv << 12, 13;
  const Eigen::VectorXd stacked = stack_state(state, xc, xv);
  ASSERT_EQ(stacked.size(), 13);
  const GridState back = unstack_grid_state(stacked, 3);
  EXPECT_TRUE(back.freq_dev.isApprox(state.freq_dev));
  EXPECT_TRUE(back.angle_dev.isApprox(state.angle_dev));
  EXPECT_TRUE(back.volt_dev.isApprox(state.volt_dev));
  EXPECT_DOUBLE_EQ(layout::angle_ctrl(stacked, 3, 2)(1), 11.0);
  EXPECT_DOUBLE_EQ(layout::volt_ctrl(stacked, 3, 2)(0), 12.0);
}

// With consistent equilibrium inputs, the dispatched closed loop IS the
// decoupled linear system, evaluation by evaluation.
TEST(Derivatives, ClosedLoopEqualsDecoupledPointwise) {
  const Scenario s = prepared_scenario(builtin_four_area());
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> dist(-0.4, 0.4);
  for (int trial = 0; trial < 25; ++trial) {
    Eigen::VectorXd state(s.state_size());
    for (int k = 0; k < state.size(); ++k) state(k) = dist(rng);
    // Voltage deviations sit at offset 2n; keep |V| well away from zero.
    for (int i = 0; i < 4; ++i) state(8 + i) = 0.2 * dist(rng);
    const Eigen::VectorXd closed = closed_loop_derivative(s, state);
    const Eigen::VectorXd decoupled = decoupled_derivative(s, state);
    EXPECT_LE((closed - decoupled).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Derivatives, RawInputsBreakTheIdentity) {
  const Scenario s = builtin_four_area();  // table-rounded P^G / E^ex
  const Eigen::VectorXd state =
      stack_state(s.initial, s.initial_angle_ctrl, s.initial_volt_ctrl);
  const Eigen::VectorXd closed = closed_loop_derivative(s, state);
  const Eigen::VectorXd decoupled = decoupled_derivative(s, state);
  EXPECT_GT((closed - decoupled).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Run, EquilibriumIsInvariant) {
  Scenario s = builtin_four_area();
  s.initial = GridState::zero(4);
  s.sim.horizon = 5.0;
  const Trace trace = run(s);
  ASSERT_FALSE(trace.aborted);
  double drift = 0.0;
  for (const Eigen::VectorXd& state : trace.state) {
    drift = std::max(drift, state.cwiseAbs().maxCoeff());
  }
  EXPECT_LE(drift, 1e-12);
}

TEST(Run, RecordsUniformGridWithDecimation) {
  Scenario s = builtin_four_area();
  s.sim.horizon = 1.0;
  s.sim.decimate = 10;
  const Trace trace = run(s);
  ASSERT_EQ(trace.size(), 101u);
  EXPECT_DOUBLE_EQ(trace.dt, 0.01);
  EXPECT_DOUBLE_EQ(trace.time.front(), 0.0);
  EXPECT_NEAR(trace.time.back(), 1.0, 1e-12);
  EXPECT_NEAR(trace.time[50], 0.5, 1e-12);
}

TEST(Run, TraceColumnsMatchAnalysisRecomputation) {
  Scenario s = builtin_four_area();
  s.sim.horizon = 0.5;
  const Scenario used = prepared_scenario(s);
  const Trace trace = run(used);
  for (std::size_t k : {std::size_t{0}, trace.size() / 2, trace.size() - 1}) {
    const Eigen::VectorXd& state = trace.state[k];
    const double w_minus = lyapunov_negative(used, Eigen::VectorXd(layout::volt_dev(state, 4)),
                                             Eigen::VectorXd(layout::volt_ctrl(state, 4, 4)));
    EXPECT_NEAR(trace.w_minus[k], w_minus, 1e-14);
    const Eigen::VectorXd y_hat = edge_inputs(used.network, layout::angle_dev(state, 4));
    const double w_plus =
        lyapunov_positive(used, Eigen::VectorXd(layout::freq_dev(state, 4)), y_hat,
                          Eigen::VectorXd(layout::angle_ctrl(state, 4, 4)));
    EXPECT_NEAR(trace.w_plus[k], w_plus, 1e-14);
  }
}

TEST(Run, AbortsOnVoltageFloorWithPartialTrace) {
  Scenario s = builtin_four_area();
  s.sim.voltage_floor = 0.99;  // node 3 starts at 0.95
  const Trace trace = run(s);
  EXPECT_TRUE(trace.aborted);
  EXPECT_NE(trace.abort_reason.find("node"), std::string::npos);
  EXPECT_GE(trace.size(), 1u);
  EXPECT_LT(trace.size(), 100u);
}

TEST(Run, OpenLoopLosesSynchronismThatClosedLoopKeeps) {
  Scenario s = builtin_four_area();
  const Scenario used = prepared_scenario(s);
  const Trace closed = run_closed_loop(used);
  const Trace open = run_open_loop(used);
  ASSERT_FALSE(closed.aborted);

  const auto final_angle_error = [&](const Trace& trace) {
    const Eigen::VectorXd& state = trace.state.back();
    const Eigen::VectorXd diff =
        edge_inputs(used.network, layout::angle_dev(state, 4));
    return diff.cwiseAbs().maxCoeff();  // deviation differences -> 0 at consensus
  };
  const double closed_error = final_angle_error(closed);
  const double open_error = final_angle_error(open);
  EXPECT_LE(closed_error, deg_to_rad(0.05));
  EXPECT_GT(open_error, 10.0 * closed_error);
}

TEST(CompareTraces, SelfIsZeroAndMismatchThrows) {
  Scenario s = builtin_four_area();
  s.sim.horizon = 0.2;
  const Trace trace = run(s);
  EXPECT_DOUBLE_EQ(compare_traces(trace, trace), 0.0);

  Scenario shorter = s;
  shorter.sim.horizon = 0.1;
  const Trace other = run(shorter);
  EXPECT_THROW(compare_traces(trace, other), ConfigError);
}

TEST(CompareTraces, RawEquilibriumDiscrepancyBoundedButVisible) {
  Scenario s = builtin_four_area();
  s.sim.raw_equilibrium = true;
  const Trace closed = run_closed_loop(s);
  const Trace decoupled = run_decoupled(s);
  ASSERT_FALSE(closed.aborted);
  ASSERT_FALSE(decoupled.aborted);
  const double discrepancy = compare_traces(closed, decoupled);
  EXPECT_GT(discrepancy, 1e-8);
  EXPECT_LT(discrepancy, 0.1);
}

TEST(PreparedScenario, IdempotentAndRespectsRawFlag) {
  const Scenario s = builtin_four_area();
  const Scenario once = prepared_scenario(s);
  const Scenario twice = prepared_scenario(once);
  for (int i = 0; i < 4; ++i) {
    EXPECT_EQ(once.generators[static_cast<std::size_t>(i)].mech_power,
              twice.generators[static_cast<std::size_t>(i)].mech_power);
    EXPECT_EQ(once.generators[static_cast<std::size_t>(i)].excitation,
              twice.generators[static_cast<std::size_t>(i)].excitation);
  }
  Scenario raw = s;
  raw.sim.raw_equilibrium = true;
  const Scenario untouched = prepared_scenario(raw);
  EXPECT_EQ(untouched.generators[0].mech_power, s.generators[0].mech_power);
}

TEST(Scenario, ValidateCatchesInconsistentSizes) {
  Scenario s = builtin_four_area();
  s.initial.volt_dev.resize(3);
  EXPECT_THROW(s.validate(), ConfigError);

  Scenario bad_ctrl = builtin_four_area();
  bad_ctrl.angle_controllers.pop_back();
  EXPECT_THROW(bad_ctrl.validate(), ConfigError);

  Scenario bad_voltage = builtin_four_area();
  bad_voltage.initial.volt_dev(0) = -1.5;  // |V| would be negative
  EXPECT_THROW(bad_voltage.validate(), ConfigError);
}

}  // namespace
}  // namespace gridsync
