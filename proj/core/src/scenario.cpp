#include "gridsync/scenario.hpp"

#include <cstdio>
#include <fstream>
#include <ostream>
#include <random>
#include <sstream>

#include <json.hpp>

namespace gridsync {

namespace {

using Json = nlohmann::json;
using OrderedJson = nlohmann::ordered_json;

[[noreturn]] void bad_key(const std::string& path, const std::string& what) {
  throw ConfigError("config key '" + path + "': " + what);
}

const Json& require(const Json& parent, const char* key, const std::string& path) {
  const auto it = parent.find(key);
  if (it == parent.end()) bad_key(path + "." + key, "missing");
  return *it;
}

void expect_keys(const Json& obj, const std::string& path,
                 std::initializer_list<const char*> allowed) {
  for (const auto& item : obj.items()) {
    bool known = false;
    for (const char* key : allowed) {
      if (item.key() == key) {
        known = true;
        break;
      }
    }
    if (!known) bad_key(path + "." + item.key(), "unknown key");
  }
}

double number(const Json& value, const std::string& path) {
  if (!value.is_number()) bad_key(path, "must be a number");
  return value.get<double>();
}

double number_field(const Json& obj, const char* key, const std::string& path) {
  return number(require(obj, key, path), path + "." + key);
}

std::int64_t integer(const Json& value, const std::string& path) {
  if (!value.is_number_integer()) bad_key(path, "must be an integer");
  return value.get<std::int64_t>();
}

Eigen::VectorXd number_array(const Json& value, int expected, const std::string& path) {
  if (!value.is_array()) bad_key(path, "must be an array");
  if (static_cast<int>(value.size()) != expected) {
    bad_key(path, "expected " + std::to_string(expected) + " entries, got " +
                      std::to_string(value.size()));
  }
  Eigen::VectorXd out(expected);
  for (int i = 0; i < expected; ++i) {
    out(i) = number(value[static_cast<std::size_t>(i)], path + "[" + std::to_string(i) + "]");
  }
  return out;
}

Eigen::VectorXd degrees_to_radians(const Eigen::VectorXd& deg) {
  Eigen::VectorXd rad(deg.size());
  for (Eigen::Index i = 0; i < deg.size(); ++i) rad(i) = deg_to_rad(deg(i));
  return rad;
}

OrderedJson radians_to_degrees(const Eigen::VectorXd& rad) {
  OrderedJson out = OrderedJson::array();
  for (Eigen::Index i = 0; i < rad.size(); ++i) out.push_back(rad_to_deg(rad(i)));
  return out;
}

OrderedJson vector_to_json(const Eigen::VectorXd& values) {
  OrderedJson out = OrderedJson::array();
  for (Eigen::Index i = 0; i < values.size(); ++i) out.push_back(values(i));
  return out;
}

}  // namespace

Scenario parse_scenario(const std::string& text) {
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const Json::parse_error& error) {
    throw ConfigError(std::string("config is not valid JSON: ") + error.what());
  }
  if (!doc.is_object()) throw ConfigError("config root must be a JSON object");
  expect_keys(doc, "config",
              {"network", "generators", "equilibrium", "controllers", "initial", "sim"});

  Scenario scenario;

  // generators first: the node count anchors every other section.
  const Json& generators = require(doc, "generators", "config");
  if (!generators.is_array() || generators.empty()) {
    bad_key("config.generators", "must be a non-empty array");
  }
  const int n = static_cast<int>(generators.size());
  scenario.generators.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const Json& entry = generators[static_cast<std::size_t>(i)];
    const std::string path = "config.generators[" + std::to_string(i) + "]";
    if (!entry.is_object()) bad_key(path, "must be an object");
    expect_keys(entry, path, {"m", "d", "t_do_prime", "x_d", "x_d_prime", "b_ii", "p_g", "e_ex"});
    GeneratorParams params;
    params.inertia = number_field(entry, "m", path);
    params.damping = number_field(entry, "d", path);
    params.t_do_prime = number_field(entry, "t_do_prime", path);
    params.x_d = number_field(entry, "x_d", path);
    params.x_d_prime = number_field(entry, "x_d_prime", path);
    params.self_susceptance = number_field(entry, "b_ii", path);
    params.mech_power = number_field(entry, "p_g", path);
    params.excitation = number_field(entry, "e_ex", path);
    scenario.generators.push_back(params);
  }

  // network: 1-based endpoints, susceptance column all-or-none.
  const Json& network = require(doc, "network", "config");
  if (!network.is_object()) bad_key("config.network", "must be an object");
  expect_keys(network, "config.network", {"edges"});
  const Json& edges_json = require(network, "edges", "config.network");
  if (!edges_json.is_array() || edges_json.empty()) {
    bad_key("config.network.edges", "must be a non-empty array");
  }
  const int l = static_cast<int>(edges_json.size());
  std::vector<Edge> edges;
  edges.reserve(static_cast<std::size_t>(l));
  Eigen::VectorXd susceptance(l);
  int with_susceptance = 0;
  for (int e = 0; e < l; ++e) {
    const Json& entry = edges_json[static_cast<std::size_t>(e)];
    const std::string path = "config.network.edges[" + std::to_string(e) + "]";
    if (!entry.is_array() || (entry.size() != 2 && entry.size() != 3)) {
      bad_key(path, "must be [from, to] or [from, to, susceptance]");
    }
    const std::int64_t from = integer(entry[0], path + "[0]");
    const std::int64_t to = integer(entry[1], path + "[1]");
    if (from < 1 || from > n || to < 1 || to > n) {
      bad_key(path, "node ids must be in 1.." + std::to_string(n));
    }
    edges.push_back(Edge{static_cast<int>(from - 1), static_cast<int>(to - 1)});
    if (entry.size() == 3) {
      susceptance(e) = number(entry[2], path + "[2]");
      ++with_susceptance;
    }
  }
  if (with_susceptance != 0 && with_susceptance != l) {
    bad_key("config.network.edges", "susceptance must be given for all edges or none");
  }
  scenario.network = Network(n, edges);

  // equilibrium
  const Json& equilibrium = require(doc, "equilibrium", "config");
  if (!equilibrium.is_object()) bad_key("config.equilibrium", "must be an object");
  expect_keys(equilibrium, "config.equilibrium", {"delta_deg", "v_nom", "f_nom_hz"});
  scenario.equilibrium.angle = degrees_to_radians(
      number_array(require(equilibrium, "delta_deg", "config.equilibrium"), n,
                   "config.equilibrium.delta_deg"));
  if (equilibrium.contains("v_nom")) {
    scenario.equilibrium.v_nom = number(equilibrium["v_nom"], "config.equilibrium.v_nom");
  }
  if (equilibrium.contains("f_nom_hz")) {
    scenario.equilibrium.f_nom_hz = number(equilibrium["f_nom_hz"], "config.equilibrium.f_nom_hz");
  }

  // controllers, one entry per edge
  const Json& controllers = require(doc, "controllers", "config");
  if (!controllers.is_array() || static_cast<int>(controllers.size()) != l) {
    bad_key("config.controllers", "must be an array with one entry per edge (" +
                                      std::to_string(l) + ")");
  }
  scenario.angle_controllers.reserve(static_cast<std::size_t>(l));
  scenario.voltage_controllers.reserve(static_cast<std::size_t>(l));
  for (int e = 0; e < l; ++e) {
    const Json& entry = controllers[static_cast<std::size_t>(e)];
    const std::string path = "config.controllers[" + std::to_string(e) + "]";
    if (!entry.is_object()) bad_key(path, "must be an object");
    expect_keys(entry, path, {"tau_delta", "k1_delta", "k2_delta", "tau_v", "k1_v"});
    AngleControllerParams angle;
    angle.tau = number_field(entry, "tau_delta", path);
    angle.k1 = number_field(entry, "k1_delta", path);
    angle.k2 = number_field(entry, "k2_delta", path);
    VoltageControllerParams volt;
    volt.tau = number_field(entry, "tau_v", path);
    volt.k1 = number_field(entry, "k1_v", path);
    scenario.angle_controllers.push_back(angle);
    scenario.voltage_controllers.push_back(volt);
  }

  // initial deviations (defaults: zero)
  scenario.initial = GridState::zero(n);
  scenario.initial_angle_ctrl = Eigen::VectorXd::Zero(l);
  scenario.initial_volt_ctrl = Eigen::VectorXd::Zero(l);
  if (doc.contains("initial")) {
    const Json& initial = doc["initial"];
    if (!initial.is_object()) bad_key("config.initial", "must be an object");
    expect_keys(initial, "config.initial", {"delta_deg", "ddelta", "vdev", "x_delta", "x_v"});
    if (initial.contains("delta_deg")) {
      scenario.initial.angle_dev =
          degrees_to_radians(number_array(initial["delta_deg"], n, "config.initial.delta_deg"));
    }
    if (initial.contains("ddelta")) {
      scenario.initial.freq_dev = number_array(initial["ddelta"], n, "config.initial.ddelta");
    }
    if (initial.contains("vdev")) {
      scenario.initial.volt_dev = number_array(initial["vdev"], n, "config.initial.vdev");
    }
    if (initial.contains("x_delta")) {
      scenario.initial_angle_ctrl = number_array(initial["x_delta"], l, "config.initial.x_delta");
    }
    if (initial.contains("x_v")) {
      scenario.initial_volt_ctrl = number_array(initial["x_v"], l, "config.initial.x_v");
    }
  }

  // sim (defaults from SimConfig)
  if (doc.contains("sim")) {
    const Json& sim = doc["sim"];
    if (!sim.is_object()) bad_key("config.sim", "must be an object");
    expect_keys(sim, "config.sim",
                {"dt", "horizon", "mode", "decimate", "raw_equilibrium", "voltage_floor",
                 "residual_bound", "max_steps"});
    if (sim.contains("dt")) scenario.sim.dt = number(sim["dt"], "config.sim.dt");
    if (sim.contains("horizon")) scenario.sim.horizon = number(sim["horizon"], "config.sim.horizon");
    if (sim.contains("mode")) {
      if (!sim["mode"].is_string()) bad_key("config.sim.mode", "must be a string");
      scenario.sim.mode = parse_sim_mode(sim["mode"].get<std::string>());
    }
    if (sim.contains("decimate")) {
      scenario.sim.decimate = static_cast<int>(integer(sim["decimate"], "config.sim.decimate"));
    }
    if (sim.contains("raw_equilibrium")) {
      if (!sim["raw_equilibrium"].is_boolean()) {
        bad_key("config.sim.raw_equilibrium", "must be a boolean");
      }
      scenario.sim.raw_equilibrium = sim["raw_equilibrium"].get<bool>();
    }
    if (sim.contains("voltage_floor")) {
      scenario.sim.voltage_floor = number(sim["voltage_floor"], "config.sim.voltage_floor");
    }
    if (sim.contains("residual_bound")) {
      scenario.sim.residual_bound = number(sim["residual_bound"], "config.sim.residual_bound");
    }
    if (sim.contains("max_steps")) {
      scenario.sim.max_steps = integer(sim["max_steps"], "config.sim.max_steps");
    }
  }

  // susceptances: explicit column or derived from equilibrium consistency
  if (with_susceptance == l) {
    scenario.lines.susceptance = susceptance;
  } else {
    scenario.lines =
        derive_line_susceptances(scenario.network, scenario.generators, scenario.equilibrium)
            .lines;
  }

  scenario.validate();
  return scenario;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream file(path);
  if (!file) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream buffer;
  buffer << file.rdbuf();
  return parse_scenario(buffer.str());
}

std::string serialize_scenario(const Scenario& scenario) {
  scenario.validate();
  const int n = scenario.node_count();
  const int l = scenario.edge_count();

  OrderedJson doc;
  OrderedJson edges = OrderedJson::array();
  for (int e = 0; e < l; ++e) {
    const Edge& edge = scenario.network.edge(e);
    edges.push_back({edge.from + 1, edge.to + 1, scenario.lines.susceptance(e)});
  }
  doc["network"] = {{"edges", std::move(edges)}};

  OrderedJson generators = OrderedJson::array();
  for (int i = 0; i < n; ++i) {
    const GeneratorParams& p = scenario.generators[static_cast<std::size_t>(i)];
    generators.push_back({{"m", p.inertia},
                          {"d", p.damping},
                          {"t_do_prime", p.t_do_prime},
                          {"x_d", p.x_d},
                          {"x_d_prime", p.x_d_prime},
                          {"b_ii", p.self_susceptance},
                          {"p_g", p.mech_power},
                          {"e_ex", p.excitation}});
  }
  doc["generators"] = std::move(generators);

  doc["equilibrium"] = {{"delta_deg", radians_to_degrees(scenario.equilibrium.angle)},
                        {"v_nom", scenario.equilibrium.v_nom},
                        {"f_nom_hz", scenario.equilibrium.f_nom_hz}};

  OrderedJson controllers = OrderedJson::array();
  for (int e = 0; e < l; ++e) {
    const AngleControllerParams& a = scenario.angle_controllers[static_cast<std::size_t>(e)];
    const VoltageControllerParams& v = scenario.voltage_controllers[static_cast<std::size_t>(e)];
    controllers.push_back({{"tau_delta", a.tau},
                           {"k1_delta", a.k1},
                           {"k2_delta", a.k2},
                           {"tau_v", v.tau},
                           {"k1_v", v.k1}});
  }
  doc["controllers"] = std::move(controllers);

  doc["initial"] = {{"delta_deg", radians_to_degrees(scenario.initial.angle_dev)},
                    {"ddelta", vector_to_json(scenario.initial.freq_dev)},
                    {"vdev", vector_to_json(scenario.initial.volt_dev)},
                    {"x_delta", vector_to_json(scenario.initial_angle_ctrl)},
                    {"x_v", vector_to_json(scenario.initial_volt_ctrl)}};

  doc["sim"] = {{"dt", scenario.sim.dt},
                {"horizon", scenario.sim.horizon},
                {"mode", std::string(to_string(scenario.sim.mode))},
                {"decimate", scenario.sim.decimate},
                {"raw_equilibrium", scenario.sim.raw_equilibrium},
                {"voltage_floor", scenario.sim.voltage_floor},
                {"residual_bound", scenario.sim.residual_bound},
                {"max_steps", scenario.sim.max_steps}};

  return doc.dump(2) + "\n";
}

Scenario builtin_four_area() {
  Scenario scenario;
  scenario.network = Network(4, {{0, 1}, {1, 2}, {2, 3}, {3, 0}});

  const double inertia[] = {5.22, 3.98, 4.49, 4.22};
  const double damping[] = {1.6, 1.22, 1.38, 1.42};
  const double t_do[] = {5.54, 7.41, 6.11, 6.22};
  const double x_d[] = {1.84, 1.62, 1.8, 1.94};
  const double x_d_prime[] = {0.25, 0.17, 0.36, 0.44};
  const double b_self[] = {-49.61, -61.66, -52.17, -40.18};
  const double mech[] = {8.076, 12.04, -14.38, -5.735};
  const double excitation[] = {7.824, 9.13, 8.437, 6.864};
  const double eq_deg[] = {30.0, 28.0, 5.0, 10.0};
  const double k1_delta[] = {0.4, 0.5, 0.3, 0.4};
  const double k2_delta[] = {0.7, 0.8, 0.6, 0.8};
  const double k1_volt[] = {0.4, 0.5, 0.3, 0.4};
  const double init_delta_deg[] = {10.0, -8.0, -3.0, -10.0};
  const double init_vdev[] = {0.04, -0.04, -0.05, 0.05};

  scenario.equilibrium.angle.resize(4);
  scenario.initial = GridState::zero(4);
  for (int i = 0; i < 4; ++i) {
    GeneratorParams p;
    p.inertia = inertia[i];
    p.damping = damping[i];
    p.t_do_prime = t_do[i];
    p.x_d = x_d[i];
    p.x_d_prime = x_d_prime[i];
    p.self_susceptance = b_self[i];
    p.mech_power = mech[i];
    p.excitation = excitation[i];
    scenario.generators.push_back(p);
    scenario.equilibrium.angle(i) = deg_to_rad(eq_deg[i]);
    scenario.initial.angle_dev(i) = deg_to_rad(init_delta_deg[i]);
    scenario.initial.volt_dev(i) = init_vdev[i];
  }
  scenario.equilibrium.v_nom = 1.0;
  scenario.equilibrium.f_nom_hz = 50.0;

  for (int e = 0; e < 4; ++e) {
    scenario.angle_controllers.push_back(AngleControllerParams{1.0, k1_delta[e], k2_delta[e]});
    scenario.voltage_controllers.push_back(VoltageControllerParams{1.0, k1_volt[e]});
  }
  scenario.initial_angle_ctrl = Eigen::VectorXd::Zero(4);
  scenario.initial_volt_ctrl = Eigen::VectorXd::Zero(4);

  scenario.lines =
      derive_line_susceptances(scenario.network, scenario.generators, scenario.equilibrium).lines;
  return scenario;
}

Scenario random_scenario(int max_nodes, std::uint64_t seed) {
  if (max_nodes < 2) throw ConfigError("random_scenario: max_nodes must be at least 2");
  std::mt19937_64 rng(seed);
  const auto uniform = [&rng]() { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
  const auto in_range = [&uniform](double lo, double hi) { return lo + (hi - lo) * uniform(); };

  Scenario scenario;
  const int n = 2 + static_cast<int>(rng() % static_cast<std::uint64_t>(max_nodes - 1));
  scenario.network = Network::random_connected(n, rng());
  const int l = scenario.edge_count();

  scenario.lines.susceptance.resize(l);
  for (int e = 0; e < l; ++e) scenario.lines.susceptance(e) = in_range(15.0, 35.0);

  Eigen::VectorXd coupling = Eigen::VectorXd::Zero(n);
  for (int e = 0; e < l; ++e) {
    coupling(scenario.network.edge(e).from) += scenario.lines.susceptance(e);
    coupling(scenario.network.edge(e).to) += scenario.lines.susceptance(e);
  }

  scenario.equilibrium.angle.resize(n);
  scenario.initial = GridState::zero(n);
  for (int i = 0; i < n; ++i) {
    GeneratorParams p;
    p.inertia = in_range(2.0, 6.0);
    p.damping = in_range(1.0, 2.0);
    p.t_do_prime = in_range(5.0, 8.0);
    p.x_d = in_range(1.5, 2.0);
    p.x_d_prime = in_range(0.2, 0.5);
    // Self-susceptance dominates the node's coupling row, keeping Q^E and the
    // recomputed excitation positive for every draw.
    p.self_susceptance = -(coupling(i) + in_range(5.0, 15.0));
    scenario.generators.push_back(p);
    scenario.equilibrium.angle(i) = deg_to_rad(in_range(-25.0, 25.0));
    scenario.initial.angle_dev(i) = deg_to_rad(in_range(-10.0, 10.0));
    scenario.initial.volt_dev(i) = in_range(-0.05, 0.05);
  }
  scenario.equilibrium.v_nom = 1.0;
  scenario.equilibrium.f_nom_hz = 50.0;

  for (int e = 0; e < l; ++e) {
    AngleControllerParams angle;
    angle.tau = in_range(0.5, 1.5);
    angle.k1 = in_range(0.3, 0.6);
    angle.k2 = angle.k1 * in_range(1.5, 3.0);
    VoltageControllerParams volt;
    volt.tau = in_range(0.5, 1.5);
    volt.k1 = in_range(0.3, 0.6);
    scenario.angle_controllers.push_back(angle);
    scenario.voltage_controllers.push_back(volt);
  }
  scenario.initial_angle_ctrl = Eigen::VectorXd::Zero(l);
  scenario.initial_volt_ctrl = Eigen::VectorXd::Zero(l);

  scenario.generators = consistent_equilibrium_inputs(scenario.network, scenario.lines,
                                                      scenario.generators, scenario.equilibrium);

  scenario.sim.dt = 1e-3;
  scenario.sim.horizon = 200.0;
  scenario.sim.decimate = 100;
  return scenario;
}

RunReport make_run_report(const Scenario& scenario_used, const Trace& trace,
                          double wall_seconds) {
  RunReport report;
  report.mode = scenario_used.sim.mode;
  report.dt = scenario_used.sim.dt;
  report.horizon = scenario_used.sim.horizon;
  report.steps = scenario_used.sim.step_count();
  report.aborted = trace.aborted;
  report.abort_reason = trace.abort_reason;
  report.wall_seconds = wall_seconds;
  if (trace.size() > 0) {
    report.final_consensus_delta = trace.consensus_delta.back();
    report.final_consensus_v = trace.consensus_v.back();
  }
  if (trace.size() >= 3) {
    const MonotonicityReport mono = check_lyapunov_monotonicity(trace);
    report.max_rate_w_minus = mono.max_rate_w_minus;
    report.max_rate_w_plus = mono.max_rate_w_plus;
  }
  const EquilibriumResidual residual =
      equilibrium_residual(scenario_used.network, scenario_used.lines, scenario_used.generators,
                           scenario_used.equilibrium);
  report.residual_p = residual.real_power.cwiseAbs().maxCoeff();
  report.residual_q = residual.reactive_power.cwiseAbs().maxCoeff();
  report.checks = trace_checks(scenario_used, trace);
  return report;
}

std::string report_text(const RunReport& report) {
  std::ostringstream out;
  out << "mode:                 " << to_string(report.mode) << "\n";
  out << "dt:                   " << format_significant(report.dt, 6) << " s\n";
  out << "horizon:              " << format_significant(report.horizon, 6) << " s ("
      << report.steps << " steps)\n";
  out << "aborted:              " << (report.aborted ? "yes (" + report.abort_reason + ")" : "no")
      << "\n";
  out << "final consensus delta: " << format_significant(report.final_consensus_delta, 6)
      << " rad\n";
  out << "final consensus v:     " << format_significant(report.final_consensus_v, 6) << " p.u.\n";
  out << "max dW-/dt:           " << format_significant(report.max_rate_w_minus, 6) << "\n";
  out << "max dW+/dt:           " << format_significant(report.max_rate_w_plus, 6) << "\n";
  out << "equilibrium residual: P " << format_significant(report.residual_p, 6) << ", Q "
      << format_significant(report.residual_q, 6) << "\n";
  out << "wall time:            " << format_significant(report.wall_seconds, 6) << " s\n";
  for (const CheckResult& check : report.checks) {
    out << "check [" << to_string(check.verdict) << "] " << check.name;
    if (!check.detail.empty()) out << " (" << check.detail << ")";
    out << "\n";
  }
  return out.str();
}

std::string report_json(const RunReport& report) {
  OrderedJson doc;
  doc["mode"] = std::string(to_string(report.mode));
  doc["dt"] = report.dt;
  doc["horizon"] = report.horizon;
  doc["steps"] = report.steps;
  doc["aborted"] = report.aborted;
  doc["abort_reason"] = report.abort_reason;
  doc["final_consensus_delta"] = report.final_consensus_delta;
  doc["final_consensus_v"] = report.final_consensus_v;
  doc["max_rate_w_minus"] = report.max_rate_w_minus;
  doc["max_rate_w_plus"] = report.max_rate_w_plus;
  doc["residual_p"] = report.residual_p;
  doc["residual_q"] = report.residual_q;
  doc["wall_seconds"] = report.wall_seconds;
  OrderedJson checks = OrderedJson::array();
  for (const CheckResult& check : report.checks) {
    checks.push_back({{"name", check.name},
                      {"kind", check.kind},
                      {"epsilon", check.epsilon},
                      {"max_violation", check.max_violation},
                      {"verdict", std::string(to_string(check.verdict))},
                      {"detail", check.detail}});
  }
  doc["checks"] = std::move(checks);
  return doc.dump(2) + "\n";
}

namespace {

std::vector<std::string> trace_columns(const Scenario& scenario) {
  const int n = scenario.node_count();
  const int l = scenario.edge_count();
  std::vector<std::string> columns;
  columns.reserve(static_cast<std::size_t>(1 + 5 * n + 2 * l + 4));
  columns.emplace_back("t");
  for (int i = 1; i <= n; ++i) columns.push_back("delta_" + std::to_string(i));
  for (int i = 1; i <= n; ++i) columns.push_back("omega_hz_" + std::to_string(i));
  for (int i = 1; i <= n; ++i) columns.push_back("vmag_" + std::to_string(i));
  for (int e = 1; e <= l; ++e) columns.push_back("xcd_" + std::to_string(e));
  for (int e = 1; e <= l; ++e) columns.push_back("xcv_" + std::to_string(e));
  for (int i = 1; i <= n; ++i) columns.push_back("pst_" + std::to_string(i));
  for (int i = 1; i <= n; ++i) columns.push_back("qst_" + std::to_string(i));
  columns.emplace_back("w_minus");
  columns.emplace_back("w_plus");
  columns.emplace_back("consensus_delta");
  columns.emplace_back("consensus_v");
  return columns;
}

std::vector<double> trace_row(const Scenario& scenario, const Trace& trace, std::size_t k) {
  const int n = scenario.node_count();
  const int l = scenario.edge_count();
  const Eigen::VectorXd& state = trace.state[k];
  std::vector<double> row;
  row.reserve(static_cast<std::size_t>(1 + 5 * n + 2 * l + 4));
  row.push_back(trace.time[k]);
  const auto angle = layout::angle_dev(state, n);
  const auto freq = layout::freq_dev(state, n);
  const auto volt = layout::volt_dev(state, n);
  for (int i = 0; i < n; ++i) row.push_back(scenario.equilibrium.angle(i) + angle(i));
  for (int i = 0; i < n; ++i) {
    row.push_back(scenario.equilibrium.f_nom_hz + freq(i) / (2.0 * k_pi));
  }
  for (int i = 0; i < n; ++i) row.push_back(scenario.equilibrium.v_nom + volt(i));
  const auto x_delta = layout::angle_ctrl(state, n, l);
  const auto x_volt = layout::volt_ctrl(state, n, l);
  for (int e = 0; e < l; ++e) row.push_back(x_delta(e));
  for (int e = 0; e < l; ++e) row.push_back(x_volt(e));
  for (int i = 0; i < n; ++i) row.push_back(trace.p_storage[k](i));
  for (int i = 0; i < n; ++i) row.push_back(trace.q_storage[k](i));
  row.push_back(trace.w_minus[k]);
  row.push_back(trace.w_plus[k]);
  row.push_back(trace.consensus_delta[k]);
  row.push_back(trace.consensus_v[k]);
  return row;
}

}  // namespace

void write_trace_csv(std::ostream& out, const Scenario& scenario, const Trace& trace) {
  const std::vector<std::string> columns = trace_columns(scenario);
  for (std::size_t c = 0; c < columns.size(); ++c) {
    if (c > 0) out << ',';
    out << columns[c];
  }
  out << '\n';
  for (std::size_t k = 0; k < trace.size(); ++k) {
    const std::vector<double> row = trace_row(scenario, trace, k);
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c > 0) out << ',';
      out << format_significant(row[c]);
    }
    out << '\n';
  }
}

void write_trace_json(std::ostream& out, const Scenario& scenario, const Trace& trace) {
  OrderedJson doc;
  doc["columns"] = trace_columns(scenario);
  doc["aborted"] = trace.aborted;
  doc["abort_reason"] = trace.abort_reason;
  OrderedJson data = OrderedJson::array();
  for (std::size_t k = 0; k < trace.size(); ++k) {
    data.push_back(trace_row(scenario, trace, k));
  }
  doc["data"] = std::move(data);
  out << doc.dump(2) << "\n";
}

std::string format_significant(double value, int digits) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.*g", digits, value);
  return buffer;
}

}  // namespace gridsync
