#include "vfc/scenario.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include "vfc/graph.hpp"
#include "vfc/transforms.hpp"

namespace vfc {

using nlohmann::json;

namespace {

// ---------------------------------------------------------------- presets

const char* kFig2 = R"json({
  "name": "fig2",
  "model": "scalar_linear_sine",
  "graph": {"preset": "ring", "n_agents": 3},
  "initial": {
    "x": [[1.0], [-0.5], [1.5]],
    "theta": [[1.5, 0.8], [1.0, 1.2], [0.5, 1.0]]
  },
  "gains": {"k": 50.0, "g": "auto"},
  "integrator": {"dt": "auto", "t_end": 2000.0, "record_every": "auto"},
  "bounds": {"M_x": 2.0, "M_theta": 2.0, "delta": 0.2},
  "outputs": {"csv": "fig2.csv", "plot": "fig2.svg", "plot_groups": ["params"]},
  "thresholds": {"sync_err": 1e-3, "param_err": 1e-3, "drift": 0.2,
                 "theta_tail_variation": 1e-4},
  "seed": 20250807,
  "analysis": {
    "expect_contractive": true,
    "lyapunov_check": true,
    "tau": "auto",
    "theta_star_box": [[0.5, 2.0], [0.5, 1.5]],
    "s0_values": [-2.0, -1.0, 0.0, 1.0, 2.0]
  }
})json";

// Van der Pol triple with spread damping/stiffness; regimes differ only in
// the gains. Parameters reproduce the qualitative regimes (distinct motion,
// approximate sync, exact sync after adaptation), not any particular curve.
const char* kFig1Base = R"json({
  "name": "fig1",
  "model": "van_der_pol",
  "graph": {"preset": "ring", "n_agents": 3},
  "initial": {
    "x": "random",
    "theta": [[0.5, 0.8], [1.0, 1.0], [1.5, 1.2]]
  },
  "gains": {"k": 10.0, "g": "auto"},
  "integrator": {"dt": "auto", "t_end": 400.0, "record_every": "auto"},
  "bounds": {"M_x": 2.0, "M_theta": 2.5, "delta": 0.2},
  "outputs": {"csv": "", "plot": "", "plot_groups": ["states", "params", "errors"]},
  "seed": 7001,
  "analysis": {"expect_contractive": false}
})json";

json fig1_variant(char regime) {
  json j = json::parse(kFig1Base);
  j["name"] = std::string("fig1") + regime;
  if (regime == 'a') {
    j["gains"]["k"] = 0.0;
    j["gains"]["g"] = 0.0;
  } else if (regime == 'b') {
    j["gains"]["g"] = 0.0;
  }
  return j;
}

// ------------------------------------------------------------- json utils

Eigen::MatrixXd columns_from_json(const json& rows, int expect_cols,
                                  const std::string& what,
                                  std::vector<std::string>& errors) {
  // rows: one array per agent.
  const int n_agents = static_cast<int>(rows.size());
  int dim = -1;
  for (const auto& r : rows) {
    if (!r.is_array()) {
      errors.push_back(what + ": expected an array per agent");
      return {};
    }
    if (dim < 0) dim = static_cast<int>(r.size());
    if (static_cast<int>(r.size()) != dim) {
      errors.push_back(what + ": ragged rows");
      return {};
    }
  }
  if (expect_cols >= 0 && n_agents != expect_cols) {
    errors.push_back(what + ": expected " + std::to_string(expect_cols) +
                     " agents, got " + std::to_string(n_agents));
    return {};
  }
  Eigen::MatrixXd m(dim, n_agents);
  for (int i = 0; i < n_agents; ++i)
    for (int q = 0; q < dim; ++q) m(q, i) = rows[i][q].get<double>();
  return m;
}

ScenarioConfig config_from_json(const json& j) {
  std::vector<std::string> errors;
  ScenarioConfig cfg;
  cfg.name = j.value("name", "unnamed");
  cfg.model = j.value("model", "scalar_linear_sine");

  RegressorModel model;
  try {
    model = model_by_name(cfg.model);
  } catch (const ConfigError& e) {
    errors.push_back(e.what());
  }

  // Graph: preset name or explicit edge list.
  double lambdaN = 0.0;
  if (j.contains("graph")) {
    const json& gj = j["graph"];
    cfg.n_agents = gj.value("n_agents", 3);
    try {
      Graph g;
      if (gj.contains("preset")) {
        const std::string preset = gj["preset"].get<std::string>();
        if (preset == "ring") {
          g = ring_graph(cfg.n_agents);
        } else if (preset == "path") {
          g = path_graph(cfg.n_agents);
        } else if (preset == "complete") {
          g = complete_graph(cfg.n_agents);
        } else {
          throw ConfigError("unknown graph preset '" + preset + "'");
        }
      } else {
        std::vector<std::pair<int, int>> edges;
        for (const auto& e : gj.value("edges", json::array())) {
          edges.push_back({e[0].get<int>(), e[1].get<int>()});
        }
        g = build_graph(cfg.n_agents, edges);
      }
      cfg.edges = g.edges;
      if (!validate_connectivity(g)) {
        errors.push_back("graph: not connected");
      } else if (cfg.n_agents > 1) {
        lambdaN = decompose(g).lambdaN;
      }
    } catch (const Error& e) {
      errors.push_back(std::string("graph: ") + e.what());
    }
  } else {
    errors.push_back("graph: missing");
  }

  // Gains.
  const json gains = j.value("gains", json::object());
  cfg.k = gains.value("k", 1.0);
  if (cfg.k < 0.0) errors.push_back("gains.k: must be nonnegative");
  if (!gains.contains("g") || (gains["g"].is_string() && gains["g"] == "auto")) {
    cfg.g = CouplingGains::auto_g(cfg.k);
  } else {
    cfg.g = gains["g"].get<double>();
    if (cfg.g < 0.0) errors.push_back("gains.g: must be nonnegative");
    // g = 0 is the documented adaptation-off mode, not a mis-tied gain.
    cfg.g_overridden = cfg.g > 0.0 &&
                       std::abs(cfg.g - CouplingGains::auto_g(cfg.k)) >
                           1e-12 * std::max(1.0, cfg.g);
  }

  // Integrator.
  const json integ = j.value("integrator", json::object());
  cfg.t_end = integ.value("t_end", 10.0);
  if (!(cfg.t_end > 0.0)) errors.push_back("integrator.t_end: must be positive");
  cfg.stiffness_guard = integ.value("stiffness_guard", true);
  const double guard_limit =
      cfg.k * lambdaN > 0.0 ? 0.5 / (cfg.k * lambdaN)
                            : std::numeric_limits<double>::infinity();
  bool guard_violation = false;
  if (!integ.contains("dt") || (integ["dt"].is_string() && integ["dt"] == "auto")) {
    cfg.dt = cfg.k * lambdaN > 0.0 ? 0.4 / (cfg.k * lambdaN) : 0.01;
  } else {
    cfg.dt = integ["dt"].get<double>();
    if (!(cfg.dt > 0.0)) errors.push_back("integrator.dt: must be positive");
    if (cfg.stiffness_guard && cfg.dt > guard_limit) {
      guard_violation = true;
      errors.push_back("integrator.dt: " + std::to_string(cfg.dt) +
                       " exceeds the stiffness limit 0.5/(k lambda_N) = " +
                       std::to_string(guard_limit));
    }
  }
  const auto steps = static_cast<double>(std::llround(cfg.t_end / std::max(cfg.dt, 1e-300)));
  if (!integ.contains("record_every") ||
      (integ["record_every"].is_string() && integ["record_every"] == "auto")) {
    cfg.record_every = std::max(1, static_cast<int>(std::ceil(steps / 20000.0)));
  } else {
    cfg.record_every = integ["record_every"].get<int>();
    if (cfg.record_every < 1) errors.push_back("integrator.record_every: must be >= 1");
  }

  // Bounds.
  const json bounds = j.value("bounds", json::object());
  cfg.M_x = bounds.value("M_x", 2.0);
  cfg.M_theta = bounds.value("M_theta", 2.0);
  cfg.delta = bounds.value("delta", 0.2);
  if (!(cfg.M_x > 0.0) || !(cfg.M_theta > 0.0) || !(cfg.delta > 0.0)) {
    errors.push_back("bounds: M_x, M_theta, delta must be positive");
  }

  // Initial conditions.
  bool random_x = true, random_theta = true;
  if (j.contains("initial")) {
    const json& init = j["initial"];
    if (init.contains("x") && !init["x"].is_string()) {
      cfg.x0 = columns_from_json(init["x"], cfg.n_agents, "initial.x", errors);
      random_x = false;
    }
    if (init.contains("theta") && !init["theta"].is_string()) {
      cfg.theta0 =
          columns_from_json(init["theta"], cfg.n_agents, "initial.theta", errors);
      random_theta = false;
    }
  }
  if ((random_x || random_theta) && !j.contains("seed")) {
    errors.push_back("seed: required when initial conditions are drawn randomly");
  }
  cfg.seed = j.value("seed", 1ULL);

  if (cfg.x0 && model.psi && cfg.x0->rows() != model.state_dim) {
    errors.push_back("initial.x: wrong state dimension");
  }
  if (cfg.theta0 && model.psi && cfg.theta0->rows() != model.param_dim) {
    errors.push_back("initial.theta: wrong parameter dimension");
  }
  if (cfg.x0) {
    for (int i = 0; i < cfg.x0->cols(); ++i) {
      if (cfg.x0->col(i).norm() > cfg.M_x + 1e-12) {
        errors.push_back("initial.x: agent " + std::to_string(i) +
                         " outside the M_x ball");
      }
    }
  }
  if (cfg.theta0) {
    for (int i = 0; i < cfg.theta0->cols(); ++i) {
      if (cfg.theta0->col(i).norm() > cfg.M_theta + 1e-12) {
        errors.push_back("initial.theta: agent " + std::to_string(i) +
                         " outside the M_theta ball");
      }
    }
  }

  // Outputs.
  const json outputs = j.value("outputs", json::object());
  cfg.csv_path = outputs.value("csv", "");
  cfg.plot_path = outputs.value("plot", "");
  if (outputs.contains("plot_groups")) {
    cfg.plot_groups = {};
    for (const auto& gname : outputs["plot_groups"]) {
      const std::string s = gname.get<std::string>();
      if (s == "states") {
        cfg.plot_groups.states = true;
      } else if (s == "params") {
        cfg.plot_groups.params = true;
      } else if (s == "errors") {
        cfg.plot_groups.errors = true;
      } else {
        errors.push_back("outputs.plot_groups: unknown group '" + s + "'");
      }
    }
  }

  // Thresholds.
  if (j.contains("thresholds")) {
    const json& th = j["thresholds"];
    if (th.contains("sync_err")) cfg.thresholds.sync_err = th["sync_err"].get<double>();
    if (th.contains("param_err")) cfg.thresholds.param_err = th["param_err"].get<double>();
    if (th.contains("drift")) cfg.thresholds.drift = th["drift"].get<double>();
    if (th.contains("theta_tail_variation")) {
      cfg.thresholds.theta_tail_variation = th["theta_tail_variation"].get<double>();
    }
  }

  // Analysis settings.
  if (j.contains("analysis")) {
    const json& an = j["analysis"];
    cfg.analysis.expect_contractive = an.value("expect_contractive", true);
    cfg.analysis.lyapunov_check = an.value("lyapunov_check", false);
    if (an.contains("tau") && !an["tau"].is_string()) {
      cfg.analysis.tau = an["tau"].get<double>();
    }
    if (an.contains("s0_values")) {
      for (const auto& v : an["s0_values"]) {
        cfg.analysis.s0_values.push_back(v.get<double>());
      }
    }
    if (an.contains("theta_star_samples")) {
      for (const auto& row : an["theta_star_samples"]) {
        Eigen::VectorXd th(row.size());
        for (std::size_t q = 0; q < row.size(); ++q) th(q) = row[q].get<double>();
        cfg.analysis.theta_star_samples.push_back(th);
      }
    } else if (an.contains("theta_star_box")) {
      // Corners plus center of the box.
      const auto& box = an["theta_star_box"];
      const int p = static_cast<int>(box.size());
      const int corners = 1 << p;
      for (int mask = 0; mask < corners; ++mask) {
        Eigen::VectorXd th(p);
        for (int q = 0; q < p; ++q) {
          th(q) = box[q][(mask >> q) & 1].get<double>();
        }
        cfg.analysis.theta_star_samples.push_back(th);
      }
      Eigen::VectorXd center(p);
      for (int q = 0; q < p; ++q) {
        center(q) = 0.5 * (box[q][0].get<double>() + box[q][1].get<double>());
      }
      cfg.analysis.theta_star_samples.push_back(center);
    }
    if (an.contains("g_values")) {
      cfg.analysis.g_values.clear();
      for (const auto& v : an["g_values"]) {
        cfg.analysis.g_values.push_back(v.get<double>());
      }
    }
  }

  if (!errors.empty()) {
    std::string msg = "scenario config invalid (" + cfg.name + "):";
    for (const auto& e : errors) msg += "\n  - " + e;
    if (guard_violation && errors.size() == 1) throw StiffnessGuard(msg);
    throw ConfigError(msg);
  }
  return cfg;
}

}  // namespace

std::optional<std::string> preset_json(const std::string& name) {
  if (name == "fig2") return std::string(kFig2);
  if (name == "fig1a") return fig1_variant('a').dump(2);
  if (name == "fig1b") return fig1_variant('b').dump(2);
  if (name == "fig1c") return fig1_variant('c').dump(2);
  return std::nullopt;
}

ScenarioConfig load_config(const std::string& path_or_preset) {
  std::string text;
  if (auto preset = preset_json(path_or_preset)) {
    text = *preset;
  } else {
    std::ifstream in(path_or_preset);
    if (!in) {
      throw ConfigError("config: no preset or readable file named '" +
                        path_or_preset + "'");
    }
    std::stringstream ss;
    ss << in.rdbuf();
    text = ss.str();
  }
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("config parse error in '" + path_or_preset + "': " + e.what());
  }
  return config_from_json(j);
}

Graph scenario_graph(const ScenarioConfig& cfg) {
  return build_graph(cfg.n_agents, cfg.edges);
}

NetworkState initial_state(const ScenarioConfig& cfg) {
  const RegressorModel model = model_by_name(cfg.model);
  NetworkState s;
  s.t = 0.0;
  std::mt19937_64 rng(cfg.seed);
  auto draw_box = [&](int dim, double radius) {
    // Uniform in the centered cube inscribed in the radius ball.
    Eigen::VectorXd v(dim);
    const double half = radius / std::sqrt(static_cast<double>(dim));
    for (int q = 0; q < dim; ++q) {
      const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
      v(q) = -half + 2.0 * half * u;
    }
    return v;
  };
  if (cfg.x0) {
    s.x = *cfg.x0;
  } else {
    s.x.resize(model.state_dim, cfg.n_agents);
    for (int i = 0; i < cfg.n_agents; ++i) {
      s.x.col(i) = draw_box(model.state_dim, cfg.M_x);
    }
  }
  if (cfg.theta0) {
    s.theta = *cfg.theta0;
  } else {
    s.theta.resize(model.param_dim, cfg.n_agents);
    for (int i = 0; i < cfg.n_agents; ++i) {
      s.theta.col(i) = draw_box(model.param_dim, cfg.M_theta);
    }
  }
  return s;
}

RunReport make_report(const Trajectory& traj, const ScenarioConfig& cfg) {
  RunReport rep;
  const std::size_t m = traj.records();
  if (m == 0) throw Error("make_report: empty trajectory");
  const double t_end = traj.times.back();
  const double tail_start = 0.8 * t_end;

  rep.final_sync_err = traj.sync_err.empty() ? 0.0 : traj.sync_err.back();
  rep.final_param_err = traj.param_err.back();

  double drift = 0.0, tail_sync = 0.0, tail_param = 0.0, tail_var = 0.0;
  double tail_consensus = 0.0;
  const Eigen::VectorXd vo0 = traj.vartheta_o.front();
  const Eigen::MatrixXd theta_end = traj.theta.back();
  for (std::size_t j = 0; j < m; ++j) {
    drift = std::max(drift, (traj.vartheta_o[j] - vo0).norm());
    if (traj.times[j] >= tail_start) {
      if (!traj.sync_err.empty()) tail_sync = std::max(tail_sync, traj.sync_err[j]);
      tail_param = std::max(tail_param, traj.param_err[j]);
      for (int i = 0; i < traj.n_agents; ++i) {
        tail_var = std::max(
            tail_var, (traj.theta[j].col(i) - theta_end.col(i)).norm());
        tail_consensus = std::max(
            tail_consensus, (traj.x[j].col(i) - traj.chi_o[j]).norm());
      }
    }
  }
  rep.sup_mean_drift = drift;
  rep.tail_sup_sync_err = tail_sync;
  rep.tail_sup_param_err = tail_param;
  rep.tail_sup_consensus_err = tail_consensus;
  rep.theta_tail_variation = tail_var;

  // Diagnostic decay-rate fits on the middle-to-late window.
  auto try_fit = [&](const std::vector<double>& series) -> std::optional<double> {
    try {
      return fit_exp_rate(traj.times, series, 0.5).rate;
    } catch (const FitDomainError&) {
      return std::nullopt;
    }
  };
  rep.fitted_vartheta_rate = try_fit(traj.norm_vartheta_tilde);
  if (!traj.sync_err.empty()) rep.fitted_sync_rate = try_fit(traj.sync_err);

  auto check = [&](const std::optional<double>& limit, double value,
                   const std::string& label) {
    if (limit && value > *limit) {
      rep.pass = false;
      rep.failures.push_back(label + " = " + std::to_string(value) + " > " +
                             std::to_string(*limit));
    }
  };
  check(cfg.thresholds.sync_err, rep.final_sync_err, "final_sync_err");
  check(cfg.thresholds.param_err, rep.final_param_err, "final_param_err");
  check(cfg.thresholds.drift, rep.sup_mean_drift, "sup_mean_drift");
  check(cfg.thresholds.theta_tail_variation, rep.theta_tail_variation,
        "theta_tail_variation");
  return rep;
}

std::pair<Trajectory, RunReport> run_scenario(const ScenarioConfig& cfg) {
  const RegressorModel model = model_by_name(cfg.model);
  const Graph graph = scenario_graph(cfg);
  const NetworkState init = initial_state(cfg);
  const CouplingGains gains{cfg.k, cfg.g};
  if (cfg.g_overridden) {
    std::cerr << "[vfc] warning: scenario '" << cfg.name << "' overrides g = "
              << cfg.g << " (the analyzed tie is g = 1/sqrt(k) = "
              << CouplingGains::auto_g(cfg.k) << ")\n";
  }

  IntegratorConfig icfg;
  icfg.dt = cfg.dt;
  icfg.t_end = cfg.t_end;
  icfg.stiffness_guard = cfg.stiffness_guard;
  SimulateOptions opts;
  opts.record_every = cfg.record_every;
  opts.with_blended = true;

  Trajectory traj;
  try {
    traj = simulate(model, graph, init, gains, icfg, opts);
  } catch (const NumericalBlowup& e) {
    if (e.partial && !cfg.csv_path.empty()) {
      emit_csv(*e.partial, cfg.csv_path);  // keep the partial run inspectable
    }
    throw;
  }
  if (!cfg.csv_path.empty()) emit_csv(traj, cfg.csv_path);
  if (!cfg.plot_path.empty()) emit_plot(traj, cfg.plot_path, cfg.plot_groups);
  RunReport rep = make_report(traj, cfg);
  return {std::move(traj), std::move(rep)};
}

// ------------------------------------------------------------------ analyze

namespace {

json check_entry(const std::string& name, bool pass, double margin) {
  return json{{"name", name}, {"pass", pass}, {"margin", margin}};
}

json optional_to_json(const std::optional<double>& v) {
  if (v) return *v;
  return "infeasible";
}

std::vector<Eigen::VectorXd> scalar_grid(double lo, double hi, int points) {
  std::vector<Eigen::VectorXd> grid;
  grid.reserve(points);
  for (int i = 0; i < points; ++i) {
    grid.push_back(Eigen::VectorXd::Constant(
        1, lo + (hi - lo) * static_cast<double>(i) / (points - 1)));
  }
  return grid;
}

std::vector<double> forcing_period_grid(int points, double period) {
  std::vector<double> t(points);
  for (int i = 0; i < points; ++i) {
    t[i] = period * static_cast<double>(i) / points;
  }
  return t;
}

}  // namespace

std::string analyze_scenario(const ScenarioConfig& cfg) {
  const RegressorModel model = model_by_name(cfg.model);
  const Graph graph = scenario_graph(cfg);
  const LaplacianDecomposition dec = decompose(graph);
  const double period = 2.0 * M_PI;
  const double tau = cfg.analysis.tau > 0.0 ? cfg.analysis.tau : period;

  json rep;
  json checks = json::array();

  std::vector<Eigen::VectorXd> theta_stars = cfg.analysis.theta_star_samples;
  if (theta_stars.empty()) {
    // Default box corners and center.
    for (double a : {0.5, 2.0}) {
      for (double b : {0.5, 1.5}) theta_stars.push_back(Eigen::Vector2d(a, b));
    }
    theta_stars.push_back(Eigen::Vector2d(1.25, 1.0));
  }
  const std::vector<double> t_grid = forcing_period_grid(64, period);

  if (model.state_dim != 1 || !cfg.analysis.expect_contractive) {
    // Beyond-theory model: report the sampled contraction margin and the
    // excitation of the regressor along its own trajectory; the certified
    // chain needs a contractive scalar model and is left out.
    std::vector<Eigen::VectorXd> box;
    for (double z = -2.5; z <= 2.5; z += 0.25) {
      for (double y = -2.5; y <= 2.5; y += 0.25) {
        Eigen::VectorXd s(2);
        s << z, y;
        box.push_back(s);
      }
    }
    const ContractionReport con =
        contraction_margin(model, theta_stars.empty()
                                      ? std::vector<Eigen::VectorXd>{Eigen::Vector2d(1, 1)}
                                      : theta_stars,
                           box, {0.0});
    rep["contraction"] = {{"c", con.c},
                          {"contractive", con.contractive},
                          {"grid", {{"states", box.size()}, {"times", 1}}}};
    checks.push_back(check_entry("contraction_expectation",
                                 con.contractive == cfg.analysis.expect_contractive,
                                 con.c));

    ScenarioConfig short_cfg = cfg;
    short_cfg.t_end = std::min(cfg.t_end, 120.0);
    short_cfg.csv_path.clear();
    short_cfg.plot_path.clear();
    short_cfg.record_every = 1;
    const auto [traj, run_rep] = run_scenario(short_cfg);
    (void)run_rep;
    std::vector<Eigen::MatrixXd> psi_series;
    for (std::size_t j = 0; j < traj.records(); ++j) {
      if (traj.times[j] < 20.0) continue;  // drop the transient
      psi_series.push_back(model.psi_at(traj.x[j].col(0), traj.times[j]));
    }
    const PEGramReport pe = pe_gram(psi_series, short_cfg.dt, tau);
    rep["pe"] = {{"c1", pe.c1_est}, {"c2", pe.c2_est}, {"tau", pe.tau_actual}};
    checks.push_back(check_entry("pe_positive", pe.c1_est > 0.0, pe.c1_est));
    rep["decay"] = nullptr;
    rep["p_bounds"] = nullptr;
    rep["proof_constants"] = nullptr;
    rep["checks"] = checks;
    return rep.dump(2);
  }

  // --- contraction on the documented grid (two passes: the grid half-width
  // M_s + delta itself depends on the margin).
  const int grid_points = 201;
  ContractionReport con = contraction_margin(
      model, theta_stars, scalar_grid(-(3.0 * cfg.M_x + cfg.delta),
                                      3.0 * cfg.M_x + cfg.delta, grid_points),
      t_grid);
  double M_s = con.contractive
                   ? std::max(cfg.M_x, model.rho(0.0) * cfg.M_theta / con.c)
                   : cfg.M_x;
  con = contraction_margin(model, theta_stars,
                           scalar_grid(-(M_s + cfg.delta), M_s + cfg.delta, grid_points),
                           t_grid);
  rep["contraction"] = {{"c", con.c},
                        {"contractive", con.contractive},
                        {"grid",
                         {{"state_halfwidth", M_s + cfg.delta},
                          {"state_points", grid_points},
                          {"time_points", t_grid.size()}}}};
  checks.push_back(check_entry("contraction_positive", con.contractive, con.c));
  if (!con.contractive) {
    rep["pe"] = nullptr;
    rep["decay"] = nullptr;
    rep["p_bounds"] = nullptr;
    rep["proof_constants"] = nullptr;
    rep["checks"] = checks;
    return rep.dump(2);
  }
  const double c = con.c;
  M_s = std::max(cfg.M_x, model.rho(0.0) * cfg.M_theta / c);
  const double M_psi = model.rho(M_s + cfg.delta);

  // --- persistent excitation along reference solutions.
  const PESpec pe_spec =
      measure_pe(model, theta_stars, cfg.M_x, tau, 12.0 * period, period / 1024.0);
  const double c1 = pe_spec.c1, c2 = pe_spec.c2;
  rep["pe"] = {{"c1", c1}, {"c2", c2}, {"tau", tau}};
  checks.push_back(check_entry("pe_positive", c1 > 0.0, c1));

  // --- regressor Lipschitz constant and envelope check on the grid.
  double L_psi = 0.0;
  {
    const auto grid = scalar_grid(-(M_s + cfg.delta), M_s + cfg.delta, grid_points);
    for (const auto& s : grid) {
      for (double t : t_grid) {
        L_psi = std::max(L_psi, model.d_psi_dx_at(s, t)[0].norm());
      }
    }
    if (model.rho) {
      // The envelope is exactly tight where sin t = +-1; allow rounding.
      const double margin = rho_envelope_margin(model, grid, t_grid);
      checks.push_back(check_entry("rho_envelope", margin >= -1e-12, margin));
    }
  }

  // --- deviation-operator bounds (sampled estimates).
  const TildePsiBounds tpb = sample_tilde_psi_bounds(
      model, dec, M_s + cfg.delta, std::sqrt(cfg.n_agents) * cfg.M_x + cfg.delta,
      t_grid);

  // --- decay certificate and P bounds.
  const DecayBounds bounds = decay_bounds(c1, c2, tau, M_psi, c, L_psi, cfg.M_x);
  const PBounds pb = p_bounds(bounds);
  rep["decay"] = {{"kappa1", bounds.kappa1}, {"kappa2", bounds.kappa2},
                  {"m_hat", bounds.m_hat},   {"b_hat", bounds.b_hat},
                  {"m", bounds.m},           {"b", bounds.b},
                  {"b_hat_clamped", bounds.b_hat_clamped}};
  rep["p_bounds"] = {{"lambda_m", pb.lambda_m}, {"lambda_M", pb.lambda_M}};

  std::vector<Eigen::VectorXd> s0_list;
  for (double v : cfg.analysis.s0_values.empty()
                      ? std::vector<double>{-cfg.M_x, 0.0, cfg.M_x}
                      : cfg.analysis.s0_values) {
    s0_list.push_back(Eigen::VectorXd::Constant(1, v));
  }

  // Reference solutions stay inside the certified ball.
  {
    IntegratorConfig icfg;
    icfg.dt = 0.01;
    icfg.t_end = 50.0;
    double worst = 0.0;
    for (const auto& s0 : s0_list) {
      const Series ref = reference_trajectory(model, theta_stars.back(), s0, icfg);
      for (const auto& v : ref.values) worst = std::max(worst, v.norm());
    }
    checks.push_back(check_entry("uniform_bound_M_s", worst <= M_s, M_s - worst));
  }

  // Contraction gap between two reference solutions.
  {
    IntegratorConfig icfg;
    icfg.dt = 0.002;
    icfg.t_end = 8.0;
    const Series a = reference_trajectory(model, theta_stars.back(),
                                          Eigen::VectorXd::Constant(1, -cfg.M_x), icfg);
    const Series b = reference_trajectory(model, theta_stars.back(),
                                          Eigen::VectorXd::Constant(1, cfg.M_x), icfg);
    const double gap0 = (b.values[0] - a.values[0]).norm();
    double worst = std::numeric_limits<double>::infinity();
    for (std::size_t q = 0; q < a.size(); ++q) {
      const double bound = std::exp(-c * a.times[q]) * gap0 * (1.0 + 1e-3);
      worst = std::min(worst, bound - (b.values[q] - a.values[q]).norm());
    }
    checks.push_back(check_entry("contraction_gap", worst >= 0.0, worst));
  }

  // Transition-matrix envelope at a small and at the endpoint gain.
  for (double g : {0.1, 1.0}) {
    const TransitionEnvelopeReport l2 =
        transition_envelope_certificate(model, theta_stars.back(), s0_list, g, 30.0, bounds,
                           10, 10, 2e-3);
    checks.push_back(check_entry("transition_envelope_g" + std::to_string(g),
                                 l2.violations == 0, 1.0 - l2.max_ratio));
  }

  // P(t) eigenvalue bounds along the reference for each adaptation gain.
  for (double g : cfg.analysis.g_values) {
    const double dt = 0.01;
    const double window = 40.0;
    // Terminal contamination decays at twice the realized transition decay;
    // size the pad from the certified b with a generous factor.
    const double realized_rate = std::max(g * c1 / tau * 0.5, g * bounds.b);
    const double pad = std::min(2000.0, 18.0 / (2.0 * realized_rate));
    const auto half_n =
        static_cast<std::size_t>(std::llround((window + pad) / (dt / 2.0)));
    IntegratorConfig icfg;
    icfg.dt = dt / 2.0;
    icfg.t_end = window + pad;
    const Series ref = reference_trajectory(model, theta_stars.back(),
                                            Eigen::VectorXd::Constant(1, cfg.M_x),
                                            icfg);
    std::vector<Eigen::MatrixXd> psi_half(half_n + 1);
    for (std::size_t q = 0; q <= half_n; ++q) {
      psi_half[q] = model.psi_at(ref.values[q], ref.times[q]);
    }
    const auto path = p_matrix_path(
        psi_half, dt, g,
        pb.lambda_m * Eigen::MatrixXd::Identity(model.param_dim, model.param_dim));
    double lo_margin = std::numeric_limits<double>::infinity();
    double hi_margin = std::numeric_limits<double>::infinity();
    const auto usable = static_cast<std::size_t>(std::llround(window / dt));
    for (std::size_t q = 0; q <= usable; ++q) {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(path[q]);
      lo_margin = std::min(lo_margin, es.eigenvalues().minCoeff() - pb.lambda_m);
      hi_margin = std::min(hi_margin, pb.lambda_M - es.eigenvalues().maxCoeff());
    }
    checks.push_back(check_entry("p_eigs_in_bounds_g" + std::to_string(g),
                                 lo_margin >= -1e-9 && hi_margin >= -1e-9,
                                 std::min(lo_margin, hi_margin)));
  }

  // --- proof-constant ledger.
  ProblemInstance prob;
  prob.N = cfg.n_agents;
  prob.lambda2 = dec.lambda2;
  prob.lambdaN = dec.lambdaN;
  prob.M_x = cfg.M_x;
  prob.M_theta = cfg.M_theta;
  prob.delta = cfg.delta;
  prob.rho = model.rho;
  prob.c = c;
  prob.c1 = c1;
  prob.c2 = c2;
  prob.tau = tau;
  prob.L_psi = L_psi;
  prob.M_tilde_psi = tpb.M_tilde_psi;
  prob.L_tilde_psi = tpb.L_tilde_psi;
  const ProofConstants pc = proof_constants(prob);
  {
    json pj;
    pj["M_s"] = pc.M_s;
    pj["M_psi"] = pc.M_psi;
    pj["delta"] = pc.delta;
    pj["delta_o"] = pc.delta_o;
    pj["T0"] = pc.T0;
    pj["G_chi_o"] = pc.G_chi_o;
    pj["G_chi_tilde"] = pc.G_chi_tilde;
    pj["G_vartheta_o"] = pc.G_vartheta_o;
    pj["G_vartheta_tilde"] = pc.G_vartheta_tilde;
    pj["G_theta"] = pc.G_theta;
    pj["M_tilde_psi"] = pc.M_tilde_psi;
    pj["L_tilde_psi"] = pc.L_tilde_psi;
    pj["M_dpsi"] = pc.M_dpsi;
    pj["M_xi"] = pc.M_xi;
    pj["lambda_m"] = pc.lambda_m;
    pj["lambda_M"] = pc.lambda_M;
    for (int i = 0; i < 12; ++i) pj["C" + std::to_string(i + 1)] = pc.C[i];
    for (int i = 0; i < 10; ++i) {
      pj["k_star_" + std::to_string(i + 1)] = optional_to_json(pc.k_thresholds[i]);
      pj["k_star_" + std::to_string(i + 1) + "_extended"] =
          optional_to_json(pc.k_thresholds_extended[i]);
    }
    pj["k_star"] = optional_to_json(pc.k_star);
    pj["k_star_extended"] = optional_to_json(pc.k_star_extended);
    rep["proof_constants"] = pj;
    checks.push_back(check_entry("ledger_finite_constants",
                                 pc.delta_o > 0.0 && pc.T0 > 0.0, pc.delta_o));
  }

  // --- Lyapunov decay along the scenario trajectory.
  if (cfg.analysis.lyapunov_check && cfg.g > 0.0) {
    ScenarioConfig run_cfg = cfg;
    run_cfg.csv_path.clear();
    run_cfg.plot_path.clear();
    const auto [traj, run_rep] = run_scenario(run_cfg);
    (void)run_rep;

    const Eigen::VectorXd theta_star = traj.vartheta_o.front();
    const Eigen::VectorXd s0 = traj.chi_o.front();
    const double dt_rec = traj.times[1] - traj.times[0];
    const double realized_rate = std::max(cfg.g * c1 / tau * 0.5, cfg.g * bounds.b);
    const double pad = std::min(4000.0, 18.0 / (2.0 * realized_rate));
    IntegratorConfig icfg;
    icfg.dt = dt_rec / 2.0;
    icfg.t_end = traj.times.back() + pad;
    const Series ref = reference_trajectory(model, theta_star, s0, icfg);
    std::vector<Eigen::MatrixXd> psi_half(ref.size());
    for (std::size_t q = 0; q < ref.size(); ++q) {
      psi_half[q] = model.psi_at(ref.values[q], ref.times[q]);
    }
    if (psi_half.size() % 2 == 0) psi_half.pop_back();
    const auto full_path = p_matrix_path(
        psi_half, dt_rec, cfg.g,
        pb.lambda_m * Eigen::MatrixXd::Identity(model.param_dim, model.param_dim));
    std::vector<Eigen::MatrixXd> p_path(traj.records());
    for (std::size_t q = 0; q < traj.records(); ++q) {
      const auto idx = static_cast<std::size_t>(std::llround(traj.times[q] / dt_rec));
      p_path[q] = full_path[std::min(idx, full_path.size() - 1)];
    }
    const DecayReport dr = decay_check(traj, dec, model, p_path, {cfg.k, cfg.g}, pb,
                                       pc.T0 / std::sqrt(cfg.k));
    checks.push_back(check_entry("lyapunov_decay",
                                 !dr.skipped && dr.fraction_violating <= 0.01,
                                 0.01 - dr.fraction_violating));
  }

  rep["checks"] = checks;
  return rep.dump(2);
}

}  // namespace vfc
