#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "vfc/criteria.hpp"
#include "vfc/io.hpp"
#include "vfc/scenario.hpp"

using namespace vfc;
namespace fs = std::filesystem;

namespace {

std::string temp_path(const std::string& name) {
  return (fs::temp_directory_path() / name).string();
}

std::string write_temp(const std::string& name, const std::string& text) {
  const std::string path = temp_path(name);
  std::ofstream out(path);
  out << text;
  return path;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::size_t count_occurrences(const std::string& hay, const std::string& needle) {
  std::size_t n = 0, pos = 0;
  while ((pos = hay.find(needle, pos)) != std::string::npos) {
    ++n;
    pos += needle.size();
  }
  return n;
}

ScenarioConfig short_fig2(double t_end) {
  ScenarioConfig cfg = load_config("fig2");
  cfg.t_end = t_end;
  cfg.csv_path.clear();
  cfg.plot_path.clear();
  return cfg;
}

}  // namespace

TEST_SUITE("scenario") {

TEST_CASE("fig2 preset resolves the documented values") {
  const ScenarioConfig cfg = load_config("fig2");
  CHECK(cfg.model == "scalar_linear_sine");
  CHECK(cfg.n_agents == 3);
  CHECK(cfg.edges.size() == 3);  // ring
  CHECK(cfg.k == 50.0);
  CHECK(cfg.g == doctest::Approx(1.0 / std::sqrt(50.0)).epsilon(1e-15));
  CHECK(cfg.dt == doctest::Approx(0.4 / 150.0));
  CHECK(cfg.t_end == 2000.0);
  CHECK(cfg.delta == 0.2);
  REQUIRE(cfg.theta0.has_value());
  CHECK((*cfg.theta0)(0, 0) == 1.5);
  // Mean of the preset triple is (1, 1).
  CHECK(cfg.theta0->rowwise().mean()(0) == doctest::Approx(1.0));
  CHECK(cfg.theta0->rowwise().mean()(1) == doctest::Approx(1.0));
}

TEST_CASE("auto gain expansion and guard validation") {
  const std::string good = write_temp("vfc_good.json", R"({
    "name": "t", "model": "scalar_linear_sine",
    "graph": {"preset": "ring", "n_agents": 3},
    "initial": {"x": [[0.1],[0.2],[0.3]], "theta": [[1,1],[1,1],[1,1]]},
    "gains": {"k": 100.0, "g": "auto"},
    "integrator": {"dt": "auto", "t_end": 1.0},
    "seed": 5
  })");
  const ScenarioConfig cfg = load_config(good);
  CHECK(cfg.g == doctest::Approx(0.1));
  CHECK(cfg.dt == doctest::Approx(0.4 / 300.0));

  const std::string stiff = write_temp("vfc_stiff.json", R"({
    "name": "t", "model": "scalar_linear_sine",
    "graph": {"preset": "ring", "n_agents": 3},
    "initial": {"x": [[0.1],[0.2],[0.3]], "theta": [[1,1],[1,1],[1,1]]},
    "gains": {"k": 100.0},
    "integrator": {"dt": 0.01, "t_end": 1.0},
    "seed": 5
  })");
  CHECK_THROWS_AS(load_config(stiff), StiffnessGuard);

  const std::string broken = write_temp("vfc_broken.json", R"({
    "name": "t", "model": "nope",
    "graph": {"n_agents": 3, "edges": [[0,0]]},
    "gains": {"k": -1.0},
    "integrator": {"t_end": -2.0}
  })");
  try {
    load_config(broken);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    // Every violation is listed, not just the first.
    CHECK(msg.find("unknown model") != std::string::npos);
    CHECK(msg.find("self-loop") != std::string::npos);
    CHECK(msg.find("gains.k") != std::string::npos);
    CHECK(msg.find("t_end") != std::string::npos);
    CHECK(msg.find("seed") != std::string::npos);
  }

  CHECK_THROWS_AS(load_config("no_such_preset"), ConfigError);
}

TEST_CASE("explicit initial conditions must respect the boxes") {
  const std::string out_of_box = write_temp("vfc_oob.json", R"({
    "name": "t", "model": "scalar_linear_sine",
    "graph": {"preset": "ring", "n_agents": 3},
    "initial": {"x": [[5.0],[0.2],[0.3]], "theta": [[1,1],[1,1],[1,1]]},
    "gains": {"k": 1.0}, "integrator": {"t_end": 1.0},
    "bounds": {"M_x": 2.0, "M_theta": 2.0, "delta": 0.2},
    "seed": 5
  })");
  CHECK_THROWS_AS(load_config(out_of_box), ConfigError);
}

TEST_CASE("seeded initial conditions stay inside the boxes and reproduce") {
  ScenarioConfig cfg = load_config("fig1c");
  cfg.seed = 424242;
  const NetworkState a = initial_state(cfg);
  const NetworkState b = initial_state(cfg);
  CHECK((a.x - b.x).norm() == 0.0);
  for (int i = 0; i < cfg.n_agents; ++i) {
    CHECK(a.x.col(i).norm() <= cfg.M_x);
    CHECK(a.theta.col(i).norm() <= cfg.M_theta);
  }
  cfg.seed = 424243;
  const NetworkState c = initial_state(cfg);
  CHECK((a.x - c.x).norm() > 0.0);
  // theta is explicit in this preset, so the seed must not move it.
  CHECK((a.theta - c.theta).norm() == 0.0);
}

TEST_CASE("csv round trip reproduces the trajectory bit-exactly") {
  ScenarioConfig cfg = short_fig2(5.0);
  const auto [traj, rep] = run_scenario(cfg);
  (void)rep;
  const std::string path = temp_path("vfc_traj.csv");
  emit_csv(traj, path);
  const Trajectory back = read_csv(path);
  REQUIRE(back.records() == traj.records());
  for (std::size_t j = 0; j < traj.records(); ++j) {
    CHECK(back.times[j] == traj.times[j]);
    CHECK((back.x[j] - traj.x[j]).norm() == 0.0);
    CHECK((back.theta[j] - traj.theta[j]).norm() == 0.0);
    CHECK(back.norm_chi_tilde[j] == traj.norm_chi_tilde[j]);
    CHECK((back.s[j] - traj.s[j]).norm() == 0.0);
  }
}

TEST_CASE("identical config and seed give byte-identical csv") {
  ScenarioConfig cfg = load_config("fig1c");
  cfg.t_end = 20.0;
  cfg.csv_path = temp_path("vfc_det_a.csv");
  run_scenario(cfg);
  const std::string first = slurp(cfg.csv_path);
  cfg.csv_path = temp_path("vfc_det_b.csv");
  run_scenario(cfg);
  CHECK(first == slurp(cfg.csv_path));
  CHECK(!first.empty());
}

TEST_CASE("report numbers are recomputable from the persisted csv") {
  ScenarioConfig cfg = short_fig2(40.0);
  cfg.csv_path = temp_path("vfc_report.csv");
  const auto [traj, rep] = run_scenario(cfg);
  (void)traj;
  const Trajectory back = read_csv(cfg.csv_path);
  const RunReport rep2 = make_report(back, cfg);
  CHECK(rep2.final_sync_err == rep.final_sync_err);
  CHECK(rep2.final_param_err == rep.final_param_err);
  CHECK(rep2.sup_mean_drift == rep.sup_mean_drift);
  CHECK(rep2.tail_sup_sync_err == rep.tail_sup_sync_err);
  CHECK(rep2.theta_tail_variation == rep.theta_tail_variation);
}

TEST_CASE("fig2 plot selection gives one panel per parameter component") {
  ScenarioConfig cfg = short_fig2(10.0);
  cfg.plot_path = temp_path("vfc_fig2.svg");
  run_scenario(cfg);
  const std::string svg = slurp(cfg.plot_path);
  // Two panels (one per theta component), three curves each.
  CHECK(count_occurrences(svg, "<rect x=") == 2);
  CHECK(count_occurrences(svg, "<polyline") == 6);
}

TEST_CASE("empty plot selection is rejected") {
  ScenarioConfig cfg = short_fig2(2.0);
  const auto [traj, rep] = run_scenario(cfg);
  (void)rep;
  CHECK_THROWS_AS(emit_plot(traj, temp_path("vfc_none.svg"), PlotSelection{}),
                  EmptySelection);
}

TEST_CASE("blowup persists the partial trajectory and signals failure") {
  const std::string blowup = write_temp("vfc_blowup.json", R"({
    "name": "blowup", "model": "scalar_linear_sine",
    "graph": {"preset": "ring", "n_agents": 3},
    "initial": {"x": [[1.0],[0.5],[0.2]], "theta": [[-5,0],[-5,0],[-5,0]]},
    "gains": {"k": 0.0, "g": 0.0},
    "integrator": {"dt": 1.0, "t_end": 500.0, "record_every": 1},
    "bounds": {"M_x": 2.0, "M_theta": 6.0, "delta": 0.2},
    "outputs": {"csv": ")" + temp_path("vfc_partial.csv") + R"("},
    "seed": 5
  })");
  ScenarioConfig cfg = load_config(blowup);
  CHECK_THROWS_AS(run_scenario(cfg), NumericalBlowup);
  const Trajectory partial = read_csv(temp_path("vfc_partial.csv"));
  CHECK(partial.records() > 0);
}

TEST_CASE("disagreement settles below the fast-layer bound at k = 50") {
  ScenarioConfig cfg = short_fig2(40.0);
  cfg.record_every = 1;
  const auto [traj, rep] = run_scenario(cfg);
  (void)rep;
  double sup_past_layer = 0.0;
  for (std::size_t j = 0; j < traj.records(); ++j) {
    if (traj.times[j] < 8.0 / (cfg.k * 3.0)) continue;  // e^{-8} of the transient
    sup_past_layer = std::max(sup_past_layer, traj.norm_chi_tilde[j]);
  }
  // Regression value pinned from the first verified run (measured 3.9e-3);
  // the certified 2 C2 / k envelope sits orders of magnitude above it.
  CHECK(sup_past_layer <= 0.006);
}

TEST_CASE("tail sync error shrinks as the coupling gain grows") {
  double previous = std::numeric_limits<double>::infinity();
  for (double k : {25.0, 50.0, 100.0}) {
    ScenarioConfig cfg = short_fig2(100.0);
    cfg.k = k;
    cfg.g = CouplingGains::auto_g(k);
    cfg.dt = 0.4 / (k * 3.0);
    cfg.record_every = 4;
    cfg.thresholds = {};
    const auto [traj, rep] = run_scenario(cfg);
    (void)traj;
    CHECK(rep.tail_sup_sync_err < previous);
    previous = rep.tail_sup_sync_err;
  }
}

TEST_CASE("analyze emits the verification report for the van der pol preset") {
  ScenarioConfig cfg = load_config("fig1b");
  cfg.t_end = 60.0;
  const std::string report = analyze_scenario(cfg);
  CHECK(report.find("\"contraction\"") != std::string::npos);
  CHECK(report.find("\"contractive\": false") != std::string::npos);
  CHECK(report.find("\"pe\"") != std::string::npos);
  CHECK(report.find("\"checks\"") != std::string::npos);
}

}  // TEST_SUITE
