// Command-line front end: simulate / analyze / repro.

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "vfc/criteria.hpp"
#include "vfc/errors.hpp"
#include "vfc/scenario.hpp"

namespace {

std::string resolve_out_dir(const std::string& flag_value) {
  if (!flag_value.empty()) return flag_value;
  if (const char* env = std::getenv("VFC_OUT"); env && *env) return env;
  return "";
}

int cmd_simulate(const std::string& config, const std::string& out_dir) {
  vfc::ScenarioConfig cfg = vfc::load_config(config);
  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    if (cfg.csv_path.empty()) cfg.csv_path = cfg.name + ".csv";
    if (cfg.plot_path.empty()) cfg.plot_path = cfg.name + ".svg";
    cfg.csv_path = out_dir + "/" + cfg.csv_path;
    cfg.plot_path = out_dir + "/" + cfg.plot_path;
  }
  std::cout << "run header: command=simulate config=" << config
            << " scenario=" << cfg.name << " model=" << cfg.model
            << " N=" << cfg.n_agents << " k=" << cfg.k << " g=" << cfg.g
            << " dt=" << cfg.dt << " t_end=" << cfg.t_end
            << " record_every=" << cfg.record_every << " seed=" << cfg.seed
            << " csv=" << (cfg.csv_path.empty() ? "-" : cfg.csv_path)
            << " plot=" << (cfg.plot_path.empty() ? "-" : cfg.plot_path) << "\n";
  try {
    const auto [traj, rep] = vfc::run_scenario(cfg);
    std::cout << "final sync err        " << rep.final_sync_err << "\n"
              << "final param err       " << rep.final_param_err << "\n"
              << "sup mean drift        " << rep.sup_mean_drift << "\n"
              << "tail sup sync err     " << rep.tail_sup_sync_err << "\n"
              << "tail sup param err    " << rep.tail_sup_param_err << "\n"
              << "theta tail variation  " << rep.theta_tail_variation << "\n";
    if (rep.fitted_vartheta_rate) {
      std::cout << "fitted |vartheta~| decay rate " << *rep.fitted_vartheta_rate
                << "\n";
    }
    if (rep.fitted_sync_rate) {
      std::cout << "fitted sync err decay rate    " << *rep.fitted_sync_rate << "\n";
    }
    std::cout << "records " << traj.records() << " of " << traj.total_steps
              << " steps\n";
    for (const auto& f : rep.failures) std::cout << "threshold violated: " << f << "\n";
    std::cout << (rep.pass ? "PASS\n" : "FAIL\n");
    return rep.pass ? 0 : 1;
  } catch (const vfc::NumericalBlowup& e) {
    std::cerr << "numerical blowup: " << e.what() << " (last valid t = " << e.t_last
              << ")\n";
    if (!cfg.csv_path.empty()) {
      std::cerr << "partial trajectory persisted to " << cfg.csv_path << "\n";
    }
    return 2;
  }
}

int cmd_analyze(const std::string& config, const std::string& out_file) {
  const vfc::ScenarioConfig cfg = vfc::load_config(config);
  std::cout << "run header: command=analyze config=" << config
            << " scenario=" << cfg.name << " model=" << cfg.model
            << " out=" << (out_file.empty() ? "stdout" : out_file) << "\n";
  const std::string report = vfc::analyze_scenario(cfg);
  if (out_file.empty()) {
    std::cout << report << "\n";
  } else {
    std::ofstream out(out_file);
    if (!out) {
      std::cerr << "cannot write " << out_file << "\n";
      return 1;
    }
    out << report << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"simulator and verification toolkit for coupled adaptive agents"};
  app.require_subcommand(1);

  std::string config, out_dir_flag, analyze_out;
  bool quick = false, slow = false;
  std::uint64_t seed = 0;

  auto* sim = app.add_subcommand("simulate", "integrate a scenario and report metrics");
  sim->add_option("config", config, "config file or preset name")->required();
  sim->add_option("--out", out_dir_flag, "output directory (or $VFC_OUT)");

  auto* analyze = app.add_subcommand("analyze", "assumption checks and certificates");
  analyze->add_option("config", config, "config file or preset name")->required();
  analyze->add_option("--out", analyze_out, "write the JSON report here");

  auto* repro = app.add_subcommand("repro", "reproduce the figure scenarios and checks");
  repro->add_flag("--quick", quick, "halved horizons, relaxed tolerances x5");
  repro->add_flag("--slow", slow, "include the slow proof-constant criterion");
  repro->add_option("--seed", seed, "base seed override");
  repro->add_option("--out", out_dir_flag, "output directory (or $VFC_OUT)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed()) return cmd_simulate(config, resolve_out_dir(out_dir_flag));
    if (analyze->parsed()) return cmd_analyze(config, analyze_out);
    vfc::CriteriaOptions opts;
    opts.quick = quick;
    opts.seed = seed;
    opts.out_dir = resolve_out_dir(out_dir_flag);
    return vfc::repro_all(opts, slow);
  } catch (const vfc::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
