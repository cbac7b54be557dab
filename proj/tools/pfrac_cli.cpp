// Command-line driver: scenario runs, parameter sweeps and the analysis lab.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "pfrac/io.hpp"

namespace fs = std::filesystem;
using namespace pfrac;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitSolver = 3;

struct ScenarioFlags {
  std::string scenario;
  std::string formulation;
  std::optional<int> refinements;
  std::optional<double> nu;
  std::optional<double> dt;
  std::optional<double> end_time;
  std::string config;
  std::string output_dir;
  std::string snapshots;
  bool mirror_slit = false;

  void add(CLI::App* app) {
    app->add_option("--scenario", scenario, "shear | lpanel");
    app->add_option("--formulation", formulation, "standard-q1q1 | standard-q2q1 | mixed");
    app->add_option("--refinements", refinements, "uniform refinements of the base mesh");
    app->add_option("--nu", nu, "Poisson ratio");
    app->add_option("--dt", dt, "load increment [s]");
    app->add_option("--end-time", end_time, "final pseudo-time [s]");
    app->add_option("--config", config, "key = value file layered over the defaults");
    app->add_option("--output-dir", output_dir, "directory for all outputs");
    app->add_option("--snapshots", snapshots, "VTK snapshot times t1,t2,...");
    app->add_flag("--mirror-slit", mirror_slit, "slit from the centre to the left edge");
  }

  ScenarioConfig resolve() const {
    KeyValues kv;
    if (!config.empty()) {
      std::ifstream in(config);
      if (!in) throw ConfigError("cannot open config file '" + config + "'");
      kv = read_key_values(in);
    }
    Geometry g = Geometry::Shear;
    if (!scenario.empty()) {
      g = geometry_from_string(scenario);
      kv.erase(std::remove_if(kv.begin(), kv.end(), [](const auto& p) { return p.first == "scenario" || p.first == "geometry"; }),
               kv.end());
    }
    // Flags override file values.
    KeyValues flags;
    if (!formulation.empty()) flags.emplace_back("formulation", formulation);
    if (refinements) flags.emplace_back("refinements", std::to_string(*refinements));
    if (nu) flags.emplace_back("nu", format_double(*nu));
    if (dt) flags.emplace_back("dt", format_double(*dt));
    if (end_time) flags.emplace_back("end_time", format_double(*end_time));
    if (!output_dir.empty()) flags.emplace_back("output_dir", output_dir);
    if (!snapshots.empty()) flags.emplace_back("snapshots", snapshots);
    if (mirror_slit) flags.emplace_back("mirror_slit", "true");
    ScenarioConfig c = build_config(kv, g);
    apply_config(c, flags);
    return c;
  }
};

void echo(const ScenarioConfig& c) {
  std::cout << "# effective configuration\n" << emit_config(c) << std::flush;
}

std::vector<int> parse_int_list(const std::string& s) {
  std::vector<int> out;
  for (double v : parse_double_list(s)) {
    if (v != std::floor(v)) throw ConfigError("expected integers in '" + s + "'");
    out.push_back(static_cast<int>(v));
  }
  return out;
}

struct RunOutcome {
  std::vector<std::string> files;
  PeakLoad peak;
};

// Runs one scenario into config.output_dir with files prefixed by `prefix`.
RunOutcome run_scenario(const ScenarioConfig& config, const std::string& prefix) {
  const fs::path dir = config.output_dir;
  fs::create_directories(dir);
  Scenario sc(config);
  const std::string name(to_string(config.geometry));
  std::cout << "mesh: " << sc.mesh().n_cells() << " cells, h = " << sc.mesh().h() << " mm, eps = "
            << sc.material().eps << " mm, lambda = " << sc.material().lambda << " kN/mm^2, " << sc.dofs().n_dofs()
            << " dofs, linear solver " << LinearSolver::backend() << "\n";

  RunOutcome outcome;
  std::set<std::size_t> written;
  auto snapshot = [&](const SystemState& st, int step) {
    const std::string file = prefix + name + "_" + std::to_string(step) + ".vtk";
    std::ofstream out(dir / file);
    write_vtk(out, sc, st);
    outcome.files.push_back(file);
  };
  auto due = [&](double t) {
    bool any = false;
    for (std::size_t i = 0; i < config.snapshots.size(); ++i)
      if (!written.count(i) && config.snapshots[i] <= t + 1e-12) {
        written.insert(i);
        any = true;
      }
    return any;
  };
  if (due(0.0)) snapshot(sc.initial_state(), 0);
  sc.set_step_callback([&](const Scenario&, const SystemState& st, const StepRecord& rec, const LoadDisplacementRecord& r) {
    if (due(rec.time)) snapshot(st, rec.step);
    if (rec.step % 50 == 0 || rec.substepped)
      std::cout << "step " << rec.step << " t = " << r.time << " Fx = " << r.fx << " Fy = " << r.fy
                << " newton = " << rec.newton_iterations << (rec.substepped ? " (two half steps)" : "") << "\n";
    return true;
  });

  auto flush = [&] {
    const std::string csv = prefix + name + "_load_displacement.csv";
    const std::string log = prefix + name + "_newton.csv";
    {
      std::ofstream out(dir / csv);
      write_load_csv(out, sc.history());
    }
    {
      std::ofstream out(dir / log);
      write_convergence_log(out, sc.history(), sc.newton_logs());
    }
    outcome.files.push_back(csv);
    outcome.files.push_back(log);
  };
  try {
    sc.run();
  } catch (...) {
    flush();
    throw;
  }
  flush();
  outcome.peak = peak_load(config.geometry, sc.history());
  return outcome;
}

int finish(const fs::path& dir, RunManifest manifest, const std::vector<std::string>& files, const std::string& status) {
  manifest.finished = utc_timestamp();
  manifest.status = status;
  fs::create_directories(dir);
  write_manifest(dir, manifest, files);
  return 0;
}

RunManifest start_manifest(const std::string& command, const std::string& config) {
  RunManifest m;
  m.command = command;
  m.config = config;
  m.version = std::string(version());
  m.started = utc_timestamp();
  return m;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Phase-field brittle fracture with a mixed displacement-pressure formulation"};
  app.require_subcommand(1);

  ScenarioFlags run_flags;
  auto* run = app.add_subcommand("run", "run the shear or L-panel scenario");
  run_flags.add(run);

  ScenarioFlags nu_flags;
  std::string nus = "0.3,0.45,0.49";
  auto* sweep_nu = app.add_subcommand("sweep-nu", "rerun a scenario over Poisson ratios");
  nu_flags.add(sweep_nu);
  sweep_nu->add_option("--nus", nus, "comma-separated Poisson ratios");

  ScenarioFlags ref_flags;
  std::string levels = "1,2,3";
  auto* sweep_ref = app.add_subcommand("sweep-refine", "rerun a scenario over refinement levels");
  ref_flags.add(sweep_ref);
  sweep_ref->add_option("--levels", levels, "comma-separated refinement levels");

  std::string pairing = "both", sizes = "2,4,8", infsup_dir = "output";
  auto* infsup = app.add_subcommand("infsup", "discrete inf-sup constants on unit-square meshes");
  infsup->add_option("--pairing", pairing, "Q2Q1 | Q1Q1 | both");
  infsup->add_option("--sizes", sizes, "cells per side, comma-separated");
  infsup->add_option("--output-dir", infsup_dir, "directory for infsup.csv");

  std::string lock_nus = "0.3,0.4999", lock_dir = "output";
  int lock_base = 8, lock_levels = 3;
  auto* locking = app.add_subcommand("locking", "volume-locking study with a divergence-free solution");
  locking->add_option("--nus", lock_nus, "comma-separated Poisson ratios");
  locking->add_option("--base", lock_base, "cells per side of the coarsest mesh");
  locking->add_option("--refinements", lock_levels, "number of uniform refinements");
  locking->add_option("--output-dir", lock_dir, "directory for locking.csv");

  std::string conv_method = "all", conv_dir = "output";
  double conv_nu = 0.3;
  int conv_base = 4, conv_levels = 3;
  auto* convergence = app.add_subcommand("convergence", "manufactured-solution convergence of the elasticity solvers");
  convergence->add_option("--method", conv_method, "primal-q1 | primal-q2 | mixed-q2q1 | all");
  convergence->add_option("--nu", conv_nu, "Poisson ratio");
  convergence->add_option("--base", conv_base, "cells per side of the coarsest mesh");
  convergence->add_option("--refinements", conv_levels, "number of uniform refinements");
  convergence->add_option("--output-dir", conv_dir, "directory for convergence.csv");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  std::string command;
  for (int i = 0; i < argc; ++i) command += (i ? " " : "") + std::string(argv[i]);

  fs::path out_dir;
  try {
    if (*run) {
      const ScenarioConfig c = run_flags.resolve();
      echo(c);
      out_dir = c.output_dir;
      RunManifest m = start_manifest(command, emit_config(c));
      fs::create_directories(out_dir);
      write_file_atomic(out_dir / "config.txt", emit_config(c));
      std::vector<std::string> files{"config.txt"};
      try {
        const RunOutcome r = run_scenario(c, "");
        files.insert(files.end(), r.files.begin(), r.files.end());
        std::cout << "peak load " << r.peak.value << " kN at step " << r.peak.step << " (t = " << r.peak.time << ")\n";
        return finish(out_dir, m, files, "ok");
      } catch (const NonConvergence& e) {
        std::cerr << "solver failure at step " << e.step() << " (t = " << e.time() << "): " << e.what() << "\n";
        std::string base(to_string(c.geometry));
        files.push_back(base + "_load_displacement.csv");
        files.push_back(base + "_newton.csv");
        finish(out_dir, m, files, "solver failure at step " + std::to_string(e.step()));
        return kExitSolver;
      }
    }

    if (*sweep_nu || *sweep_ref) {
      const bool by_nu = sweep_nu->parsed();
      const ScenarioConfig base = (by_nu ? nu_flags : ref_flags).resolve();
      echo(base);
      out_dir = base.output_dir;
      RunManifest m = start_manifest(command, emit_config(base));
      std::vector<std::string> files;
      std::vector<std::pair<double, PeakLoad>> rows;
      const std::vector<double> values = by_nu ? parse_double_list(nus) : std::vector<double>{};
      const std::vector<int> lv = by_nu ? std::vector<int>{} : parse_int_list(levels);
      const std::size_t count = by_nu ? values.size() : lv.size();
      for (std::size_t i = 0; i < count; ++i) {
        ScenarioConfig c = base;
        std::string prefix;
        if (by_nu) {
          c.nu = values[i];
          if (c.nu == 0.0 && is_mixed(c.mode.kind)) {
            std::cerr << "warning: nu = 0 gives lambda = 0, falling back to standard-q2q1\n";
            c.mode.kind = FormulationKind::StandardQ2Q1;
          }
          prefix = "nu" + format_double(c.nu) + "_";
        } else {
          c.refinements = lv[i];
          prefix = "ref" + std::to_string(c.refinements) + "_";
        }
        try {
          c.validate();
        } catch (const std::invalid_argument& e) {
          throw ConfigError(e.what());
        }
        std::cout << "== " << prefix.substr(0, prefix.size() - 1) << "\n";
        try {
          const RunOutcome r = run_scenario(c, prefix);
          files.insert(files.end(), r.files.begin(), r.files.end());
          rows.emplace_back(by_nu ? c.nu : c.refinements, r.peak);
        } catch (const NonConvergence& e) {
          std::cerr << "solver failure at step " << e.step() << " (t = " << e.time() << "): " << e.what() << "\n";
          finish(out_dir, m, files, "solver failure at step " + std::to_string(e.step()));
          return kExitSolver;
        }
      }
      const std::string summary = by_nu ? "sweep_nu.csv" : "sweep_refine.csv";
      {
        std::ofstream out(fs::path(out_dir) / summary);
        write_sweep_csv(out, by_nu ? "nu" : "refinements", rows);
      }
      files.push_back(summary);
      for (const auto& [v, p] : rows) std::cout << v << ": peak " << p.value << " kN at step " << p.step << "\n";
      return finish(out_dir, m, files, "ok");
    }

    if (*infsup) {
      out_dir = infsup_dir;
      RunManifest m = start_manifest(command, "pairing = " + pairing + "\nsizes = " + sizes + "\n");
      std::vector<Pairing> pairings;
      if (pairing == "Q2Q1" || pairing == "both") pairings.push_back(Pairing::Q2Q1);
      if (pairing == "Q1Q1" || pairing == "both") pairings.push_back(Pairing::Q1Q1);
      if (pairings.empty()) throw ConfigError("unknown pairing '" + pairing + "' (Q2Q1, Q1Q1, both)");
      std::vector<InfSupReport> reports;
      for (Pairing p : pairings) reports.push_back(infsup_study(p, parse_int_list(sizes)));
      fs::create_directories(out_dir);
      {
        std::ofstream out(out_dir / "infsup.csv");
        write_infsup_csv(out, reports);
      }
      write_infsup_csv(std::cout, reports);
      return finish(out_dir, m, {"infsup.csv"}, "ok");
    }

    if (*locking) {
      out_dir = lock_dir;
      RunManifest m = start_manifest(command, "nus = " + lock_nus + "\nbase = " + std::to_string(lock_base) +
                                                  "\nrefinements = " + std::to_string(lock_levels) + "\n");
      const std::vector<double> values = parse_double_list(lock_nus);
      for (double v : values) lame_from_poisson(v, 1.0);
      const auto tables = locking_study(values, lock_base, lock_levels);
      fs::create_directories(out_dir);
      {
        std::ofstream out(out_dir / "locking.csv");
        write_convergence_csv(out, tables);
      }
      write_convergence_csv(std::cout, tables);
      if (values.size() >= 2)
        for (std::size_t i = 0; i + values.size() <= tables.size(); i += values.size())
          std::cout << tables[i].method << ": locking ratio (nu = " << values.back() << " vs " << values.front()
                    << ") = " << locking_ratio(tables[i + values.size() - 1], tables[i]) << "\n";
      return finish(out_dir, m, {"locking.csv"}, "ok");
    }

    if (*convergence) {
      out_dir = conv_dir;
      RunManifest m = start_manifest(command, "method = " + conv_method + "\nnu = " + format_double(conv_nu) + "\n");
      lame_from_poisson(conv_nu, 1.0);
      std::vector<LockingMethod> methods;
      for (LockingMethod lm : {LockingMethod::PrimalQ1, LockingMethod::PrimalQ2, LockingMethod::MixedQ2Q1})
        if (conv_method == "all" || conv_method == to_string(lm)) methods.push_back(lm);
      if (methods.empty()) throw ConfigError("unknown method '" + conv_method + "'");
      std::vector<ConvergenceTable> tables;
      for (LockingMethod lm : methods) tables.push_back(convergence_study(lm, conv_nu, conv_base, conv_levels));
      fs::create_directories(out_dir);
      {
        std::ofstream out(out_dir / "convergence.csv");
        write_convergence_csv(out, tables);
      }
      write_convergence_csv(std::cout, tables);
      return finish(out_dir, m, {"convergence.csv"}, "ok");
    }
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const NonConvergence& e) {
    std::cerr << "solver failure at step " << e.step() << " (t = " << e.time() << "): " << e.what() << "\n";
    return kExitSolver;
  } catch (const SingularMatrix& e) {
    std::cerr << "solver failure: " << e.what() << "\n";
    return kExitSolver;
  } catch (const SingularSystem& e) {
    std::cerr << "solver failure: " << e.what() << "\n";
    return kExitSolver;
  }
  return 0;
}
