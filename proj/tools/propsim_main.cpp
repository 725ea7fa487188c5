#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "propsim/io.hpp"

namespace {

// Exit codes: 0 success; 1 unusable input (flags, malformed or inconsistent
// files, invalid step sizes or budgets); 2 numeric failure (simulation
// divergence, element inversion, singular dynamics, gradient mismatch);
// 3 every calibration restart diverged.
constexpr int kExitOk = 0;
constexpr int kExitInput = 1;
constexpr int kExitNumeric = 2;
constexpr int kExitAllFailed = 3;

struct GlobalOpts {
  std::string config;
  std::string output;
  unsigned rng_seed = 0;
  bool rng_seed_set = false;
  bool strict = false;
};

void print_warnings(const std::vector<std::string>& warnings) {
  for (const std::string& w : warnings) std::cerr << "warning: " << w << "\n";
}

propsim::ScenarioFile load_config(const GlobalOpts& g) {
  if (g.config.empty())
    throw propsim::Error("--config is required for this command");
  std::vector<std::string> warnings;
  propsim::ScenarioFile file =
      propsim::load_scenario(g.config, g.strict, &warnings);
  print_warnings(warnings);
  return file;
}

propsim::RefTrajectory load_reference(const GlobalOpts& g,
                                      const std::string& explicit_path,
                                      const propsim::ScenarioFile& file) {
  std::string path = explicit_path.empty() ? file.calib.reference : explicit_path;
  if (path.empty())
    throw propsim::Error(
        "no reference trajectory: pass --reference or set calibrate.reference");
  std::vector<std::string> warnings;
  propsim::RefTrajectory ref = propsim::load_trajectory_csv(
      path, file.scenario.config.fps, g.strict, &warnings);
  print_warnings(warnings);
  return ref;
}

// "name=value" overrides for the known scenario parameters.
void apply_overrides(propsim::Scenario* sc,
                     const std::vector<std::string>& overrides) {
  if (overrides.empty()) return;
  std::vector<propsim::ParamSpec> specs;
  std::vector<propsim::DScalar> values;
  for (const std::string& kv : overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0)
      throw propsim::Error("--param expects name=value, got '" + kv + "'");
    propsim::ParamSpec spec;
    spec.name = kv.substr(0, eq);
    const auto& known = propsim::known_param_names();
    if (std::find(known.begin(), known.end(), spec.name) == known.end())
      throw propsim::Error("--param: unknown parameter '" + spec.name + "'");
    const std::string vs = kv.substr(eq + 1);
    char* end = nullptr;
    const double v = std::strtod(vs.c_str(), &end);
    if (end == vs.c_str() || *end != '\0' || !std::isfinite(v) || v < 0.0)
      throw propsim::Error("--param: '" + vs + "' is not a non-negative number");
    specs.push_back(spec);
    values.emplace_back(v);
  }
  propsim::apply_params(sc, specs, values);
}

int run_simulate(const GlobalOpts& g, const std::vector<std::string>& overrides) {
  propsim::ScenarioFile file = load_config(g);
  propsim::Scenario& sc = file.scenario;
  apply_overrides(&sc, overrides);
  if (!sc.prepared) sc.prepare();

  const double e0 = propsim::energy_probe(sc, propsim::initial_state(sc)).total();
  propsim::CoupledState final_state;
  const propsim::Trajectory traj = propsim::simulate(sc, &final_state);
  const double e1 = propsim::energy_probe(sc, final_state).total();

  std::printf("simulate %s: %ld frames, %zu channels, energy drift %.6e J "
              "(%.9g -> %.9g J)\n",
              sc.name.c_str(), traj.frame_count(), traj.channels.size(),
              e1 - e0, e0, e1);
  const std::string out = g.output.empty() ? "trajectory.csv" : g.output;
  propsim::save_trajectory_csv(out, traj);
  std::printf("wrote %s\n", out.c_str());
  return kExitOk;
}

nlohmann::json params_json(const std::vector<propsim::ParamSpec>& specs,
                           const std::vector<double>& values) {
  if (values.size() != specs.size()) return nullptr;
  nlohmann::json j = nlohmann::json::object();
  for (size_t i = 0; i < specs.size(); ++i) j[specs[i].name] = values[i];
  return j;
}

void write_history_csv(const std::string& path,
                       const std::vector<propsim::ParamSpec>& specs,
                       const std::vector<propsim::IterRecord>& history) {
  std::ofstream out(path);
  if (!out) throw propsim::Error("cannot write " + path);
  out << "iter,loss,step_size,evals";
  for (const auto& s : specs) out << "," << s.name;
  out << "\n";
  for (const auto& h : history) {
    out << h.iter << "," << propsim::format_double(h.loss) << ","
        << propsim::format_double(h.lr) << "," << h.evals;
    for (double p : h.params) out << "," << propsim::format_double(p);
    out << "\n";
  }
  if (!out) throw propsim::Error("failed while writing " + path);
}

void write_calibration_outputs(const std::string& dir,
                               const propsim::CalibrationResult& res,
                               const std::vector<propsim::ParamSpec>& specs,
                               const std::string& method) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw propsim::Error("cannot create directory " + dir);

  nlohmann::json j;
  j["method"] = method;
  j["loss"] = res.loss;
  j["iterations"] = res.iterations;
  j["evaluations"] = res.evaluations;
  j["converged"] = res.converged;
  j["best_start"] = res.best_start;
  j["wall_time_s"] = res.wall_time_s;
  j["params"] = params_json(specs, res.params);
  j["starts"] = nlohmann::json::array();
  for (const auto& s : res.starts) {
    nlohmann::json js;
    js["index"] = s.index;
    js["init"] = params_json(specs, s.init);
    js["params"] = params_json(specs, s.params);
    js["loss"] = s.loss;
    js["iterations"] = s.iterations;
    js["failed"] = s.failed;
    js["note"] = s.note;
    j["starts"].push_back(std::move(js));
  }
  const std::string result_path = (fs::path(dir) / "result.json").string();
  std::ofstream out(result_path);
  if (!out) throw propsim::Error("cannot write " + result_path);
  out << j.dump(2) << "\n";
  if (!out) throw propsim::Error("failed while writing " + result_path);

  if (res.starts.empty()) {
    write_history_csv((fs::path(dir) / "history_0.csv").string(), specs,
                      res.history);
  } else {
    for (const auto& s : res.starts)
      write_history_csv(
          (fs::path(dir) / ("history_" + std::to_string(s.index) + ".csv"))
              .string(),
          specs, s.history);
  }
  std::printf("wrote %s\n", result_path.c_str());
}

int run_calibrate(const GlobalOpts& g, const std::string& method,
                  const std::string& reference, long budget, bool budget_set) {
  propsim::ScenarioFile file = load_config(g);
  if (!file.has_calibration)
    throw propsim::Error(g.config + " has no 'calibrate' block");
  const propsim::RefTrajectory ref = load_reference(g, reference, file);
  if (budget_set && budget < 1)
    throw propsim::Error("--budget must be a positive evaluation count");

  propsim::CalibrationResult res;
  if (method == "adam") {
    propsim::OptimConfig cfg = file.calib.optim;
    if (budget_set) cfg.max_iters = static_cast<int>(budget);
    res = propsim::calibrate(file.scenario, ref, file.calib.params, cfg,
                             file.calib.loss);
  } else {
    propsim::CmaesConfig cfg = file.calib.cmaes;
    if (budget_set) cfg.max_evals = static_cast<int>(budget);
    if (g.rng_seed_set) cfg.seed = g.rng_seed;
    const auto t0 = std::chrono::steady_clock::now();
    res = propsim::calibrate_cmaes(file.scenario, ref, file.calib.params, cfg,
                                   file.calib.loss);
    res.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
  }

  std::printf("calibrate[%s] %s: loss %.6e after %d iterations "
              "(%ld evaluations, %.2f s%s)\n",
              method.c_str(), file.scenario.name.c_str(), res.loss,
              res.iterations, res.evaluations, res.wall_time_s,
              res.converged ? ", converged" : "");
  for (size_t i = 0; i < file.calib.params.size(); ++i)
    std::printf("  %s = %.9g\n", file.calib.params[i].name.c_str(),
                res.params[i]);
  for (const auto& s : res.starts) {
    std::printf("  start %d: init", s.index);
    for (double v : s.init) std::printf(" %.9g", v);
    if (s.failed) {
      std::printf("  FAILED (%s)\n", s.note.empty() ? "diverged" : s.note.c_str());
    } else {
      std::printf("  loss %.6e in %d iters%s%s\n", s.loss, s.iterations,
                  s.note.empty() ? "" : ", ", s.note.c_str());
    }
  }

  const std::string dir = g.output.empty() ? "calibration" : g.output;
  write_calibration_outputs(dir, res, file.calib.params, method);
  return kExitOk;
}

int run_gradcheck(const GlobalOpts& g, const std::string& reference,
                  std::vector<double> at, double fd_rel, double tol) {
  propsim::ScenarioFile file = load_config(g);
  if (!file.has_calibration)
    throw propsim::Error(g.config + " has no 'calibrate' block");
  const propsim::RefTrajectory ref = load_reference(g, reference, file);

  if (at.empty())
    for (const auto& s : file.calib.params) at.push_back(s.init);
  if (at.size() != file.calib.params.size())
    throw propsim::Error("--at needs one value per parameter");

  const auto entries = propsim::gradient_check(
      file.scenario, ref, file.calib.params, at, file.calib.loss, fd_rel);
  bool ok = true;
  for (const auto& e : entries) {
    const bool pass = e.rel_error <= tol;
    ok = ok && pass;
    std::printf("%-18s analytic % .9e  numeric % .9e  rel %.3e  %s\n",
                e.name.c_str(), e.analytic, e.numeric, e.rel_error,
                pass ? "PASS" : "FAIL");
  }
  return ok ? kExitOk : kExitNumeric;
}

// Best-loss-so-far against cumulative objective evaluations.
struct Series {
  std::vector<std::pair<long, double>> points;
  long evals_to_tol = -1;
};

Series best_so_far(const std::vector<propsim::IterRecord>& history, double tol) {
  Series s;
  double best = std::numeric_limits<double>::infinity();
  for (const auto& h : history) {
    best = std::min(best, h.loss);
    s.points.emplace_back(h.evals, best);
    if (s.evals_to_tol < 0 && best <= tol) s.evals_to_tol = h.evals;
  }
  return s;
}

int run_compare(const GlobalOpts& g, const std::string& reference, long budget,
                double tol) {
  propsim::ScenarioFile file = load_config(g);
  if (!file.has_calibration)
    throw propsim::Error(g.config + " has no 'calibrate' block");
  const propsim::RefTrajectory ref = load_reference(g, reference, file);
  if (budget < 1)
    throw propsim::Error("--budget must be a positive evaluation count");

  propsim::OptimConfig adam_cfg = file.calib.optim;
  adam_cfg.max_iters = static_cast<int>(budget);
  const propsim::CalibrationResult adam_res = propsim::calibrate(
      file.scenario, ref, file.calib.params, adam_cfg, file.calib.loss);

  propsim::CmaesConfig cmaes_cfg = file.calib.cmaes;
  cmaes_cfg.max_evals = static_cast<int>(budget);
  if (g.rng_seed_set) cmaes_cfg.seed = g.rng_seed;
  const propsim::CalibrationResult cmaes_res = propsim::calibrate_cmaes(
      file.scenario, ref, file.calib.params, cmaes_cfg, file.calib.loss);

  const Series adam_series = best_so_far(adam_res.history, tol);
  const Series cmaes_series = best_so_far(cmaes_res.history, tol);

  const std::string out = g.output.empty() ? "compare.csv" : g.output;
  std::ofstream csv(out);
  if (!csv) throw propsim::Error("cannot write " + out);
  csv << "method,evals,loss\n";
  for (const auto& [evals, loss] : adam_series.points)
    csv << "adam," << evals << "," << propsim::format_double(loss) << "\n";
  for (const auto& [evals, loss] : cmaes_series.points)
    csv << "cmaes," << evals << "," << propsim::format_double(loss) << "\n";
  if (!csv) throw propsim::Error("failed while writing " + out);

  auto report = [&](const char* method, const propsim::CalibrationResult& res,
                    const Series& series) {
    std::printf("compare %-5s: evaluations %ld, evals_to_tol(%.3e) %ld, "
                "loss %.6e,",
                method, res.evaluations, tol, series.evals_to_tol, res.loss);
    for (size_t i = 0; i < file.calib.params.size(); ++i)
      std::printf(" %s = %.9g", file.calib.params[i].name.c_str(),
                  res.params[i]);
    std::printf("\n");
  };
  report("adam", adam_res, adam_series);
  report("cmaes", cmaes_res, cmaes_series);
  std::printf("wrote %s\n", out.c_str());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"differentiable robot simulation and object property identification"};
  app.require_subcommand(1);
  app.fallthrough(true);

  GlobalOpts g;
  app.add_option("--config", g.config, "scenario JSON file");
  app.add_option("--output", g.output,
                 "output path (CSV file or result directory, per command)");
  app.add_option("--rng-seed", g.rng_seed, "seed for stochastic methods")
      ->each([&](const std::string&) { g.rng_seed_set = true; });
  app.add_flag("--strict", g.strict, "treat recoverable input issues as errors");

  std::vector<std::string> overrides;
  CLI::App* sim = app.add_subcommand("simulate", "run a scenario, write CSV");
  sim->add_option("--param", overrides,
                  "override a parameter, e.g. object.mass=0.05")
      ->delimiter(',');

  std::string method = "adam", reference;
  long budget = 0;
  bool budget_set = false;
  CLI::App* cal = app.add_subcommand("calibrate", "identify parameters");
  cal->add_option("--method", method, "adam or cmaes")
      ->check(CLI::IsMember({"adam", "cmaes"}));
  cal->add_option("--reference", reference, "reference trajectory CSV");
  cal->add_option("--budget", budget, "evaluation budget override")
      ->each([&](const std::string&) { budget_set = true; });

  std::vector<double> at;
  double fd_rel = 1e-5, gtol = 1e-3;
  CLI::App* grad = app.add_subcommand(
      "gradcheck", "verify gradients against finite differences");
  grad->add_option("--reference", reference, "reference trajectory CSV");
  grad->add_option("--at", at, "parameter values to check at")->delimiter(',');
  grad->add_option("--fd-rel", fd_rel, "relative finite-difference step");
  grad->add_option("--tol", gtol, "relative mismatch tolerance");

  long cmp_budget = 2000;
  double cmp_tol = 1e-8;
  CLI::App* cmp = app.add_subcommand(
      "compare", "race gradient-based calibration against CMA-ES");
  cmp->add_option("--reference", reference, "reference trajectory CSV");
  cmp->add_option("--budget", cmp_budget, "evaluation budget per method");
  cmp->add_option("--tol", cmp_tol, "loss threshold for evals-to-tolerance");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInput;
  }

  try {
    if (sim->parsed()) return run_simulate(g, overrides);
    if (cal->parsed())
      return run_calibrate(g, method, reference, budget, budget_set);
    if (grad->parsed()) return run_gradcheck(g, reference, at, fd_rel, gtol);
    if (cmp->parsed()) return run_compare(g, reference, cmp_budget, cmp_tol);
  } catch (const propsim::AllRestartsFailed& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitAllFailed;
  } catch (const propsim::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const propsim::DivergenceError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const propsim::InvertedElementError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const propsim::SingularMatrixError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const propsim::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  }
  return kExitInput;
}
