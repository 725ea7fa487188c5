#include "propsim/sysid.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <thread>

namespace propsim {
namespace {

double channel_scale(const RefTrajectory& ref, size_t c) {
  double sum = 0.0;
  for (const auto& f : ref.frames) sum += f[c] * f[c];
  const double rms = std::sqrt(sum / std::max<size_t>(ref.frames.size(), 1));
  return rms > 1e-12 ? rms : 1.0;
}

int find_channel(const std::vector<std::string>& channels,
                 const std::string& name, const char* side) {
  for (size_t i = 0; i < channels.size(); ++i)
    if (channels[i] == name) return static_cast<int>(i);
  throw Error("supervision channel '" + name + "' missing from the " +
              side + " trajectory");
}

}  // namespace

RefTrajectory strip_gradients(const Trajectory& t) {
  RefTrajectory r;
  r.fps = t.fps;
  r.channels = t.channels;
  r.frames.reserve(t.frames.size());
  for (const auto& f : t.frames) {
    std::vector<double> row;
    row.reserve(f.size());
    for (const DScalar& v : f) row.push_back(v.value());
    r.frames.push_back(std::move(row));
  }
  return r;
}

DScalar loss_mse(const Trajectory& sim, const RefTrajectory& ref,
                 const LossOptions& opts) {
  // Columns to compare: (sim index, ref index) per supervised channel.
  std::vector<std::pair<int, int>> cols;
  if (opts.channels.empty()) {
    if (sim.channels != ref.channels)
      throw Error("trajectory channels do not match the reference");
    for (size_t c = 0; c < sim.channels.size(); ++c)
      cols.emplace_back(static_cast<int>(c), static_cast<int>(c));
  } else {
    for (const std::string& name : opts.channels)
      cols.emplace_back(find_channel(sim.channels, name, "simulated"),
                        find_channel(ref.channels, name, "reference"));
  }
  if (std::abs(sim.fps - ref.fps) > 1e-9 * std::max(sim.fps, ref.fps))
    throw Error("trajectory frame rates differ: " + std::to_string(sim.fps) +
                " vs " + std::to_string(ref.fps));
  long frames = std::min(sim.frame_count(), ref.frame_count());
  if (opts.strict && sim.frame_count() != ref.frame_count())
    throw Error("frame counts differ: " + std::to_string(sim.frame_count()) +
                " vs " + std::to_string(ref.frame_count()));
  if (frames == 0) throw Error("no frames to compare");
  if (cols.empty()) throw Error("no channels to compare");

  std::vector<double> inv_scale(cols.size(), 1.0);
  if (opts.normalize)
    for (size_t c = 0; c < cols.size(); ++c)
      inv_scale[c] = 1.0 / channel_scale(ref, cols[c].second);

  DScalar acc(0.0);
  for (long f = 0; f < frames; ++f) {
    for (size_t c = 0; c < cols.size(); ++c) {
      const DScalar d =
          (sim.frames[f][cols[c].first] -
           DScalar(ref.frames[f][cols[c].second])) *
          DScalar(inv_scale[c]);
      acc = acc + d * d;
    }
  }
  return acc / DScalar(static_cast<double>(frames * cols.size()));
}

void ParamSpec::validate() const {
  if (name.empty()) throw Error("parameter needs a name");
  const auto& known = known_param_names();
  if (std::find(known.begin(), known.end(), name) == known.end())
    throw Error("unknown parameter '" + name + "'");
  if (lower <= 0.0) throw Error(name + ": lower bound must be positive");
  if (upper <= lower) throw Error(name + ": upper bound must exceed lower");
  if (init < 0.0) throw Error(name + ": initial value must be non-negative");
}

const std::vector<std::string>& known_param_names() {
  static const std::vector<std::string> names = {
      "object.mass", "ball.mass", "material.k_mu", "material.k_lambda"};
  return names;
}

void apply_params(Scenario* sc, const std::vector<ParamSpec>& specs,
                  const std::vector<DScalar>& values) {
  if (specs.size() != values.size())
    throw Error("parameter spec/value count mismatch");
  for (size_t i = 0; i < specs.size(); ++i) {
    const std::string& n = specs[i].name;
    if (n == "object.mass") sc->object.mass = values[i];
    else if (n == "ball.mass") sc->ball.mass = values[i];
    else if (n == "material.k_mu") sc->material.k_mu = values[i];
    else if (n == "material.k_lambda") sc->material.k_lambda = values[i];
    else throw Error("unknown parameter '" + n + "'");
  }
  sc->prepared = false;  // welded copies must pick up the new values
}

namespace {

double run_loss(const Scenario& base, const RefTrajectory& ref,
                const std::vector<ParamSpec>& specs,
                const std::vector<DScalar>& values, const LossOptions& opts,
                std::vector<double>* grad_out, bool* diverged) {
  Scenario sc = base;
  apply_params(&sc, specs, values);
  // Divergence, element inversion, and singular mass matrices are all
  // "this parameter value blew up the simulation": mark and move on.
  auto blown_up = [&]() -> double {
    *diverged = true;
    if (grad_out) grad_out->assign(specs.size(), 0.0);
    return kDivergedLoss;
  };
  try {
    const Trajectory traj = simulate(sc);
    const DScalar loss = loss_mse(traj, ref, opts);
    if (grad_out) *grad_out = extract_grad(loss);
    return loss.value();
  } catch (const DivergenceError&) {
    if (!diverged) throw;
    return blown_up();
  } catch (const InvertedElementError&) {
    if (!diverged) throw;
    return blown_up();
  } catch (const SingularMatrixError&) {
    if (!diverged) throw;
    return blown_up();
  }
}

}  // namespace

double loss_value(const Scenario& base, const RefTrajectory& ref,
                  const std::vector<ParamSpec>& specs,
                  const std::vector<double>& theta, const LossOptions& opts) {
  std::vector<DScalar> values;
  values.reserve(theta.size());
  for (double v : theta) values.push_back(DScalar(v));
  return run_loss(base, ref, specs, values, opts, nullptr, nullptr);
}

std::pair<double, std::vector<double>> loss_and_grad(
    const Scenario& base, const RefTrajectory& ref,
    const std::vector<ParamSpec>& specs, const std::vector<double>& theta,
    const LossOptions& opts) {
  const std::vector<DScalar> values = activate_params(theta);
  std::vector<double> grad;
  const double loss = run_loss(base, ref, specs, values, opts, &grad, nullptr);
  return {loss, grad};
}

void OptimConfig::validate() const {
  if (max_iters < 1) throw Error("max_iters must be >= 1");
  if (lr0 <= 0.0) throw Error("lr0 must be positive");
  if (lr_min < 0.0 || lr_min > lr0) throw Error("lr_min must lie in [0, lr0]");
  if (beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 || beta2 >= 1.0)
    throw Error("Adam betas must lie in [0, 1)");
  if (starts < 1) throw Error("starts must be >= 1");
  if (start_span < 0.0) throw Error("start_span must be non-negative");
  if (patience < 1) throw Error("patience must be >= 1");
}

namespace {

struct StartOutcome {
  double loss = std::numeric_limits<double>::infinity();
  std::vector<double> params;
  int iterations = 0;
  bool converged = false;
  bool any_valid_eval = false;  // at least one non-diverged objective value
  std::string note;
  std::vector<IterRecord> history;
};

// One Adam run in log-parameter space from the given start point.
StartOutcome run_adam(const Scenario& base, const RefTrajectory& ref,
                      const std::vector<ParamSpec>& specs,
                      const OptimConfig& cfg, const LossOptions& loss_opts,
                      std::vector<double> u) {
  const size_t n = specs.size();
  std::vector<double> lo(n), hi(n);
  for (size_t i = 0; i < n; ++i) {
    lo[i] = std::log(specs[i].lower);
    hi[i] = std::log(specs[i].upper);
  }
  std::vector<double> m(n, 0.0), v(n, 0.0), theta(n);
  StartOutcome out;
  int stalled = 0;
  double prev_best = std::numeric_limits<double>::infinity();

  for (int it = 0; it < cfg.max_iters; ++it) {
    for (size_t i = 0; i < n; ++i) theta[i] = std::exp(u[i]);

    std::vector<DScalar> values = activate_params(theta);
    std::vector<double> grad;
    bool diverged = false;
    const double loss =
        run_loss(base, ref, specs, values, loss_opts, &grad, &diverged);
    out.iterations = it + 1;
    out.any_valid_eval = out.any_valid_eval || !diverged;

    const double lr =
        cfg.lr_min + 0.5 * (cfg.lr0 - cfg.lr_min) *
                         (1.0 + std::cos(M_PI * it / cfg.max_iters));
    out.history.push_back({it, loss, lr, it + 1, theta});

    if (loss < out.loss) {
      out.loss = loss;
      out.params = theta;
    }

    // d(loss)/d(u) = d(loss)/d(theta) * theta for u = log(theta).
    double g_inf = 0.0;
    bool g_finite = true;
    for (size_t i = 0; i < n; ++i) {
      grad[i] *= theta[i];
      if (!std::isfinite(grad[i])) g_finite = false;
      g_inf = std::max(g_inf, std::abs(grad[i]));
    }
    if (!diverged && g_finite && g_inf < cfg.gtol) {
      out.converged = true;
      break;
    }
    if (!g_finite) {
      // A non-finite tangent would poison the Adam moments for every later
      // iteration, and the run is deterministic, so stepping again from the
      // same point cannot recover. Stop and report instead.
      out.note = "non-finite gradient";
      break;
    }
    if (prev_best - out.loss < cfg.ftol * std::max(1.0, std::abs(prev_best))) {
      if (++stalled >= cfg.patience) {
        out.converged = true;
        out.note = "stalled";
        break;
      }
    } else {
      stalled = 0;
    }
    prev_best = out.loss;

    const double b1t = 1.0 - std::pow(cfg.beta1, it + 1);
    const double b2t = 1.0 - std::pow(cfg.beta2, it + 1);
    for (size_t i = 0; i < n; ++i) {
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * grad[i];
      v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * grad[i] * grad[i];
      const double step = lr * (m[i] / b1t) / (std::sqrt(v[i] / b2t) + cfg.eps);
      u[i] = std::clamp(u[i] - step, lo[i], hi[i]);
    }
  }
  if (!out.any_valid_eval) out.note = "all evaluations diverged";
  return out;
}

}  // namespace

CalibrationResult calibrate(const Scenario& base, const RefTrajectory& ref,
                            const std::vector<ParamSpec>& specs,
                            const OptimConfig& cfg,
                            const LossOptions& loss_opts) {
  cfg.validate();
  if (specs.empty()) throw Error("no parameters to calibrate");
  for (const auto& s : specs) s.validate();
  const auto t_begin = std::chrono::steady_clock::now();

  // Start points in log space: explicit values when given, otherwise
  // log-spaced offsets around each spec's init. Out-of-bound values
  // (including 0) snap to the bounds so the log chart stays usable.
  int n_starts = cfg.starts;
  std::vector<std::vector<double>> starts_u;
  if (!cfg.start_values.empty()) {
    n_starts = static_cast<int>(cfg.start_values.size());
    for (const auto& sv : cfg.start_values) {
      if (sv.size() != specs.size())
        throw Error("start_values entries must have one value per parameter");
      std::vector<double> u(specs.size());
      for (size_t i = 0; i < specs.size(); ++i)
        u[i] = std::log(std::clamp(sv[i], specs[i].lower, specs[i].upper));
      starts_u.push_back(std::move(u));
    }
  } else {
    starts_u.assign(n_starts, std::vector<double>(specs.size()));
    for (int s = 0; s < n_starts; ++s) {
      const double offset =
          n_starts == 1
              ? 0.0
              : cfg.start_span * (static_cast<double>(s) / (n_starts - 1) - 0.5);
      for (size_t i = 0; i < specs.size(); ++i) {
        const double init =
            std::clamp(specs[i].init, specs[i].lower, specs[i].upper);
        const double seeded = std::clamp(init * std::pow(10.0, offset),
                                         specs[i].lower, specs[i].upper);
        starts_u[s][i] = std::log(seeded);
      }
    }
  }

  std::vector<StartOutcome> outcomes(n_starts);
  auto run_start = [&](int s) {
    try {
      outcomes[s] = run_adam(base, ref, specs, cfg, loss_opts, starts_u[s]);
    } catch (const std::exception& e) {
      // A failed restart is reported in its summary, not fatal.
      outcomes[s].note = e.what();
      outcomes[s].any_valid_eval = false;
      outcomes[s].loss = std::numeric_limits<double>::infinity();
    }
  };
  const int workers = std::min(thread_count_from_env(), std::max(n_starts, 1));
  if (workers <= 1) {
    for (int s = 0; s < n_starts; ++s) run_start(s);
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&, w]() {
        for (int s = w; s < n_starts; s += workers) run_start(s);
      });
    }
    for (auto& t : pool) t.join();
  }

  // Deterministic reduction: lowest loss among restarts that produced at
  // least one valid evaluation wins; lowest start index breaks ties.
  CalibrationResult res;
  res.loss = std::numeric_limits<double>::infinity();
  for (int s = 0; s < n_starts; ++s) {
    const StartOutcome& o = outcomes[s];
    res.evaluations += o.iterations;
    StartSummary summary;
    summary.index = s;
    summary.init.reserve(specs.size());
    for (double u : starts_u[s]) summary.init.push_back(std::exp(u));
    summary.params = o.params;
    summary.loss = o.loss;
    summary.iterations = o.iterations;
    summary.failed = !o.any_valid_eval;
    summary.note = o.note;
    summary.history = o.history;
    res.starts.push_back(std::move(summary));
    if (!o.any_valid_eval) continue;
    if (o.loss < res.loss) {
      res.loss = o.loss;
      res.best_start = s;
    }
  }
  if (res.best_start < 0) throw AllRestartsFailed(n_starts);
  const StartOutcome& best = outcomes[res.best_start];
  res.params = best.params;
  res.iterations = best.iterations;
  res.converged = best.converged;
  res.history = best.history;
  res.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_begin)
          .count();
  return res;
}

std::vector<GradCheckEntry> gradient_check(const Scenario& base,
                                           const RefTrajectory& ref,
                                           const std::vector<ParamSpec>& specs,
                                           const std::vector<double>& theta,
                                           const LossOptions& opts,
                                           double fd_rel) {
  if (specs.size() != theta.size())
    throw Error("gradient_check: theta size mismatch");
  if (fd_rel <= 0.0) throw Error("gradient_check: fd_rel must be positive");
  const auto [loss, grad] = loss_and_grad(base, ref, specs, theta, opts);
  (void)loss;

  std::vector<GradCheckEntry> out;
  for (size_t i = 0; i < specs.size(); ++i) {
    const double h = fd_rel * std::max(std::abs(theta[i]), 1e-8);
    std::vector<double> plus = theta, minus = theta;
    plus[i] += h;
    minus[i] -= h;
    const double fd = (loss_value(base, ref, specs, plus, opts) -
                       loss_value(base, ref, specs, minus, opts)) /
                      (2.0 * h);
    GradCheckEntry e;
    e.name = specs[i].name;
    e.analytic = grad[i];
    e.numeric = fd;
    e.rel_error = std::abs(grad[i] - fd) /
                  std::max({std::abs(grad[i]), std::abs(fd), 1e-12});
    out.push_back(e);
  }
  return out;
}

int thread_count_from_env() {
  const char* env = std::getenv("PROPSIM_THREADS");
  if (!env || !*env) return 1;
  char* end = nullptr;
  const long v = std::strtol(env, &end, 10);
  if (end == env || *end != '\0' || v < 1)
    throw Error("PROPSIM_THREADS must be a positive integer");
  return static_cast<int>(std::min(v, 64L));
}

}  // namespace propsim
