#pragma once

#include <string>
#include <vector>

#include "propsim/sim.hpp"

namespace propsim {

/// Reference joint trajectory (plain numbers, e.g. loaded from CSV).
struct RefTrajectory {
  double fps = 60.0;
  std::vector<std::string> channels;
  std::vector<std::vector<double>> frames;

  long frame_count() const { return static_cast<long>(frames.size()); }
};

RefTrajectory strip_gradients(const Trajectory& t);

struct LossOptions {
  // Scale each channel by the reference RMS so radians and meters compare on
  // an even footing. Channels with near-zero RMS fall back to scale 1.
  bool normalize = false;
  // Error out on frame-count mismatch instead of truncating to the overlap.
  bool strict = false;
  // Supervision mask: compare only these channels. Empty means the channel
  // lists must match exactly and every channel is supervised. A masked
  // channel missing on either side is an error naming the channel.
  std::vector<std::string> channels;
};

/// Loss assigned to an evaluation whose simulation diverged; optimizers
/// treat such evaluations as arbitrarily bad instead of aborting.
inline constexpr double kDivergedLoss = 1e12;

/// Mean squared error over all frames and channels, differentiable in
/// whatever parameters the simulated trajectory carries.
DScalar loss_mse(const Trajectory& sim, const RefTrajectory& ref,
                 const LossOptions& opts = {});

/// One identifiable scalar. Bounds are enforced by clamping in log space, so
/// lower must be positive.
struct ParamSpec {
  std::string name;  // object.mass | ball.mass | material.k_mu | material.k_lambda
  double init = 1.0;
  double lower = 1e-6;
  double upper = 1e6;

  void validate() const;
};

/// Known parameter names, for CLI help and validation.
const std::vector<std::string>& known_param_names();

/// Installs parameter values into a scenario copy. Values may be active
/// duals (for gradients) or plain values.
void apply_params(Scenario* sc, const std::vector<ParamSpec>& specs,
                  const std::vector<DScalar>& values);

/// Objective value at theta (no gradient bookkeeping).
double loss_value(const Scenario& base, const RefTrajectory& ref,
                  const std::vector<ParamSpec>& specs,
                  const std::vector<double>& theta, const LossOptions& opts);

/// Objective and d(loss)/d(theta) via forward-mode duals.
std::pair<double, std::vector<double>> loss_and_grad(
    const Scenario& base, const RefTrajectory& ref,
    const std::vector<ParamSpec>& specs, const std::vector<double>& theta,
    const LossOptions& opts);

struct OptimConfig {
  int max_iters = 100;
  double lr0 = 0.01;   // Adam step size, annealed by cosine down to lr_min
  double lr_min = 0.0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double ftol = 1e-12;  // relative improvement below this counts as stalled
  double gtol = 1e-10;  // stop when the gradient inf-norm drops below this
  int patience = 10;    // stalled iterations tolerated before stopping
  int starts = 1;       // multi-start count, log-spaced around init
  double start_span = 2.0;  // orders of magnitude covered by the starts
  // Explicit start points (one vector of parameter values per restart).
  // When non-empty this overrides `starts`/`start_span`; values outside the
  // bounds (including 0) are clamped into them.
  std::vector<std::vector<double>> start_values;

  void validate() const;
};

struct IterRecord {
  int iter = 0;
  double loss = 0.0;
  double lr = 0.0;
  long evals = 0;  // cumulative objective evaluations when recorded
  std::vector<double> params;
};

/// Per-restart outcome, reported even when a restart fails.
struct StartSummary {
  int index = 0;
  std::vector<double> init;
  std::vector<double> params;
  double loss = 0.0;
  int iterations = 0;
  bool failed = false;    // threw, or every evaluation diverged
  std::string note;
  std::vector<IterRecord> history;
};

struct CalibrationResult {
  std::vector<double> params;
  double loss = 0.0;
  int iterations = 0;
  int best_start = -1;
  long evaluations = 0;  // simulation runs spent in total
  bool converged = false;
  double wall_time_s = 0.0;
  std::vector<IterRecord> history;  // trace of the winning start
  std::vector<StartSummary> starts;
};

/// Every restart of a calibration failed (diverged or threw).
class AllRestartsFailed : public Error {
 public:
  explicit AllRestartsFailed(int n_starts)
      : Error("calibration failed: all " + std::to_string(n_starts) +
              " restarts diverged") {}
};

/// Adam on log-parameters with cosine-annealed step size. With starts > 1
/// the initial guesses are log-spaced around each spec's init and runs are
/// spread over PROPSIM_THREADS worker threads; the winner is the lowest
/// final loss with start index breaking ties, so the result does not depend
/// on the thread count.
CalibrationResult calibrate(const Scenario& base, const RefTrajectory& ref,
                            const std::vector<ParamSpec>& specs,
                            const OptimConfig& cfg,
                            const LossOptions& loss_opts = {});

/// Gradient verification: forward-mode tangents against central finite
/// differences with a relative step.
struct GradCheckEntry {
  std::string name;
  double analytic = 0.0;
  double numeric = 0.0;
  double rel_error = 0.0;  // |a - n| / max(|a|, |n|, 1e-12)
};

std::vector<GradCheckEntry> gradient_check(const Scenario& base,
                                           const RefTrajectory& ref,
                                           const std::vector<ParamSpec>& specs,
                                           const std::vector<double>& theta,
                                           const LossOptions& opts = {},
                                           double fd_rel = 1e-5);

/// Worker thread count from PROPSIM_THREADS (default 1, clamped to [1, 64]).
int thread_count_from_env();

}  // namespace propsim
