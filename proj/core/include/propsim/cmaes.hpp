#pragma once

#include "propsim/sysid.hpp"

namespace propsim {

/// Covariance matrix adaptation evolution strategy, used as the
/// gradient-free baseline. Searches in log-parameter space; out-of-bound
/// candidates are resampled.
struct CmaesConfig {
  int max_evals = 2000;
  int lambda = 0;       // population size, 0 = 4 + floor(3 ln n)
  double sigma0 = 0.5;  // initial step size in natural-log parameter space
  unsigned seed = 0;
  double ftol = 1e-14;  // stop when the population loss spread drops below

  void validate() const;
};

CalibrationResult calibrate_cmaes(const Scenario& base,
                                  const RefTrajectory& ref,
                                  const std::vector<ParamSpec>& specs,
                                  const CmaesConfig& cfg,
                                  const LossOptions& loss_opts = {});

}  // namespace propsim
