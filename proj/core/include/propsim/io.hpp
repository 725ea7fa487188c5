#pragma once

#include <string>
#include <vector>

#include "propsim/cmaes.hpp"
#include "propsim/sysid.hpp"

namespace propsim {

/// Calibration setup carried by a scenario file's optional "calibrate" block.
struct CalibrationSetup {
  std::vector<ParamSpec> params;
  OptimConfig optim;
  CmaesConfig cmaes;
  LossOptions loss;
  std::string reference;  // trajectory CSV path, resolved next to the file
};

struct ScenarioFile {
  Scenario scenario;
  CalibrationSetup calib;
  bool has_calibration = false;
};

/// Robot model from JSON. In strict mode unknown keys and fixable unit
/// issues (such as a non-unit joint axis) are errors; otherwise they are
/// repaired and reported through *warnings.
KinematicTree load_robot(const std::string& path, bool strict = false,
                         std::vector<std::string>* warnings = nullptr);

/// Scenario from JSON. The "robot" field names a robot JSON file resolved
/// relative to the scenario file's directory.
ScenarioFile load_scenario(const std::string& path, bool strict = false,
                           std::vector<std::string>* warnings = nullptr);

/// Joint trajectory from CSV (header: time,<channel>,...). When the file's
/// native rate differs from target_fps the samples are linearly resampled
/// and a note is appended to *warnings; strict mode errors out instead.
/// Pass target_fps <= 0 to keep the native rate.
RefTrajectory load_trajectory_csv(const std::string& path, double target_fps,
                                  bool strict = false,
                                  std::vector<std::string>* warnings = nullptr);

/// Writes a trajectory as CSV with round-trip-exact (%.17g) values.
void save_trajectory_csv(const std::string& path, const Trajectory& traj);

/// Formats one double with enough digits to round-trip exactly.
std::string format_double(double v);

}  // namespace propsim
