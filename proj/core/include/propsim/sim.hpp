#pragma once

#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "propsim/softbody.hpp"

namespace propsim {

/// Frame rate, substepping and global physics knobs shared by all scenarios.
struct SimConfig {
  double fps = 60.0;
  int substeps = 16;
  double duration = 2.0;  // seconds
  Vec3r gravity{0.0, 0.0, -9.81};
  ContactParams contact;

  void validate() const {
    if (fps <= 0.0) throw Error("fps must be positive");
    if (substeps < 4 || substeps > 64)
      throw Error("substeps must lie in [4, 64]");
    if (duration <= 0.0) throw Error("duration must be positive");
    contact.validate();
  }
  double frame_dt() const { return 1.0 / fps; }
  double sub_dt() const { return frame_dt() / substeps; }
  long frame_count() const {
    return static_cast<long>(duration * fps + 0.5);
  }
};

/// Per-DoF open-loop drive: tau(t) = offset + amplitude * sin(2 pi f t +
/// phase), gated to the [t_on, t_off) window. The defaults make a constant
/// pulse easy: set offset and t_off only.
struct TorqueTerm {
  double offset = 0.0;
  double amplitude = 0.0;
  double frequency = 0.0;  // Hz
  double phase = 0.0;      // rad
  double t_on = 0.0;       // window start, seconds
  double t_off = std::numeric_limits<double>::infinity();
  double eval(double t) const;
};

struct TorqueSchedule {
  // One list of additive terms per unlocked DoF (multi-phase drives chain
  // terms with disjoint [t_on, t_off) windows). Empty means no drive.
  std::vector<std::vector<TorqueTerm>> per_dof;

  std::vector<DScalar> eval(double t, int n_dof) const;
};

enum class ScenarioKind { RobotOnly, FixedObject, Container, Squeeze };

const char* to_string(ScenarioKind k);

/// Everything one simulation run needs. The differentiable unknowns live in
/// `object.mass`, `ball.mass`, and `material.k_mu`/`k_lambda`; seed them as
/// active duals before calling simulate() to get trajectory gradients.
struct Scenario {
  std::string name;
  ScenarioKind kind = ScenarioKind::RobotOnly;
  KinematicTree robot;
  TorqueSchedule torques;
  SimConfig config;
  std::vector<double> q0;     // initial joint positions (defaults to zero)
  std::vector<double> qdot0;  // initial joint velocities

  // FixedObject and Container: a body welded to `attach_body` at
  // `attach_pose` (object under test, or the container shell).
  std::string attach_body;
  Body object;
  PoseR attach_pose;

  // Container: a free ball inside the welded box.
  Vec3r container_half_extents{0.05, 0.05, 0.05};
  Body ball;
  double ball_radius = 0.01;
  PoseR ball_start;  // world pose of the ball at t = 0
  // Derive ball.inertia from mass and radius (homogeneous sphere) during
  // prepare(), so inertia tracks an identified mass.
  bool ball_solid_sphere = true;

  // Squeeze: two pads (robot bodies) pressing a soft block that rests on a
  // static floor plane at z = floor_offset.
  // Record the object's world position as extra channels obj_x, obj_y,
  // obj_z (Container: ball center; FixedObject: welded body origin).
  bool record_object = false;

  std::string pad_body_a, pad_body_b;
  // In-plane half extents of each pad's contact footprint; the two pads may
  // differ (a full-face pad and a narrow punch respond to different
  // combinations of the material moduli).
  Vec3r pad_half_extents_a{0.02, 0.02, 0.0};
  Vec3r pad_half_extents_b{0.02, 0.02, 0.0};
  int soft_nx = 2, soft_ny = 2, soft_nz = 2;
  double soft_h = 0.01;
  Vec3r soft_origin{0.0, 0.0, 0.0};
  Material material;
  bool soft_floor = true;
  double floor_offset = 0.0;

  // Derived by prepare():
  KinematicTree sim_tree;  // robot plus welded attachment, if any
  int attach_index = -1;   // welded body's index in sim_tree
  int pad_index_a = -1, pad_index_b = -1;
  TetMesh mesh;
  bool prepared = false;

  void prepare();
};

/// Full dynamic state of a scenario between substeps.
struct CoupledState {
  SimState robot;      // follows scenario.sim_tree
  Pose ball_pose;      // Container only
  SpatialVec ball_twist;  // world frame, about the ball origin
  SoftState soft;      // Squeeze only
  double t = 0.0;
  long step_count = 0;
};

CoupledState initial_state(const Scenario& sc);

/// Recorded joint positions, one row per frame including t = 0. Values are
/// dual so parameter gradients survive into the loss.
struct Trajectory {
  double fps = 60.0;
  std::vector<std::string> channels;
  std::vector<std::vector<DScalar>> frames;

  long frame_count() const { return static_cast<long>(frames.size()); }
};

/// Advances one substep of length dt. Throws DivergenceError when any state
/// magnitude leaves the sane range (|q| > 1e3, |qdot| > 1e5, same bounds for
/// object and node states).
void step(const Scenario& sc, double dt, CoupledState* state);

/// Runs the whole schedule and records joint positions at the frame rate.
/// When final is non-null the end state is copied there.
Trajectory simulate(Scenario& sc, CoupledState* final = nullptr);

/// Energy bookkeeping for conservation and dissipation checks.
struct EnergyReport {
  double kinetic = 0.0;
  double gravitational = 0.0;
  double elastic = 0.0;
  double total() const { return kinetic + gravitational + elastic; }
};

EnergyReport energy_probe(const Scenario& sc, const CoupledState& state);

}  // namespace propsim
