#pragma once

#include <optional>
#include <string>
#include <vector>

#include "propsim/spatial.hpp"

namespace propsim {

enum class JointType { Revolute, Prismatic, Fixed, Free };

/// Degrees of freedom contributed by a joint of the given type.
inline int joint_dofs(JointType t) {
  switch (t) {
    case JointType::Revolute:
    case JointType::Prismatic:
      return 1;
    case JointType::Free:
      return 6;
    default:
      return 0;
  }
}

/// Rigid transform stored as (rotation, translation). World poses use
/// dual-valued entries because configurations depend on the parameters.
struct Pose {
  DMat3 R = DMat3::identity();
  DVec3 p;
};

/// Double-precision pose for rest transforms and shape offsets, which never
/// carry parameter tangents.
struct PoseR {
  Mat3r R = Mat3r::identity();
  Vec3r p;

  PoseR() = default;
  PoseR(const Mat3r& rot, const Vec3r& trans) : R(rot), p(trans) {}

  PoseR compose(const PoseR& inner) const {
    return {R * inner.R, p + R * inner.p};
  }
};

struct Body {
  std::string name;
  DScalar mass;
  DVec3 com;            // in body frame
  DMat3 inertia;        // about the com, body frame
};

struct Joint {
  std::string name;
  JointType type = JointType::Fixed;
  Vec3r axis{0, 0, 1};  // unit, for Revolute/Prismatic
  int parent = -1;      // parent body index, -1 = world
  PoseR rest;           // joint zero frame in the parent frame
  double damping = 0.0; // viscous, per coordinate
  bool locked = false;  // held at locked_q, contributes no coordinates
  double locked_q = 0.0;
};

/// Kinematic tree rooted at the fixed world. Joint i is the inbound joint of
/// body i; parents precede children. finalize() must run after edits.
struct KinematicTree {
  std::vector<Body> bodies;
  std::vector<Joint> joints;
  std::string name;

  int n_dof = 0;
  std::vector<int> dof_start;  // per joint; -1 when the joint has none
  std::vector<int> dof_count;

  void finalize();

  int body_index(const std::string& body_name) const;
  int joint_index(const std::string& joint_name) const;
  /// Coordinate names, one per DoF: the joint name, suffixed .0 .. .5 for
  /// multi-DoF joints.
  std::vector<std::string> dof_names() const;
  /// Index of the joint owning a coordinate.
  int joint_of_dof(int dof) const;
};

struct SimState {
  std::vector<DScalar> q;
  std::vector<DScalar> qdot;
};

struct BodyWrench {
  enum class Frame { World, Body };
  int body = -1;
  SpatialVec w;  // (moment about the body origin, force)
  Frame frame = Frame::World;
};

struct ExternalForces {
  Vec3r gravity{0, 0, -9.81};
  std::vector<BodyWrench> wrenches;
};

/// World pose plus the world-frame twist (omega, velocity of the body-frame
/// origin) of every body.
struct BodyKinematics {
  Pose pose;
  SpatialVec twist;
};

std::vector<Pose> forward_kinematics(const KinematicTree& tree,
                                     const std::vector<DScalar>& q);

std::vector<BodyKinematics> compute_kinematics(const KinematicTree& tree,
                                               const std::vector<DScalar>& q,
                                               const std::vector<DScalar>& qdot);

/// Generalized inertia H(q) by the composite rigid body algorithm.
DenseMat mass_matrix(const KinematicTree& tree, const std::vector<DScalar>& q);

/// Bias forces C(q, qdot, f_ext) by recursive Newton-Euler with qddot = 0;
/// includes gravity, external body wrenches and per-joint viscous damping,
/// so that H qddot + C = tau.
std::vector<DScalar> bias_forces(const KinematicTree& tree,
                                 const std::vector<DScalar>& q,
                                 const std::vector<DScalar>& qdot,
                                 const ExternalForces& ext);

/// qddot = H^-1 (tau - C). A singular H is reported with the offending
/// joint's child body name.
std::vector<DScalar> forward_dynamics(const KinematicTree& tree,
                                      const SimState& state,
                                      const std::vector<DScalar>& tau,
                                      const ExternalForces& ext);

/// Welds an object onto an existing body. DoF count is unchanged; H picks up
/// the combined inertia.
KinematicTree attach_fixed(const KinematicTree& tree, const Body& object,
                           int parent, const PoseR& transform);

/// Newton-Euler acceleration of an unconstrained rigid body, gyroscopic term
/// included. Twist and wrench are world-frame quantities about the body
/// origin; the result is (angular acc, acceleration of the origin point).
SpatialVec free_body_dynamics(const Body& body, const Pose& pose,
                              const SpatialVec& twist, const SpatialVec& wrench,
                              const Vec3r& gravity);

/// Advances positions by one step of q += dt*qdot. Free-joint coordinates
/// (rotation vector + translation) advance along the exponential map, since
/// their velocity coordinates are the child-frame twist.
void integrate_positions(const KinematicTree& tree, std::vector<DScalar>& q,
                         const std::vector<DScalar>& qdot, double dt);

/// Inverse of rotation_exp. Only valid away from rotations of angle pi.
DVec3 rotation_log(const DMat3& R);

}  // namespace propsim
