#pragma once

#include <vector>

#include "propsim/articulated.hpp"

namespace propsim {

/// Penalty contact constants. The damped normal force is clamped to be
/// non-adhesive by default: a separating contact whose damping term exceeds
/// the stiffness term produces zero normal force instead of pulling the
/// bodies together. Set allow_adhesion to recover the unclamped law.
struct ContactParams {
  double k_e = 1e4;  // normal stiffness, N/m
  double k_d = 10.0; // normal damping, N s/m
  double k_f = 10.0; // friction stiffness, N s/m
  double mu = 0.5;   // friction coefficient
  bool allow_adhesion = false;

  void validate() const {
    if (k_e < 0 || k_d < 0 || k_f < 0 || mu < 0)
      throw Error("contact params must be non-negative");
    if (mu > 2.0) throw Error("friction coefficient above sanity bound 2");
  }
};

/// One penetrating point. The normal points from the surface into the
/// penetrating body; v_n and v_t split the relative velocity of the
/// penetrating body w.r.t. the surface along and across the normal.
struct ContactPoint {
  DVec3 point;   // world
  DVec3 normal;  // unit, world
  DScalar depth; // > 0
  DVec3 v_n;
  DVec3 v_t;
};

/// Collision primitive attached to a body at a fixed local pose.
struct Shape {
  enum class Kind { Sphere, Box, Plane, Pad };
  Kind kind = Kind::Sphere;
  double radius = 0.0;          // Sphere
  Vec3r half_extents;           // Box (xyz), Pad (xy; normal is local +z)
  Vec3r plane_normal{0, 0, 1};  // Plane
  double plane_offset = 0.0;    // Plane: n . x = offset
};

/// Rigid-body state a shape needs for contact: world pose of the shape frame
/// and the world twist (omega, velocity of the shape-frame origin).
struct ShapeState {
  Pose pose;
  SpatialVec twist;
};

inline DVec3 point_velocity(const ShapeState& s, const DVec3& point) {
  return s.twist.lin + s.twist.ang.cross(point - s.pose.p);
}

/// Contacts of a sphere against the interior walls of a box, one per
/// penetrated wall (up to 6). Exact touching produces no contact.
std::vector<ContactPoint> detect_sphere_in_box(const ShapeState& sphere,
                                               double radius,
                                               const ShapeState& box,
                                               const Vec3r& half_extents);

/// Zero-radius point (pose.p of `point`) against the interior walls of a
/// box. Used for mesh nodes and pad sample points.
std::vector<ContactPoint> detect_point_in_box(const ShapeState& point,
                                              const ShapeState& box,
                                              const Vec3r& half_extents);

/// Sphere against an infinite plane (n . x = offset), plane static in world.
std::vector<ContactPoint> detect_sphere_plane(const ShapeState& sphere,
                                              double radius,
                                              const Vec3r& plane_normal,
                                              double plane_offset);

/// Sample points of a rectangular pad against the interior of a box. Each
/// sample point (corners plus center) that penetrates a wall yields one
/// contact.
std::vector<ContactPoint> detect_pad_points(const ShapeState& pad,
                                            const Vec3r& pad_half_extents,
                                            const ShapeState& box,
                                            const Vec3r& box_half_extents);

struct ContactForce {
  DVec3 f_n;
  DVec3 f_t;
  DVec3 total() const { return f_n + f_t; }
};

/// Penalty force law: f_n = k_e d n - k_d v_n, tangential force capped by
/// the Coulomb limit mu |f_n| and dead-banded below 1e-9 m/s sliding speed.
ContactForce penalty_force(const ContactPoint& c, const ContactParams& p);

/// Equal-and-opposite wrenches (world frame, about each body's origin) from
/// one contact force acting on the penetrating body at the contact point.
struct WrenchPair {
  SpatialVec on_penetrating;
  SpatialVec on_surface;
};

WrenchPair accumulate_wrench(const ContactPoint& c, const ContactForce& f,
                             const DVec3& penetrating_origin,
                             const DVec3& surface_origin);

}  // namespace propsim
