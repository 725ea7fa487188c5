#include "propsim/contact.hpp"

namespace propsim {
namespace {

constexpr double kSlipDeadZone = 1e-9;  // m/s below which friction is zero

// Common case: a point with an optional radius tested against the six
// interior walls of a box. The point is expected inside; crossing a wall by
// more than the radius margin produces one contact per crossed wall.
void point_vs_box_walls(const DVec3& center_world, double radius,
                        const ShapeState& point_state,
                        const ShapeState& box, const Vec3r& half,
                        std::vector<ContactPoint>* out) {
  const DMat3& r_box = box.pose.R;
  const DVec3 local = r_box.transposed_mul(center_world - box.pose.p);
  const double h[3] = {half.x, half.y, half.z};
  const DScalar coord[3] = {local.x, local.y, local.z};
  for (int axis = 0; axis < 3; ++axis) {
    for (int sign = -1; sign <= 1; sign += 2) {
      // Wall plane: sign * x_axis = h. Penetration past it by d > 0.
      const DScalar d = DScalar(sign) * coord[axis] + radius - h[axis];
      if (d.value() <= 0.0) continue;
      DVec3 n_local(0, 0, 0);  // from the wall into the interior
      if (axis == 0) n_local.x = DScalar(-sign);
      if (axis == 1) n_local.y = DScalar(-sign);
      if (axis == 2) n_local.z = DScalar(-sign);
      ContactPoint c;
      c.normal = r_box * n_local;
      c.depth = d;
      c.point = center_world - c.normal * DScalar(radius);
      const DVec3 v_rel =
          point_velocity(point_state, c.point) - point_velocity(box, c.point);
      const DScalar vn = v_rel.dot(c.normal);
      c.v_n = c.normal * vn;
      c.v_t = v_rel - c.v_n;
      out->push_back(c);
    }
  }
}

}  // namespace

std::vector<ContactPoint> detect_sphere_in_box(const ShapeState& sphere,
                                               double radius,
                                               const ShapeState& box,
                                               const Vec3r& half_extents) {
  if (radius <= 0) throw Error("sphere radius must be positive");
  std::vector<ContactPoint> out;
  point_vs_box_walls(sphere.pose.p, radius, sphere, box, half_extents, &out);
  return out;
}

std::vector<ContactPoint> detect_point_in_box(const ShapeState& point,
                                              const ShapeState& box,
                                              const Vec3r& half_extents) {
  std::vector<ContactPoint> out;
  point_vs_box_walls(point.pose.p, 0.0, point, box, half_extents, &out);
  return out;
}

std::vector<ContactPoint> detect_sphere_plane(const ShapeState& sphere,
                                              double radius,
                                              const Vec3r& plane_normal,
                                              double plane_offset) {
  if (radius <= 0) throw Error("sphere radius must be positive");
  const double n_norm = plane_normal.norm();
  if (n_norm <= 0) throw Error("plane normal must be non-zero");
  const Vec3r n = plane_normal * (1.0 / n_norm);
  std::vector<ContactPoint> out;
  const DVec3 nd = promote(n);
  const DScalar gap = sphere.pose.p.dot(nd) - plane_offset / n_norm;
  const DScalar d = DScalar(radius) - gap;
  if (d.value() <= 0.0) return out;
  ContactPoint c;
  c.normal = nd;
  c.depth = d;
  c.point = sphere.pose.p - nd * DScalar(radius);
  const DVec3 v_rel = point_velocity(sphere, c.point);
  const DScalar vn = v_rel.dot(c.normal);
  c.v_n = c.normal * vn;
  c.v_t = v_rel - c.v_n;
  out.push_back(c);
  return out;
}

std::vector<ContactPoint> detect_pad_points(const ShapeState& pad,
                                            const Vec3r& pad_half_extents,
                                            const ShapeState& box,
                                            const Vec3r& box_half_extents) {
  std::vector<ContactPoint> out;
  const double hx = pad_half_extents.x;
  const double hy = pad_half_extents.y;
  const double sample[5][2] = {
      {-hx, -hy}, {hx, -hy}, {hx, hy}, {-hx, hy}, {0.0, 0.0}};
  for (const auto& s : sample) {
    const DVec3 local{DScalar(s[0]), DScalar(s[1]), DScalar(0.0)};
    const DVec3 world = pad.pose.p + pad.pose.R * local;
    point_vs_box_walls(world, 0.0, pad, box, box_half_extents, &out);
  }
  return out;
}

ContactForce penalty_force(const ContactPoint& c, const ContactParams& p) {
  p.validate();
  ContactForce f;
  f.f_n = c.normal * (DScalar(p.k_e) * c.depth) - c.v_n * DScalar(p.k_d);
  if (!p.allow_adhesion && f.f_n.dot(c.normal).value() < 0.0) {
    f.f_n = DVec3(DScalar(0.0), DScalar(0.0), DScalar(0.0));
  }
  // Branch on squared magnitudes before any sqrt: a dual sqrt taken at an
  // exact zero has an unbounded derivative and poisons the tangents, while
  // both the dead zone and the clamped normal force are genuinely constant
  // (zero) in a neighbourhood, so their derivative is zero.
  const DScalar slip2 = c.v_t.squared_norm();
  const DScalar fn2 = f.f_n.squared_norm();
  if (slip2.value() > kSlipDeadZone * kSlipDeadZone && fn2.value() > 0.0) {
    const DScalar slip = sqrt(slip2);
    const DScalar cap = DScalar(p.mu) * sqrt(fn2);
    const DScalar mag = min(DScalar(p.k_f) * slip, cap);
    f.f_t = c.v_t * (DScalar(0.0) - mag / slip);
  } else {
    f.f_t = DVec3(DScalar(0.0), DScalar(0.0), DScalar(0.0));
  }
  return f;
}

WrenchPair accumulate_wrench(const ContactPoint& c, const ContactForce& f,
                             const DVec3& penetrating_origin,
                             const DVec3& surface_origin) {
  const DVec3 total = f.total();
  WrenchPair w;
  w.on_penetrating.lin = total;
  w.on_penetrating.ang = (c.point - penetrating_origin).cross(total);
  w.on_surface.lin = DVec3(DScalar(0.0), DScalar(0.0), DScalar(0.0)) - total;
  w.on_surface.ang =
      (c.point - surface_origin).cross(w.on_surface.lin);
  return w;
}

}  // namespace propsim
