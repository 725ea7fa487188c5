#pragma once

#include "propsim/linalg.hpp"

namespace propsim {

// Spatial (6D) vectors in Featherstone's convention: angular part first,
// linear part second. Motion vectors are (omega, v-of-frame-origin); force
// vectors are (moment-about-origin, force). Inertias are taken about the
// frame origin in frame coordinates.

struct SpatialVec {
  DVec3 ang, lin;

  static SpatialVec zero() { return {}; }

  SpatialVec operator+(const SpatialVec& o) const { return {ang + o.ang, lin + o.lin}; }
  SpatialVec operator-(const SpatialVec& o) const { return {ang - o.ang, lin - o.lin}; }
  SpatialVec operator-() const { return {-ang, -lin}; }
  SpatialVec operator*(const DScalar& s) const { return {ang * s, lin * s}; }
  SpatialVec& operator+=(const SpatialVec& o) {
    ang += o.ang;
    lin += o.lin;
    return *this;
  }
  SpatialVec& operator-=(const SpatialVec& o) {
    ang -= o.ang;
    lin -= o.lin;
    return *this;
  }
};

inline DScalar dot(const SpatialVec& a, const SpatialVec& b) {
  return a.ang.dot(b.ang) + a.lin.dot(b.lin);
}

/// Motion cross product v x m.
inline SpatialVec cross_motion(const SpatialVec& v, const SpatialVec& m) {
  return {v.ang.cross(m.ang), v.ang.cross(m.lin) + v.lin.cross(m.ang)};
}

/// Force cross product v x* f.
inline SpatialVec cross_force(const SpatialVec& v, const SpatialVec& f) {
  return {v.ang.cross(f.ang) + v.lin.cross(f.lin), v.ang.cross(f.lin)};
}

/// Plucker coordinate transform B<-A, stored as (E, r): E rotates A
/// coordinates into B coordinates, r is the origin of B expressed in A.
struct SpatialTransform {
  DMat3 E = DMat3::identity();
  DVec3 r;

  static SpatialTransform identity() { return {}; }

  /// this = B<-A composed after other = A<-Z, yielding B<-Z.
  SpatialTransform compose(const SpatialTransform& other) const {
    SpatialTransform out;
    out.E = E * other.E;
    out.r = other.r + other.E.transposed_mul(r);
    return out;
  }

  SpatialVec apply_motion(const SpatialVec& v) const {
    return {E * v.ang, E * (v.lin - r.cross(v.ang))};
  }
  SpatialVec apply_force(const SpatialVec& f) const {
    return {E * (f.ang - r.cross(f.lin)), E * f.lin};
  }
  SpatialVec inv_apply_motion(const SpatialVec& v) const {
    const DVec3 ang = E.transposed_mul(v.ang);
    return {ang, E.transposed_mul(v.lin) + r.cross(ang)};
  }
  SpatialVec inv_apply_force(const SpatialVec& f) const {
    const DVec3 lin = E.transposed_mul(f.lin);
    return {E.transposed_mul(f.ang) + r.cross(lin), lin};
  }
};

/// Rigid body inertia about the local frame origin: mass, first mass moment
/// h = m*com, and the rotational inertia about the origin. Kept in this
/// compact form so zero-mass bodies stay well defined.
struct SpatialInertia {
  DScalar m;
  DVec3 h;
  DMat3 I = DMat3::zero();

  static SpatialInertia zero() { return {}; }

  /// From mass, center of mass and inertia about the center of mass.
  static SpatialInertia from_com(const DScalar& mass, const DVec3& com,
                                 const DMat3& inertia_com) {
    SpatialInertia s;
    s.m = mass;
    s.h = com * mass;
    const DMat3 cx = DMat3::skew(com);
    s.I = inertia_com - (cx * cx) * mass;  // parallel axis to the origin
    return s;
  }

  SpatialVec apply(const SpatialVec& v) const {
    return {I * v.ang + h.cross(v.lin), v.lin * m - h.cross(v.ang)};
  }

  SpatialInertia operator+(const SpatialInertia& o) const {
    SpatialInertia s;
    s.m = m + o.m;
    s.h = h + o.h;
    s.I = I + o.I;
    return s;
  }
  SpatialInertia& operator+=(const SpatialInertia& o) { return *this = *this + o; }

  /// Re-expresses this inertia (known in frame B) in frame A, where
  /// x_child = B<-A. Used to accumulate composite inertias up the tree.
  SpatialInertia expressed_in_parent(const SpatialTransform& x_child) const {
    const DMat3& E = x_child.E;
    const DVec3& r = x_child.r;
    SpatialInertia s;
    s.m = m;
    const DVec3 hp = E.transposed_mul(h);
    s.h = hp + r * m;
    const DMat3 rx = DMat3::skew(r);
    const DMat3 hx = DMat3::skew(hp);
    s.I = E.transpose() * I * E - rx * hx - hx * rx - (rx * rx) * m;
    return s;
  }

  /// Dense 6x6 view (angular-before-linear), mostly for tests.
  DenseMat to_matrix() const {
    DenseMat out(6);
    const DMat3 hx = DMat3::skew(h);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        out(i, j) = I(i, j);
        out(i, 3 + j) = hx(i, j);
        out(3 + i, j) = hx(j, i);
        out(3 + i, 3 + j) = (i == j) ? m : DScalar(0.0);
      }
    return out;
  }
};

}  // namespace propsim
