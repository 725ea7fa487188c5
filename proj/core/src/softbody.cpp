#include "propsim/softbody.hpp"

#include <cmath>

namespace propsim {
namespace {

Mat3r shape_matrix(const Vec3r& x0, const Vec3r& x1, const Vec3r& x2,
                   const Vec3r& x3) {
  Mat3r d;
  const Vec3r e1 = x1 - x0, e2 = x2 - x0, e3 = x3 - x0;
  d(0, 0) = e1.x; d(0, 1) = e2.x; d(0, 2) = e3.x;
  d(1, 0) = e1.y; d(1, 1) = e2.y; d(1, 2) = e3.y;
  d(2, 0) = e1.z; d(2, 1) = e2.z; d(2, 2) = e3.z;
  return d;
}

ShapeState point_state(const DVec3& x, const DVec3& v) {
  ShapeState s;
  s.pose.R = promote(Mat3r::identity());
  s.pose.p = x;
  s.twist.ang = DVec3(DScalar(0.0), DScalar(0.0), DScalar(0.0));
  s.twist.lin = v;
  return s;
}

}  // namespace

void TetMesh::finalize() {
  const int n_tet = tet_count();
  const int n_node = node_count();
  rest_volume.assign(n_tet, 0.0);
  dm_inv.assign(n_tet, Mat3r::zero());
  node_volume.assign(n_node, 0.0);
  total_volume = 0.0;
  for (int t = 0; t < n_tet; ++t) {
    for (int v : tets[t]) {
      if (v < 0 || v >= n_node)
        throw Error("tet " + std::to_string(t) + " references node " +
                    std::to_string(v) + " out of range");
    }
    const Mat3r dm =
        shape_matrix(rest_positions[tets[t][0]], rest_positions[tets[t][1]],
                     rest_positions[tets[t][2]], rest_positions[tets[t][3]]);
    const double vol = dm.det() / 6.0;
    if (vol <= 0.0)
      throw Error("rest tet " + std::to_string(t) +
                  " is degenerate or inverted (volume " +
                  std::to_string(vol) + ")");
    rest_volume[t] = vol;
    dm_inv[t] = dm.inverse();
    total_volume += vol;
    for (int v : tets[t]) node_volume[v] += vol / 4.0;
  }
}

TetMesh hex_to_tets(int nx, int ny, int nz, double h, const Vec3r& origin) {
  if (nx < 1 || ny < 1 || nz < 1) throw Error("hex grid needs >= 1 cell per axis");
  if (h <= 0.0) throw Error("hex grid spacing must be positive");
  TetMesh mesh;
  const int sx = nx + 1, sy = ny + 1;
  auto node = [&](int i, int j, int k) { return (k * sy + j) * sx + i; };
  for (int k = 0; k <= nz; ++k)
    for (int j = 0; j <= ny; ++j)
      for (int i = 0; i <= nx; ++i)
        mesh.rest_positions.push_back(
            {origin.x + h * i, origin.y + h * j, origin.z + h * k});

  // Five tets per cell, all positively oriented. Odd-parity cells use the
  // mirrored split so the diagonals of shared faces line up.
  static const int kEven[5][4][3] = {
      {{0, 0, 0}, {1, 1, 0}, {0, 1, 1}, {1, 0, 1}},
      {{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {1, 0, 1}},
      {{0, 0, 0}, {1, 1, 0}, {0, 1, 0}, {0, 1, 1}},
      {{0, 0, 0}, {1, 0, 1}, {0, 1, 1}, {0, 0, 1}},
      {{1, 1, 1}, {1, 1, 0}, {1, 0, 1}, {0, 1, 1}}};
  static const int kOdd[5][4][3] = {
      {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}, {1, 1, 1}},
      {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}},
      {{1, 1, 0}, {0, 1, 0}, {1, 0, 0}, {1, 1, 1}},
      {{1, 0, 1}, {1, 0, 0}, {0, 0, 1}, {1, 1, 1}},
      {{0, 1, 1}, {0, 1, 0}, {1, 1, 1}, {0, 0, 1}}};
  for (int ck = 0; ck < nz; ++ck)
    for (int cj = 0; cj < ny; ++cj)
      for (int ci = 0; ci < nx; ++ci) {
        const bool even = ((ci + cj + ck) % 2) == 0;
        const auto& split = even ? kEven : kOdd;
        for (int t = 0; t < 5; ++t) {
          std::array<int, 4> tet;
          for (int v = 0; v < 4; ++v)
            tet[v] = node(ci + split[t][v][0], cj + split[t][v][1],
                          ck + split[t][v][2]);
          mesh.tets.push_back(tet);
        }
      }
  mesh.finalize();
  return mesh;
}

SoftState SoftState::rest(const TetMesh& mesh) {
  SoftState s;
  s.x.reserve(mesh.rest_positions.size());
  for (const Vec3r& p : mesh.rest_positions) s.x.push_back(promote(p));
  s.v.assign(mesh.rest_positions.size(),
             DVec3(DScalar(0.0), DScalar(0.0), DScalar(0.0)));
  return s;
}

DMat3 deformation_gradient(const TetMesh& mesh, const std::vector<DVec3>& x,
                           int tet) {
  const auto& t = mesh.tets[tet];
  DMat3 ds;
  const DVec3 e1 = x[t[1]] - x[t[0]];
  const DVec3 e2 = x[t[2]] - x[t[0]];
  const DVec3 e3 = x[t[3]] - x[t[0]];
  ds(0, 0) = e1.x; ds(0, 1) = e2.x; ds(0, 2) = e3.x;
  ds(1, 0) = e1.y; ds(1, 1) = e2.y; ds(1, 2) = e3.y;
  ds(2, 0) = e1.z; ds(2, 1) = e2.z; ds(2, 2) = e3.z;
  return ds * promote(mesh.dm_inv[tet]);
}

DScalar neo_hookean_energy(const DMat3& f, const Material& mat) {
  DScalar i_c(0.0);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) i_c = i_c + f(i, j) * f(i, j);
  const DScalar log_j = log(f.det());
  return mat.k_mu * DScalar(0.5) * (i_c - DScalar(3.0)) - mat.k_mu * log_j +
         mat.k_lambda * DScalar(0.5) * log_j * log_j;
}

DScalar elastic_energy(const TetMesh& mesh, const std::vector<DVec3>& x,
                       const Material& mat) {
  DScalar e(0.0);
  for (int t = 0; t < mesh.tet_count(); ++t) {
    const DMat3 f = deformation_gradient(mesh, x, t);
    if (f.det().value() <= 0.0) throw InvertedElementError(t, -1);
    e = e + DScalar(mesh.rest_volume[t]) * neo_hookean_energy(f, mat);
  }
  return e;
}

void nodal_forces(const TetMesh& mesh, const std::vector<DVec3>& x,
                  const Material& mat, std::vector<DVec3>* force) {
  if (static_cast<int>(x.size()) != mesh.node_count())
    throw Error("nodal_forces: node count mismatch");
  if (force->size() != x.size())
    force->assign(x.size(), DVec3(DScalar(0.0), DScalar(0.0), DScalar(0.0)));
  for (int t = 0; t < mesh.tet_count(); ++t) {
    const DMat3 f = deformation_gradient(mesh, x, t);
    const DScalar j = f.det();
    if (j.value() <= 0.0) throw InvertedElementError(t, -1);
    const DMat3 f_inv_t = f.inverse().transpose();
    // First Piola-Kirchhoff stress of the stable Neo-Hookean energy.
    const DMat3 p =
        (f - f_inv_t) * mat.k_mu + f_inv_t * (mat.k_lambda * log(j));
    const DMat3 h =
        p * promote(mesh.dm_inv[t]).transpose() * (DScalar(0.0) - DScalar(mesh.rest_volume[t]));
    const auto& tet = mesh.tets[t];
    DVec3 f0(DScalar(0.0), DScalar(0.0), DScalar(0.0));
    for (int v = 1; v < 4; ++v) {
      const DVec3 fv = h.col(v - 1);
      (*force)[tet[v]] = (*force)[tet[v]] + fv;
      f0 = f0 - fv;
    }
    (*force)[tet[0]] = (*force)[tet[0]] + f0;
  }
}

std::vector<ContactPoint> soft_rigid_contact(const DVec3& node_x,
                                             const DVec3& node_v,
                                             const Shape& shape,
                                             const ShapeState& state) {
  const ShapeState node = point_state(node_x, node_v);
  switch (shape.kind) {
    case Shape::Kind::Box:
      return detect_point_in_box(node, state, shape.half_extents);
    case Shape::Kind::Plane: {
      std::vector<ContactPoint> out;
      const double n_norm = shape.plane_normal.norm();
      if (n_norm <= 0) throw Error("plane normal must be non-zero");
      const DVec3 n = promote(shape.plane_normal * (1.0 / n_norm));
      const DScalar gap = node_x.dot(n) - shape.plane_offset / n_norm;
      if (gap.value() >= 0.0) return out;
      ContactPoint c;
      c.normal = n;
      c.depth = DScalar(0.0) - gap;
      c.point = node_x;
      const DVec3 v_rel = node_v;
      const DScalar vn = v_rel.dot(c.normal);
      c.v_n = c.normal * vn;
      c.v_t = v_rel - c.v_n;
      out.push_back(c);
      return out;
    }
    case Shape::Kind::Pad: {
      std::vector<ContactPoint> out;
      const DVec3 local = state.pose.R.transposed_mul(node_x - state.pose.p);
      if (local.z.value() >= 0.0) return out;
      if (std::abs(local.x.value()) > shape.half_extents.x ||
          std::abs(local.y.value()) > shape.half_extents.y)
        return out;
      ContactPoint c;
      c.normal = state.pose.R.col(2);  // pad face normal, world frame
      c.depth = DScalar(0.0) - local.z;
      c.point = node_x;
      const DVec3 v_rel = node_v - point_velocity(state, node_x);
      const DScalar vn = v_rel.dot(c.normal);
      c.v_n = c.normal * vn;
      c.v_t = v_rel - c.v_n;
      out.push_back(c);
      return out;
    }
    case Shape::Kind::Sphere:
      throw Error("soft_rigid_contact: sphere surfaces are not supported");
  }
  return {};
}

void soft_step(const TetMesh& mesh, const Material& mat,
               const ContactParams& contact,
               const std::vector<SoftSurface>& surfaces, const Vec3r& gravity,
               double dt, SoftState* state, const std::vector<int>& pinned,
               std::vector<SpatialVec>* reactions) {
  if (dt <= 0.0) throw Error("soft_step: dt must be positive");
  mat.validate();
  contact.validate();
  if (reactions && reactions->size() != surfaces.size())
    throw Error("soft_step: reactions size must match surfaces");

  const int n = mesh.node_count();
  std::vector<DVec3> force(n, DVec3(DScalar(0.0), DScalar(0.0), DScalar(0.0)));
  nodal_forces(mesh, state->x, mat, &force);

  const DVec3 g = promote(gravity);
  for (int i = 0; i < n; ++i) {
    const DScalar m(mat.density * mesh.node_volume[i]);
    force[i] = force[i] + g * m;
    for (size_t s = 0; s < surfaces.size(); ++s) {
      const auto contacts = soft_rigid_contact(state->x[i], state->v[i],
                                               surfaces[s].shape,
                                               surfaces[s].state);
      for (const ContactPoint& c : contacts) {
        const ContactForce cf = penalty_force(c, contact);
        force[i] = force[i] + cf.total();
        if (reactions) {
          const WrenchPair w = accumulate_wrench(c, cf, state->x[i],
                                                 surfaces[s].state.pose.p);
          (*reactions)[s].ang = (*reactions)[s].ang + w.on_surface.ang;
          (*reactions)[s].lin = (*reactions)[s].lin + w.on_surface.lin;
        }
      }
    }
  }

  std::vector<bool> is_pinned(n, false);
  for (int p : pinned) {
    if (p < 0 || p >= n) throw Error("pinned node index out of range");
    is_pinned[p] = true;
  }
  for (int i = 0; i < n; ++i) {
    if (is_pinned[i]) {
      state->v[i] = DVec3(DScalar(0.0), DScalar(0.0), DScalar(0.0));
      continue;
    }
    const DScalar inv_m(1.0 / (mat.density * mesh.node_volume[i]));
    state->v[i] = state->v[i] + force[i] * (DScalar(dt) * inv_m);
    state->x[i] = state->x[i] + state->v[i] * DScalar(dt);
  }
}

}  // namespace propsim
