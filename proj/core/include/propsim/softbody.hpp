#pragma once

#include <array>
#include <vector>

#include "propsim/contact.hpp"

namespace propsim {

/// Stable Neo-Hookean material. k_mu and k_lambda are the Lame moduli and
/// are differentiable so they can be identified; density stays a plain
/// constant (node masses are fixed by the rest shape).
struct Material {
  DScalar k_mu{1000.0};
  DScalar k_lambda{1000.0};
  double density = 1000.0;

  void validate() const {
    if (k_mu.value() <= 0.0) throw Error("k_mu must be positive");
    if (k_lambda.value() < 0.0) throw Error("k_lambda must be non-negative");
    if (density <= 0.0) throw Error("density must be positive");
  }
};

/// Tetrahedral mesh in its rest configuration. finalize() bakes the
/// quantities the force computation needs: per-tet rest volume, the inverse
/// rest shape matrix, and per-node volume shares for mass lumping.
struct TetMesh {
  std::vector<Vec3r> rest_positions;
  std::vector<std::array<int, 4>> tets;

  // Derived by finalize():
  std::vector<double> rest_volume;   // per tet
  std::vector<Mat3r> dm_inv;         // per tet
  std::vector<double> node_volume;   // per node, quarter-volume lumping
  double total_volume = 0.0;

  void finalize();
  int node_count() const { return static_cast<int>(rest_positions.size()); }
  int tet_count() const { return static_cast<int>(tets.size()); }
};

/// Regular hex grid of nx*ny*nz cells with spacing h, lower corner at
/// origin, each cell split into five tetrahedra. Neighboring cells use
/// mirrored splits (checkerboard parity) so shared faces agree.
TetMesh hex_to_tets(int nx, int ny, int nz, double h,
                    const Vec3r& origin = Vec3r(0, 0, 0));

struct SoftState {
  std::vector<DVec3> x;
  std::vector<DVec3> v;

  static SoftState rest(const TetMesh& mesh);
};

/// Deformation gradient of one tet: F = Ds * Dm^-1.
DMat3 deformation_gradient(const TetMesh& mesh, const std::vector<DVec3>& x,
                           int tet);

/// Stable Neo-Hookean energy density Psi(F) in Pa.
DScalar neo_hookean_energy(const DMat3& f, const Material& mat);

/// Total elastic energy of the mesh (J).
DScalar elastic_energy(const TetMesh& mesh, const std::vector<DVec3>& x,
                       const Material& mat);

/// Accumulates -dE/dx into *force (resized and zeroed by the caller or
/// appended onto existing content). Throws InvertedElementError when any
/// element reaches det F <= 0.
void nodal_forces(const TetMesh& mesh, const std::vector<DVec3>& x,
                  const Material& mat, std::vector<DVec3>* force);

/// Contacts of one mesh node (a zero-radius point) against a rigid surface.
/// Supported shapes: Plane, Box (interior walls), Pad (one-sided rectangle,
/// local +z normal faces the object).
std::vector<ContactPoint> soft_rigid_contact(const DVec3& node_x,
                                             const DVec3& node_v,
                                             const Shape& shape,
                                             const ShapeState& state);

/// Rigid surface the soft body can touch during a step.
struct SoftSurface {
  Shape shape;
  ShapeState state;
};

/// One semi-implicit Euler step of the free soft body: elastic + gravity +
/// contact forces, v += dt a, then x += dt v. Pinned nodes do not move.
/// When reactions is non-null it must have one entry per surface; the
/// equal-and-opposite contact wrench (world frame, about the surface's
/// frame origin) is accumulated there.
void soft_step(const TetMesh& mesh, const Material& mat,
               const ContactParams& contact,
               const std::vector<SoftSurface>& surfaces, const Vec3r& gravity,
               double dt, SoftState* state,
               const std::vector<int>& pinned = {},
               std::vector<SpatialVec>* reactions = nullptr);

}  // namespace propsim
