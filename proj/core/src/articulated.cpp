#include "propsim/articulated.hpp"

#include <algorithm>
#include <cmath>

namespace propsim {

namespace {

/// Joint transform (child frame from parent frame) and the motion subspace
/// columns, child coordinates. Locked joints behave as Fixed at locked_q.
struct JointCalc {
  SpatialTransform x_up;       // child <- parent
  std::vector<SpatialVec> s;   // one column per DoF
};

SpatialTransform rest_transform(const PoseR& rest) {
  SpatialTransform x;
  x.E = promote(rest.R.transpose());
  x.r = promote(rest.p);
  return x;
}

JointCalc jcalc(const Joint& joint, const DScalar* q) {
  JointCalc jc;
  const SpatialTransform x_t = rest_transform(joint.rest);

  JointType type = joint.type;
  DScalar locked_value(joint.locked_q);
  if (joint.locked && type != JointType::Free) {
    // held coordinate, no DoF
    const DScalar* lq = &locked_value;
    SpatialTransform xj;
    if (type == JointType::Revolute) {
      const DVec3 a = promote(joint.axis);
      xj.E = rotation_exp(a * (-*lq));  // R(a, q)^T = exp(-q [a]x)
    } else if (type == JointType::Prismatic) {
      xj.r = promote(joint.axis) * (*lq);
    }
    jc.x_up = xj.compose(x_t);
    return jc;
  }

  SpatialTransform xj;
  switch (type) {
    case JointType::Fixed:
      break;
    case JointType::Revolute: {
      const DVec3 a = promote(joint.axis);
      xj.E = rotation_exp(a * (-q[0]));
      jc.s.push_back({a, DVec3::zero()});
      break;
    }
    case JointType::Prismatic: {
      const DVec3 a = promote(joint.axis);
      xj.r = a * q[0];
      jc.s.push_back({DVec3::zero(), a});
      break;
    }
    case JointType::Free: {
      const DVec3 phi{q[0], q[1], q[2]};
      const DVec3 p{q[3], q[4], q[5]};
      xj.E = rotation_exp(-phi);  // = R(phi)^T
      xj.r = p;
      // velocity coordinates are the child-frame twist
      for (int k = 0; k < 3; ++k) {
        SpatialVec col;
        col.ang[k] = 1.0;
        jc.s.push_back(col);
      }
      for (int k = 0; k < 3; ++k) {
        SpatialVec col;
        col.lin[k] = 1.0;
        jc.s.push_back(col);
      }
      break;
    }
  }
  jc.x_up = xj.compose(x_t);
  return jc;
}

}  // namespace

void KinematicTree::finalize() {
  const int nb = static_cast<int>(bodies.size());
  if (static_cast<int>(joints.size()) != nb)
    throw Error("tree: joint and body counts differ");
  dof_start.assign(nb, -1);
  dof_count.assign(nb, 0);
  n_dof = 0;
  for (int i = 0; i < nb; ++i) {
    if (joints[i].parent >= i)
      throw Error("tree: body '" + bodies[i].name +
                  "' has parent index " + std::to_string(joints[i].parent) +
                  " >= its own index (not a rooted tree order)");
    if (joints[i].locked) continue;
    const int nd = joint_dofs(joints[i].type);
    if (nd > 0) {
      dof_start[i] = n_dof;
      dof_count[i] = nd;
      n_dof += nd;
    }
  }
}

int KinematicTree::body_index(const std::string& body_name) const {
  for (size_t i = 0; i < bodies.size(); ++i)
    if (bodies[i].name == body_name) return static_cast<int>(i);
  return -1;
}

int KinematicTree::joint_index(const std::string& joint_name) const {
  for (size_t i = 0; i < joints.size(); ++i)
    if (joints[i].name == joint_name) return static_cast<int>(i);
  return -1;
}

std::vector<std::string> KinematicTree::dof_names() const {
  std::vector<std::string> names(static_cast<size_t>(n_dof));
  for (size_t i = 0; i < joints.size(); ++i) {
    if (dof_start[i] < 0) continue;
    if (dof_count[i] == 1) {
      names[dof_start[i]] = joints[i].name;
    } else {
      for (int k = 0; k < dof_count[i]; ++k)
        names[dof_start[i] + k] = joints[i].name + "." + std::to_string(k);
    }
  }
  return names;
}

int KinematicTree::joint_of_dof(int dof) const {
  for (size_t i = 0; i < joints.size(); ++i)
    if (dof_start[i] >= 0 && dof >= dof_start[i] && dof < dof_start[i] + dof_count[i])
      return static_cast<int>(i);
  throw Error("joint_of_dof: coordinate index out of range");
}

std::vector<Pose> forward_kinematics(const KinematicTree& tree,
                                     const std::vector<DScalar>& q) {
  if (static_cast<int>(q.size()) != tree.n_dof)
    throw Error("forward_kinematics: q has " + std::to_string(q.size()) +
                " entries, tree has " + std::to_string(tree.n_dof) + " DoF");
  const int nb = static_cast<int>(tree.bodies.size());
  std::vector<SpatialTransform> x_world(nb);
  std::vector<Pose> poses(nb);
  static const DScalar kZero(0.0);
  for (int i = 0; i < nb; ++i) {
    const int ds = tree.dof_start[i];
    const JointCalc jc = jcalc(tree.joints[i], ds >= 0 ? &q[ds] : &kZero);
    const int parent = tree.joints[i].parent;
    x_world[i] = parent >= 0 ? jc.x_up.compose(x_world[parent]) : jc.x_up;
    poses[i].R = x_world[i].E.transpose();
    poses[i].p = x_world[i].r;
  }
  return poses;
}

std::vector<BodyKinematics> compute_kinematics(const KinematicTree& tree,
                                               const std::vector<DScalar>& q,
                                               const std::vector<DScalar>& qdot) {
  if (static_cast<int>(q.size()) != tree.n_dof ||
      static_cast<int>(qdot.size()) != tree.n_dof)
    throw Error("compute_kinematics: dimension mismatch");
  const int nb = static_cast<int>(tree.bodies.size());
  std::vector<SpatialTransform> x_world(nb);
  std::vector<SpatialVec> v(nb);  // body coords
  std::vector<BodyKinematics> out(nb);
  static const DScalar kZero(0.0);
  for (int i = 0; i < nb; ++i) {
    const int ds = tree.dof_start[i];
    const JointCalc jc = jcalc(tree.joints[i], ds >= 0 ? &q[ds] : &kZero);
    const int parent = tree.joints[i].parent;
    x_world[i] = parent >= 0 ? jc.x_up.compose(x_world[parent]) : jc.x_up;
    SpatialVec vi = parent >= 0 ? jc.x_up.apply_motion(v[parent]) : SpatialVec::zero();
    for (size_t k = 0; k < jc.s.size(); ++k) vi += jc.s[k] * qdot[ds + k];
    v[i] = vi;
    out[i].pose.R = x_world[i].E.transpose();
    out[i].pose.p = x_world[i].r;
    out[i].twist.ang = out[i].pose.R * vi.ang;
    out[i].twist.lin = out[i].pose.R * vi.lin;
  }
  return out;
}

DenseMat mass_matrix(const KinematicTree& tree, const std::vector<DScalar>& q) {
  if (static_cast<int>(q.size()) != tree.n_dof)
    throw Error("mass_matrix: dimension mismatch");
  const int nb = static_cast<int>(tree.bodies.size());
  std::vector<SpatialTransform> x_up(nb);
  std::vector<std::vector<SpatialVec>> s(nb);
  std::vector<SpatialInertia> ic(nb);
  static const DScalar kZero(0.0);
  for (int i = 0; i < nb; ++i) {
    const int ds = tree.dof_start[i];
    JointCalc jc = jcalc(tree.joints[i], ds >= 0 ? &q[ds] : &kZero);
    x_up[i] = jc.x_up;
    s[i] = std::move(jc.s);
    const Body& b = tree.bodies[i];
    ic[i] = SpatialInertia::from_com(b.mass, b.com, b.inertia);
  }

  DenseMat h(tree.n_dof);
  for (int i = nb - 1; i >= 0; --i) {
    const int parent = tree.joints[i].parent;
    if (parent >= 0) ic[parent] += ic[i].expressed_in_parent(x_up[i]);
    const int ds = tree.dof_start[i];
    if (ds < 0) continue;
    const int nd = tree.dof_count[i];
    std::vector<SpatialVec> f(static_cast<size_t>(nd));
    for (int k = 0; k < nd; ++k) f[k] = ic[i].apply(s[i][k]);
    for (int k = 0; k < nd; ++k)
      for (int l = 0; l < nd; ++l) h(ds + k, ds + l) = dot(s[i][l], f[k]);
    int j = i;
    while (tree.joints[j].parent >= 0) {
      for (int k = 0; k < nd; ++k) f[k] = x_up[j].inv_apply_force(f[k]);
      j = tree.joints[j].parent;
      const int js = tree.dof_start[j];
      if (js < 0) continue;
      for (int k = 0; k < nd; ++k)
        for (int l = 0; l < tree.dof_count[j]; ++l) {
          const DScalar v = dot(f[k], s[j][l]);
          h(ds + k, js + l) = v;
          h(js + l, ds + k) = v;
        }
    }
  }
  for (int i = 0; i < tree.n_dof; ++i)
    for (int j = 0; j < tree.n_dof; ++j)
      if (!std::isfinite(h(i, j).value()))
        throw Error("mass_matrix: non-finite entry at (" + std::to_string(i) +
                    ", " + std::to_string(j) + "); corrupted inertia input");
  return h;
}

std::vector<DScalar> bias_forces(const KinematicTree& tree,
                                 const std::vector<DScalar>& q,
                                 const std::vector<DScalar>& qdot,
                                 const ExternalForces& ext) {
  if (static_cast<int>(q.size()) != tree.n_dof ||
      static_cast<int>(qdot.size()) != tree.n_dof)
    throw Error("bias_forces: dimension mismatch");
  const int nb = static_cast<int>(tree.bodies.size());
  std::vector<SpatialTransform> x_up(nb), x_world(nb);
  std::vector<std::vector<SpatialVec>> s(nb);
  std::vector<SpatialVec> v(nb), a(nb), f(nb);
  static const DScalar kZero(0.0);

  // fictitious base acceleration emulates gravity
  SpatialVec a0;
  a0.lin = DVec3(-ext.gravity.x, -ext.gravity.y, -ext.gravity.z);

  for (int i = 0; i < nb; ++i) {
    const int ds = tree.dof_start[i];
    JointCalc jc = jcalc(tree.joints[i], ds >= 0 ? &q[ds] : &kZero);
    x_up[i] = jc.x_up;
    s[i] = std::move(jc.s);
    const int parent = tree.joints[i].parent;
    x_world[i] = parent >= 0 ? x_up[i].compose(x_world[parent]) : x_up[i];

    SpatialVec vj;
    for (size_t k = 0; k < s[i].size(); ++k) vj += s[i][k] * qdot[ds + k];
    v[i] = (parent >= 0 ? x_up[i].apply_motion(v[parent]) : SpatialVec::zero()) + vj;
    a[i] = (parent >= 0 ? x_up[i].apply_motion(a[parent]) : x_up[i].apply_motion(a0)) +
           cross_motion(v[i], vj);

    const Body& b = tree.bodies[i];
    const SpatialInertia inertia = SpatialInertia::from_com(b.mass, b.com, b.inertia);
    f[i] = inertia.apply(a[i]) + cross_force(v[i], inertia.apply(v[i]));
  }

  // external wrenches are given about the body origin; expressing them in
  // body coordinates is a pure rotation
  for (const BodyWrench& w : ext.wrenches) {
    if (w.body < 0 || w.body >= nb) throw Error("bias_forces: wrench body index");
    SpatialVec wb = w.w;
    if (w.frame == BodyWrench::Frame::World) {
      wb.ang = x_world[w.body].E * w.w.ang;
      wb.lin = x_world[w.body].E * w.w.lin;
    }
    f[w.body] -= wb;
  }

  std::vector<DScalar> c(static_cast<size_t>(tree.n_dof));
  for (int i = nb - 1; i >= 0; --i) {
    const int ds = tree.dof_start[i];
    if (ds >= 0)
      for (size_t k = 0; k < s[i].size(); ++k) {
        c[ds + k] = dot(s[i][k], f[i]);
        // viscous joint damping opposes qdot
        if (tree.joints[i].damping != 0.0)
          c[ds + k] += DScalar(tree.joints[i].damping) * qdot[ds + k];
      }
    const int parent = tree.joints[i].parent;
    if (parent >= 0) f[parent] += x_up[i].inv_apply_force(f[i]);
  }
  return c;
}

std::vector<DScalar> forward_dynamics(const KinematicTree& tree,
                                      const SimState& state,
                                      const std::vector<DScalar>& tau,
                                      const ExternalForces& ext) {
  if (static_cast<int>(tau.size()) != tree.n_dof)
    throw Error("forward_dynamics: tau has " + std::to_string(tau.size()) +
                " entries, tree has " + std::to_string(tree.n_dof) + " DoF");
  const DenseMat h = mass_matrix(tree, state.q);
  const std::vector<DScalar> c = bias_forces(tree, state.q, state.qdot, ext);
  std::vector<DScalar> rhs(static_cast<size_t>(tree.n_dof));
  for (int i = 0; i < tree.n_dof; ++i) rhs[i] = tau[i] - c[i];
  try {
    return solve_dense(h, rhs);
  } catch (const SingularMatrixError& e) {
    const int child = tree.joint_of_dof(e.pivot());
    throw SingularMatrixError(e.pivot(),
                              "degenerate inertia at body '" +
                                  tree.bodies[child].name + "'");
  }
}

KinematicTree attach_fixed(const KinematicTree& tree, const Body& object,
                           int parent, const PoseR& transform) {
  if (parent < 0 || parent >= static_cast<int>(tree.bodies.size()))
    throw Error("attach_fixed: invalid parent index " + std::to_string(parent));
  KinematicTree out = tree;
  out.bodies.push_back(object);
  Joint weld;
  weld.name = object.name + "_weld";
  weld.type = JointType::Fixed;
  weld.parent = parent;
  weld.rest = transform;
  out.joints.push_back(weld);
  out.finalize();
  return out;
}

SpatialVec free_body_dynamics(const Body& body, const Pose& pose,
                              const SpatialVec& twist, const SpatialVec& wrench,
                              const Vec3r& gravity) {
  if (!(body.mass.value() > 0.0))
    throw Error("free_body_dynamics: body '" + body.name + "' has zero mass");
  const DVec3 c_world = pose.R * body.com;          // com offset from origin
  const DMat3 i_world = pose.R * body.inertia * pose.R.transpose();
  const DVec3& omega = twist.ang;

  // reduce the wrench to the com
  const DVec3 n_com = wrench.ang - c_world.cross(wrench.lin);
  const DVec3 f_com = wrench.lin;

  const DVec3 alpha = i_world.inverse() * (n_com - omega.cross(i_world * omega));
  const DVec3 a_com = f_com / body.mass + promote(gravity);
  // back out the acceleration of the body-origin point
  const DVec3 a_origin =
      a_com - alpha.cross(c_world) - omega.cross(omega.cross(c_world));
  return {alpha, a_origin};
}

DVec3 rotation_log(const DMat3& R) {
  const DVec3 w{(R(2, 1) - R(1, 2)) * 0.5, (R(0, 2) - R(2, 0)) * 0.5,
                (R(1, 0) - R(0, 1)) * 0.5};  // sin(theta) * axis
  const DScalar c = (R(0, 0) + R(1, 1) + R(2, 2) - 1.0) * 0.5;
  const DScalar s2 = w.squared_norm();
  if (c.value() < -0.9) throw Error("rotation_log: angle too close to pi");
  if (s2.value() < 1e-24) return w;  // below machine resolution of the angle
  const DScalar s = sqrt(s2);
  const DScalar theta = atan2(s, c);
  return w * (theta / s);
}

void integrate_positions(const KinematicTree& tree, std::vector<DScalar>& q,
                         const std::vector<DScalar>& qdot, double dt) {
  for (size_t i = 0; i < tree.joints.size(); ++i) {
    const int ds = tree.dof_start[i];
    if (ds < 0) continue;
    if (tree.joints[i].type == JointType::Free) {
      const DVec3 phi{q[ds], q[ds + 1], q[ds + 2]};
      const DVec3 omega{qdot[ds], qdot[ds + 1], qdot[ds + 2]};
      const DVec3 vlin{qdot[ds + 3], qdot[ds + 4], qdot[ds + 5]};
      const DMat3 r_old = rotation_exp(phi);
      const DMat3 r_new = r_old * rotation_exp(omega * dt);
      const DVec3 phi_new = rotation_log(r_new);
      const DVec3 p_new =
          DVec3{q[ds + 3], q[ds + 4], q[ds + 5]} + (r_old * vlin) * dt;
      q[ds] = phi_new.x;
      q[ds + 1] = phi_new.y;
      q[ds + 2] = phi_new.z;
      q[ds + 3] = p_new.x;
      q[ds + 4] = p_new.y;
      q[ds + 5] = p_new.z;
    } else {
      for (int k = 0; k < tree.dof_count[i]; ++k)
        q[ds + k] += qdot[ds + k] * dt;
    }
  }
}

}  // namespace propsim
