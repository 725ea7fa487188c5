#include "propsim/sim.hpp"

#include <cmath>

namespace propsim {
namespace {

constexpr double kMaxPosition = 1e3;
constexpr double kMaxVelocity = 1e5;

void check_range(double value, double bound, const char* what, long step) {
  if (std::isfinite(value) && std::abs(value) <= bound) return;
  throw DivergenceError(step, std::string(what) + " = " + std::to_string(value));
}

void guard_divergence(const Scenario& sc, const CoupledState& s) {
  const auto names = sc.sim_tree.dof_names();
  for (size_t i = 0; i < s.robot.q.size(); ++i) {
    check_range(s.robot.q[i].value(), kMaxPosition,
                ("q." + names[i]).c_str(), s.step_count);
    check_range(s.robot.qdot[i].value(), kMaxVelocity,
                ("qdot." + names[i]).c_str(), s.step_count);
  }
  if (sc.kind == ScenarioKind::Container) {
    for (int i = 0; i < 3; ++i) {
      check_range(s.ball_pose.p[i].value(), kMaxPosition, "ball position",
                  s.step_count);
      check_range(s.ball_twist.ang[i].value(), kMaxVelocity,
                  "ball angular velocity", s.step_count);
      check_range(s.ball_twist.lin[i].value(), kMaxVelocity, "ball velocity",
                  s.step_count);
    }
  }
  if (sc.kind == ScenarioKind::Squeeze) {
    for (size_t n = 0; n < s.soft.x.size(); ++n) {
      for (int i = 0; i < 3; ++i) {
        check_range(s.soft.x[n][i].value(), kMaxPosition, "node position",
                    s.step_count);
        check_range(s.soft.v[n][i].value(), kMaxVelocity, "node velocity",
                    s.step_count);
      }
    }
  }
}

ShapeState body_shape_state(const BodyKinematics& kin) {
  ShapeState s;
  s.pose = kin.pose;
  s.twist = kin.twist;
  return s;
}

}  // namespace

double TorqueTerm::eval(double t) const {
  if (t < t_on || t >= t_off) return 0.0;
  return offset + amplitude * std::sin(2.0 * M_PI * frequency * t + phase);
}

std::vector<DScalar> TorqueSchedule::eval(double t, int n_dof) const {
  if (!per_dof.empty() && static_cast<int>(per_dof.size()) != n_dof)
    throw Error("torque schedule covers " + std::to_string(per_dof.size()) +
                " DoF but the robot has " + std::to_string(n_dof));
  std::vector<DScalar> tau(n_dof, DScalar(0.0));
  for (size_t i = 0; i < per_dof.size(); ++i) {
    double sum = 0.0;
    for (const TorqueTerm& term : per_dof[i]) sum += term.eval(t);
    tau[i] = DScalar(sum);
  }
  return tau;
}

const char* to_string(ScenarioKind k) {
  switch (k) {
    case ScenarioKind::RobotOnly: return "robot_only";
    case ScenarioKind::FixedObject: return "fixed_object";
    case ScenarioKind::Container: return "container";
    case ScenarioKind::Squeeze: return "squeeze";
  }
  return "?";
}

void Scenario::prepare() {
  config.validate();
  robot.finalize();
  sim_tree = robot;
  attach_index = -1;
  pad_index_a = pad_index_b = -1;

  if (kind == ScenarioKind::FixedObject || kind == ScenarioKind::Container) {
    if (attach_body.empty()) throw Error("scenario needs an attach_body");
    const int parent = robot.body_index(attach_body);
    sim_tree = attach_fixed(robot, object, parent, attach_pose);
    attach_index = sim_tree.body_index(object.name);
  }
  if (kind == ScenarioKind::Container) {
    if (ball_radius <= 0.0) throw Error("ball radius must be positive");
    if (ball.mass.value() <= 0.0) throw Error("ball mass must be positive");
    const Vec3r he = container_half_extents;
    if (he.x <= ball_radius || he.y <= ball_radius || he.z <= ball_radius)
      throw Error("container must be larger than the ball");
    if (ball_solid_sphere) {
      const DScalar moment =
          ball.mass * DScalar(0.4 * ball_radius * ball_radius);
      ball.inertia = DMat3::diagonal(DVec3(moment, moment, moment));
    }
  }
  if (kind == ScenarioKind::Squeeze) {
    if (pad_body_a.empty() || pad_body_b.empty())
      throw Error("squeeze scenario needs two pad bodies");
    pad_index_a = sim_tree.body_index(pad_body_a);
    pad_index_b = sim_tree.body_index(pad_body_b);
    material.validate();
    mesh = hex_to_tets(soft_nx, soft_ny, soft_nz, soft_h, soft_origin);
  }

  if (record_object && kind != ScenarioKind::FixedObject &&
      kind != ScenarioKind::Container)
    throw Error("record_object requires an attached object or a ball");

  if (q0.empty()) q0.assign(sim_tree.n_dof, 0.0);
  if (qdot0.empty()) qdot0.assign(sim_tree.n_dof, 0.0);
  if (static_cast<int>(q0.size()) != sim_tree.n_dof ||
      static_cast<int>(qdot0.size()) != sim_tree.n_dof)
    throw Error("initial state size does not match DoF count " +
                std::to_string(sim_tree.n_dof));
  if (!torques.per_dof.empty())
    torques.eval(0.0, sim_tree.n_dof);  // size check up front
  prepared = true;
}

CoupledState initial_state(const Scenario& sc) {
  if (!sc.prepared) throw Error("scenario not prepared");
  CoupledState s;
  s.robot.q.reserve(sc.q0.size());
  s.robot.qdot.reserve(sc.qdot0.size());
  for (double v : sc.q0) s.robot.q.push_back(DScalar(v));
  for (double v : sc.qdot0) s.robot.qdot.push_back(DScalar(v));
  if (sc.kind == ScenarioKind::Container) {
    s.ball_pose.R = promote(sc.ball_start.R);
    s.ball_pose.p = promote(sc.ball_start.p);
    s.ball_twist.ang = s.ball_twist.lin =
        DVec3(DScalar(0.0), DScalar(0.0), DScalar(0.0));
  }
  if (sc.kind == ScenarioKind::Squeeze) s.soft = SoftState::rest(sc.mesh);
  return s;
}

void step(const Scenario& sc, double dt, CoupledState* state) {
  if (!sc.prepared) throw Error("scenario not prepared");
  if (dt <= 0.0) throw Error("step: dt must be positive");

  const std::vector<DScalar> tau = sc.torques.eval(state->t, sc.sim_tree.n_dof);
  ExternalForces ext;
  ext.gravity = sc.config.gravity;

  switch (sc.kind) {
    case ScenarioKind::RobotOnly:
    case ScenarioKind::FixedObject:
      break;

    case ScenarioKind::Container: {
      const auto kin =
          compute_kinematics(sc.sim_tree, state->robot.q, state->robot.qdot);
      const ShapeState box = body_shape_state(kin[sc.attach_index]);
      ShapeState ball_state;
      ball_state.pose = state->ball_pose;
      ball_state.twist = state->ball_twist;
      const auto contacts = detect_sphere_in_box(
          ball_state, sc.ball_radius, box, sc.container_half_extents);
      SpatialVec on_ball{DVec3(DScalar(0.0), DScalar(0.0), DScalar(0.0)),
                         DVec3(DScalar(0.0), DScalar(0.0), DScalar(0.0))};
      SpatialVec on_box = on_ball;
      for (const ContactPoint& c : contacts) {
        const ContactForce f = penalty_force(c, sc.config.contact);
        const WrenchPair w =
            accumulate_wrench(c, f, state->ball_pose.p, box.pose.p);
        on_ball.ang = on_ball.ang + w.on_penetrating.ang;
        on_ball.lin = on_ball.lin + w.on_penetrating.lin;
        on_box.ang = on_box.ang + w.on_surface.ang;
        on_box.lin = on_box.lin + w.on_surface.lin;
      }
      BodyWrench bw;
      bw.body = sc.attach_index;
      bw.w = on_box;
      bw.frame = BodyWrench::Frame::World;
      ext.wrenches.push_back(bw);

      const SpatialVec acc = free_body_dynamics(
          sc.ball, state->ball_pose, state->ball_twist, on_ball,
          sc.config.gravity);
      state->ball_twist.ang = state->ball_twist.ang + acc.ang * DScalar(dt);
      state->ball_twist.lin = state->ball_twist.lin + acc.lin * DScalar(dt);
      state->ball_pose.p =
          state->ball_pose.p + state->ball_twist.lin * DScalar(dt);
      state->ball_pose.R =
          rotation_exp(state->ball_twist.ang * DScalar(dt)) *
          state->ball_pose.R;
      break;
    }

    case ScenarioKind::Squeeze: {
      const auto kin =
          compute_kinematics(sc.sim_tree, state->robot.q, state->robot.qdot);
      std::vector<SoftSurface> surfaces;
      surfaces.push_back({Shape{Shape::Kind::Pad, 0.0, sc.pad_half_extents_a},
                          body_shape_state(kin[sc.pad_index_a])});
      surfaces.push_back({Shape{Shape::Kind::Pad, 0.0, sc.pad_half_extents_b},
                          body_shape_state(kin[sc.pad_index_b])});
      if (sc.soft_floor) {
        Shape floor;
        floor.kind = Shape::Kind::Plane;
        floor.plane_normal = Vec3r(0, 0, 1);
        floor.plane_offset = sc.floor_offset;
        SoftSurface fs;
        fs.shape = floor;
        fs.state.pose.R = promote(Mat3r::identity());
        fs.state.pose.p = DVec3(DScalar(0.0), DScalar(0.0), DScalar(0.0));
        fs.state.twist.ang = fs.state.twist.lin = fs.state.pose.p;
        surfaces.push_back(fs);
      }
      std::vector<SpatialVec> reactions(
          surfaces.size(),
          SpatialVec{DVec3(DScalar(0.0), DScalar(0.0), DScalar(0.0)),
                     DVec3(DScalar(0.0), DScalar(0.0), DScalar(0.0))});
      try {
        soft_step(sc.mesh, sc.material, sc.config.contact, surfaces,
                  sc.config.gravity, dt, &state->soft, {}, &reactions);
      } catch (const InvertedElementError& e) {
        throw InvertedElementError(e.tet(), state->step_count);
      }
      for (int which = 0; which < 2; ++which) {
        BodyWrench bw;
        bw.body = which == 0 ? sc.pad_index_a : sc.pad_index_b;
        bw.w = reactions[which];
        bw.frame = BodyWrench::Frame::World;
        ext.wrenches.push_back(bw);
      }
      break;
    }
  }

  const std::vector<DScalar> qdd =
      forward_dynamics(sc.sim_tree, state->robot, tau, ext);
  for (int i = 0; i < sc.sim_tree.n_dof; ++i)
    state->robot.qdot[i] = state->robot.qdot[i] + qdd[i] * DScalar(dt);
  integrate_positions(sc.sim_tree, state->robot.q, state->robot.qdot, dt);

  state->t += dt;
  state->step_count += 1;
  guard_divergence(sc, *state);
}

namespace {

DVec3 object_position(const Scenario& sc, const CoupledState& state) {
  if (sc.kind == ScenarioKind::Container) return state.ball_pose.p;
  return forward_kinematics(sc.sim_tree, state.robot.q)[sc.attach_index].p;
}

std::vector<DScalar> record_frame(const Scenario& sc,
                                  const CoupledState& state) {
  std::vector<DScalar> row = state.robot.q;
  if (sc.record_object) {
    const DVec3 p = object_position(sc, state);
    row.push_back(p.x);
    row.push_back(p.y);
    row.push_back(p.z);
  }
  return row;
}

}  // namespace

Trajectory simulate(Scenario& sc, CoupledState* final) {
  if (!sc.prepared) sc.prepare();
  CoupledState state = initial_state(sc);
  Trajectory traj;
  traj.fps = sc.config.fps;
  traj.channels = sc.sim_tree.dof_names();
  if (sc.record_object) {
    traj.channels.push_back("obj_x");
    traj.channels.push_back("obj_y");
    traj.channels.push_back("obj_z");
  }
  traj.frames.push_back(record_frame(sc, state));
  const double h = sc.config.sub_dt();
  const long frames = sc.config.frame_count();
  for (long f = 0; f < frames; ++f) {
    for (int s = 0; s < sc.config.substeps; ++s) step(sc, h, &state);
    traj.frames.push_back(record_frame(sc, state));
  }
  if (final) *final = state;
  return traj;
}

EnergyReport energy_probe(const Scenario& sc, const CoupledState& state) {
  if (!sc.prepared) throw Error("scenario not prepared");
  EnergyReport rep;
  const Vec3r g = sc.config.gravity;

  // Robot (and welded object): KE = 0.5 qdot^T H qdot, gravity from body
  // centers of mass.
  const int n = sc.sim_tree.n_dof;
  if (n > 0) {
    const DenseMat h = mass_matrix(sc.sim_tree, state.robot.q);
    DScalar ke(0.0);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        ke = ke + DScalar(0.5) * state.robot.qdot[i] * h(i, j) *
                      state.robot.qdot[j];
    rep.kinetic += ke.value();
  }
  const auto poses = forward_kinematics(sc.sim_tree, state.robot.q);
  for (size_t b = 0; b < sc.sim_tree.bodies.size(); ++b) {
    const Body& body = sc.sim_tree.bodies[b];
    if (body.mass.value() <= 0.0) continue;
    const DVec3 c = poses[b].p + poses[b].R * body.com;
    rep.gravitational -=
        body.mass.value() *
        (g.x * c.x.value() + g.y * c.y.value() + g.z * c.z.value());
  }

  if (sc.kind == ScenarioKind::Container) {
    const DVec3 c_w = state.ball_pose.p + state.ball_pose.R * sc.ball.com;
    const DVec3 v_c =
        state.ball_twist.lin + state.ball_twist.ang.cross(c_w - state.ball_pose.p);
    const DMat3 i_w = state.ball_pose.R *
                      (sc.ball.inertia * state.ball_pose.R.transpose());
    const DVec3 l = i_w * state.ball_twist.ang;
    rep.kinetic += 0.5 * sc.ball.mass.value() * v_c.squared_norm().value() +
                   0.5 * state.ball_twist.ang.dot(l).value();
    rep.gravitational -= sc.ball.mass.value() *
                         (g.x * c_w.x.value() + g.y * c_w.y.value() +
                          g.z * c_w.z.value());
  }

  if (sc.kind == ScenarioKind::Squeeze) {
    for (size_t i = 0; i < state.soft.x.size(); ++i) {
      const double m = sc.material.density * sc.mesh.node_volume[i];
      rep.kinetic += 0.5 * m * state.soft.v[i].squared_norm().value();
      rep.gravitational -= m * (g.x * state.soft.x[i].x.value() +
                                g.y * state.soft.x[i].y.value() +
                                g.z * state.soft.x[i].z.value());
    }
    rep.elastic += elastic_energy(sc.mesh, state.soft.x, sc.material).value();
  }
  return rep;
}

}  // namespace propsim
