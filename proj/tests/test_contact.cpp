#include <cmath>
#include <random>

#include "doctest.h"
#include "propsim/contact.hpp"
#include "test_helpers.hpp"

using namespace propsim;

namespace {

ShapeState static_at(const Vec3r& p, const Mat3r& r = Mat3r::identity()) {
  ShapeState s;
  s.pose.p = promote(p);
  s.pose.R = promote(r);
  return s;
}

Vec3r vec(const DVec3& v) { return values(v); }

}  // namespace

TEST_SUITE("contact") {

TEST_CASE("sphere against one box wall: depth, normal, point") {
  set_active_params(0);
  const ShapeState box = static_at(Vec3r(0, 0, 0));
  const Vec3r half(0.05, 0.05, 0.05);
  const double r = 0.01;
  const ShapeState ball = static_at(Vec3r(0.045, 0.0, 0.0));
  const auto contacts = detect_sphere_in_box(ball, r, box, half);
  REQUIRE(contacts.size() == 1);
  const ContactPoint& c = contacts[0];
  CHECK(c.depth.value() == doctest::Approx(0.005).epsilon(1e-12));
  CHECK(vec(c.normal).x == doctest::Approx(-1.0));
  CHECK(vec(c.normal).y == doctest::Approx(0.0).scale(1.0));
  CHECK(vec(c.point).x == doctest::Approx(0.055));
  CHECK(vec(c.point).y == doctest::Approx(0.0).scale(1.0));
}

TEST_CASE("exact touching produces no contact") {
  set_active_params(0);
  const ShapeState box = static_at(Vec3r(0, 0, 0));
  const Vec3r half(0.05, 0.05, 0.05);
  const ShapeState ball = static_at(Vec3r(0.04, 0.0, 0.0));  // surface at wall
  CHECK(detect_sphere_in_box(ball, 0.01, box, half).empty());
  const ShapeState sphere = static_at(Vec3r(0.0, 0.0, 0.01));
  CHECK(detect_sphere_plane(sphere, 0.01, Vec3r(0, 0, 1), 0.0).empty());
}

TEST_CASE("sphere in a corner touches three walls") {
  set_active_params(0);
  const ShapeState box = static_at(Vec3r(0, 0, 0));
  const Vec3r half(0.05, 0.05, 0.05);
  const ShapeState ball = static_at(Vec3r(0.045, -0.046, 0.047));
  const auto contacts = detect_sphere_in_box(ball, 0.01, box, half);
  CHECK(contacts.size() == 3);
  double depth_sum = 0.0;
  for (const auto& c : contacts) depth_sum += c.depth.value();
  CHECK(depth_sum == doctest::Approx(0.005 + 0.006 + 0.007).epsilon(1e-10));
}

TEST_CASE("box pose rotates the walls") {
  set_active_params(0);
  // Box rotated 90 degrees about z: its local +x wall now faces world +y.
  const Mat3r rz = rotation_exp(Vec3r(0.0, 0.0, M_PI / 2.0));
  const ShapeState box = static_at(Vec3r(0, 0, 0), rz);
  const Vec3r half(0.05, 0.02, 0.05);  // tight along local y = world -x
  const ShapeState ball = static_at(Vec3r(0.018, 0.0, 0.0));
  const auto contacts = detect_sphere_in_box(ball, 0.01, box, half);
  REQUIRE(contacts.size() == 1);
  CHECK(contacts[0].depth.value() == doctest::Approx(0.008).epsilon(1e-10));
  // Local -y wall, normal +y in local frame = world +x... the wall the ball
  // crossed is local y = -0.02 at world +x, so the inward normal is world -x.
  CHECK(vec(contacts[0].normal).x == doctest::Approx(-1.0).epsilon(1e-12));
}

TEST_CASE("sphere against a plane with non-unit normal") {
  set_active_params(0);
  const ShapeState ball = static_at(Vec3r(0.2, -0.1, 0.008));
  // Plane 2z = 0.01, i.e. z = 0.005.
  const auto contacts =
      detect_sphere_plane(ball, 0.01, Vec3r(0, 0, 2), 0.01);
  REQUIRE(contacts.size() == 1);
  CHECK(contacts[0].depth.value() == doctest::Approx(0.007).epsilon(1e-12));
  CHECK(vec(contacts[0].normal).z == doctest::Approx(1.0));
  CHECK(vec(contacts[0].point).z == doctest::Approx(-0.002));
}

TEST_CASE("detector argument validation") {
  set_active_params(0);
  const ShapeState s = static_at(Vec3r(0, 0, 0));
  CHECK_THROWS_AS(detect_sphere_in_box(s, 0.0, s, Vec3r(1, 1, 1)), Error);
  CHECK_THROWS_AS(detect_sphere_plane(s, -1.0, Vec3r(0, 0, 1), 0.0), Error);
  CHECK_THROWS_AS(detect_sphere_plane(s, 0.01, Vec3r(0, 0, 0), 0.0), Error);
}

TEST_CASE("relative velocity splits along and across the normal") {
  set_active_params(0);
  auto& rng = pt::test_rng(401);
  for (int trial = 0; trial < 20; ++trial) {
    ShapeState box = static_at(Vec3r(0, 0, 0));
    box.twist.ang = promote(pt::random_vec3(rng, -2.0, 2.0));
    box.twist.lin = promote(pt::random_vec3(rng, -1.0, 1.0));
    ShapeState ball = static_at(Vec3r(0.046, 0.01, -0.02));
    ball.twist.ang = promote(pt::random_vec3(rng, -2.0, 2.0));
    ball.twist.lin = promote(pt::random_vec3(rng, -1.0, 1.0));
    const auto contacts =
        detect_sphere_in_box(ball, 0.01, box, Vec3r(0.05, 0.05, 0.05));
    REQUIRE(contacts.size() == 1);
    const ContactPoint& c = contacts[0];
    const Vec3r v_ball = vec(point_velocity(ball, c.point));
    const Vec3r v_box = vec(point_velocity(box, c.point));
    const Vec3r v_rel = v_ball - v_box;
    const Vec3r n = vec(c.normal);
    const Vec3r vn = vec(c.v_n), vt = vec(c.v_t);
    CHECK(vt.dot(n) == doctest::Approx(0.0).scale(1.0));
    CHECK((vn + vt - v_rel).norm() == doctest::Approx(0.0).scale(1.0));
    CHECK(vn.cross(n).norm() == doctest::Approx(0.0).scale(1.0));
  }
}

TEST_CASE("point velocity includes the lever arm") {
  set_active_params(0);
  ShapeState s = static_at(Vec3r(1.0, 0.0, 0.0));
  s.twist.ang = promote(Vec3r(0.0, 0.0, 2.0));
  s.twist.lin = promote(Vec3r(0.1, 0.0, 0.0));
  const DVec3 p = promote(Vec3r(1.0, 0.5, 0.0));
  const Vec3r v = vec(point_velocity(s, p));
  // omega x r = (0,0,2) x (0,0.5,0) = (-1, 0, 0).
  CHECK(v.x == doctest::Approx(0.1 - 1.0));
  CHECK(v.y == doctest::Approx(0.0).scale(1.0));
}

TEST_CASE("penalty normal force follows the spring-damper law") {
  set_active_params(0);
  ContactParams p;
  p.k_e = 1000.0;
  p.k_d = 5.0;
  p.k_f = 2.0;
  p.mu = 0.5;
  ContactPoint c;
  c.normal = promote(Vec3r(0, 0, 1));
  c.depth = DScalar(0.002);
  c.v_n = promote(Vec3r(0, 0, -0.1));  // approaching
  c.v_t = promote(Vec3r(0, 0, 0));
  const ContactForce f = penalty_force(c, p);
  // f_n = k_e d n - k_d v_n = (0,0,2) - (0,0,-0.5) = (0,0,2.5).
  CHECK(vec(f.f_n).z == doctest::Approx(2.5).epsilon(1e-12));
  CHECK(vec(f.f_t).norm() == 0.0);
}

TEST_CASE("non-adhesive clamp zeroes a separating contact") {
  set_active_params(0);
  ContactParams p;
  p.k_e = 1000.0;
  p.k_d = 50.0;
  ContactPoint c;
  c.normal = promote(Vec3r(0, 0, 1));
  c.depth = DScalar(0.001);            // spring term: 1 N
  c.v_n = promote(Vec3r(0, 0, 0.1));   // damper term: -5 N, separating fast
  c.v_t = promote(Vec3r(0, 0, 0));
  const ContactForce fr = penalty_force(c, p);
  CHECK(vec(fr.f_n).norm() == 0.0);
  p.allow_adhesion = true;
  const ContactForce fa = penalty_force(c, p);
  CHECK(vec(fa.f_n).z == doctest::Approx(1.0 - 5.0).epsilon(1e-12));
}

TEST_CASE("friction opposes slip and respects both caps") {
  set_active_params(0);
  ContactParams p;
  p.k_e = 1000.0;
  p.k_d = 0.0;
  p.k_f = 10.0;
  p.mu = 0.4;
  ContactPoint c;
  c.normal = promote(Vec3r(0, 0, 1));
  c.depth = DScalar(0.001);  // |f_n| = 1 N, Coulomb cap 0.4 N
  c.v_n = promote(Vec3r(0, 0, 0));
  SUBCASE("viscous regime") {
    c.v_t = promote(Vec3r(0.02, 0.0, 0.0));  // k_f |v_t| = 0.2 < cap
    const ContactForce f = penalty_force(c, p);
    CHECK(vec(f.f_t).x == doctest::Approx(-0.2).epsilon(1e-12));
    CHECK(vec(f.f_t).y == doctest::Approx(0.0).scale(1.0));
  }
  SUBCASE("Coulomb-capped regime") {
    c.v_t = promote(Vec3r(0.0, 3.0, 0.0));  // k_f |v_t| = 30 >> cap
    const ContactForce f = penalty_force(c, p);
    CHECK(vec(f.f_t).y == doctest::Approx(-0.4).epsilon(1e-12));
  }
  SUBCASE("dead zone") {
    c.v_t = promote(Vec3r(5e-10, 0.0, 0.0));
    const ContactForce f = penalty_force(c, p);
    CHECK(vec(f.f_t).norm() == 0.0);
  }
}

TEST_CASE("friction cap holds over randomized contacts") {
  set_active_params(0);
  auto& rng = pt::test_rng(402);
  ContactParams p;
  for (int trial = 0; trial < 1000; ++trial) {
    p.k_e = pt::uniform(rng, 1.0, 1e5);
    p.k_d = pt::uniform(rng, 0.0, 100.0);
    p.k_f = pt::uniform(rng, 0.0, 100.0);
    p.mu = pt::uniform(rng, 0.0, 2.0);
    ContactPoint c;
    Vec3r n = pt::random_vec3(rng);
    while (n.norm() < 1e-3) n = pt::random_vec3(rng);
    n = n / n.norm();
    c.normal = promote(n);
    c.depth = DScalar(pt::uniform(rng, 0.0, 0.01));
    const Vec3r vrel = pt::random_vec3(rng, -2.0, 2.0);
    const Vec3r vn = n * vrel.dot(n);
    c.v_n = promote(vn);
    c.v_t = promote(vrel - vn);
    const ContactForce f = penalty_force(c, p);
    const double fn = vec(f.f_n).norm();
    const double ft = vec(f.f_t).norm();
    CHECK(ft <= p.mu * fn + 1e-12);
    CHECK(ft <= p.k_f * vec(c.v_t).norm() + 1e-12);
    // Non-adhesion: the normal force never points against the normal.
    CHECK(vec(f.f_n).dot(n) >= 0.0);
    // Friction opposes slip.
    if (ft > 0.0) CHECK(vec(f.f_t).dot(vec(c.v_t)) < 0.0);
  }
}

TEST_CASE("clamped normal force keeps friction tangents finite") {
  // Regression: with the normal force clamped to exactly zero and the point
  // still slipping, the Coulomb cap used to evaluate sqrt at an exact zero,
  // which turns the tangents into NaN.
  const auto th = activate_params({0.001});
  ContactParams p;
  p.k_e = 1000.0;
  p.k_d = 50.0;
  p.k_f = 10.0;
  p.mu = 0.5;
  ContactPoint c;
  c.normal = promote(Vec3r(0, 0, 1));
  c.depth = th[0];                      // active parameter feeds the depth
  c.v_n = promote(Vec3r(0, 0, 1.0));    // separating: spring << damper
  c.v_t = promote(Vec3r(0.3, -0.1, 0.0));
  const ContactForce f = penalty_force(c, p);
  for (int i = 0; i < 3; ++i) {
    CHECK(f.f_n[i].value() == 0.0);
    CHECK(f.f_t[i].value() == 0.0);
    CHECK(std::isfinite(f.f_n[i].tangent(0)));
    CHECK(std::isfinite(f.f_t[i].tangent(0)));
    CHECK(f.f_t[i].tangent(0) == 0.0);
  }
}

TEST_CASE("contact params are validated") {
  ContactParams p;
  p.k_e = -1.0;
  CHECK_THROWS_AS(p.validate(), Error);
  p.k_e = 10.0;
  p.mu = 2.5;
  CHECK_THROWS_AS(p.validate(), Error);
  p.mu = 2.0;
  CHECK_NOTHROW(p.validate());
}

TEST_CASE("wrench pairs obey the third law about any reference") {
  set_active_params(0);
  auto& rng = pt::test_rng(403);
  for (int trial = 0; trial < 50; ++trial) {
    ContactPoint c;
    c.point = promote(pt::random_vec3(rng, -0.2, 0.2));
    Vec3r n = pt::random_vec3(rng);
    n = n / n.norm();
    c.normal = promote(n);
    ContactForce f;
    f.f_n = promote(pt::random_vec3(rng, -2.0, 2.0));
    f.f_t = promote(pt::random_vec3(rng, -1.0, 1.0));
    const DVec3 op = promote(pt::random_vec3(rng, -0.3, 0.3));
    const DVec3 os = promote(pt::random_vec3(rng, -0.3, 0.3));
    const WrenchPair w = accumulate_wrench(c, f, op, os);
    // Forces cancel exactly.
    for (int i = 0; i < 3; ++i)
      CHECK(w.on_penetrating.lin[i].value() + w.on_surface.lin[i].value() ==
            0.0);
    // Moments about a common reference point cancel to round-off.
    const Vec3r ref = pt::random_vec3(rng, -0.5, 0.5);
    const Vec3r mp = values(w.on_penetrating.ang) +
                     (values(op) - ref).cross(values(w.on_penetrating.lin));
    const Vec3r ms = values(w.on_surface.ang) +
                     (values(os) - ref).cross(values(w.on_surface.lin));
    CHECK((mp + ms).norm() < 1e-12);
  }
}

TEST_CASE("pad sampling reports corner and center penetrations") {
  set_active_params(0);
  // Pad in the xy plane (local +z = world +z) descending below the box's
  // top interior wall at z = half. Push the pad's plane above the wall so
  // every sample point crosses it.
  const ShapeState box = static_at(Vec3r(0, 0, 0));
  const Vec3r box_half(0.05, 0.05, 0.02);
  ShapeState pad = static_at(Vec3r(0.0, 0.0, 0.021));
  const auto contacts =
      detect_pad_points(pad, Vec3r(0.01, 0.01, 0.0), box, box_half);
  REQUIRE(contacts.size() == 5);
  for (const auto& c : contacts) {
    CHECK(c.depth.value() == doctest::Approx(0.001).epsilon(1e-10));
    CHECK(vec(c.normal).z == doctest::Approx(-1.0));
  }
  // Pad centered on the wall but smaller than the box: corners at +-0.01
  // stay inside laterally, so exactly the five points hit the one wall.
  pad = static_at(Vec3r(0.04, 0.0, 0.021));
  const auto shifted =
      detect_pad_points(pad, Vec3r(0.005, 0.005, 0.0), box, box_half);
  CHECK(shifted.size() == 5);
}

}  // TEST_SUITE
