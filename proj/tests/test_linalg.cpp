#include <cmath>
#include <random>

#include "doctest.h"
#include "propsim/articulated.hpp"
#include "propsim/linalg.hpp"
#include "test_helpers.hpp"

using namespace propsim;

namespace {

Mat3r random_matrix(std::mt19937& rng) {
  Mat3r a;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) a(i, j) = pt::uniform(rng, -2.0, 2.0);
  return a;
}

double frobenius(const Mat3r& a) {
  double s = 0.0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) s += a(i, j) * a(i, j);
  return std::sqrt(s);
}

}  // namespace

TEST_SUITE("linalg") {

TEST_CASE("vector algebra identities") {
  auto& rng = pt::test_rng(201);
  for (int trial = 0; trial < 30; ++trial) {
    const Vec3r a = pt::random_vec3(rng);
    const Vec3r b = pt::random_vec3(rng);
    CHECK(a.cross(b).dot(a) == doctest::Approx(0.0).scale(1.0));
    CHECK(a.cross(b).dot(b) == doctest::Approx(0.0).scale(1.0));
    CHECK(a.dot(a) == doctest::Approx(a.squared_norm()));
    CHECK(a.norm() == doctest::Approx(std::sqrt(a.dot(a))));
    const Vec3r sum = a + b;
    CHECK(sum.x == a.x + b.x);
    CHECK((a - b + b).x == doctest::Approx(a.x));
    CHECK((a * 2.0).y == doctest::Approx(2.0 * a.y));
    CHECK((2.0 * a).z == (a * 2.0).z);
    // skew(v) w == v x w
    const Vec3r via_skew = Mat3r::skew(a) * b;
    const Vec3r direct = a.cross(b);
    for (int i = 0; i < 3; ++i)
      CHECK(via_skew[i] == doctest::Approx(direct[i]));
  }
}

TEST_CASE("matrix algebra identities") {
  auto& rng = pt::test_rng(202);
  for (int trial = 0; trial < 30; ++trial) {
    const Mat3r a = random_matrix(rng);
    const Mat3r b = random_matrix(rng);
    const Vec3r v = pt::random_vec3(rng);
    const Vec3r left = (a * b) * v;
    const Vec3r right = a * (b * v);
    for (int i = 0; i < 3; ++i)
      CHECK(left[i] == doctest::Approx(right[i]).epsilon(1e-12));
    const Vec3r tm = a.transposed_mul(v);
    const Vec3r tv = a.transpose() * v;
    for (int i = 0; i < 3; ++i) CHECK(tm[i] == tv[i]);
    const Mat3r outer = Mat3r::outer(v, v);
    CHECK(outer(1, 2) == v.y * v.z);
    CHECK(outer(2, 1) == outer(1, 2));
    const Mat3r diag = Mat3r::diagonal(v);
    CHECK(diag(0, 0) == v.x);
    CHECK(diag(0, 1) == 0.0);
  }
}

TEST_CASE("inverse and determinant") {
  auto& rng = pt::test_rng(203);
  int checked = 0;
  while (checked < 20) {
    Mat3r a = random_matrix(rng);
    if (std::abs(a.det()) < 0.1) continue;  // keep the inverse well scaled
    ++checked;
    const Mat3r prod = a * a.inverse();
    const Mat3r eye = Mat3r::identity();
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        CHECK(prod(i, j) == doctest::Approx(eye(i, j)).epsilon(1e-9).scale(1.0));
    // det(A^T) == det(A), det(AB) == det(A) det(B)
    CHECK(a.transpose().det() == doctest::Approx(a.det()));
    const Mat3r b = random_matrix(rng);
    CHECK((a * b).det() == doctest::Approx(a.det() * b.det()).epsilon(1e-10));
  }
}

TEST_CASE("rotation_exp produces rotations for all magnitudes") {
  auto& rng = pt::test_rng(204);
  const double mags[] = {0.0, 1e-9, 1e-7, 1e-4, 0.5, 2.0, 3.1};
  for (double mag : mags) {
    Vec3r axis = pt::random_vec3(rng);
    axis = axis / axis.norm();
    const Mat3r r = rotation_exp(axis * mag);
    const Mat3r should_be_eye = r.transpose() * r;
    const Mat3r eye = Mat3r::identity();
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        CHECK(should_be_eye(i, j) ==
              doctest::Approx(eye(i, j)).epsilon(1e-12).scale(1.0));
    CHECK(r.det() == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("rotation_exp matches the closed form about z") {
  const double theta = 0.7;
  const Mat3r r = rotation_exp(Vec3r(0.0, 0.0, theta));
  CHECK(r(0, 0) == doctest::Approx(std::cos(theta)));
  CHECK(r(0, 1) == doctest::Approx(-std::sin(theta)));
  CHECK(r(1, 0) == doctest::Approx(std::sin(theta)));
  CHECK(r(1, 1) == doctest::Approx(std::cos(theta)));
  CHECK(r(2, 2) == doctest::Approx(1.0));
  CHECK(r(2, 0) == doctest::Approx(0.0).scale(1.0));
}

TEST_CASE("rotation_exp is continuous across the Taylor threshold") {
  // The series branch engages below |phi|^2 = 1e-12; straddle it.
  const Vec3r axis(0.36, -0.48, 0.8);  // unit
  const Mat3r below = rotation_exp(axis * 0.999e-6);
  const Mat3r above = rotation_exp(axis * 1.001e-6);
  CHECK(frobenius(below - above) < 1e-9);
}

TEST_CASE("rotation_log inverts rotation_exp") {
  auto& rng = pt::test_rng(205);
  for (int trial = 0; trial < 25; ++trial) {
    Vec3r axis = pt::random_vec3(rng);
    axis = axis / axis.norm();
    const double mag = pt::uniform(rng, 1e-8, 2.9);
    const Vec3r phi = axis * mag;
    set_active_params(0);
    const DVec3 back = rotation_log(promote(rotation_exp(phi)));
    CHECK(pt::rel_err(back.x.value(), phi.x) < 1e-6);
    CHECK(pt::rel_err(back.y.value(), phi.y) < 1e-6);
    CHECK(pt::rel_err(back.z.value(), phi.z) < 1e-6);
  }
}

TEST_CASE("rotation_log rejects rotations near pi") {
  const Mat3r half_turn = rotation_exp(Vec3r(0.0, 0.0, M_PI));
  CHECK_THROWS_AS(rotation_log(promote(half_turn)), Error);
}

TEST_CASE("rotation_rpy composes Rz Ry Rx") {
  auto& rng = pt::test_rng(206);
  for (int trial = 0; trial < 10; ++trial) {
    const Vec3r rpy = pt::random_vec3(rng, -1.5, 1.5);
    const Mat3r got = rotation_rpy(rpy);
    const Mat3r want = rotation_exp(Vec3r(0.0, 0.0, rpy.z)) *
                       rotation_exp(Vec3r(0.0, rpy.y, 0.0)) *
                       rotation_exp(Vec3r(rpy.x, 0.0, 0.0));
    CHECK(frobenius(got - want) < 1e-13);
  }
}

TEST_CASE("sym_eigen solves small symmetric problems") {
  auto& rng = pt::test_rng(207);
  const int n = 4;
  std::vector<double> a(n * n);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j)
      a[i * n + j] = a[j * n + i] = pt::uniform(rng, -3.0, 3.0);
  std::vector<double> vals, vecs;
  sym_eigen(n, a, &vals, &vecs);
  REQUIRE(static_cast<int>(vals.size()) == n);
  REQUIRE(static_cast<int>(vecs.size()) == n * n);
  // Columns of vecs are eigenvectors: A v_k == vals[k] v_k.
  for (int k = 0; k < n; ++k) {
    for (int i = 0; i < n; ++i) {
      double av = 0.0;
      for (int j = 0; j < n; ++j) av += a[i * n + j] * vecs[j * n + k];
      CHECK(av == doctest::Approx(vals[k] * vecs[i * n + k])
                      .epsilon(1e-10)
                      .scale(3.0));
    }
    // Orthonormality.
    for (int k2 = 0; k2 < n; ++k2) {
      double dot = 0.0;
      for (int i = 0; i < n; ++i) dot += vecs[i * n + k] * vecs[i * n + k2];
      CHECK(dot == doctest::Approx(k == k2 ? 1.0 : 0.0).scale(1.0));
    }
  }
}

TEST_CASE("sym_eigen rejects size mismatches") {
  std::vector<double> a(5, 0.0);
  std::vector<double> vals;
  CHECK_THROWS_AS(sym_eigen(3, a, &vals, nullptr), Error);
}

TEST_CASE("solve_dense recovers a known solution with tangents") {
  auto& rng = pt::test_rng(208);
  const int n = 5;
  const auto th = activate_params({1.3, 0.7});
  DenseMat a(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j)
      a(i, j) = DScalar(pt::uniform(rng, -1.0, 1.0)) + th[0] * 0.1;
    a(i, i) += DScalar(4.0) + th[1];  // diagonally dominant, parameter-coupled
  }
  std::vector<DScalar> x_true(n);
  for (int i = 0; i < n; ++i)
    x_true[i] = DScalar(pt::uniform(rng, -2.0, 2.0)) + th[i % 2] * 0.5;
  std::vector<DScalar> b(n, DScalar(0.0));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) b[i] += a(i, j) * x_true[j];
  const std::vector<DScalar> x = solve_dense(a, b);
  for (int i = 0; i < n; ++i) {
    CHECK(x[i].value() == doctest::Approx(x_true[i].value()).epsilon(1e-10));
    // The solve is linear, so tangents must ride through exactly.
    CHECK(x[i].tangent(0) ==
          doctest::Approx(x_true[i].tangent(0)).epsilon(1e-9).scale(1.0));
    CHECK(x[i].tangent(1) ==
          doctest::Approx(x_true[i].tangent(1)).epsilon(1e-9).scale(1.0));
  }
}

TEST_CASE("solve_dense identity and dimension checks") {
  set_active_params(0);
  DenseMat eye = DenseMat::identity(3);
  std::vector<DScalar> b = {DScalar(1.0), DScalar(-2.0), DScalar(7.0)};
  const auto x = solve_dense(eye, b);
  for (int i = 0; i < 3; ++i) CHECK(x[i].value() == b[i].value());
  CHECK_THROWS_AS(solve_dense(DenseMat(3), {DScalar(1.0)}), Error);
}

TEST_CASE("solve_dense reports singular pivots with context") {
  set_active_params(0);
  DenseMat a(3);
  a(0, 0) = 1.0;
  a(1, 1) = 1.0;  // third row/column left zero
  std::vector<DScalar> b(3, DScalar(1.0));
  try {
    solve_dense(a, b, "unit test");
    FAIL("expected SingularMatrixError");
  } catch (const SingularMatrixError& e) {
    CHECK(e.pivot() == 2);
    CHECK(std::string(e.what()).find("unit test") != std::string::npos);
  }
}

}  // TEST_SUITE
