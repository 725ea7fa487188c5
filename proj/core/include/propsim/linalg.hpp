#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "propsim/dual.hpp"
#include "propsim/errors.hpp"

namespace propsim {

using std::abs;
using std::cos;
using std::max;
using std::min;
using std::sin;
using std::sqrt;

template <class T>
struct Vec3 {
  T x{}, y{}, z{};

  constexpr Vec3() = default;
  constexpr Vec3(T xx, T yy, T zz) : x(xx), y(yy), z(zz) {}

  static constexpr Vec3 zero() { return {}; }

  T& operator[](int i) { return i == 0 ? x : (i == 1 ? y : z); }
  const T& operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }

  Vec3 operator-() const { return {-x, -y, -z}; }
  Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  Vec3 operator*(const T& s) const { return {x * s, y * s, z * s}; }
  Vec3 operator/(const T& s) const { return {x / s, y / s, z / s}; }
  Vec3& operator+=(const Vec3& o) {
    x += o.x; y += o.y; z += o.z;
    return *this;
  }
  Vec3& operator-=(const Vec3& o) {
    x -= o.x; y -= o.y; z -= o.z;
    return *this;
  }
  Vec3& operator*=(const T& s) {
    x *= s; y *= s; z *= s;
    return *this;
  }

  friend Vec3 operator*(const T& s, const Vec3& v) { return v * s; }

  T dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
  Vec3 cross(const Vec3& o) const {
    return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
  }
  T squared_norm() const { return dot(*this); }
  T norm() const { return sqrt(dot(*this)); }
};

using Vec3r = Vec3<double>;
using DVec3 = Vec3<DScalar>;

inline DVec3 promote(const Vec3r& v) { return {v.x, v.y, v.z}; }
inline Vec3r values(const DVec3& v) {
  return {v.x.value(), v.y.value(), v.z.value()};
}

/// Row-major 3x3 matrix.
template <class T>
struct Mat3 {
  T m[3][3]{};

  static Mat3 identity() {
    Mat3 r;
    r.m[0][0] = r.m[1][1] = r.m[2][2] = T(1.0);
    return r;
  }
  static Mat3 zero() { return {}; }
  static Mat3 diagonal(const Vec3<T>& d) {
    Mat3 r;
    r.m[0][0] = d.x; r.m[1][1] = d.y; r.m[2][2] = d.z;
    return r;
  }
  static Mat3 skew(const Vec3<T>& v) {
    Mat3 r;
    r.m[0][1] = -v.z; r.m[0][2] = v.y;
    r.m[1][0] = v.z;  r.m[1][2] = -v.x;
    r.m[2][0] = -v.y; r.m[2][1] = v.x;
    return r;
  }
  static Mat3 outer(const Vec3<T>& a, const Vec3<T>& b) {
    Mat3 r;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) r.m[i][j] = a[i] * b[j];
    return r;
  }

  T& operator()(int i, int j) { return m[i][j]; }
  const T& operator()(int i, int j) const { return m[i][j]; }

  Vec3<T> row(int i) const { return {m[i][0], m[i][1], m[i][2]}; }
  Vec3<T> col(int j) const { return {m[0][j], m[1][j], m[2][j]}; }

  Mat3 operator+(const Mat3& o) const {
    Mat3 r;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) r.m[i][j] = m[i][j] + o.m[i][j];
    return r;
  }
  Mat3 operator-(const Mat3& o) const {
    Mat3 r;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) r.m[i][j] = m[i][j] - o.m[i][j];
    return r;
  }
  Mat3 operator-() const {
    Mat3 r;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) r.m[i][j] = -m[i][j];
    return r;
  }
  Mat3 operator*(const T& s) const {
    Mat3 r;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) r.m[i][j] = m[i][j] * s;
    return r;
  }
  Mat3& operator+=(const Mat3& o) {
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) m[i][j] += o.m[i][j];
    return *this;
  }
  Vec3<T> operator*(const Vec3<T>& v) const {
    return {m[0][0] * v.x + m[0][1] * v.y + m[0][2] * v.z,
            m[1][0] * v.x + m[1][1] * v.y + m[1][2] * v.z,
            m[2][0] * v.x + m[2][1] * v.y + m[2][2] * v.z};
  }
  Mat3 operator*(const Mat3& o) const {
    Mat3 r;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        r.m[i][j] = m[i][0] * o.m[0][j] + m[i][1] * o.m[1][j] + m[i][2] * o.m[2][j];
    return r;
  }
  Mat3 transpose() const {
    Mat3 r;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) r.m[i][j] = m[j][i];
    return r;
  }
  /// A^T * v without materializing the transpose.
  Vec3<T> transposed_mul(const Vec3<T>& v) const {
    return {m[0][0] * v.x + m[1][0] * v.y + m[2][0] * v.z,
            m[0][1] * v.x + m[1][1] * v.y + m[2][1] * v.z,
            m[0][2] * v.x + m[1][2] * v.y + m[2][2] * v.z};
  }
  T det() const {
    return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
           m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
           m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
  }
  Mat3 inverse() const {
    Mat3 r;
    const T c00 = m[1][1] * m[2][2] - m[1][2] * m[2][1];
    const T c01 = m[1][2] * m[2][0] - m[1][0] * m[2][2];
    const T c02 = m[1][0] * m[2][1] - m[1][1] * m[2][0];
    const T d = m[0][0] * c00 + m[0][1] * c01 + m[0][2] * c02;
    const T inv = T(1.0) / d;
    r.m[0][0] = c00 * inv;
    r.m[0][1] = (m[0][2] * m[2][1] - m[0][1] * m[2][2]) * inv;
    r.m[0][2] = (m[0][1] * m[1][2] - m[0][2] * m[1][1]) * inv;
    r.m[1][0] = c01 * inv;
    r.m[1][1] = (m[0][0] * m[2][2] - m[0][2] * m[2][0]) * inv;
    r.m[1][2] = (m[0][2] * m[1][0] - m[0][0] * m[1][2]) * inv;
    r.m[2][0] = c02 * inv;
    r.m[2][1] = (m[0][1] * m[2][0] - m[0][0] * m[2][1]) * inv;
    r.m[2][2] = (m[0][0] * m[1][1] - m[0][1] * m[1][0]) * inv;
    return r;
  }
};

using Mat3r = Mat3<double>;
using DMat3 = Mat3<DScalar>;

inline DMat3 promote(const Mat3r& a) {
  DMat3 r;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) r.m[i][j] = a.m[i][j];
  return r;
}
inline Mat3r values(const DMat3& a) {
  Mat3r r;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) r.m[i][j] = a.m[i][j].value();
  return r;
}

inline double value_of(double v) { return v; }
inline double value_of(const DScalar& v) { return v.value(); }

/// Rodrigues rotation exp([phi]x). Smooth through phi = 0: the sin/cos
/// coefficients switch to their Taylor forms in |phi|^2 below the threshold,
/// so tangents stay finite when the rotation increment vanishes.
template <class T>
Mat3<T> rotation_exp(const Vec3<T>& phi) {
  const T u = phi.squared_norm();  // theta^2
  T a, b;                          // sin(t)/t and (1-cos(t))/t^2
  if (value_of(u) < 1e-12) {
    a = T(1.0) - u / T(6.0) + u * u / T(120.0);
    b = T(0.5) - u / T(24.0) + u * u / T(720.0);
  } else {
    const T t = sqrt(u);
    a = sin(t) / t;
    b = (T(1.0) - cos(t)) / u;
  }
  const Mat3<T> k = Mat3<T>::skew(phi);
  return Mat3<T>::identity() + k * a + (k * k) * b;
}

inline Mat3r rotation_rpy(const Vec3r& rpy) {
  const double cr = std::cos(rpy.x), sr = std::sin(rpy.x);
  const double cp = std::cos(rpy.y), sp = std::sin(rpy.y);
  const double cy = std::cos(rpy.z), sy = std::sin(rpy.z);
  Mat3r r;
  r.m[0][0] = cy * cp;
  r.m[0][1] = cy * sp * sr - sy * cr;
  r.m[0][2] = cy * sp * cr + sy * sr;
  r.m[1][0] = sy * cp;
  r.m[1][1] = sy * sp * sr + cy * cr;
  r.m[1][2] = sy * sp * cr - cy * sr;
  r.m[2][0] = -sp;
  r.m[2][1] = cp * sr;
  r.m[2][2] = cp * cr;
  return r;
}

/// Symmetric eigendecomposition of a small plain matrix (row-major, n x n)
/// by cyclic Jacobi rotations. Eigenvectors come back as the columns of
/// `vecs` (also row-major); eigenvalues are unsorted.
inline void sym_eigen(int n, std::vector<double> a,
                      std::vector<double>* vals, std::vector<double>* vecs) {
  if (static_cast<int>(a.size()) != n * n)
    throw Error("sym_eigen: matrix size mismatch");
  std::vector<double> v(static_cast<size_t>(n) * n, 0.0);
  for (int i = 0; i < n; ++i) v[i * n + i] = 1.0;
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0, diag = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        (i == j ? diag : off) += a[i * n + j] * a[i * n + j];
    if (off <= 1e-28 * std::max(diag, 1e-300)) break;
    for (int p = 0; p < n - 1; ++p) {
      for (int q = p + 1; q < n; ++q) {
        const double apq = a[p * n + q];
        if (apq == 0.0) continue;
        const double theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (int k = 0; k < n; ++k) {
          const double akp = a[k * n + p], akq = a[k * n + q];
          a[k * n + p] = c * akp - s * akq;
          a[k * n + q] = s * akp + c * akq;
        }
        for (int k = 0; k < n; ++k) {
          const double apk = a[p * n + k], aqk = a[q * n + k];
          a[p * n + k] = c * apk - s * aqk;
          a[q * n + k] = s * apk + c * aqk;
        }
        for (int k = 0; k < n; ++k) {
          const double vkp = v[k * n + p], vkq = v[k * n + q];
          v[k * n + p] = c * vkp - s * vkq;
          v[k * n + q] = s * vkp + c * vkq;
        }
      }
    }
  }
  vals->resize(n);
  for (int i = 0; i < n; ++i) (*vals)[i] = a[i * n + i];
  if (vecs) *vecs = std::move(v);
}

/// Dense n-by-n system of dual scalars, n = DoF count (tiny). Solved by LU
/// with partial pivoting; tangents ride along through the factorization.
class DenseMat {
 public:
  DenseMat() : n_(0) {}
  explicit DenseMat(int n) : n_(n), a_(static_cast<size_t>(n) * n) {}

  static DenseMat identity(int n) {
    DenseMat r(n);
    for (int i = 0; i < n; ++i) r(i, i) = 1.0;
    return r;
  }

  int size() const { return n_; }
  DScalar& operator()(int i, int j) { return a_[static_cast<size_t>(i) * n_ + j]; }
  const DScalar& operator()(int i, int j) const {
    return a_[static_cast<size_t>(i) * n_ + j];
  }

 private:
  int n_;
  std::vector<DScalar> a_;
};

/// Solves A x = b. Pivot magnitudes below 1e-12 times the largest entry of A
/// raise SingularMatrixError carrying the failing pivot index.
inline std::vector<DScalar> solve_dense(DenseMat a, std::vector<DScalar> b,
                                        const std::string& context = "") {
  const int n = a.size();
  if (static_cast<int>(b.size()) != n)
    throw Error("solve_dense: dimension mismatch");
  double amax = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) amax = std::max(amax, std::abs(a(i, j).value()));
  const double tol = 1e-12 * (amax > 0.0 ? amax : 1.0);

  for (int k = 0; k < n; ++k) {
    int piv = k;
    double best = std::abs(a(k, k).value());
    for (int i = k + 1; i < n; ++i) {
      const double cand = std::abs(a(i, k).value());
      if (cand > best) {
        best = cand;
        piv = i;
      }
    }
    if (!(best > tol)) throw SingularMatrixError(k, context);
    if (piv != k) {
      for (int j = k; j < n; ++j) std::swap(a(k, j), a(piv, j));
      std::swap(b[k], b[piv]);
    }
    const DScalar inv = DScalar(1.0) / a(k, k);
    for (int i = k + 1; i < n; ++i) {
      const DScalar f = a(i, k) * inv;
      if (f.value() == 0.0) continue;
      for (int j = k + 1; j < n; ++j) a(i, j) -= f * a(k, j);
      b[i] -= f * b[k];
    }
  }
  std::vector<DScalar> x(static_cast<size_t>(n));
  for (int i = n - 1; i >= 0; --i) {
    DScalar s = b[i];
    for (int j = i + 1; j < n; ++j) s -= a(i, j) * x[j];
    x[i] = s / a(i, i);
  }
  return x;
}

}  // namespace propsim
