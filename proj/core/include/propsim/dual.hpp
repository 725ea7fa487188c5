#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <ostream>
#include <vector>

#include "propsim/errors.hpp"

namespace propsim {

/// Hard upper bound on simultaneously active parameters. Every experiment in
/// this codebase identifies one or two scalars, so eight lanes is generous.
inline constexpr int kMaxParams = 8;

namespace detail {
// Number of tangent lanes arithmetic propagates. Set once per run, before any
// simulation starts (see set_active_params); never mutate while simulations
// are in flight on other threads.
inline int g_active_params = 0;
}  // namespace detail

inline int active_params() { return detail::g_active_params; }

inline void set_active_params(int n) {
  if (n < 0 || n > kMaxParams)
    throw Error("active parameter count must be in [0, " +
                std::to_string(kMaxParams) + "], got " + std::to_string(n));
  detail::g_active_params = n;
}

/// Scalar with exact forward-mode derivatives against the active parameter
/// vector. Plain doubles promote implicitly with zero tangents.
class DScalar {
 public:
  constexpr DScalar() : v_(0.0), t_{} {}
  constexpr DScalar(double v) : v_(v), t_{} {}  // NOLINT: implicit promotion

  static DScalar active(double v, int slot) {
    DScalar s(v);
    s.t_[slot] = 1.0;
    return s;
  }

  double value() const { return v_; }
  const std::array<double, kMaxParams>& tangents() const { return t_; }
  double tangent(int i) const { return t_[i]; }

  DScalar& operator+=(const DScalar& b) {
    v_ += b.v_;
    const int n = detail::g_active_params;
    for (int i = 0; i < n; ++i) t_[i] += b.t_[i];
    return *this;
  }
  DScalar& operator-=(const DScalar& b) {
    v_ -= b.v_;
    const int n = detail::g_active_params;
    for (int i = 0; i < n; ++i) t_[i] -= b.t_[i];
    return *this;
  }
  DScalar& operator*=(const DScalar& b) { return *this = *this * b; }
  DScalar& operator/=(const DScalar& b) { return *this = *this / b; }

  friend DScalar operator-(const DScalar& a) {
    DScalar r;
    r.v_ = -a.v_;
    const int n = detail::g_active_params;
    for (int i = 0; i < n; ++i) r.t_[i] = -a.t_[i];
    return r;
  }
  friend DScalar operator+(const DScalar& a, const DScalar& b) {
    DScalar r;
    r.v_ = a.v_ + b.v_;
    const int n = detail::g_active_params;
    for (int i = 0; i < n; ++i) r.t_[i] = a.t_[i] + b.t_[i];
    return r;
  }
  friend DScalar operator-(const DScalar& a, const DScalar& b) {
    DScalar r;
    r.v_ = a.v_ - b.v_;
    const int n = detail::g_active_params;
    for (int i = 0; i < n; ++i) r.t_[i] = a.t_[i] - b.t_[i];
    return r;
  }
  friend DScalar operator*(const DScalar& a, const DScalar& b) {
    DScalar r;
    r.v_ = a.v_ * b.v_;
    const int n = detail::g_active_params;
    for (int i = 0; i < n; ++i) r.t_[i] = a.t_[i] * b.v_ + a.v_ * b.t_[i];
    return r;
  }
  friend DScalar operator/(const DScalar& a, const DScalar& b) {
    DScalar r;
    const double inv = 1.0 / b.v_;
    r.v_ = a.v_ * inv;
    const int n = detail::g_active_params;
    for (int i = 0; i < n; ++i) r.t_[i] = (a.t_[i] - r.v_ * b.t_[i]) * inv;
    return r;
  }

  // Comparisons look at values only; branch selection is the caller's
  // subgradient choice.
  friend bool operator<(const DScalar& a, const DScalar& b) { return a.v_ < b.v_; }
  friend bool operator>(const DScalar& a, const DScalar& b) { return a.v_ > b.v_; }
  friend bool operator<=(const DScalar& a, const DScalar& b) { return a.v_ <= b.v_; }
  friend bool operator>=(const DScalar& a, const DScalar& b) { return a.v_ >= b.v_; }
  friend bool operator==(const DScalar& a, const DScalar& b) { return a.v_ == b.v_; }
  friend bool operator!=(const DScalar& a, const DScalar& b) { return a.v_ != b.v_; }

  friend std::ostream& operator<<(std::ostream& os, const DScalar& s) {
    return os << s.v_;
  }

 private:
  double v_;
  std::array<double, kMaxParams> t_;

  friend DScalar chain(double v, double dv, const DScalar& a);
};

/// Applies f with f(a.value) = v, f'(a.value) = dv to the tangents of a.
inline DScalar chain(double v, double dv, const DScalar& a) {
  DScalar r;
  r.v_ = v;
  const int n = detail::g_active_params;
  for (int i = 0; i < n; ++i) r.t_[i] = dv * a.t_[i];
  return r;
}

inline DScalar sqrt(const DScalar& a) {
  const double s = std::sqrt(a.value());
  return chain(s, 0.5 / s, a);
}
inline DScalar sin(const DScalar& a) {
  return chain(std::sin(a.value()), std::cos(a.value()), a);
}
inline DScalar cos(const DScalar& a) {
  return chain(std::cos(a.value()), -std::sin(a.value()), a);
}
inline DScalar exp(const DScalar& a) {
  const double e = std::exp(a.value());
  return chain(e, e, a);
}

/// Natural log. A non-positive argument yields NaN in both value and
/// tangents so the failure surfaces at the loss instead of silently biasing
/// gradients; callers that can name the offender (inverted elements) check
/// the argument themselves first.
inline DScalar log(const DScalar& a) {
  if (!(a.value() > 0.0)) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    return chain(nan, nan, a);
  }
  return chain(std::log(a.value()), 1.0 / a.value(), a);
}

inline DScalar abs(const DScalar& a) { return a.value() < 0.0 ? -a : a; }

inline DScalar atan2(const DScalar& y, const DScalar& x) {
  DScalar r = 0.0;
  const double v = std::atan2(y.value(), x.value());
  const double d = x.value() * x.value() + y.value() * y.value();
  // d(atan2)/dy = x/d, d(atan2)/dx = -y/d
  r = chain(0.0, x.value() / d, y) + chain(v, -y.value() / d, x);
  return r;
}

/// Ties take the first argument (and its tangent).
inline DScalar min(const DScalar& a, const DScalar& b) { return b < a ? b : a; }
inline DScalar max(const DScalar& a, const DScalar& b) { return b > a ? b : a; }

inline bool isfinite(const DScalar& a) { return std::isfinite(a.value()); }

inline double extract_value(const DScalar& s) { return s.value(); }

inline std::vector<double> extract_grad(const DScalar& s) {
  const int n = detail::g_active_params;
  return std::vector<double>(s.tangents().begin(), s.tangents().begin() + n);
}

/// Seeds the parameter vector: entry i gets value values[i] and unit tangent
/// e_i. Also (re)configures the global active lane count.
inline std::vector<DScalar> activate_params(const std::vector<double>& values) {
  if (values.empty()) throw Error("activate_params: empty parameter vector");
  if (static_cast<int>(values.size()) > kMaxParams)
    throw Error("activate_params: " + std::to_string(values.size()) +
                " parameters exceed the maximum of " + std::to_string(kMaxParams));
  set_active_params(static_cast<int>(values.size()));
  std::vector<DScalar> out;
  out.reserve(values.size());
  for (size_t i = 0; i < values.size(); ++i)
    out.push_back(DScalar::active(values[i], static_cast<int>(i)));
  return out;
}

}  // namespace propsim
