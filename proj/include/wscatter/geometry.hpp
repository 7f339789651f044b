#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <variant>

#include "wscatter/error.hpp"

/// Euclidean primitives in a fixed ambient dimension N (2 <= N <= 8).
/// Every algorithm is a template on N, so each dimension gets its own
/// unrolled hot path; runtime dimension selection happens once at the top
/// (see `dispatch_dimension`).
namespace wscatter::geometry {

inline constexpr std::size_t kMinDim = 2;
inline constexpr std::size_t kMaxDim = 8;

/// Intersections closer than this along a ray are discarded.
inline constexpr double kMinClip = 1e-9;
/// Tolerance for "point lies on the container boundary".
inline constexpr double kBoundaryTol = 1e-9;
/// Tolerance on |v| - 1 for unit vectors.
inline constexpr double kUnitTol = 1e-12;

template <std::size_t N>
struct Vec {
  static_assert(N >= kMinDim && N <= kMaxDim, "ambient dimension must be in [2, 8]");
  std::array<double, N> c{};

  static constexpr std::size_t dim = N;

  constexpr double& operator[](std::size_t i) { return c[i]; }
  constexpr double operator[](std::size_t i) const { return c[i]; }

  static constexpr Vec zero() { return Vec{}; }
  static constexpr Vec axis(std::size_t i, double scale = 1.0) {
    Vec v{};
    v.c[i] = scale;
    return v;
  }

  constexpr Vec& operator+=(const Vec& o) {
    for (std::size_t i = 0; i < N; ++i) c[i] += o.c[i];
    return *this;
  }
  constexpr Vec& operator-=(const Vec& o) {
    for (std::size_t i = 0; i < N; ++i) c[i] -= o.c[i];
    return *this;
  }
  constexpr Vec& operator*=(double s) {
    for (auto& x : c) x *= s;
    return *this;
  }
  friend constexpr Vec operator+(Vec a, const Vec& b) { return a += b; }
  friend constexpr Vec operator-(Vec a, const Vec& b) { return a -= b; }
  friend constexpr Vec operator*(Vec a, double s) { return a *= s; }
  friend constexpr Vec operator*(double s, Vec a) { return a *= s; }
  friend constexpr Vec operator-(Vec a) { return a *= -1.0; }
  friend constexpr bool operator==(const Vec&, const Vec&) = default;

  bool finite() const {
    return std::all_of(c.begin(), c.end(), [](double x) { return std::isfinite(x); });
  }
};

template <std::size_t N>
using Point = Vec<N>;

template <std::size_t N>
constexpr double dot(const Vec<N>& a, const Vec<N>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < N; ++i) s += a[i] * b[i];
  return s;
}

template <std::size_t N>
constexpr double norm2(const Vec<N>& a) {
  return dot(a, a);
}

template <std::size_t N>
double norm(const Vec<N>& a) {
  return std::sqrt(norm2(a));
}

template <std::size_t N>
double distance(const Vec<N>& a, const Vec<N>& b) {
  return norm(a - b);
}

/// A direction with Euclidean norm within `kUnitTol` of one.
template <std::size_t N>
class UnitVector {
 public:
  /// Checked construction from a vector that is already unit-norm.
  explicit UnitVector(const Vec<N>& v) : v_(v) {
    if (std::abs(norm(v) - 1.0) > kUnitTol) {
      throw Error(ErrorCode::NotUnitVector, "norm deviates from 1 by more than 1e-12");
    }
  }

  static UnitVector normalize(const Vec<N>& v) {
    const double n = norm(v);
    if (!(n > 0.0) || !std::isfinite(n)) {
      throw Error(ErrorCode::NotUnitVector, "cannot normalize a zero or non-finite vector");
    }
    return UnitVector(v * (1.0 / n), Trusted{});
  }

  /// Skips the norm check; for hot paths whose caller asserts unit speed.
  static UnitVector trusted(const Vec<N>& v) { return UnitVector(v, Trusted{}); }

  static UnitVector axis(std::size_t i, double sign = 1.0) {
    return UnitVector(Vec<N>::axis(i, sign < 0 ? -1.0 : 1.0), Trusted{});
  }

  const Vec<N>& vec() const { return v_; }
  double operator[](std::size_t i) const { return v_[i]; }
  UnitVector operator-() const { return UnitVector(-v_, Trusted{}); }
  operator const Vec<N>&() const { return v_; }

 private:
  struct Trusted {};
  UnitVector(const Vec<N>& v, Trusted) : v_(v) {}
  Vec<N> v_;
};

template <std::size_t N>
double dot(const UnitVector<N>& a, const Vec<N>& b) {
  return dot(a.vec(), b);
}

template <std::size_t N>
struct Ray {
  Point<N> origin;
  UnitVector<N> direction;

  Point<N> at(double t) const { return origin + direction.vec() * t; }
};

template <std::size_t N>
struct Ball {
  Point<N> center;
  double radius;
};

template <std::size_t N>
struct AxisBox {
  Point<N> min;
  Point<N> max;
};

/// Convex container M: a ball or an axis-aligned box.
template <std::size_t N>
class Container {
 public:
  explicit Container(Ball<N> ball) : shape_(ball) {
    if (!(ball.radius > 0.0) || !std::isfinite(ball.radius) || !ball.center.finite()) {
      throw Error(ErrorCode::InvalidArgument, "ball container needs a finite center and radius > 0");
    }
  }
  explicit Container(AxisBox<N> box) : shape_(box) {
    if (!box.min.finite() || !box.max.finite()) {
      throw Error(ErrorCode::InvalidArgument, "box container corners must be finite");
    }
    for (std::size_t i = 0; i < N; ++i) {
      if (!(box.min[i] < box.max[i])) {
        throw Error(ErrorCode::InvalidArgument, "box container needs min < max componentwise");
      }
    }
  }

  static Container unit_ball() { return Container(Ball<N>{Point<N>::zero(), 1.0}); }

  const std::variant<Ball<N>, AxisBox<N>>& shape() const { return shape_; }
  bool is_ball() const { return std::holds_alternative<Ball<N>>(shape_); }
  const Ball<N>& ball() const { return std::get<Ball<N>>(shape_); }
  const AxisBox<N>& box() const { return std::get<AxisBox<N>>(shape_); }

  double diameter() const {
    if (is_ball()) return 2.0 * ball().radius;
    return distance(box().min, box().max);
  }

  /// Distance from an interior point to the boundary (negative outside).
  double depth(const Point<N>& p) const {
    if (is_ball()) return ball().radius - distance(p, ball().center);
    double d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < N; ++i) {
      d = std::min({d, p[i] - box().min[i], box().max[i] - p[i]});
    }
    return d;
  }

  AxisBox<N> bounding_box() const {
    if (!is_ball()) return box();
    AxisBox<N> b{ball().center, ball().center};
    for (std::size_t i = 0; i < N; ++i) {
      b.min[i] -= ball().radius;
      b.max[i] += ball().radius;
    }
    return b;
  }

 private:
  std::variant<Ball<N>, AxisBox<N>> shape_;
};

/// Specular reflection of v in the hyperplane with unit normal `nrm`.
template <std::size_t N>
UnitVector<N> reflect(const UnitVector<N>& v, const UnitVector<N>& nrm) {
  const double vn = dot(v.vec(), nrm.vec());
  return UnitVector<N>::trusted(v.vec() - nrm.vec() * (2.0 * vn));
}

/// Real roots t0 <= t1 of |o + t d - c|^2 = r^2 for unit d, or nothing.
/// Uses the cancellation-free form t = c/q, q = -(b + sign(b) sqrt(disc)).
template <std::size_t N>
std::optional<std::array<double, 2>> sphere_roots(const Ray<N>& ray, const Point<N>& center,
                                                  double radius) {
  const Vec<N> oc = ray.origin - center;
  const double b = dot(oc, ray.direction.vec());
  const double c = norm2(oc) - radius * radius;
  // r^2 - |perpendicular offset|^2 instead of b^2 - c, which cancels for distant rays.
  const Vec<N> perp = oc - ray.direction.vec() * b;
  const double disc = (radius - norm(perp)) * (radius + norm(perp));
  if (disc < 0.0) return std::nullopt;
  const double s = std::sqrt(disc);
  const double q = (b >= 0.0) ? -(b + s) : -(b - s);
  double t0;
  double t1;
  if (q == 0.0) {
    t0 = t1 = 0.0;
  } else {
    t0 = q;
    t1 = c / q;
  }
  if (t0 > t1) std::swap(t0, t1);
  return std::array<double, 2>{t0, t1};
}

/// Smallest t > kMinClip at which the ray meets the sphere, or nothing.
template <std::size_t N>
std::optional<double> ray_hit_sphere(const Ray<N>& ray, const Point<N>& center, double radius) {
  const auto roots = sphere_roots(ray, center, radius);
  if (!roots) return std::nullopt;
  if ((*roots)[0] > kMinClip) return (*roots)[0];
  if ((*roots)[1] > kMinClip) return (*roots)[1];
  return std::nullopt;
}

/// Distance along the ray to where it leaves the convex container.
template <std::size_t N>
double ray_exit_convex(const Ray<N>& ray, const Container<N>& m) {
  if (m.depth(ray.origin) < -kBoundaryTol) {
    throw Error(ErrorCode::OriginOutside, "ray origin lies outside the container");
  }
  if (m.is_ball()) {
    const auto& ball = m.ball();
    const Vec<N> oc = ray.origin - ball.center;
    const double b = dot(oc, ray.direction.vec());
    const double c = norm2(oc) - ball.radius * ball.radius;
    const double disc = std::max(b * b - c, 0.0);
    const double s = std::sqrt(disc);
    // far root -b + s, written without cancellation when b > 0
    const double t = (b <= 0.0) ? s - b : (s + b > 0.0 ? -c / (s + b) : 0.0);
    return std::max(t, 0.0);
  }
  const auto& box = m.box();
  double t = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < N; ++i) {
    const double d = ray.direction[i];
    if (d > 0.0) {
      t = std::min(t, (box.max[i] - ray.origin[i]) / d);
    } else if (d < 0.0) {
      t = std::min(t, (box.min[i] - ray.origin[i]) / d);
    }
  }
  return std::max(t, 0.0);
}

/// Unit outward normal of the container at a boundary point. On box edges
/// and corners the face of the nearest wall wins.
template <std::size_t N>
UnitVector<N> outward_normal(const Container<N>& m, const Point<N>& p) {
  if (m.is_ball()) {
    const auto& ball = m.ball();
    const Vec<N> d = p - ball.center;
    if (std::abs(norm(d) - ball.radius) > kBoundaryTol) {
      throw Error(ErrorCode::NotOnBoundary, "point is not on the ball boundary");
    }
    return UnitVector<N>::normalize(d);
  }
  const auto& box = m.box();
  double best = std::numeric_limits<double>::infinity();
  std::size_t axis = 0;
  double sign = 1.0;
  for (std::size_t i = 0; i < N; ++i) {
    const double lo = std::abs(p[i] - box.min[i]);
    const double hi = std::abs(box.max[i] - p[i]);
    if (lo < best) {
      best = lo;
      axis = i;
      sign = -1.0;
    }
    if (hi < best) {
      best = hi;
      axis = i;
      sign = 1.0;
    }
  }
  if (best > kBoundaryTol || m.depth(p) < -kBoundaryTol) {
    throw Error(ErrorCode::NotOnBoundary, "point is not on the box boundary");
  }
  return UnitVector<N>::axis(axis, sign);
}

/// Calls `f(std::integral_constant<std::size_t, N>{})` for the runtime
/// dimension `n` in [2, 8].
template <typename F>
decltype(auto) dispatch_dimension(std::size_t n, F&& f) {
  switch (n) {
    case 2: return f(std::integral_constant<std::size_t, 2>{});
    case 3: return f(std::integral_constant<std::size_t, 3>{});
    case 4: return f(std::integral_constant<std::size_t, 4>{});
    case 5: return f(std::integral_constant<std::size_t, 5>{});
    case 6: return f(std::integral_constant<std::size_t, 6>{});
    case 7: return f(std::integral_constant<std::size_t, 7>{});
    case 8: return f(std::integral_constant<std::size_t, 8>{});
    default:
      throw Error(ErrorCode::InvalidArgument,
                  "ambient dimension " + std::to_string(n) + " outside [2, 8]");
  }
}

}  // namespace wscatter::geometry
