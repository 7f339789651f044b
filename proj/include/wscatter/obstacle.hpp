#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "wscatter/error.hpp"
#include "wscatter/geometry.hpp"
#include "wscatter/rng.hpp"

/// Tubes T(K, eps) around canonical cores: exact signed-distance tubes and
/// finite unions of eps-balls centered on the core ("bubble" tubes).
namespace wscatter::obstacle {

using geometry::AxisBox;
using geometry::Point;
using geometry::Ray;
using geometry::UnitVector;
using geometry::Vec;

/// Round circle of radius r in the x1x2 coordinate plane, centered at 0.
struct Circle {
  double radius;
};

/// Round k-sphere of radius a in the first k+1 coordinates, centered at 0.
struct RoundSphere {
  int k;
  double radius;
};

/// (a cos t, a sin t, a cos s, a sin s) in the first four coordinates.
struct CliffordTorus {
  double radius;
};

using CoreShape = std::variant<Circle, RoundSphere, CliffordTorus>;

inline int core_dimension(const CoreShape& core) {
  return std::visit(
      [](const auto& s) -> int {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, Circle>) return 1;
        else if constexpr (std::is_same_v<S, RoundSphere>) return s.k;
        else return 2;
      },
      core);
}

/// Smallest ambient dimension the core embeds in.
inline std::size_t core_min_ambient(const CoreShape& core) {
  return std::visit(
      [](const auto& s) -> std::size_t {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, Circle>) return 2;
        else if constexpr (std::is_same_v<S, RoundSphere>) return static_cast<std::size_t>(s.k) + 1;
        else return 4;
      },
      core);
}

/// Normal injectivity radius; tubes are embedded disk bundles below it.
inline double reach(const CoreShape& core) {
  return std::visit([](const auto& s) { return s.radius; }, core);
}

inline std::string describe(const CoreShape& core) {
  return std::visit(
      [](const auto& s) -> std::string {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, Circle>) return "circle(r=" + std::to_string(s.radius) + ")";
        else if constexpr (std::is_same_v<S, RoundSphere>)
          return "sphere(k=" + std::to_string(s.k) + ", a=" + std::to_string(s.radius) + ")";
        else return "clifford(a=" + std::to_string(s.radius) + ")";
      },
      core);
}

/// Throws unless the core is well formed and fits in dimension N.
template <std::size_t N>
void validate_core(const CoreShape& core) {
  const double r = reach(core);
  if (!(r > 0.0) || !std::isfinite(r)) {
    throw Error(ErrorCode::InvalidArgument, "core radius must be finite and > 0");
  }
  if (const auto* s = std::get_if<RoundSphere>(&core); s && s->k < 1) {
    throw Error(ErrorCode::InvalidArgument, "round sphere needs k >= 1");
  }
  if (core_min_ambient(core) > N) {
    throw Error(ErrorCode::InvalidArgument,
                describe(core) + " does not embed in dimension " + std::to_string(N));
  }
}

namespace detail {

// Radial norm of coordinates [first, last) and the sum of squares of the rest.
template <std::size_t N>
double block_norm(const Vec<N>& p, std::size_t first, std::size_t last) {
  double s = 0.0;
  for (std::size_t i = first; i < last; ++i) s += p[i] * p[i];
  return std::sqrt(s);
}

template <std::size_t N>
double tail_norm2(const Vec<N>& p, std::size_t first) {
  double s = 0.0;
  for (std::size_t i = first; i < N; ++i) s += p[i] * p[i];
  return s;
}

// Radial projection of block [first, last) onto the round sphere of radius a;
// on the axis the first coordinate of the block is used.
template <std::size_t N>
void project_block(const Vec<N>& p, Vec<N>& out, std::size_t first, std::size_t last, double a) {
  const double rho = block_norm(p, first, last);
  if (rho > 0.0) {
    for (std::size_t i = first; i < last; ++i) out[i] = a * p[i] / rho;
  } else {
    out[first] = a;
  }
}

}  // namespace detail

/// Nearest point of the core to p (any nearest point on the medial axis).
template <std::size_t N>
Point<N> closest_core_point(const CoreShape& core, const Point<N>& p) {
  Point<N> q{};
  std::visit(
      [&](const auto& s) {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, Circle>) {
          detail::project_block(p, q, 0, 2, s.radius);
        } else if constexpr (std::is_same_v<S, RoundSphere>) {
          detail::project_block(p, q, 0, static_cast<std::size_t>(s.k) + 1, s.radius);
        } else {
          detail::project_block(p, q, 0, 2, s.radius);
          detail::project_block(p, q, 2, 4, s.radius);
        }
      },
      core);
  return q;
}

/// Euclidean distance from p to the core, in closed form.
template <std::size_t N>
double core_distance(const CoreShape& core, const Point<N>& p) {
  return std::visit(
      [&](const auto& s) -> double {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, Circle>) {
          const double dr = detail::block_norm(p, 0, 2) - s.radius;
          return std::sqrt(dr * dr + detail::tail_norm2(p, 2));
        } else if constexpr (std::is_same_v<S, RoundSphere>) {
          const auto m = static_cast<std::size_t>(s.k) + 1;
          const double dr = detail::block_norm(p, 0, m) - s.radius;
          return std::sqrt(dr * dr + detail::tail_norm2(p, m));
        } else {
          const double d1 = detail::block_norm(p, 0, 2) - s.radius;
          const double d2 = detail::block_norm(p, 2, 4) - s.radius;
          return std::sqrt(d1 * d1 + d2 * d2 + detail::tail_norm2(p, 4));
        }
      },
      core);
}

/// Deterministic core samples: angular grid for circles, a Fibonacci
/// lattice for 2-spheres, a product grid for the Clifford torus. Higher
/// spheres use normalized Gaussian draws from a fixed stream.
template <std::size_t N>
std::vector<Point<N>> core_points(const CoreShape& core, std::size_t count) {
  validate_core<N>(core);
  std::vector<Point<N>> pts;
  pts.reserve(count);
  const double two_pi = 2.0 * std::numbers::pi;
  std::visit(
      [&](const auto& s) {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, Circle>) {
          for (std::size_t i = 0; i < count; ++i) {
            const double t = two_pi * static_cast<double>(i) / static_cast<double>(count);
            Point<N> p{};
            p[0] = s.radius * std::cos(t);
            p[1] = s.radius * std::sin(t);
            pts.push_back(p);
          }
        } else if constexpr (std::is_same_v<S, RoundSphere>) {
          if (s.k == 1) {
            for (auto& p : core_points<N>(Circle{s.radius}, count)) pts.push_back(p);
          } else if (s.k == 2 && N >= 3) {
            const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
            for (std::size_t i = 0; i < count; ++i) {
              const double z = 1.0 - (2.0 * static_cast<double>(i) + 1.0) / static_cast<double>(count);
              const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
              const double phi = golden * static_cast<double>(i);
              Point<N> p{};
              p[0] = s.radius * rho * std::cos(phi);
              p[1] = s.radius * rho * std::sin(phi);
              if constexpr (N >= 3) p[2] = s.radius * z;
              pts.push_back(p);
            }
          } else {
            const auto m = static_cast<std::size_t>(s.k) + 1;
            for (std::size_t i = 0; i < count; ++i) {
              rng::Stream st(0x5EEDC0DEull, i, rng::Domain::Core);
              Point<N> g{};
              for (std::size_t j = 0; j < m; ++j) g[j] = st.normal();
              pts.push_back(g * (s.radius / geometry::norm(g)));
            }
          }
        } else {
          auto side = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(count))));
          side = std::max<std::size_t>(side, 1);
          for (std::size_t i = 0; i < side && pts.size() < count; ++i) {
            for (std::size_t j = 0; j < side && pts.size() < count; ++j) {
              const double t = two_pi * static_cast<double>(i) / static_cast<double>(side);
              const double u = two_pi * static_cast<double>(j) / static_cast<double>(side);
              Point<N> p{};
              p[0] = s.radius * std::cos(t);
              p[1] = s.radius * std::sin(t);
              if constexpr (N >= 4) {
                p[2] = s.radius * std::cos(u);
                p[3] = s.radius * std::sin(u);
              }
              pts.push_back(p);
            }
          }
        }
      },
      core);
  return pts;
}

/// Exact distance tube {p : dist(p, K) <= eps}.
template <std::size_t N>
class WeylTube {
 public:
  WeylTube(CoreShape core, double epsilon) : core_(core), epsilon_(epsilon) {
    validate_core<N>(core_);
    if (!(epsilon_ > 0.0) || !std::isfinite(epsilon_)) {
      throw Error(ErrorCode::InvalidTube, "tube radius must be finite and > 0");
    }
    if (!(epsilon_ < reach(core_))) {
      throw Error(ErrorCode::InvalidTube, "tube radius " + std::to_string(epsilon_) +
                                              " is not below the reach " +
                                              std::to_string(reach(core_)) + " of " +
                                              describe(core_));
    }
  }

  const CoreShape& core() const { return core_; }
  double epsilon() const { return epsilon_; }

  /// Radius of a ball about the origin containing the tube.
  double bounding_radius() const {
    const double r = reach(core_);
    const double scale = std::holds_alternative<CliffordTorus>(core_) ? std::sqrt(2.0) : 1.0;
    return r * scale + epsilon_;
  }

  AxisBox<N> bounding_box() const {
    AxisBox<N> b{};
    const double r = reach(core_);
    std::size_t wide = 2;
    if (const auto* s = std::get_if<RoundSphere>(&core_)) wide = static_cast<std::size_t>(s->k) + 1;
    if (std::holds_alternative<CliffordTorus>(core_)) wide = 4;
    for (std::size_t i = 0; i < N; ++i) {
      const double h = (i < wide ? r : 0.0) + epsilon_;
      b.min[i] = -h;
      b.max[i] = h;
    }
    return b;
  }

  bool contains(const Point<N>& p) const { return core_distance(core_, p) <= epsilon_; }

 private:
  CoreShape core_;
  double epsilon_;
};

/// Signed distance to the tube boundary: negative inside, zero on it.
template <std::size_t N>
double sdf(const WeylTube<N>& tube, const Point<N>& p) {
  return core_distance(tube.core(), p) - tube.epsilon();
}

/// Analytic gradient of `sdf`; the outward normal on the tube boundary.
template <std::size_t N>
UnitVector<N> sdf_gradient(const WeylTube<N>& tube, const Point<N>& p) {
  const Vec<N> d = p - closest_core_point(tube.core(), p);
  if (geometry::norm(d) < 1e-9) {
    throw Error(ErrorCode::CoreSingularity, "gradient requested on the core");
  }
  return UnitVector<N>::normalize(d);
}

template <std::size_t N>
struct SurfaceHit {
  double t;
  Point<N> point;
  UnitVector<N> normal;  // outward from the tube
  bool corner = false;
  std::optional<std::size_t> sphere_index;
};

struct SphereTraceOptions {
  double safety = 0.99;
  double min_step = 1e-6;
  std::size_t max_steps = 100000;
  int bisection_iters = 60;
  int newton_iters = 5;
  double surface_tol = 1e-10;
};

/// First crossing of the tube boundary along the ray within (kMinClip, t_max].
/// Marches with step = safety * sdf (the sdf is 1-Lipschitz), never less
/// than `min_step`; a sign change is refined by bisection then Newton.
/// Chords shorter than `min_step` are tangential and may be missed.
template <std::size_t N>
std::optional<SurfaceHit<N>> sphere_trace(const WeylTube<N>& tube, const Ray<N>& ray, double t_max,
                                          const SphereTraceOptions& opt = {}) {
  auto f = [&](double t) { return sdf(tube, ray.at(t)); };

  double t = 0.0;
  double d = f(t);
  if (d < -1e-8) {
    throw Error(ErrorCode::OriginInsideTube, "sphere trace started inside the tube");
  }
  bool seen_outside = d > 0.0;
  double t_out = t;

  // Skip the whole march when the ray clears the bounding ball.
  {
    const double R = tube.bounding_radius();
    const double b = geometry::dot(ray.origin, ray.direction.vec());
    const double c = geometry::norm2(ray.origin) - R * R;
    if (c > 0.0 && (b >= 0.0 || b * b - c < 0.0)) return std::nullopt;
  }

  std::optional<double> hi;
  for (std::size_t step = 0;; ++step) {
    if (step >= opt.max_steps) {
      throw Error(ErrorCode::StepLimitExceeded, "sphere trace exhausted its step budget");
    }
    if (t >= t_max) break;
    double t_next = t + std::max(opt.safety * d, opt.min_step);
    if (t_next > t_max) t_next = t_max;
    const double d_next = f(t_next);
    if (d_next < 0.0 && seen_outside && t_next > geometry::kMinClip) {
      hi = t_next;
      break;
    }
    t = t_next;
    d = d_next;
    if (d > 0.0) {
      seen_outside = true;
      t_out = t;
    }
  }
  if (!hi) return std::nullopt;

  double lo = t_out;
  double up = *hi;
  for (int i = 0; i < opt.bisection_iters; ++i) {
    const double mid = 0.5 * (lo + up);
    if (mid <= lo || mid >= up) break;
    if (f(mid) > 0.0) lo = mid;
    else up = mid;
  }
  double root = (std::abs(f(lo)) <= std::abs(f(up))) ? lo : up;
  for (int i = 0; i < opt.newton_iters; ++i) {
    const double fr = f(root);
    if (fr == 0.0) break;
    const Point<N> p = ray.at(root);
    const double slope = geometry::dot(sdf_gradient(tube, p).vec(), ray.direction.vec());
    if (slope == 0.0) break;
    const double cand = root - fr / slope;
    if (!(cand >= lo && cand <= up) || std::abs(f(cand)) >= std::abs(fr)) break;
    root = cand;
  }
  if (root <= geometry::kMinClip) return std::nullopt;
  const Point<N> p = ray.at(root);
  if (std::abs(sdf(tube, p)) >= opt.surface_tol) {
    throw Error(ErrorCode::StepLimitExceeded, "root refinement did not reach the surface tolerance");
  }
  return SurfaceHit<N>{root, p, sdf_gradient(tube, p), false, std::nullopt};
}

/// Finite union of closed eps-balls with centers on the core.
template <std::size_t N>
class BubbleTube {
 public:
  BubbleTube(std::vector<Point<N>> centers, double epsilon, double corner_tolerance)
      : centers_(std::move(centers)), epsilon_(epsilon), corner_tol_(corner_tolerance) {
    if (centers_.empty()) throw Error(ErrorCode::InvalidTube, "bubble tube needs at least one ball");
    if (!(epsilon_ > 0.0) || !(corner_tol_ > 0.0)) {
      throw Error(ErrorCode::InvalidTube, "ball radius and corner tolerance must be > 0");
    }
    for (std::size_t i = 0; i < centers_.size(); ++i) {
      bounding_radius_ = std::max(bounding_radius_, geometry::norm(centers_[i]) + epsilon_);
      for (std::size_t j = i + 1; j < centers_.size(); ++j) {
        const double d = geometry::distance(centers_[i], centers_[j]);
        if (d < 1e-12) {
          throw Error(ErrorCode::InvalidTube, "bubble centers " + std::to_string(i) + " and " +
                                                  std::to_string(j) + " coincide");
        }
        if (std::abs(d - 2.0 * epsilon_) < 1e-12 * epsilon_) {
          throw Error(ErrorCode::InvalidTube, "bubble spheres " + std::to_string(i) + " and " +
                                                  std::to_string(j) + " are tangent");
        }
      }
    }
  }

  const std::vector<Point<N>>& centers() const { return centers_; }
  double epsilon() const { return epsilon_; }
  double corner_tolerance() const { return corner_tol_; }
  double bounding_radius() const { return bounding_radius_; }

  AxisBox<N> bounding_box() const {
    AxisBox<N> b{centers_.front(), centers_.front()};
    for (const auto& c : centers_) {
      for (std::size_t i = 0; i < N; ++i) {
        b.min[i] = std::min(b.min[i], c[i]);
        b.max[i] = std::max(b.max[i], c[i]);
      }
    }
    for (std::size_t i = 0; i < N; ++i) {
      b.min[i] -= epsilon_;
      b.max[i] += epsilon_;
    }
    return b;
  }

  bool contains(const Point<N>& p) const {
    const double e2 = epsilon_ * epsilon_;
    return std::any_of(centers_.begin(), centers_.end(),
                       [&](const Point<N>& c) { return geometry::norm2(p - c) <= e2; });
  }

 private:
  std::vector<Point<N>> centers_;
  double epsilon_;
  double corner_tol_;
  double bounding_radius_ = 0.0;
};

/// Default corner tolerance relative to the ball radius.
inline constexpr double kCornerTolFactor = 1e-7;

/// Nearest entry into the union of balls. Candidate points lying inside a
/// neighbouring ball are not reflective surface and are skipped.
template <std::size_t N>
std::optional<SurfaceHit<N>> bubble_ray_hit(const BubbleTube<N>& tube, const Ray<N>& ray) {
  {
    const double R = tube.bounding_radius();
    const double b = geometry::dot(ray.origin, ray.direction.vec());
    const double c = geometry::norm2(ray.origin) - R * R;
    if (c > 0.0 && (b >= 0.0 || b * b - c < 0.0)) return std::nullopt;
  }
  const auto& centers = tube.centers();
  const double eps = tube.epsilon();
  const double inner = eps - 1e-12;

  auto interior_to_other = [&](const Point<N>& p, std::size_t self) {
    for (std::size_t j = 0; j < centers.size(); ++j) {
      if (j != self && geometry::norm2(p - centers[j]) < inner * inner) return true;
    }
    return false;
  };

  std::optional<SurfaceHit<N>> best;
  for (std::size_t i = 0; i < centers.size(); ++i) {
    const auto roots = geometry::sphere_roots(ray, centers[i], eps);
    if (!roots) continue;
    for (const double t : *roots) {
      if (t <= geometry::kMinClip) continue;
      if (best && t >= best->t) break;
      const Point<N> p = ray.at(t);
      if (interior_to_other(p, i)) continue;
      best = SurfaceHit<N>{t, p, UnitVector<N>::normalize(p - centers[i]), false, i};
      break;
    }
  }
  if (best) {
    const std::size_t i = *best->sphere_index;
    for (std::size_t j = 0; j < centers.size(); ++j) {
      if (j == i) continue;
      if (std::abs(geometry::distance(best->point, centers[j]) - eps) < tube.corner_tolerance()) {
        best->corner = true;
        break;
      }
    }
  }
  return best;
}

/// Largest distance from a core point to the nearest center, measured on a
/// dense core sample.
template <std::size_t N>
double coverage_gap(const CoreShape& core, const std::vector<Point<N>>& centers,
                    std::size_t probe_count = 20000) {
  double worst = 0.0;
  for (const auto& q : core_points<N>(core, probe_count)) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& c : centers) best = std::min(best, geometry::norm2(q - c));
    worst = std::max(worst, std::sqrt(best));
  }
  return worst;
}

/// Bubble centers on the core. Throws CoverageFailure when some core point
/// is farther than eps from every center.
template <std::size_t N>
std::vector<Point<N>> sample_bubble_centers(const CoreShape& core, std::size_t count, double epsilon) {
  if (count < 1) throw Error(ErrorCode::InvalidArgument, "bubble count must be >= 1");
  auto centers = core_points<N>(core, count);
  const double gap = coverage_gap<N>(core, centers);
  if (gap > epsilon) {
    throw Error(ErrorCode::CoverageFailure,
                std::to_string(count) + " balls of radius " + std::to_string(epsilon) +
                    " leave core points " + std::to_string(gap) + " from every center");
  }
  return centers;
}

template <std::size_t N>
BubbleTube<N> make_bubble_tube(const CoreShape& core, std::size_t count, double epsilon,
                               std::optional<double> corner_tolerance = std::nullopt) {
  validate_core<N>(core);
  if (!(epsilon > 0.0) || !(epsilon < reach(core))) {
    throw Error(ErrorCode::InvalidTube, "bubble radius must lie in (0, reach)");
  }
  return BubbleTube<N>(sample_bubble_centers<N>(core, count, epsilon), epsilon,
                       corner_tolerance.value_or(kCornerTolFactor * epsilon));
}

struct NondegeneracyReport {
  double c = 0.0;
  double delta = 0.0;
  bool transversal = true;
  double min_pairwise_angle = std::numbers::pi / 2;
  std::size_t intersecting_pairs = 0;
  std::size_t tested_points = 0;

  bool passes() const { return c > 0.0 && transversal; }
};

namespace detail {

// Distance from y to the lens B(ci, eps) n B(cj, eps), 0 < |ci - cj| < 2 eps.
// Works in the half-plane spanned by the axis and the radial offset of y.
template <std::size_t N>
double lens_distance(const Point<N>& y, const Point<N>& ci, const Point<N>& cj, double eps) {
  const Vec<N> axis_v = cj - ci;
  const double d = geometry::norm(axis_v);
  const Vec<N> u = axis_v * (1.0 / d);
  const Point<N> mid = (ci + cj) * 0.5;
  const double z = geometry::dot(y - mid, u);
  const double rho = geometry::norm((y - mid) - u * z);
  const double h = std::sqrt(std::max(0.0, eps * eps - 0.25 * d * d));

  auto in_ball = [&](double zz, double rr, double zc) {
    return (zz - zc) * (zz - zc) + rr * rr <= eps * eps * (1.0 + 1e-14);
  };
  const double zi = -0.5 * d;
  const double zj = 0.5 * d;
  if (in_ball(z, rho, zi) && in_ball(z, rho, zj)) return 0.0;

  double best = std::hypot(z, rho - h);  // rim circle
  auto try_cap = [&](double zc, double zother) {
    const double r = std::hypot(z - zc, rho);
    if (r == 0.0) return;
    const double pz = zc + eps * (z - zc) / r;
    const double pr = eps * rho / r;
    if (in_ball(pz, pr, zother)) best = std::min(best, std::abs(r - eps));
  };
  try_cap(zi, zj);
  try_cap(zj, zi);
  return best;
}

}  // namespace detail

/// Sampled estimate of the non-degeneracy constant over all intersecting
/// pairs of balls, plus the pairwise transversality check. Points y are
/// drawn in the union within `delta` of each pairwise intersection rim and
/// outside the pair's intersection; c is the smallest observed
/// max_k dist(y, B_k) / dist(y, B_i n B_j).
/// Works on raw centers so that invalid configurations (tangent or
/// coincident balls) can be diagnosed too.
template <std::size_t N>
NondegeneracyReport check_nondegenerate(const std::vector<Point<N>>& centers, double eps,
                                        std::size_t samples_per_pair = 16,
                                        std::optional<double> delta = std::nullopt,
                                        std::uint64_t seed = 1) {
  auto in_union = [&](const Point<N>& y) {
    return std::any_of(centers.begin(), centers.end(),
                       [&](const Point<N>& c) { return geometry::norm2(y - c) <= eps * eps; });
  };
  NondegeneracyReport rep;
  rep.delta = delta.value_or(0.25 * eps);
  double c_min = std::numeric_limits<double>::infinity();
  std::uint64_t stream_index = 0;

  for (std::size_t i = 0; i < centers.size(); ++i) {
    for (std::size_t j = i + 1; j < centers.size(); ++j) {
      const double d = geometry::distance(centers[i], centers[j]);
      if (std::abs(d - 2.0 * eps) <= 1e-12 * eps) {
        rep.transversal = false;
        continue;
      }
      if (d > 2.0 * eps) continue;
      if (d < 1e-12) {
        rep.transversal = false;
        continue;
      }
      ++rep.intersecting_pairs;
      const double cos_phi = 1.0 - d * d / (2.0 * eps * eps);
      const double phi = std::acos(std::clamp(cos_phi, -1.0, 1.0));
      rep.min_pairwise_angle = std::min(rep.min_pairwise_angle, std::min(phi, std::numbers::pi - phi));

      const Vec<N> u = (centers[j] - centers[i]) * (1.0 / d);
      const Point<N> mid = (centers[i] + centers[j]) * 0.5;
      const double h = std::sqrt(std::max(0.0, eps * eps - 0.25 * d * d));
      for (std::size_t s = 0; s < samples_per_pair; ++s) {
        rng::Stream st(seed, stream_index++, rng::Domain::Nondegeneracy);
        Vec<N> w{};
        for (std::size_t a = 0; a < N; ++a) w[a] = st.normal();
        w = w - u * geometry::dot(w, u);
        const double wn = geometry::norm(w);
        if (wn == 0.0) continue;
        const Point<N> rim = mid + w * (h / wn);
        Vec<N> off{};
        for (std::size_t a = 0; a < N; ++a) off[a] = st.normal();
        const double radius = rep.delta * st.uniform_open0();
        const Point<N> y = rim + off * (radius / geometry::norm(off));
        if (!in_union(y)) continue;
        const double to_lens = detail::lens_distance(y, centers[i], centers[j], eps);
        if (to_lens <= 0.0) continue;
        const double di = std::max(0.0, geometry::distance(y, centers[i]) - eps);
        const double dj = std::max(0.0, geometry::distance(y, centers[j]) - eps);
        c_min = std::min(c_min, std::max(di, dj) / to_lens);
        ++rep.tested_points;
      }
    }
  }
  // Singleton index sets contribute ratio 1.
  rep.c = std::min(1.0, c_min);
  return rep;
}

template <std::size_t N>
NondegeneracyReport check_nondegenerate(const BubbleTube<N>& tube, std::size_t samples_per_pair = 16,
                                        std::optional<double> delta = std::nullopt,
                                        std::uint64_t seed = 1) {
  return check_nondegenerate<N>(tube.centers(), tube.epsilon(), samples_per_pair, delta, seed);
}

}  // namespace wscatter::obstacle
