#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "wscatter/error.hpp"
#include "wscatter/geometry.hpp"
#include "wscatter/obstacle.hpp"

/// The scattering map: trajectories enter M through the boundary, reflect
/// specularly off the tube boundary and leave through the boundary again.
namespace wscatter::billiard {

using geometry::Container;
using geometry::Point;
using geometry::Ray;
using geometry::UnitVector;
using obstacle::BubbleTube;
using obstacle::WeylTube;

/// Segments are clipped this far past each reflection point.
inline constexpr double kNudge = 1e-9;
/// Hits with |<dir, normal>| below this are tangential non-events.
inline constexpr double kTangentCos = 1e-10;

template <std::size_t N>
using Obstacle = std::variant<std::monostate, WeylTube<N>, BubbleTube<N>>;

/// Billiard table N_eps = M minus the open tube. The tube must sit strictly
/// inside the container.
template <std::size_t N>
class Scene {
 public:
  explicit Scene(Container<N> container, Obstacle<N> obstacle = std::monostate{})
      : container_(std::move(container)), obstacle_(std::move(obstacle)) {
    if (const auto* w = std::get_if<WeylTube<N>>(&obstacle_)) {
      if (static_cast<std::size_t>(obstacle::core_dimension(w->core())) + 2 > N) {
        throw Error(ErrorCode::InvalidScene, "scattering needs core dimension k <= n - 2, got " +
                                                 obstacle::describe(w->core()) + " in dimension " +
                                                 std::to_string(N));
      }
      double clearance = std::numeric_limits<double>::infinity();
      for (const auto& q : obstacle::core_points<N>(w->core(), 4096)) {
        clearance = std::min(clearance, container_.depth(q));
      }
      if (!(clearance > w->epsilon())) {
        throw Error(ErrorCode::InvalidScene,
                    "core-to-boundary distance " + std::to_string(clearance) +
                        " does not exceed the tube radius " + std::to_string(w->epsilon()));
      }
    } else if (const auto* b = std::get_if<BubbleTube<N>>(&obstacle_)) {
      for (const auto& c : b->centers()) {
        if (!(container_.depth(c) > b->epsilon())) {
          throw Error(ErrorCode::InvalidScene, "a bubble ball reaches the container boundary");
        }
      }
    }
  }

  const Container<N>& container() const { return container_; }
  const Obstacle<N>& obstacle() const { return obstacle_; }
  bool empty() const { return std::holds_alternative<std::monostate>(obstacle_); }
  bool has_bubbles() const { return std::holds_alternative<BubbleTube<N>>(obstacle_); }

 private:
  Container<N> container_;
  Obstacle<N> obstacle_;
};

enum class Orientation { Inward, Outward, Tangent };

inline const char* to_string(Orientation o) {
  switch (o) {
    case Orientation::Inward: return "inward";
    case Orientation::Outward: return "outward";
    case Orientation::Tangent: return "tangent";
  }
  return "?";
}

template <std::size_t N>
struct BoundaryPhasePoint {
  Point<N> foot;
  UnitVector<N> dir;
  Orientation orientation;
};

/// Classifies (foot, dir) against the container's outward normal.
template <std::size_t N>
BoundaryPhasePoint<N> make_phase_point(const Container<N>& m, const Point<N>& foot,
                                       const UnitVector<N>& dir, double tangent_tol = 1e-12) {
  const double c = geometry::dot(dir.vec(), geometry::outward_normal(m, foot).vec());
  const Orientation o = c < -tangent_tol  ? Orientation::Inward
                        : c > tangent_tol ? Orientation::Outward
                                          : Orientation::Tangent;
  return {foot, dir, o};
}

struct TraceLimits {
  std::size_t max_bounces = 10000;
  std::optional<double> max_length;  // defaults to 1e6 x container diameter

  template <std::size_t N>
  double length_cap(const Container<N>& m) const {
    return max_length.value_or(1e6 * m.diameter());
  }
};

template <std::size_t N>
struct Exited {
  BoundaryPhasePoint<N> exit;
  double length;
  std::size_t bounces;
};

struct PresumedTrapped {
  double length_so_far;
  std::size_t bounces;
};

template <std::size_t N>
struct CornerTerminated {
  Point<N> point;
  double length;
  std::size_t bounces;
};

template <std::size_t N>
using TraceOutcome = std::variant<Exited<N>, PresumedTrapped, CornerTerminated<N>>;

enum class SegmentEnd { Reflection, Tangential, Exit, Corner, Trapped };

inline const char* to_string(SegmentEnd e) {
  switch (e) {
    case SegmentEnd::Reflection: return "reflect";
    case SegmentEnd::Tangential: return "tangent";
    case SegmentEnd::Exit: return "Exited";
    case SegmentEnd::Corner: return "CornerTerminated";
    case SegmentEnd::Trapped: return "PresumedTrapped";
  }
  return "?";
}

/// One straight piece of a trajectory, for polyline dumps.
template <std::size_t N>
struct Segment {
  Point<N> start;
  Point<N> end;
  std::optional<UnitVector<N>> normal;  // surface normal at `end`, if any
  double length;
  double cumulative;
  SegmentEnd tag;
};

namespace detail {

template <std::size_t N>
std::optional<obstacle::SurfaceHit<N>> obstacle_hit(const Obstacle<N>& obs, const Ray<N>& ray,
                                                    double t_max) {
  if (const auto* w = std::get_if<WeylTube<N>>(&obs)) {
    return obstacle::sphere_trace(*w, ray, t_max);
  }
  if (const auto* b = std::get_if<BubbleTube<N>>(&obs)) {
    auto hit = obstacle::bubble_ray_hit(*b, ray);
    if (hit && hit->t <= t_max) return hit;
  }
  return std::nullopt;
}

}  // namespace detail

/// Follows one trajectory from an inward boundary phase point until it
/// exits M, hits a corner of a bubble tube, or exhausts the limits.
/// When `log` is given, every segment is appended to it.
template <std::size_t N>
TraceOutcome<N> trace(const Scene<N>& scene, const BoundaryPhasePoint<N>& start,
                      const TraceLimits& limits = {}, std::vector<Segment<N>>* log = nullptr) {
  if (start.orientation != Orientation::Inward) {
    throw Error(ErrorCode::InvalidStart,
                std::string("trace needs an inward start, got ") + to_string(start.orientation));
  }
  const auto& m = scene.container();
  const double length_cap = limits.length_cap(m);
  Point<N> origin = start.foot;
  UnitVector<N> dir = start.dir;
  double length = 0.0;
  std::size_t bounces = 0;

  auto record = [&](const Point<N>& a, const Point<N>& b, std::optional<UnitVector<N>> nrm,
                    double seg, SegmentEnd tag) {
    if (log) log->push_back({a, b, nrm, seg, length, tag});
  };

  for (;;) {
    const Ray<N> ray{origin, dir};
    const double t_exit = geometry::ray_exit_convex(ray, m);
    const auto hit = scene.empty() ? std::nullopt : detail::obstacle_hit(scene.obstacle(), ray, t_exit);

    if (!hit) {
      const Point<N> foot = ray.at(t_exit);
      length += t_exit;
      record(origin, foot, std::nullopt, t_exit, SegmentEnd::Exit);
      return Exited<N>{{foot, dir, Orientation::Outward}, length, bounces};
    }

    const double cos_in = geometry::dot(dir.vec(), hit->normal.vec());
    if (std::abs(cos_in) < kTangentCos) {
      length += hit->t + kNudge;
      record(origin, hit->point, hit->normal, hit->t + kNudge, SegmentEnd::Tangential);
      origin = hit->point + dir.vec() * kNudge;
      continue;
    }
    if (hit->corner) {
      length += hit->t;
      record(origin, hit->point, hit->normal, hit->t, SegmentEnd::Corner);
      return CornerTerminated<N>{hit->point, length, bounces};
    }
    if (bounces >= limits.max_bounces) {
      length += hit->t;
      record(origin, hit->point, hit->normal, hit->t, SegmentEnd::Trapped);
      return PresumedTrapped{length, bounces};
    }

    const UnitVector<N> out = geometry::reflect(dir, hit->normal);
    const double speed = geometry::norm(out.vec());
    if (std::abs(speed - 1.0) > geometry::kUnitTol) {
      throw Error(ErrorCode::UnitSpeedViolation,
                  "direction norm drifted to " + std::to_string(speed) + " after a reflection");
    }
    length += hit->t + kNudge;
    record(origin, hit->point, hit->normal, hit->t + kNudge, SegmentEnd::Reflection);
    ++bounces;
    dir = out;
    origin = hit->point + dir.vec() * kNudge;
    if (length > length_cap) return PresumedTrapped{length, bounces};
  }
}

/// The time-reversed start for an exit: same foot, negated direction.
template <std::size_t N>
BoundaryPhasePoint<N> reverse(const Exited<N>& outcome) {
  return {outcome.exit.foot, -outcome.exit.dir, Orientation::Inward};
}

/// Length of the free chord of M from an inward start.
template <std::size_t N>
double chord_length(const Container<N>& m, const BoundaryPhasePoint<N>& start) {
  return geometry::ray_exit_convex(Ray<N>{start.foot, start.dir}, m);
}

}  // namespace wscatter::billiard
