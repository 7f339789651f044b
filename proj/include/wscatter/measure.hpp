#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <variant>

#include "wscatter/billiard.hpp"
#include "wscatter/error.hpp"
#include "wscatter/geometry.hpp"
#include "wscatter/parallel.hpp"
#include "wscatter/rng.hpp"
#include "wscatter/unit_balls.hpp"

namespace wscatter::measure {

using billiard::BoundaryPhasePoint;
using billiard::Scene;
using billiard::TraceLimits;
using geometry::AxisBox;
using geometry::Container;
using geometry::Point;
using geometry::UnitVector;
using geometry::Vec;

/// A Monte Carlo mean with its standard error (sample sd / sqrt(n)).
struct Estimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::uint64_t n_samples = 0;
  std::uint64_t seed = 0;
};

/// Running sums for a mean and its standard error.
struct Moments {
  std::uint64_t n = 0;
  double sum = 0.0;
  double sum_sq = 0.0;

  void add(double x) {
    ++n;
    sum += x;
    sum_sq += x * x;
  }
  void merge(const Moments& o) {
    n += o.n;
    sum += o.sum;
    sum_sq += o.sum_sq;
  }
  double mean() const { return n ? sum / static_cast<double>(n) : 0.0; }
  double std_error() const {
    if (n < 2) return 0.0;
    const double dn = static_cast<double>(n);
    const double var = std::max(0.0, (sum_sq - sum * sum / dn) / (dn - 1.0));
    return std::sqrt(var / dn);
  }
  Estimate estimate(std::uint64_t seed) const { return {mean(), std_error(), n, seed}; }
};

/// vol(M), analytic.
template <std::size_t N>
double container_volume(const Container<N>& m) {
  if (m.is_ball()) return ball_volume(static_cast<int>(N)) * std::pow(m.ball().radius, N);
  double v = 1.0;
  for (std::size_t i = 0; i < N; ++i) v *= m.box().max[i] - m.box().min[i];
  return v;
}

/// vol(dM), analytic.
template <std::size_t N>
double container_boundary_area(const Container<N>& m) {
  if (m.is_ball()) {
    return sphere_area(static_cast<int>(N) - 1) * std::pow(m.ball().radius, N - 1);
  }
  double area = 0.0;
  for (std::size_t i = 0; i < N; ++i) {
    double face = 1.0;
    for (std::size_t j = 0; j < N; ++j) {
      if (j != i) face *= m.box().max[j] - m.box().min[j];
    }
    area += 2.0 * face;
  }
  return area;
}

/// Total mass theta_{n-1} vol(dM) of the invariant measure on inward data.
template <std::size_t N>
double inward_measure_mass(const Container<N>& m) {
  return ball_volume(static_cast<int>(N) - 1) * container_boundary_area(m);
}

/// Mean free chord sigma_{n-1} vol(M) / (theta_{n-1} vol(dM)).
template <std::size_t N>
double mean_chord(const Container<N>& m) {
  return sphere_area(static_cast<int>(N) - 1) * container_volume(m) / inward_measure_mass(m);
}

/// Draws an inward boundary phase point with density
/// omega^{n-1} / (theta_{n-1} vol(dM)): foot uniform in area, direction
/// obtained by lifting a uniform point of the unit tangent (n-1)-ball to the
/// inward hemisphere (cosine weighting).
template <std::size_t N>
BoundaryPhasePoint<N> sample_inward(const Container<N>& m, rng::Stream& rs) {
  Point<N> foot{};
  Vec<N> inward{};
  if (m.is_ball()) {
    const auto& b = m.ball();
    Vec<N> g{};
    double g2 = 0.0;
    do {
      for (std::size_t i = 0; i < N; ++i) g[i] = rs.normal();
      g2 = geometry::norm2(g);
    } while (g2 == 0.0);
    const Vec<N> u = g * (1.0 / std::sqrt(g2));
    foot = b.center + u * b.radius;
    inward = -u;
  } else {
    const auto& box = m.box();
    double faces[2 * N];
    double total = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
      double face = 1.0;
      for (std::size_t j = 0; j < N; ++j) {
        if (j != i) face *= box.max[j] - box.min[j];
      }
      faces[2 * i] = faces[2 * i + 1] = face;
      total += 2.0 * face;
    }
    double pick = rs.uniform() * total;
    std::size_t f = 0;
    while (f + 1 < 2 * N && pick >= faces[f]) pick -= faces[f++];
    const std::size_t axis = f / 2;
    const bool upper = (f % 2) == 1;
    for (std::size_t j = 0; j < N; ++j) foot[j] = rs.uniform(box.min[j], box.max[j]);
    foot[axis] = upper ? box.max[axis] : box.min[axis];
    inward[axis] = upper ? -1.0 : 1.0;
  }

  Vec<N> t{};
  double t2 = 0.0;
  do {
    Vec<N> g{};
    for (std::size_t i = 0; i < N; ++i) g[i] = rs.normal();
    t = g - inward * geometry::dot(g, inward);
    t2 = geometry::norm2(t);
  } while (t2 == 0.0);
  const double s = std::pow(rs.uniform(), 1.0 / static_cast<double>(N - 1));
  const Vec<N> dir = t * (s / std::sqrt(t2)) + inward * std::sqrt(std::max(0.0, 1.0 - s * s));
  return {foot, UnitVector<N>::normalize(dir), billiard::Orientation::Inward};
}

struct ScatterStats {
  Estimate mean_length;
  double trapped_fraction = 0.0;
  double corner_fraction = 0.0;
  double mean_bounces = 0.0;
  Estimate diff_mean;  // mean of chord(x) - L(x) over exited samples
  std::uint64_t n_samples = 0;
  std::uint64_t n_exited = 0;
  std::uint64_t n_trapped = 0;
  std::uint64_t n_corner = 0;
};

namespace detail {

struct ScatterAcc {
  Moments length;
  Moments diff;
  std::uint64_t trapped = 0;
  std::uint64_t corner = 0;
  double bounces = 0.0;

  void merge(const ScatterAcc& o) {
    length.merge(o.length);
    diff.merge(o.diff);
    trapped += o.trapped;
    corner += o.corner;
    bounces += o.bounces;
  }
};

}  // namespace detail

/// Monte Carlo estimate of the mean travel time over inward boundary data.
/// Trapped and corner samples are counted but excluded from the means.
/// Sample i depends only on (seed, i), so results are bit-identical for any
/// thread count.
template <std::size_t N>
ScatterStats estimate_scatter(const Scene<N>& scene, std::uint64_t n_samples, std::uint64_t seed,
                              const TraceLimits& limits = {}, unsigned threads = 1) {
  if (n_samples < 1) throw Error(ErrorCode::InvalidArgument, "n_samples must be >= 1");
  const auto& m = scene.container();
  auto acc = parallel::map_reduce<detail::ScatterAcc>(
      n_samples, threads,
      [&](detail::ScatterAcc& a, std::uint64_t i) {
        rng::Stream rs(seed, i, rng::Domain::Scatter);
        const auto start = sample_inward(m, rs);
        const auto outcome = billiard::trace(scene, start, limits);
        if (const auto* ex = std::get_if<billiard::Exited<N>>(&outcome)) {
          a.length.add(ex->length);
          a.diff.add(billiard::chord_length(m, start) - ex->length);
          a.bounces += static_cast<double>(ex->bounces);
        } else if (std::holds_alternative<billiard::PresumedTrapped>(outcome)) {
          ++a.trapped;
        } else {
          ++a.corner;
        }
      },
      [](detail::ScatterAcc& total, const detail::ScatterAcc& part) { total.merge(part); });

  if (acc.length.n == 0) {
    throw Error(ErrorCode::AllTrapped, "no sample exited the container");
  }
  ScatterStats s;
  s.n_samples = n_samples;
  s.n_exited = acc.length.n;
  s.n_trapped = acc.trapped;
  s.n_corner = acc.corner;
  s.mean_length = acc.length.estimate(seed);
  s.diff_mean = acc.diff.estimate(seed);
  s.trapped_fraction = static_cast<double>(acc.trapped) / static_cast<double>(n_samples);
  s.corner_fraction = static_cast<double>(acc.corner) / static_cast<double>(n_samples);
  s.mean_bounces = acc.bounces / static_cast<double>(acc.length.n);
  return s;
}

/// V(eps) = integral of L over inward data, from the mean length.
template <std::size_t N>
Estimate travel_time_integral(const Container<N>& m, const Estimate& mean_length) {
  const double mass = inward_measure_mass(m);
  return {mean_length.mean * mass, mean_length.std_error * mass, mean_length.n_samples,
          mean_length.seed};
}

/// vol(bbox) times the fraction of uniform bbox points inside `region`.
template <std::size_t N, typename Region>
Estimate mc_volume(const Region& region, const AxisBox<N>& bbox, std::uint64_t n_samples,
                   std::uint64_t seed, unsigned threads = 1) {
  if (n_samples < 1) throw Error(ErrorCode::InvalidArgument, "n_samples must be >= 1");
  double box_vol = 1.0;
  for (std::size_t i = 0; i < N; ++i) box_vol *= bbox.max[i] - bbox.min[i];
  const auto hits = parallel::map_reduce<std::uint64_t>(
      n_samples, threads,
      [&](std::uint64_t& count, std::uint64_t i) {
        rng::Stream rs(seed, i, rng::Domain::Volume);
        Point<N> p{};
        for (std::size_t j = 0; j < N; ++j) p[j] = rs.uniform(bbox.min[j], bbox.max[j]);
        if (region(p)) ++count;
      },
      [](std::uint64_t& total, std::uint64_t part) { total += part; });
  const double n = static_cast<double>(n_samples);
  const double frac = static_cast<double>(hits) / n;
  return {box_vol * frac, box_vol * std::sqrt(frac * (1.0 - frac) / n), n_samples, seed};
}

}  // namespace wscatter::measure
