#include <cmath>
#include <limits>
#include <numbers>

#include <gtest/gtest.h>

#include "support.hpp"
#include "wscatter/measure.hpp"
#include "wscatter/obstacle.hpp"
#include "wscatter/weyl.hpp"

namespace {

using namespace wscatter;
using namespace wscatter::obstacle;
using geometry::Point;
using geometry::Ray;
using geometry::UnitVector;
using geometry::Vec;
using V3 = Vec<3>;
using V4 = Vec<4>;

constexpr double kPi = std::numbers::pi;

TEST(Sdf, CircleExamples) {
  const WeylTube<3> tube(Circle{0.25}, 0.05);
  EXPECT_NEAR(sdf(tube, V3{0.25, 0, 0}), -0.05, 1e-15);
  EXPECT_NEAR(sdf(tube, V3{0.5, 0, 0.1}), std::hypot(0.25, 0.1) - 0.05, 1e-15);
  EXPECT_NEAR(sdf(tube, V3{0.5, 0, 0.1}), 0.21926, 5e-6);
}

TEST(Sdf, CliffordExample) {
  const WeylTube<4> tube(CliffordTorus{0.3}, 0.05);
  EXPECT_NEAR(sdf(tube, V4{0.3, 0, 0.5, 0}), 0.15, 1e-15);
}

TEST(WeylTubeType, RejectsRadiusAtOrBeyondReach) {
  EXPECT_THROW(WeylTube<3>(Circle{0.25}, 0.25), Error);
  EXPECT_THROW(WeylTube<3>(Circle{0.25}, 0.0), Error);
  EXPECT_THROW(WeylTube<3>(CliffordTorus{0.3}, 0.1), Error);  // needs n = 4
}

template <std::size_t N>
double brute_force_distance(const std::vector<Point<N>>& cloud, const Point<N>& p) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& q : cloud) best = std::min(best, geometry::norm2(p - q));
  return std::sqrt(best);
}

template <std::size_t N>
void check_against_cloud(const CoreShape& core, double eps, std::size_t cloud_size, std::size_t probes) {
  const WeylTube<N> tube(core, eps);
  const auto cloud = core_points<N>(core, cloud_size);
  rng::Stream rs(23, N, rng::Domain::Test);
  const double R = tube.bounding_radius() + 0.2;
  for (std::size_t i = 0; i < probes; ++i) {
    const auto p = fixtures::random_point<N>(rs, -R, R);
    // The cloud is a subset of the core, so it can only overestimate.
    const double oracle = brute_force_distance<N>(cloud, p) - eps;
    const double d = sdf(tube, p);
    ASSERT_LE(d, oracle + 1e-12);
    ASSERT_NEAR(d, oracle, 1e-4) << describe(core);
  }
}

TEST(Sdf, MatchesBruteForceDistance) {
  check_against_cloud<3>(Circle{0.25}, 0.05, 10000, 100000);
  check_against_cloud<4>(RoundSphere{1, 0.3}, 0.1, 10000, 20000);
}

TEST(Sdf, MatchesBruteForceDistanceSurfaces) {
  // 2-dimensional cores need denser clouds for a 1e-4 oracle.
  check_against_cloud<4>(RoundSphere{2, 0.4}, 0.1, 1000000, 2000);
  check_against_cloud<4>(CliffordTorus{0.3}, 0.05, 1000000, 2000);
}

template <std::size_t N>
void check_gradient(const CoreShape& core, double eps) {
  const WeylTube<N> tube(core, eps);
  rng::Stream rs(31, N, rng::Domain::Test);
  const double h = 1e-6;
  int checked = 0;
  while (checked < 2000) {
    const auto p = fixtures::random_point<N>(rs, -0.8, 0.8);
    if (core_distance(core, p) < 1e-2) continue;
    const auto g = sdf_gradient(tube, p);
    ASSERT_NEAR(geometry::norm(g.vec()), 1.0, 1e-12);
    for (std::size_t i = 0; i < N; ++i) {
      const auto e = Vec<N>::axis(i, 1.0) * h;
      const double fd = (sdf(tube, p + e) - sdf(tube, p - e)) / (2 * h);
      ASSERT_NEAR(g.vec()[i], fd, 1e-6);
    }
    ++checked;
  }
}

TEST(SdfGradient, MatchesFiniteDifferences) {
  check_gradient<3>(Circle{0.25}, 0.05);
  check_gradient<4>(RoundSphere{2, 0.4}, 0.1);
  check_gradient<4>(CliffordTorus{0.3}, 0.05);
  check_gradient<5>(RoundSphere{3, 0.5}, 0.1);
}

TEST(SdfGradient, Examples) {
  const WeylTube<3> circle(Circle{0.25}, 0.05);
  const auto g = sdf_gradient(circle, V3{0.35, 0, 0}).vec();
  EXPECT_NEAR(g[0], 1.0, 1e-15);
  EXPECT_NEAR(g[1], 0.0, 1e-15);
  EXPECT_NEAR(g[2], 0.0, 1e-15);

  const WeylTube<4> sphere(RoundSphere{2, 0.4}, 0.1);
  const auto s = sdf_gradient(sphere, V4{0.4, 0, 0, 0.05}).vec();
  EXPECT_NEAR(s[3], 1.0, 1e-14);
  EXPECT_NEAR(s[0], 0.0, 1e-14);
}

TEST(SdfGradient, CoreSingularity) {
  const WeylTube<3> tube(Circle{0.25}, 0.05);
  try {
    (void)sdf_gradient(tube, V3{0, 0.25, 0});
    FAIL() << "expected CoreSingularity";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::CoreSingularity);
  }
}

TEST(SphereTrace, OuterEquatorHeadOn) {
  const WeylTube<3> tube(Circle{0.25}, 0.05);
  const Ray<3> ray{V3{-0.9, 0, 0}, UnitVector<3>::axis(0)};
  const auto hit = sphere_trace(tube, ray, 10.0);
  ASSERT_TRUE(hit.has_value());
  EXPECT_NEAR(hit->t, 0.9 - 0.3, 1e-10);
  EXPECT_NEAR(hit->normal.vec()[0], -1.0, 1e-9);
}

TEST(SphereTrace, Miss) {
  const WeylTube<3> tube(Circle{0.25}, 0.05);
  EXPECT_FALSE(sphere_trace(tube, Ray<3>{V3{-0.9, 0, 0.5}, UnitVector<3>::axis(0)}, 10.0).has_value());
  // Passes through the hole of the torus along the axis.
  EXPECT_FALSE(sphere_trace(tube, Ray<3>{V3{0, 0, -0.9}, UnitVector<3>::axis(2)}, 10.0).has_value());
}

TEST(SphereTrace, RespectsTMax) {
  const WeylTube<3> tube(Circle{0.25}, 0.05);
  EXPECT_FALSE(sphere_trace(tube, Ray<3>{V3{-0.9, 0, 0}, UnitVector<3>::axis(0)}, 0.5).has_value());
}

TEST(SphereTrace, GrazingContract) {
  // Tangent to the top of the tube at z = eps, and to the saddle-shaped
  // inner equator along the axis direction.
  const WeylTube<3> tube(Circle{0.25}, 0.05);
  // Directions are tilted by up to 1e-10 rad about the tangency point.
  std::vector<Ray<3>> rays;
  for (double tilt : {0.0, 1e-10, -1e-10}) {
    const auto d1 = UnitVector<3>::normalize(V3{1, 0, -tilt});
    rays.push_back({V3{0, 0.25, 0.05} - d1.vec() * 0.9, d1});
    const auto d2 = UnitVector<3>::normalize(V3{tilt, 0, 1});
    rays.push_back({V3{0.2, 0, 0} - d2.vec() * 0.9, d2});
  }
  for (const auto& ray : rays) {
    const auto hit = sphere_trace(tube, ray, 10.0);
    if (hit) {
      EXPECT_LT(std::abs(geometry::dot(hit->normal.vec(), ray.direction.vec())), 1e-5);
    }
  }
}

TEST(SphereTrace, StartingInsideThrows) {
  const WeylTube<3> tube(Circle{0.25}, 0.05);
  try {
    (void)sphere_trace(tube, Ray<3>{V3{0.25, 0, 0}, UnitVector<3>::axis(0)}, 10.0);
    FAIL() << "expected OriginInsideTube";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::OriginInsideTube);
  }
}

template <std::size_t N>
void check_trace_hits(const CoreShape& core, double eps) {
  const WeylTube<N> tube(core, eps);
  rng::Stream rs(41, N, rng::Domain::Test);
  int hits = 0;
  for (int i = 0; i < 20000; ++i) {
    const auto o = fixtures::random_unit<N>(rs).vec() * 0.95;
    const auto target = closest_core_point<N>(core, fixtures::random_point<N>(rs, -0.5, 0.5));
    const auto d = UnitVector<N>::normalize(target + fixtures::random_unit<N>(rs).vec() * (1.5 * eps) - o);
    const auto hit = sphere_trace(tube, Ray<N>{o, d}, 2.0);
    if (!hit) continue;
    ++hits;
    ASSERT_LT(std::abs(sdf(tube, hit->point)), 1e-10);
    // Nothing closer along the ray is inside the tube.
    for (int s = 1; s < 64; ++s) ASSERT_GT(sdf(tube, o + d.vec() * (hit->t * s / 64.0)), -1e-12);
  }
  EXPECT_GT(hits, 1000);
}

TEST(SphereTrace, HitsLieOnSurfaceAndAreFirst) {
  check_trace_hits<3>(Circle{0.25}, 0.15);
  check_trace_hits<4>(RoundSphere{2, 0.4}, 0.15);
  check_trace_hits<4>(CliffordTorus{0.3}, 0.1);
}

TEST(BubbleHit, SingleBallThroughCenter) {
  const BubbleTube<3> tube({V3{0, 0, 0}}, 0.1, 1e-8);
  const auto hit = bubble_ray_hit(tube, Ray<3>{V3{-1, 0, 0}, UnitVector<3>::axis(0)});
  ASSERT_TRUE(hit.has_value());
  EXPECT_NEAR(hit->t, 0.9, 1e-15);
  EXPECT_FALSE(hit->corner);
  EXPECT_EQ(hit->sphere_index, 0u);
  EXPECT_NEAR(hit->normal.vec()[0], -1.0, 1e-15);
}

TEST(BubbleHit, DeepOnOneBallIsNotCorner) {
  const BubbleTube<3> tube({V3{0, 0, 0}, V3{0.15, 0, 0}}, 0.1, 1e-8);
  const auto hit = bubble_ray_hit(tube, Ray<3>{V3{-1, 0, 0}, UnitVector<3>::axis(0)});
  ASSERT_TRUE(hit.has_value());
  EXPECT_NEAR(hit->t, 0.9, 1e-15);
  EXPECT_FALSE(hit->corner);
}

TEST(BubbleHit, IntersectionCircleIsCorner) {
  // Balls at x = 0 and x = 0.15, radius 0.1: rim at x = 0.075, rho = sqrt(0.01 - 0.075^2).
  const BubbleTube<3> tube({V3{0, 0, 0}, V3{0.15, 0, 0}}, 0.1, 1e-8);
  const double rho = std::sqrt(0.01 - 0.075 * 0.075);
  const V3 rim{0.075, rho, 0};
  const V3 origin{0.075, 1.0, 0};
  const auto hit = bubble_ray_hit(tube, Ray<3>{origin, UnitVector<3>::normalize(rim - origin)});
  ASSERT_TRUE(hit.has_value());
  EXPECT_TRUE(hit->corner);
  EXPECT_NEAR(hit->t, 1.0 - rho, 1e-12);
}

TEST(BubbleHit, SkipsArcsInsideNeighbour) {
  // Along the axis the far side of ball 0 is buried in ball 1; the ray
  // starting between them inside neither ball first meets ball 1's far cap.
  const BubbleTube<3> tube({V3{0, 0, 0}, V3{0.15, 0, 0}}, 0.1, 1e-8);
  const auto hit = bubble_ray_hit(tube, Ray<3>{V3{0.075, 0.5, 0}, UnitVector<3>::axis(1, -1.0)});
  ASSERT_TRUE(hit.has_value());
  // Chord through the lens plane x = 0.075 on both balls: rim height.
  EXPECT_NEAR(hit->point[1], std::sqrt(0.01 - 0.075 * 0.075), 1e-12);
}

TEST(BubbleHit, HitPointsSatisfySphereEquation) {
  const auto tube = make_bubble_tube<3>(Circle{0.25}, 64, 0.15);
  rng::Stream rs(43, 0, rng::Domain::Test);
  int hits = 0;
  for (int i = 0; i < 50000; ++i) {
    const auto o = fixtures::random_unit<3>(rs).vec() * 0.95;
    const auto hit = bubble_ray_hit(tube, Ray<3>{o, fixtures::random_unit<3>(rs)});
    if (!hit) continue;
    ++hits;
    ASSERT_NEAR(geometry::distance(hit->point, tube.centers()[*hit->sphere_index]), 0.15, 1e-9);
    ASSERT_FALSE(tube.contains(hit->point - hit->normal.vec() * -1e-7));
  }
  EXPECT_GT(hits, 1000);
}

TEST(BubbleTubeType, RejectsCoincidentAndTangent) {
  EXPECT_THROW(BubbleTube<3>({V3{0, 0, 0}, V3{0, 0, 0}}, 0.1, 1e-8), Error);
  EXPECT_THROW(BubbleTube<3>({V3{0, 0, 0}, V3{0.2, 0, 0}}, 0.1, 1e-8), Error);
}

TEST(BubbleCenters, FourOnCircle) {
  const auto c = core_points<3>(Circle{0.25}, 4);
  ASSERT_EQ(c.size(), 4u);
  const V3 expected[] = {{0.25, 0, 0}, {0, 0.25, 0}, {-0.25, 0, 0}, {0, -0.25, 0}};
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 3; ++j) EXPECT_NEAR(c[i][j], expected[i][j], 1e-15);
  }
}

TEST(BubbleCenters, CoverageHolds) {
  EXPECT_NO_THROW(sample_bubble_centers<3>(Circle{0.25}, 64, 0.05));
  EXPECT_LT(coverage_gap<3>(Circle{0.25}, core_points<3>(Circle{0.25}, 64)), 0.05);
}

TEST(BubbleCenters, SingleBallFails) {
  try {
    (void)sample_bubble_centers<3>(Circle{0.25}, 1, 0.1);
    FAIL() << "expected CoverageFailure";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::CoverageFailure);
  }
}

TEST(BubbleCenters, CoverageFailureExactlyWhenGapExceedsEps) {
  // On a circle grid the worst core point is the arc midpoint: gap = 2 r sin(pi / (2 m)).
  const double r = 0.25;
  for (std::size_t m = 2; m <= 40; ++m) {
    const double gap = 2 * r * std::sin(kPi / (2.0 * m));
    for (double eps : {0.98 * gap, 1.02 * gap}) {
      if (eps >= r) continue;
      const bool fails = eps < gap;
      bool threw = false;
      try {
        (void)sample_bubble_centers<3>(Circle{r}, m, eps);
      } catch (const Error& e) {
        threw = e.code() == ErrorCode::CoverageFailure;
      }
      EXPECT_EQ(threw, fails) << "m=" << m << " eps=" << eps;
    }
  }
}

TEST(BubbleCenters, SphereAndTorusCoverage) {
  EXPECT_NO_THROW(make_bubble_tube<4>(RoundSphere{2, 0.4}, 400, 0.1));
  EXPECT_NO_THROW(make_bubble_tube<4>(CliffordTorus{0.3}, 400, 0.1));
  EXPECT_THROW(make_bubble_tube<4>(RoundSphere{2, 0.4}, 10, 0.1), Error);
}

TEST(Nondegeneracy, DisjointBalls) {
  const BubbleTube<3> tube({V3{0, 0, 0}, V3{0.5, 0, 0}}, 0.1, 1e-8);
  const auto rep = check_nondegenerate(tube);
  EXPECT_TRUE(rep.transversal);
  EXPECT_EQ(rep.intersecting_pairs, 0u);
  EXPECT_GE(rep.c, 1.0);
  EXPECT_TRUE(rep.passes());
}

TEST(Nondegeneracy, TangentBallsAreNotTransversal) {
  const std::vector<V3> centers{V3{0, 0, 0}, V3{0.2, 0, 0}};
  const auto rep = check_nondegenerate<3>(centers, 0.1);
  EXPECT_FALSE(rep.transversal);
  EXPECT_FALSE(rep.passes());
}

TEST(Nondegeneracy, CircleTube64) {
  const auto tube = make_bubble_tube<3>(Circle{0.25}, 64, 0.15);
  const auto rep = check_nondegenerate(tube);
  EXPECT_TRUE(rep.transversal);
  EXPECT_GT(rep.c, 0.0);
  EXPECT_GT(rep.intersecting_pairs, 64u);
  EXPECT_GT(rep.tested_points, 1000u);
  // Regression baseline for the sampled constant (seed 1, 16 points per pair).
  EXPECT_NEAR(rep.c, 0.1292412003148812, 1e-12);
  EXPECT_EQ(rep.tested_points, 7800u);
}

TEST(TubeVolume, BubbleNotLargerThanWeyl) {
  const double eps = 0.15;
  const auto bubble = make_bubble_tube<3>(Circle{0.25}, 64, eps);
  const WeylTube<3> weyl_tube(Circle{0.25}, eps);
  const auto vb = measure::mc_volume<3>([&](const V3& p) { return bubble.contains(p); }, weyl_tube.bounding_box(),
                                        2000000, 7);
  const double vw = weyl::tube_volume(weyl::weyl_polynomial(Circle{0.25}, 3), eps);
  EXPECT_LT(vb.mean, vw + 3 * vb.std_error);
  // Every point of the bubble tube is within eps of the core.
  rng::Stream rs(47, 0, rng::Domain::Test);
  for (int i = 0; i < 200000; ++i) {
    const auto p = fixtures::random_point<3>(rs, -0.45, 0.45);
    if (bubble.contains(p)) {
      ASSERT_TRUE(weyl_tube.contains(p));
    }
  }
}

}  // namespace
