#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "wscatter/measure.hpp"
#include "wscatter/recovery.hpp"
#include "wscatter/weyl.hpp"

namespace {

using namespace wscatter;
using namespace wscatter::recovery;
using geometry::Container;
using obstacle::Circle;
using obstacle::CliffordTorus;
using obstacle::CoreShape;
using obstacle::RoundSphere;

constexpr double kPi = std::numbers::pi;
const double kBallVol3 = 4 * kPi / 3;
const double kBallArea3 = 4 * kPi;

LayerObservation layer(double eps, double mean_length, double se = 0.0, double trapped = 0.0) {
  LayerObservation o;
  o.epsilon = eps;
  o.mean_length = {mean_length, se, 1000, 1};
  o.trapped_fraction = trapped;
  return o;
}

/// Mean travel time implied by an analytic tube volume in the unit n-ball.
double synthetic_length(int n, double tube_vol) {
  const double vol_M = measure::ball_volume(n);
  const double vol_dM = measure::sphere_area(n - 1);
  return measure::sphere_area(n - 1) * (vol_M - tube_vol) / (measure::ball_volume(n - 1) * vol_dM);
}

SceneMetadata unit_ball_meta(int n, int k) {
  SceneMetadata m;
  m.n = n;
  m.k = k;
  m.vol_M = measure::ball_volume(n);
  m.vol_dM = measure::sphere_area(n - 1);
  return m;
}

TEST(ObservedQ, CircleExamples) {
  const auto a = observed_Q(layer(0.05, 1.329406), kBallVol3, kBallArea3, 3, 1);
  EXPECT_NEAR(a.value, 4.93480, 2e-3);  // inputs are rounded to 1e-6; amplification pi/eps^2
  EXPECT_NEAR(a.amplification, kPi / 0.0025, 1e-9);
  const auto b = observed_Q(layer(0.15, 1.297992), kBallVol3, kBallArea3, 3, 1);
  // 1.297992 is 1.8e-6 above the exact 1.2979902; times amplification ~140.
  EXPECT_NEAR(b.value, 4.93480, 5e-4);
  for (double eps : {0.05, 0.15}) {
    const double L = synthetic_length(3, 2 * kPi * kPi * 0.25 * eps * eps);
    EXPECT_NEAR(observed_Q(layer(eps, L), kBallVol3, kBallArea3, 3, 1).value, kPi * kPi / 2, 1e-12);
  }
}

TEST(ObservedQ, EmptyTubeIsZero) {
  const auto q = observed_Q(layer(0.1, 4.0 / 3.0), kBallVol3, kBallArea3, 3, 1);
  EXPECT_NEAR(q.value, 0.0, 1e-12);
}

TEST(ObservedQ, RoughnessAndErrors) {
  auto obs = layer(0.15, 1.3, 0.001);
  const auto base = observed_Q(obs, kBallVol3, kBallArea3, 3, 1);
  EXPECT_NEAR(base.std_error, base.amplification * 0.001, 1e-15);
  obs.rho_hat = 0.8;
  EXPECT_NEAR(observed_Q(obs, kBallVol3, kBallArea3, 3, 1).value, base.value / 0.8, 1e-12);
  obs.rho_hat = 0.0;
  EXPECT_THROW(observed_Q(obs, kBallVol3, kBallArea3, 3, 1), Error);
  const auto neg = observed_Q(layer(0.15, 1.5, 0.001), kBallVol3, kBallArea3, 3, 1);
  EXPECT_TRUE(neg.negative_volume);
}

TEST(Lagrange, TwoNodeLinear) {
  const auto fit = lagrange_coefficients({0.0225, 0.0025}, {6.538616, 6.341224});
  EXPECT_NEAR(fit.coeffs[0], 6.316547, 5e-6);
  EXPECT_NEAR(fit.coeffs[1], 9.869604, 1e-4);  // value rounding / node spacing
  // Exact data from Q_K(x) = pi (2.010619... + pi x).
  const double q0 = 4 * kPi * 0.16;
  auto qk = [&](double x) { return kPi * (q0 + kPi * x); };
  const auto exact = lagrange_coefficients({0.0225, 0.0025}, {qk(0.0225), qk(0.0025)});
  EXPECT_NEAR(exact.coeffs[0], kPi * q0, 1e-13);
  EXPECT_NEAR(exact.coeffs[1], kPi * kPi, 1e-11);
}

TEST(Lagrange, SingleNodeAndConstantData) {
  const auto one = lagrange_coefficients({0.3}, {2.5});
  ASSERT_EQ(one.coeffs.size(), 1u);
  EXPECT_EQ(one.coeffs[0], 2.5);
  const auto flat = lagrange_coefficients({1, 2}, {3, 3});
  EXPECT_NEAR(flat.coeffs[0], 3.0, 1e-15);
  EXPECT_NEAR(flat.coeffs[1], 0.0, 1e-15);
}

TEST(Lagrange, CubicThroughFourNodes) {
  auto p = [](double x) { return 1.5 - 2 * x + 0.25 * x * x + 3 * x * x * x; };
  const std::vector<double> nodes{-1.0, 0.2, 0.9, 2.0};
  std::vector<double> values;
  for (double x : nodes) values.push_back(p(x));
  const auto fit = lagrange_coefficients(nodes, values);
  const double expected[] = {1.5, -2, 0.25, 3};
  for (int i = 0; i < 4; ++i) EXPECT_NEAR(fit.coeffs[i], expected[i], 1e-12);
  const auto w = barycentric_weights(nodes);
  EXPECT_NEAR(barycentric_evaluate(nodes, w, values, 0.5), p(0.5), 1e-13);
  EXPECT_EQ(barycentric_evaluate(nodes, w, values, 0.9), p(0.9));
}

TEST(Lagrange, DuplicateNodes) {
  try {
    (void)lagrange_coefficients({0.1, 0.1}, {1, 2});
    FAIL() << "expected DuplicateNodes";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DuplicateNodes);
  }
}

TEST(Lagrange, IllConditionedWarning) {
  const auto fit = lagrange_coefficients({1e-5, 2e-5, 3e-5}, {1, 2, 3});
  EXPECT_GT(fit.condition_number, kIllConditioned);
  ASSERT_FALSE(fit.warnings.empty());
  EXPECT_EQ(fit.warnings.front().rfind("IllConditioned", 0), 0u);
  EXPECT_TRUE(lagrange_coefficients({0.0225, 0.0025}, {1, 2}).warnings.empty());
}

TEST(LeastSquares, RecoversExactPolynomial) {
  const auto fit = fit_coefficients({0.0, 0.1, 0.2, 0.3}, {1.0, 1.2, 1.4, 1.6}, 1);
  EXPECT_NEAR(fit.coeffs[0], 1.0, 1e-13);
  EXPECT_NEAR(fit.coeffs[1], 2.0, 1e-12);
  EXPECT_THROW(fit_coefficients({0.1}, {1.0}, 1), Error);
}

TEST(Extract, Examples) {
  const auto q = extract_invariants({6.316547, 9.869604}, 4, 2);
  EXPECT_NEAR(q[0], 2.010619, 1e-6);
  EXPECT_NEAR(q[1], 12.566371, 1e-6);
  const auto c = extract_invariants({4.934802}, 3, 1);
  EXPECT_NEAR(c[0], 1.570796, 1e-6);
  const auto z = extract_invariants({0.0, 0.0}, 4, 2);
  EXPECT_EQ(z[0], 0.0);
  EXPECT_EQ(z[1], 0.0);
  EXPECT_THROW(extract_invariants({1.0}, 4, 2), Error);
}

struct Shape {
  CoreShape core;
  int n;
  std::vector<double> ladder;
};

void round_trip(const Shape& s) {
  const auto poly = weyl::weyl_polynomial(s.core, s.n);
  std::vector<LayerObservation> ladder;
  for (double eps : s.ladder) ladder.push_back(layer(eps, synthetic_length(s.n, weyl::tube_volume(poly, eps))));
  const auto r = recover(ladder, unit_ball_meta(s.n, poly.k));
  const auto inv = weyl::shape_invariants(s.core);
  ASSERT_EQ(r.Q_ell.size(), inv.Q.size());
  for (std::size_t i = 0; i < inv.Q.size(); ++i) {
    EXPECT_NEAR(r.Q_ell[i], inv.Q[i], 1e-9 * std::max(1.0, std::abs(inv.Q[i]))) << obstacle::describe(s.core);
  }
  EXPECT_TRUE(r.warnings.empty());
}

TEST(Recover, NoiseFreeRoundTrips) {
  round_trip({Circle{0.25}, 3, {0.15}});
  round_trip({RoundSphere{2, 0.4}, 4, {0.15, 0.05}});
  round_trip({CliffordTorus{0.3}, 4, {0.15, 0.05}});
  round_trip({RoundSphere{2, 0.4}, 4, {0.3, 0.2, 0.1}});
  round_trip({RoundSphere{4, 0.5}, 7, {0.3, 0.2, 0.1}});
}

TEST(Recover, CircleLength) {
  const double L = synthetic_length(3, 2 * kPi * kPi * 0.25 * 0.0225);
  const auto r = recover({layer(0.15, L)}, unit_ball_meta(3, 1));
  EXPECT_NEAR(r.Q_ell[0], 1.570796, 1e-6);
  EXPECT_NEAR(r.Q_ell[0], kPi / 2, 1e-9);
}

TEST(Recover, HypothesisAWarning) {
  const auto r = recover({layer(0.15, 1.3, 0.001, 0.01)}, unit_ball_meta(3, 1));
  EXPECT_TRUE(r.hypothesis_a_violated);
  ASSERT_EQ(r.warnings.size(), 1u);
  EXPECT_EQ(r.warnings[0].rfind("HypothesisA", 0), 0u);
}

TEST(Recover, LadderChecks) {
  try {
    (void)recover({layer(0.15, 1.3)}, unit_ball_meta(4, 2));
    FAIL() << "expected InsufficientLayers";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InsufficientLayers);
  }
  EXPECT_THROW(recover({layer(0.05, 1.3), layer(0.15, 1.3)}, unit_ball_meta(4, 2)), Error);
  EXPECT_EQ(required_layers(1), 1u);
  EXPECT_EQ(required_layers(2), 2u);
  EXPECT_EQ(required_layers(3), 2u);
}

TEST(Recover, ErrorPropagationIsLinear) {
  const auto r = recover({layer(0.15, 1.3, 0.002), layer(0.05, 1.33, 0.001)}, unit_ball_meta(4, 2));
  // Two-node interpolation: c1 = (Q_a - Q_b)/(x_a - x_b).
  const double dx = 0.0225 - 0.0025;
  const double se_c1 = std::hypot(r.Q_values_std_error[0], r.Q_values_std_error[1]) / dx;
  EXPECT_NEAR(r.stderr_Q_ell[1], se_c1 * 4 / kPi, 1e-9 * r.stderr_Q_ell[1]);
}

TEST(OneLayerLength, Examples) {
  const double V = 4 * kPi * (kBallVol3 - 0.0123370055);
  EXPECT_NEAR(V, 52.48286, 1e-5);
  EXPECT_NEAR(recover_length_one_layer(V, kBallVol3, 0.05), 1.570796, 1e-6);
  EXPECT_NEAR(recover_length_one_layer(4 * kPi * kBallVol3, kBallVol3, 0.05), 0.0, 1e-12);
  const double deficit = 4 * kPi * kBallVol3 - V;
  EXPECT_NEAR(recover_length_one_layer(4 * kPi * kBallVol3 - 2 * deficit, kBallVol3, 0.05),
              2 * recover_length_one_layer(V, kBallVol3, 0.05), 1e-12);
}

TEST(Shadow, Examples) {
  const double sigma = 4 * kPi;
  const auto empty = shadow_volume(0.1, kBallVol3, 0.0, {sigma * kBallVol3, 0.0, 1, 1}, 3);
  EXPECT_NEAR(empty.W, 0.0, 1e-12);
  const double vt = 2 * kPi * kPi * 0.25 * 0.0225;
  const double consistent = sigma * (kBallVol3 - vt);
  EXPECT_NEAR(shadow_volume(0.15, kBallVol3, vt, {consistent, 0.0, 1, 1}, 3).W, 0.0, 1e-9);
  const auto reduced = shadow_volume(0.15, kBallVol3, vt, {0.9 * consistent, 0.01, 1, 1}, 3);
  EXPECT_NEAR(reduced.W, 0.1 * consistent, 1e-12);
  EXPECT_EQ(reduced.std_error, 0.01);
}

TEST(DefaultLadder, ChebyshevInEpsSquared) {
  const auto eps = default_ladder(0.4, 3);
  ASSERT_EQ(eps.size(), 3u);
  for (std::size_t i = 1; i < eps.size(); ++i) EXPECT_LT(eps[i], eps[i - 1]);
  const double lo = 0.01, hi = 0.09;
  for (std::size_t i = 0; i < 3; ++i) {
    const double x = 0.5 * (lo + hi) + 0.5 * (hi - lo) * std::cos(kPi * (2 * i + 1) / 6.0);
    EXPECT_NEAR(eps[i] * eps[i], x, 1e-15);
  }
  EXPECT_NEAR(default_ladder(0.4, 1)[0], std::sqrt(0.05), 1e-15);
}

TEST(Json, Fields) {
  const auto r = recover({layer(0.15, 1.3, 0.002), layer(0.05, 1.33, 0.001)}, unit_ball_meta(4, 2));
  const auto j = to_json(r);
  for (const char* key : {"n", "k", "epsilons", "Q_values", "Q_ell", "stderr_Q_ell", "condition_number", "warnings"}) {
    EXPECT_TRUE(j.contains(key)) << key;
  }
  EXPECT_EQ(j["Q_values"].size(), 2u);
  EXPECT_EQ(j.dump(), to_json(r).dump());
}

/// Runs the scattering pipeline on a unit ball and recovers invariants.
template <std::size_t N>
RecoveryResult simulate(const CoreShape& core, const std::vector<double>& ladder, std::uint64_t n, std::uint64_t seed,
                        double scale = 1.0) {
  const Container<N> m(geometry::Ball<N>{geometry::Point<N>::zero(), scale});
  std::vector<LayerObservation> obs;
  for (std::size_t j = 0; j < ladder.size(); ++j) {
    const billiard::Scene<N> scene(m, obstacle::WeylTube<N>(core, ladder[j]));
    const auto s = measure::estimate_scatter(scene, n, seed + j);
    LayerObservation o;
    o.epsilon = ladder[j];
    o.mean_length = {measure::mean_chord(m) - s.diff_mean.mean, s.diff_mean.std_error, n, seed + j};
    o.trapped_fraction = s.trapped_fraction;
    obs.push_back(o);
  }
  SceneMetadata meta;
  meta.n = N;
  meta.k = obstacle::core_dimension(core);
  meta.vol_M = measure::container_volume(m);
  meta.vol_dM = measure::container_boundary_area(m);
  return recover(obs, meta);
}

TEST(Recover, ScaleCovariance) {
  const auto r1 = simulate<3>(Circle{0.25}, {0.15}, 50000, 21);
  const auto r2 = simulate<3>(Circle{0.5}, {0.3}, 50000, 21, 2.0);
  EXPECT_NEAR(r2.Q_ell[0] / r1.Q_ell[0], 2.0, 1e-6);
  EXPECT_NEAR(r2.stderr_Q_ell[0] / r1.stderr_Q_ell[0], 2.0, 1e-6);
}

void bootstrap(bool sphere) {
  const int seeds = 32;
  std::vector<std::vector<double>> q;
  std::vector<double> mean_reported;
  for (int s = 0; s < seeds; ++s) {
    const std::uint64_t seed = 1000 + 10 * s;
    const auto r = sphere ? simulate<4>(RoundSphere{2, 0.4}, {0.15, 0.05}, 20000, seed)
                          : simulate<3>(Circle{0.25}, {0.15}, 20000, seed);
    q.push_back(r.Q_ell);
    if (mean_reported.empty()) mean_reported.assign(r.Q_ell.size(), 0.0);
    for (std::size_t i = 0; i < r.Q_ell.size(); ++i) mean_reported[i] += r.stderr_Q_ell[i] / seeds;
  }
  for (std::size_t i = 0; i < mean_reported.size(); ++i) {
    double m = 0.0, v = 0.0;
    for (const auto& row : q) m += row[i] / seeds;
    for (const auto& row : q) v += (row[i] - m) * (row[i] - m) / (seeds - 1);
    const double ratio = std::sqrt(v) / mean_reported[i];
    EXPECT_GT(ratio, 0.5) << "Q_" << 2 * i;
    EXPECT_LT(ratio, 2.0) << "Q_" << 2 * i;
  }
}

TEST(ErrorPropagation, BootstrapCircle) { bootstrap(false); }
TEST(ErrorPropagation, BootstrapSphere) { bootstrap(true); }

TEST(Roughness, BubbleObservationMatchesWeyl) {
  const double eps = 0.15;
  const Container<3> m = Container<3>::unit_ball();
  const auto bubble = obstacle::make_bubble_tube<3>(Circle{0.25}, 64, eps);
  const auto s = measure::estimate_scatter(billiard::Scene<3>(m, bubble), 400000, 31);
  const obstacle::WeylTube<3> weyl_tube(Circle{0.25}, eps);
  const auto vb = measure::mc_volume<3>([&](const geometry::Point<3>& p) { return bubble.contains(p); },
                                        bubble.bounding_box(), 2000000, 32);
  const double vw = weyl::tube_volume(weyl::weyl_polynomial(Circle{0.25}, 3), eps);
  LayerObservation o;
  o.epsilon = eps;
  o.mean_length = {measure::mean_chord(m) - s.diff_mean.mean, s.diff_mean.std_error, 400000, 31};
  o.rho_hat = vb.mean / vw;
  o.rho_hat_std_error = vb.std_error / vw;
  EXPECT_LT(o.rho_hat, 1.0);
  const auto q = observed_Q(o, kBallVol3, kBallArea3, 3, 1);
  const double weyl_q = vw / (eps * eps);
  EXPECT_NEAR(q.value, weyl_q, 3 * q.std_error);
}

}  // namespace
