#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <variant>
#include <vector>

#include "wscatter/error.hpp"
#include "wscatter/obstacle.hpp"
#include "wscatter/unit_balls.hpp"

/// Weyl's tube-volume polynomial
///
///   vol T(K, eps) = theta_{n-k} * sum_{l even, 0 <= l <= k}
///                     Q_l / ((n-k+2)(n-k+4)...(n-k+l)) * eps^{n-k+l}
///
/// with curated intrinsic invariants Q_l for the canonical cores.
namespace wscatter::weyl {

using obstacle::CoreShape;

/// (n-k+2)(n-k+4)...(n-k+l) for even l; 1 when l = 0.
inline double weyl_denominator(int n, int k, int l) {
  double d = 1.0;
  for (int j = 1; j <= l / 2; ++j) d *= static_cast<double>(n - k + 2 * j);
  return d;
}

struct WeylPolynomial {
  int n = 0;
  int k = 0;
  std::vector<double> Q;  // Q_0, Q_2, ..., Q_{2 floor(k/2)}

  WeylPolynomial(int n_, int k_, std::vector<double> q) : n(n_), k(k_), Q(std::move(q)) {
    if (k < 0 || n <= k) throw Error(ErrorCode::InvalidArgument, "Weyl polynomial needs 0 <= k < n");
    if (Q.size() != static_cast<std::size_t>(k / 2 + 1)) {
      throw Error(ErrorCode::InvalidArgument, "Weyl polynomial needs floor(k/2)+1 coefficients");
    }
  }

  /// Coefficient of eps^{n-k+l}.
  double coefficient(std::size_t i) const {
    const int l = 2 * static_cast<int>(i);
    return measure::ball_volume(n - k) * Q[i] / weyl_denominator(n, k, l);
  }

  /// Q_K(x): the quotient vol T / eps^{n-k} as a polynomial in x = eps^2.
  double quotient(double x) const {
    double acc = 0.0;
    for (std::size_t i = Q.size(); i-- > 0;) acc = acc * x + coefficient(i);
    return acc;
  }
};

/// Tube volume for the polynomial at radius eps.
inline double tube_volume(const WeylPolynomial& poly, double eps) {
  return std::pow(eps, poly.n - poly.k) * poly.quotient(eps * eps);
}

/// Tube volume of a closed surface in E^3: 2 eps area + (4 pi eps^3 / 3) chi.
inline double surface_cubic(double area, int chi, double eps) {
  return 2.0 * eps * area + 4.0 * std::numbers::pi * eps * eps * eps / 3.0 * chi;
}

struct ShapeInvariants {
  CoreShape shape;
  int k = 0;
  double Q0 = 0.0;               // k-volume
  std::optional<double> Q2;      // half the total scalar curvature, k >= 2
  std::optional<int> chi;        // Euler characteristic
  std::vector<double> Q;         // all even-index invariants
};

namespace detail {

inline double double_factorial_odd(int m) {  // (m)!! for odd m, (-1)!! = 1
  double r = 1.0;
  for (int j = m; j > 1; j -= 2) r *= j;
  return r;
}

inline double binomial(int n, int r) {
  double b = 1.0;
  for (int i = 1; i <= r; ++i) b = b * (n - r + i) / i;
  return b;
}

}  // namespace detail

/// Closed-form Q_l for the canonical cores.
///
/// Round k-sphere of radius a: Q_l = sigma_k * C(k, l) * (l-1)!! * a^{k-l},
/// which gives Q_0 = sigma_k a^k, Q_2 = sigma_k k(k-1)/2 a^{k-2} (half the
/// total scalar curvature k(k-1)/a^2) and Q_k = 2 sigma_k (k-1)!! =
/// (2 pi)^{k/2} chi for even k. Clifford torus: flat, Q_0 = 4 pi^2 a^2,
/// Q_2 = 0.
inline ShapeInvariants shape_invariants(const CoreShape& core) {
  ShapeInvariants inv;
  inv.shape = core;
  std::visit(
      [&](const auto& s) {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, obstacle::Circle>) {
          if (!(s.radius > 0.0)) throw Error(ErrorCode::UnsupportedShape, "circle radius must be > 0");
          inv.k = 1;
          inv.Q = {2.0 * std::numbers::pi * s.radius};
          inv.chi = 0;
        } else if constexpr (std::is_same_v<S, obstacle::RoundSphere>) {
          if (s.k < 1 || !(s.radius > 0.0)) {
            throw Error(ErrorCode::UnsupportedShape, "round sphere needs k >= 1 and radius > 0");
          }
          inv.k = s.k;
          const double sigma = measure::sphere_area(s.k);
          for (int l = 0; l <= s.k; l += 2) {
            inv.Q.push_back(sigma * detail::binomial(s.k, l) * detail::double_factorial_odd(l - 1) *
                            std::pow(s.radius, s.k - l));
          }
          inv.chi = (s.k % 2 == 0) ? 2 : 0;
        } else {
          if (!(s.radius > 0.0)) throw Error(ErrorCode::UnsupportedShape, "torus radius must be > 0");
          inv.k = 2;
          inv.Q = {4.0 * std::numbers::pi * std::numbers::pi * s.radius * s.radius, 0.0};
          inv.chi = 0;
        }
      },
      core);
  inv.Q0 = inv.Q.front();
  if (inv.Q.size() > 1) inv.Q2 = inv.Q[1];
  return inv;
}

inline WeylPolynomial weyl_polynomial(const CoreShape& core, int n) {
  const auto inv = shape_invariants(core);
  return WeylPolynomial(n, inv.k, inv.Q);
}

}  // namespace wscatter::weyl
