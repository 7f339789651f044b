#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "wscatter/error.hpp"
#include "wscatter/measure.hpp"
#include "wscatter/unit_balls.hpp"
#include "wscatter/weyl.hpp"

/// Inversion of layered scattering data into the Weyl invariants Q_l.
///
/// Each layer eps_j turns a mean travel time into an observation of the
/// quotient Q_K(eps_j^2) = vol T(K, eps_j) / eps_j^{n-k}; interpolating these
/// in x = eps^2 gives the polynomial whose coefficients carry Q_l.
namespace wscatter::recovery {

using measure::Estimate;

struct LayerObservation {
  double epsilon = 0.0;
  Estimate mean_length;
  double trapped_fraction = 0.0;
  double rho_hat = 1.0;  // vol(bubble tube) / vol(Weyl tube); 1 for Weyl tubes
  double rho_hat_std_error = 0.0;
};

/// Dimensions and container volumes shared by all layers.
struct SceneMetadata {
  int n = 3;
  int k = 1;
  double vol_M = 0.0;
  double vol_dM = 0.0;
  double trapped_threshold = 1e-4;
};

struct ObservedQ {
  double value = 0.0;
  double std_error = 0.0;
  /// d value / d mean_length, up to sign: rho_hat^-1 eps^{k-n} (theta/sigma) vol(dM).
  double amplification = 0.0;
  bool negative_volume = false;
};

/// theta_{n-1} / sigma_{n-1}.
inline double measure_ratio(int n) {
  return measure::ball_volume(n - 1) / measure::sphere_area(n - 1);
}

/// Q_K(eps^2) = rho_hat^-1 eps^{k-n} [vol(M) - (theta_{n-1}/sigma_{n-1}) vol(dM) L_av].
inline ObservedQ observed_Q(const LayerObservation& obs, double vol_M, double vol_dM, int n, int k) {
  if (!(obs.rho_hat > 0.0 && obs.rho_hat <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "rho_hat must lie in (0, 1]");
  }
  if (!(obs.epsilon > 0.0)) throw Error(ErrorCode::InvalidArgument, "epsilon must be > 0");
  const double ratio = measure_ratio(n) * vol_dM;
  const double bracket = vol_M - ratio * obs.mean_length.mean;
  const double bracket_se = ratio * obs.mean_length.std_error;
  const double scale = std::pow(obs.epsilon, k - n) / obs.rho_hat;
  ObservedQ q;
  q.value = scale * bracket;
  q.amplification = scale * ratio;
  const double from_length = q.amplification * obs.mean_length.std_error;
  const double from_rho = q.value / obs.rho_hat * obs.rho_hat_std_error;
  q.std_error = std::hypot(from_length, from_rho);
  q.negative_volume = bracket + bracket_se < 0.0;
  return q;
}

/// Monomial coefficients c_0..c_d of a polynomial fit in x, together with the
/// linear map `weights` (coeffs = weights * values) used for error propagation.
struct Interpolation {
  std::vector<double> coeffs;
  std::vector<std::vector<double>> weights;  // [coefficient][node]
  double condition_number = 1.0;
  std::vector<std::string> warnings;
};

inline constexpr double kIllConditioned = 1e8;

/// Barycentric weights w_i = 1 / prod_{j != i} (x_i - x_j).
inline std::vector<double> barycentric_weights(const std::vector<double>& nodes) {
  std::vector<double> w(nodes.size(), 1.0);
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    for (std::size_t j = 0; j < nodes.size(); ++j) {
      if (j != i) w[i] /= (nodes[i] - nodes[j]);
    }
  }
  return w;
}

/// Second-form barycentric evaluation of the interpolant at x.
inline double barycentric_evaluate(const std::vector<double>& nodes, const std::vector<double>& w,
                                   const std::vector<double>& values, double x) {
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (x == nodes[i]) return values[i];
    const double t = w[i] / (x - nodes[i]);
    num += t * values[i];
    den += t;
  }
  return num / den;
}

/// 2-norm condition number of the Vandermonde matrix V_ij = x_i^j, j <= degree.
inline double vandermonde_condition(const std::vector<double>& nodes, std::size_t degree) {
  Eigen::MatrixXd V(nodes.size(), degree + 1);
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    double p = 1.0;
    for (std::size_t j = 0; j <= degree; ++j) {
      V(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = p;
      p *= nodes[i];
    }
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(V);
  const auto& s = svd.singularValues();
  return s(0) / s(s.size() - 1);
}

namespace detail {

inline void require_distinct(const std::vector<double>& nodes) {
  double scale = 0.0;
  for (double x : nodes) scale = std::max(scale, std::abs(x));
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    for (std::size_t j = i + 1; j < nodes.size(); ++j) {
      if (std::abs(nodes[i] - nodes[j]) <= 1e-14 * scale) {
        throw Error(ErrorCode::DuplicateNodes, "interpolation nodes " + std::to_string(i) + " and " +
                                                   std::to_string(j) + " coincide");
      }
    }
  }
}

}  // namespace detail

/// Lagrange interpolation through (nodes[i], values[i]), converted to the
/// monomial basis: coeffs = sum_i values_i w_i prod_{j != i} (x - x_j).
inline Interpolation lagrange_coefficients(const std::vector<double>& nodes,
                                           const std::vector<double>& values) {
  if (nodes.empty() || nodes.size() != values.size()) {
    throw Error(ErrorCode::InvalidArgument, "need equally many nodes and values, at least one");
  }
  detail::require_distinct(nodes);
  const std::size_t m = nodes.size();
  const auto w = barycentric_weights(nodes);

  Interpolation out;
  out.coeffs.assign(m, 0.0);
  out.weights.assign(m, std::vector<double>(m, 0.0));
  for (std::size_t i = 0; i < m; ++i) {
    std::vector<double> basis{w[i]};  // ascending powers
    for (std::size_t j = 0; j < m; ++j) {
      if (j == i) continue;
      std::vector<double> next(basis.size() + 1, 0.0);
      for (std::size_t p = 0; p < basis.size(); ++p) {
        next[p + 1] += basis[p];
        next[p] -= nodes[j] * basis[p];
      }
      basis = std::move(next);
    }
    for (std::size_t p = 0; p < m; ++p) {
      out.weights[p][i] = basis[p];
      out.coeffs[p] += basis[p] * values[i];
    }
  }
  out.condition_number = vandermonde_condition(nodes, m - 1);
  if (out.condition_number > kIllConditioned) {
    out.warnings.push_back("IllConditioned: Vandermonde condition number " +
                           std::to_string(out.condition_number) + " exceeds 1e8");
  }
  return out;
}

/// Degree-`degree` fit: exact Lagrange interpolation when there are
/// degree+1 nodes, ordinary least squares when there are more.
inline Interpolation fit_coefficients(const std::vector<double>& nodes, const std::vector<double>& values,
                                      std::size_t degree) {
  if (nodes.size() < degree + 1) {
    throw Error(ErrorCode::InsufficientLayers, "need at least degree+1 nodes");
  }
  if (nodes.size() == degree + 1) return lagrange_coefficients(nodes, values);
  if (nodes.size() != values.size()) throw Error(ErrorCode::InvalidArgument, "node/value count mismatch");
  detail::require_distinct(nodes);
  const auto rows = static_cast<Eigen::Index>(nodes.size());
  const auto cols = static_cast<Eigen::Index>(degree + 1);
  Eigen::MatrixXd V(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    double p = 1.0;
    for (Eigen::Index j = 0; j < cols; ++j) {
      V(i, j) = p;
      p *= nodes[static_cast<std::size_t>(i)];
    }
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(V, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd s = svd.singularValues();
  const Eigen::MatrixXd pinv =
      svd.matrixV() * s.cwiseInverse().asDiagonal() * svd.matrixU().transpose();
  Interpolation out;
  out.coeffs.assign(degree + 1, 0.0);
  out.weights.assign(degree + 1, std::vector<double>(nodes.size(), 0.0));
  for (Eigen::Index p = 0; p < cols; ++p) {
    for (Eigen::Index i = 0; i < rows; ++i) {
      const double wpi = pinv(p, i);
      out.weights[static_cast<std::size_t>(p)][static_cast<std::size_t>(i)] = wpi;
      out.coeffs[static_cast<std::size_t>(p)] += wpi * values[static_cast<std::size_t>(i)];
    }
  }
  out.condition_number = s(0) / s(s.size() - 1);
  if (out.condition_number > kIllConditioned) {
    out.warnings.push_back("IllConditioned: Vandermonde condition number " +
                           std::to_string(out.condition_number) + " exceeds 1e8");
  }
  return out;
}

/// Scale from the coefficient of x^i in Q_K to Q_{2i}.
inline double invariant_scale(int n, int k, std::size_t i) {
  return weyl::weyl_denominator(n, k, 2 * static_cast<int>(i)) / measure::ball_volume(n - k);
}

/// Q_l = c_{l/2} (n-k+2)...(n-k+l) / theta_{n-k}.
inline std::vector<double> extract_invariants(const std::vector<double>& coeffs, int n, int k) {
  if (coeffs.size() != static_cast<std::size_t>(k / 2 + 1)) {
    throw Error(ErrorCode::InvalidArgument, "need floor(k/2)+1 coefficients for k = " + std::to_string(k));
  }
  std::vector<double> q(coeffs.size());
  for (std::size_t i = 0; i < coeffs.size(); ++i) q[i] = coeffs[i] * invariant_scale(n, k, i);
  return q;
}

struct RecoveryResult {
  int n = 0;
  int k = 0;
  std::vector<double> epsilons;
  std::vector<std::pair<double, double>> Q_values;  // (eps^2, Q_K(eps^2))
  std::vector<double> Q_values_std_error;
  std::vector<double> amplification;  // per layer
  std::vector<double> Q_ell;
  std::vector<double> stderr_Q_ell;
  double condition_number = 1.0;
  std::vector<std::string> warnings;
  bool hypothesis_a_violated = false;
};

inline std::size_t required_layers(int k) { return static_cast<std::size_t>(k / 2 + 1); }

/// observed_Q per layer, interpolation in eps^2, then extraction of Q_l.
/// Standard errors propagate linearly (layers are treated as independent).
inline RecoveryResult recover(const std::vector<LayerObservation>& ladder, const SceneMetadata& meta) {
  const std::size_t need = required_layers(meta.k);
  if (ladder.size() < need) {
    throw Error(ErrorCode::InsufficientLayers, "k = " + std::to_string(meta.k) + " needs at least " +
                                                   std::to_string(need) + " layers, got " +
                                                   std::to_string(ladder.size()));
  }
  for (std::size_t j = 1; j < ladder.size(); ++j) {
    if (!(ladder[j].epsilon < ladder[j - 1].epsilon)) {
      throw Error(ErrorCode::InvalidLadder, "layer radii must be strictly decreasing");
    }
  }

  RecoveryResult r;
  r.n = meta.n;
  r.k = meta.k;
  std::vector<double> nodes;
  std::vector<double> values;
  for (std::size_t j = 0; j < ladder.size(); ++j) {
    const auto& obs = ladder[j];
    const auto q = observed_Q(obs, meta.vol_M, meta.vol_dM, meta.n, meta.k);
    const double x = obs.epsilon * obs.epsilon;
    r.epsilons.push_back(obs.epsilon);
    r.Q_values.emplace_back(x, q.value);
    r.Q_values_std_error.push_back(q.std_error);
    r.amplification.push_back(q.amplification);
    nodes.push_back(x);
    values.push_back(q.value);
    if (obs.trapped_fraction > meta.trapped_threshold) {
      r.hypothesis_a_violated = true;
      r.warnings.push_back("HypothesisA: layer eps=" + std::to_string(obs.epsilon) +
                           " trapped fraction " + std::to_string(obs.trapped_fraction) +
                           " exceeds threshold " + std::to_string(meta.trapped_threshold));
    }
    if (q.negative_volume) {
      r.warnings.push_back("NegativeVolume: layer eps=" + std::to_string(obs.epsilon) +
                           " implies a negative tube volume");
    }
  }

  const auto fit = fit_coefficients(nodes, values, need - 1);
  r.condition_number = fit.condition_number;
  r.warnings.insert(r.warnings.end(), fit.warnings.begin(), fit.warnings.end());
  r.Q_ell = extract_invariants(fit.coeffs, meta.n, meta.k);
  for (std::size_t i = 0; i < need; ++i) {
    double var = 0.0;
    for (std::size_t j = 0; j < nodes.size(); ++j) {
      const double g = fit.weights[i][j] * r.Q_values_std_error[j];
      var += g * g;
    }
    r.stderr_Q_ell.push_back(std::sqrt(var) * invariant_scale(meta.n, meta.k, i));
  }
  return r;
}

/// One-layer length of a curve in E^3: (4 pi vol(M) - V(eps)) / (4 pi^2 eps^2).
inline double recover_length_one_layer(double V_eps, double vol_M, double eps) {
  const double pi = std::numbers::pi;
  return (4.0 * pi * vol_M - V_eps) / (4.0 * pi * pi * eps * eps);
}

struct ShadowVolume {
  double epsilon = 0.0;
  double W = 0.0;
  double std_error = 0.0;
};

/// W(eps) = sigma_{n-1} vol(M) - sigma_{n-1} vol(T) - integral of L.
inline ShadowVolume shadow_volume(double eps, double vol_M, double tube_volume, const Estimate& integral_L,
                                  int n) {
  const double sigma = measure::sphere_area(n - 1);
  return {eps, sigma * vol_M - sigma * tube_volume - integral_L.mean, integral_L.std_error};
}

/// Radii whose squares are Chebyshev points of [(0.25 reach)^2, (0.75 reach)^2],
/// largest first.
inline std::vector<double> default_ladder(double reach, std::size_t count) {
  if (count < 1) throw Error(ErrorCode::InvalidArgument, "ladder needs at least one layer");
  const double lo = 0.0625 * reach * reach;
  const double hi = 0.5625 * reach * reach;
  std::vector<double> eps;
  for (std::size_t i = 0; i < count; ++i) {
    const double theta = std::numbers::pi * (2.0 * static_cast<double>(i) + 1.0) / (2.0 * static_cast<double>(count));
    const double x = 0.5 * (lo + hi) + 0.5 * (hi - lo) * std::cos(theta);
    eps.push_back(std::sqrt(x));
  }
  return eps;  // cos is decreasing on (0, pi), so eps is already descending
}

inline nlohmann::json to_json(const RecoveryResult& r) {
  nlohmann::json j;
  j["n"] = r.n;
  j["k"] = r.k;
  j["epsilons"] = r.epsilons;
  j["Q_values"] = nlohmann::json::array();
  for (std::size_t i = 0; i < r.Q_values.size(); ++i) {
    j["Q_values"].push_back({{"eps2", r.Q_values[i].first},
                             {"Q", r.Q_values[i].second},
                             {"stderr", r.Q_values_std_error[i]},
                             {"amplification", r.amplification[i]}});
  }
  j["Q_ell"] = r.Q_ell;
  j["stderr_Q_ell"] = r.stderr_Q_ell;
  j["condition_number"] = r.condition_number;
  j["warnings"] = r.warnings;
  return j;
}

}  // namespace wscatter::recovery
