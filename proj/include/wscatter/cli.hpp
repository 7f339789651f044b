#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <tuple>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "wscatter/billiard.hpp"
#include "wscatter/error.hpp"
#include "wscatter/geometry.hpp"
#include "wscatter/measure.hpp"
#include "wscatter/obstacle.hpp"
#include "wscatter/recovery.hpp"
#include "wscatter/weyl.hpp"

/// Experiment orchestration behind the `weyl_scatter` tool: JSON configs in,
/// versioned CSV and JSON reports out.
namespace wscatter::cli {

inline constexpr std::string_view kCsvVersion = "# weyl-scatter v1";
inline constexpr std::string_view kScatterHeader =
    "epsilon,n_samples,seed,mean_length,stderr_length,trapped_fraction,corner_fraction,mean_bounces,"
    "diff_mean,diff_stderr";

enum ExitCode : int { kOk = 0, kValidation = 1, kStrictHypothesisA = 2 };

enum class TubeMode { Weyl, Bubble };
enum class Estimator { Difference, Plain };

struct ContainerSpec {
  bool ball = true;
  std::vector<double> center;
  double radius = 1.0;
  std::vector<double> min;
  std::vector<double> max;
};

struct ExperimentConfig {
  std::size_t dimension = 3;
  ContainerSpec container;
  std::optional<obstacle::CoreShape> core;
  TubeMode mode = TubeMode::Weyl;
  std::size_t bubble_count = 64;
  std::optional<double> corner_tolerance;
  std::vector<double> epsilons;
  std::uint64_t samples = 100000;
  std::uint64_t seed = 1;
  unsigned threads = 1;
  billiard::TraceLimits limits;
  Estimator estimator = Estimator::Difference;
  double trapped_threshold = 1e-4;
  std::uint64_t volume_samples = 1000000;
  std::optional<std::string> scatter_csv;
  std::optional<std::string> recovery_json;
  std::optional<std::string> volume_csv;
  std::optional<std::vector<double>> trace_foot;
  std::optional<std::vector<double>> trace_direction;
  std::string source;  // raw JSON text, kept for error locations
};

/// "%.17g": round-trip exact for doubles.
inline std::string fmt17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

/// 1-based line of the value addressed by a JSON pointer, found by walking
/// the object keys of the path through the raw text.
inline int locate_line(std::string_view text, std::string_view pointer) {
  std::vector<std::string> target;
  for (std::size_t start = 1; start <= pointer.size();) {
    std::size_t end = pointer.find('/', start);
    if (end == std::string_view::npos) end = pointer.size();
    target.emplace_back(pointer.substr(start, end - start));
    start = end + 1;
  }
  struct Frame {
    bool array = false;
    std::size_t index = 0;
    std::string key;
    bool expect_key = true;
  };
  std::vector<Frame> stack;
  std::size_t best_pos = 0;
  std::size_t best_depth = 0;
  auto consider = [&](std::size_t at) {
    const std::size_t depth = stack.size();
    if (depth > target.size() || depth <= best_depth) return;
    for (std::size_t d = 0; d < depth; ++d) {
      const auto& f = stack[d];
      if ((f.array ? std::to_string(f.index) : f.key) != target[d]) return;
    }
    best_depth = depth;
    best_pos = at;
  };
  bool element_start = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (std::isspace(static_cast<unsigned char>(c))) continue;
    if (element_start) {
      element_start = false;
      if (c != ']') consider(i);
    }
    if (c == '"') {
      std::size_t j = i + 1;
      std::string s;
      for (; j < text.size() && text[j] != '"'; ++j) {
        if (text[j] == '\\' && j + 1 < text.size()) ++j;
        s += text[j];
      }
      if (!stack.empty() && !stack.back().array && stack.back().expect_key) {
        stack.back().key = s;
        stack.back().expect_key = false;
        consider(i);
      }
      i = j;
    } else if (c == '{' || c == '[') {
      stack.push_back({c == '[', 0, {}, true});
      element_start = c == '[';
    } else if (c == '}' || c == ']') {
      if (!stack.empty()) stack.pop_back();
    } else if (c == ',' && !stack.empty()) {
      if (stack.back().array) {
        ++stack.back().index;
        element_start = true;
      } else {
        stack.back().expect_key = true;
      }
    }
  }
  int line = 1;
  for (std::size_t i = 0; i < best_pos && i < text.size(); ++i) line += text[i] == '\n';
  return line;
}

[[noreturn]] inline void config_error(const ExperimentConfig& cfg, const std::string& pointer,
                                      const std::string& message) {
  throw Error(ErrorCode::Config, "config line " + std::to_string(locate_line(cfg.source, pointer)) +
                                     " (" + pointer + "): " + message);
}

namespace detail {

using nlohmann::json;

inline const json* find(const json& j, const char* key) {
  const auto it = j.find(key);
  return it == j.end() ? nullptr : &*it;
}

inline double number(const ExperimentConfig& cfg, const json& j, const std::string& ptr) {
  if (!j.is_number()) config_error(cfg, ptr, "expected a number");
  return j.get<double>();
}

inline std::uint64_t count(const ExperimentConfig& cfg, const json& j, const std::string& ptr) {
  if (!j.is_number_integer() || j.get<std::int64_t>() < 0) {
    config_error(cfg, ptr, "expected a non-negative integer");
  }
  return j.get<std::uint64_t>();
}

inline std::vector<double> vector(const ExperimentConfig& cfg, const json& j, const std::string& ptr) {
  if (!j.is_array()) config_error(cfg, ptr, "expected an array of numbers");
  std::vector<double> v;
  for (std::size_t i = 0; i < j.size(); ++i) v.push_back(number(cfg, j[i], ptr + "/" + std::to_string(i)));
  return v;
}

inline std::string string(const ExperimentConfig& cfg, const json& j, const std::string& ptr) {
  if (!j.is_string()) config_error(cfg, ptr, "expected a string");
  return j.get<std::string>();
}

}  // namespace detail

/// Parses a config document. Structural problems are reported with the
/// line of the offending field; semantic checks live in `validate`.
inline ExperimentConfig parse_config(const std::string& text) {
  using nlohmann::json;
  ExperimentConfig cfg;
  cfg.source = text;
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::Config, std::string("malformed JSON: ") + e.what());
  }
  if (!j.is_object()) config_error(cfg, "", "top level must be an object");

  static const std::vector<std::string> known = {
      "dimension", "container", "core", "tube", "epsilons", "samples", "seed", "threads",
      "limits", "estimator", "trapped_threshold", "volume_samples", "output", "trace"};
  for (const auto& [key, _] : j.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      config_error(cfg, "/" + key, "unknown field '" + key + "'");
    }
  }

  if (const auto* v = detail::find(j, "dimension")) cfg.dimension = detail::count(cfg, *v, "/dimension");

  if (const auto* c = detail::find(j, "container")) {
    const auto type = detail::string(cfg, c->value("type", json("ball")), "/container/type");
    if (type == "ball") {
      cfg.container.ball = true;
      if (const auto* r = detail::find(*c, "radius")) cfg.container.radius = detail::number(cfg, *r, "/container/radius");
      if (const auto* ctr = detail::find(*c, "center")) cfg.container.center = detail::vector(cfg, *ctr, "/container/center");
    } else if (type == "box") {
      cfg.container.ball = false;
      const auto* lo = detail::find(*c, "min");
      const auto* hi = detail::find(*c, "max");
      if (!lo || !hi) config_error(cfg, "/container", "box container needs 'min' and 'max'");
      cfg.container.min = detail::vector(cfg, *lo, "/container/min");
      cfg.container.max = detail::vector(cfg, *hi, "/container/max");
    } else {
      config_error(cfg, "/container/type", "unknown container type '" + type + "' (ball | box)");
    }
  }

  if (const auto* c = detail::find(j, "core")) {
    const auto type = detail::string(cfg, c->value("type", json("none")), "/core/type");
    auto radius = [&] {
      const auto* r = detail::find(*c, "radius");
      if (!r) config_error(cfg, "/core", "core needs a 'radius'");
      return detail::number(cfg, *r, "/core/radius");
    };
    if (type == "circle") {
      cfg.core = obstacle::Circle{radius()};
    } else if (type == "sphere") {
      const auto* k = detail::find(*c, "k");
      const int kk = k ? static_cast<int>(detail::count(cfg, *k, "/core/k")) : 2;
      cfg.core = obstacle::RoundSphere{kk, radius()};
    } else if (type == "clifford") {
      cfg.core = obstacle::CliffordTorus{radius()};
    } else if (type != "none") {
      config_error(cfg, "/core/type", "unknown core type '" + type + "' (none | circle | sphere | clifford)");
    }
  }

  if (const auto* t = detail::find(j, "tube")) {
    const auto mode = detail::string(cfg, t->value("mode", json("weyl")), "/tube/mode");
    if (mode == "weyl") {
      cfg.mode = TubeMode::Weyl;
    } else if (mode == "bubble") {
      cfg.mode = TubeMode::Bubble;
      if (const auto* n = detail::find(*t, "count")) cfg.bubble_count = detail::count(cfg, *n, "/tube/count");
      if (const auto* ct = detail::find(*t, "corner_tolerance")) {
        cfg.corner_tolerance = detail::number(cfg, *ct, "/tube/corner_tolerance");
      }
    } else {
      config_error(cfg, "/tube/mode", "unknown tube mode '" + mode + "' (weyl | bubble)");
    }
  }

  if (const auto* e = detail::find(j, "epsilons")) cfg.epsilons = detail::vector(cfg, *e, "/epsilons");
  if (const auto* v = detail::find(j, "samples")) cfg.samples = detail::count(cfg, *v, "/samples");
  if (const auto* v = detail::find(j, "seed")) cfg.seed = detail::count(cfg, *v, "/seed");
  if (const auto* v = detail::find(j, "threads")) cfg.threads = static_cast<unsigned>(detail::count(cfg, *v, "/threads"));
  if (const auto* l = detail::find(j, "limits")) {
    if (const auto* b = detail::find(*l, "max_bounces")) cfg.limits.max_bounces = detail::count(cfg, *b, "/limits/max_bounces");
    if (const auto* m = detail::find(*l, "max_length")) cfg.limits.max_length = detail::number(cfg, *m, "/limits/max_length");
  }
  if (const auto* v = detail::find(j, "estimator")) {
    const auto est = detail::string(cfg, *v, "/estimator");
    if (est == "difference") cfg.estimator = Estimator::Difference;
    else if (est == "plain") cfg.estimator = Estimator::Plain;
    else config_error(cfg, "/estimator", "unknown estimator '" + est + "' (difference | plain)");
  }
  if (const auto* v = detail::find(j, "trapped_threshold")) cfg.trapped_threshold = detail::number(cfg, *v, "/trapped_threshold");
  if (const auto* v = detail::find(j, "volume_samples")) cfg.volume_samples = detail::count(cfg, *v, "/volume_samples");
  if (const auto* o = detail::find(j, "output")) {
    if (const auto* v = detail::find(*o, "scatter_csv")) cfg.scatter_csv = detail::string(cfg, *v, "/output/scatter_csv");
    if (const auto* v = detail::find(*o, "recovery_json")) cfg.recovery_json = detail::string(cfg, *v, "/output/recovery_json");
    if (const auto* v = detail::find(*o, "volume_csv")) cfg.volume_csv = detail::string(cfg, *v, "/output/volume_csv");
  }
  if (const auto* t = detail::find(j, "trace")) {
    if (const auto* f = detail::find(*t, "foot")) cfg.trace_foot = detail::vector(cfg, *f, "/trace/foot");
    if (const auto* d = detail::find(*t, "direction")) cfg.trace_direction = detail::vector(cfg, *d, "/trace/direction");
  }
  return cfg;
}

namespace detail {

template <std::size_t N>
geometry::Point<N> to_point(const ExperimentConfig& cfg, const std::vector<double>& v, const std::string& ptr) {
  if (v.size() != N) {
    config_error(cfg, ptr, "expected " + std::to_string(N) + " components, got " + std::to_string(v.size()));
  }
  geometry::Point<N> p{};
  for (std::size_t i = 0; i < N; ++i) p[i] = v[i];
  return p;
}

template <std::size_t N>
geometry::Container<N> make_container(const ExperimentConfig& cfg) {
  try {
    if (cfg.container.ball) {
      const auto center = cfg.container.center.empty()
                              ? geometry::Point<N>::zero()
                              : to_point<N>(cfg, cfg.container.center, "/container/center");
      return geometry::Container<N>(geometry::Ball<N>{center, cfg.container.radius});
    }
    return geometry::Container<N>(geometry::AxisBox<N>{to_point<N>(cfg, cfg.container.min, "/container/min"),
                                                       to_point<N>(cfg, cfg.container.max, "/container/max")});
  } catch (const Error& e) {
    if (e.code() == ErrorCode::Config) throw;
    config_error(cfg, "/container", e.what());
  }
}

template <std::size_t N>
billiard::Obstacle<N> make_obstacle(const ExperimentConfig& cfg, double eps) {
  if (!cfg.core) return std::monostate{};
  if (cfg.mode == TubeMode::Weyl) return obstacle::WeylTube<N>(*cfg.core, eps);
  return obstacle::make_bubble_tube<N>(*cfg.core, cfg.bubble_count, eps, cfg.corner_tolerance);
}

template <std::size_t N>
billiard::Scene<N> make_scene(const ExperimentConfig& cfg, double eps) {
  return billiard::Scene<N>(make_container<N>(cfg), make_obstacle<N>(cfg, eps));
}

}  // namespace detail

/// Semantic checks: dimension range, reach and clearance per layer,
/// ladder ordering and length. Throws a Config error naming the field.
inline void validate(const ExperimentConfig& cfg) {
  if (cfg.dimension < geometry::kMinDim || cfg.dimension > geometry::kMaxDim) {
    config_error(cfg, "/dimension", "dimension must lie in [2, 8]");
  }
  if (cfg.samples < 1) config_error(cfg, "/samples", "samples must be >= 1");
  if (cfg.volume_samples < 1) config_error(cfg, "/volume_samples", "volume_samples must be >= 1");
  if (cfg.limits.max_length && !(*cfg.limits.max_length > 0.0)) {
    config_error(cfg, "/limits/max_length", "max_length must be > 0");
  }
  if (!(cfg.trapped_threshold >= 0.0)) config_error(cfg, "/trapped_threshold", "must be >= 0");

  geometry::dispatch_dimension(cfg.dimension, [&](auto dim) {
    constexpr std::size_t N = decltype(dim)::value;
    (void)detail::make_container<N>(cfg);
    if (!cfg.core) {
      if (!cfg.epsilons.empty()) config_error(cfg, "/epsilons", "an empty scene takes no tube radii");
      return;
    }
    try {
      obstacle::validate_core<N>(*cfg.core);
    } catch (const Error& e) {
      config_error(cfg, "/core", e.what());
    }
    const int k = obstacle::core_dimension(*cfg.core);
    if (static_cast<std::size_t>(k) + 2 > N) {
      config_error(cfg, "/core", "scattering needs core dimension k <= n - 2");
    }
    if (cfg.mode == TubeMode::Bubble && cfg.bubble_count < 1) {
      config_error(cfg, "/tube/count", "bubble count must be >= 1");
    }
    if (cfg.epsilons.empty()) config_error(cfg, "/epsilons", "at least one tube radius is required");
    const double r = obstacle::reach(*cfg.core);
    for (std::size_t j = 0; j < cfg.epsilons.size(); ++j) {
      const std::string ptr = "/epsilons/" + std::to_string(j);
      const double e = cfg.epsilons[j];
      if (!(e > 0.0)) config_error(cfg, ptr, "tube radius must be > 0");
      if (!(e < r)) {
        config_error(cfg, ptr, "epsilon " + fmt17(e) + " is not below the reach " + fmt17(r) + " of " +
                                   obstacle::describe(*cfg.core));
      }
      if (j > 0 && !(e < cfg.epsilons[j - 1])) config_error(cfg, ptr, "epsilons must be strictly decreasing");
      try {
        (void)detail::make_scene<N>(cfg, e);
      } catch (const Error& err) {
        if (err.code() == ErrorCode::Config) throw;
        config_error(cfg, ptr, err.what());
      }
    }
  });
}

struct ScatterRow {
  double epsilon = 0.0;
  std::uint64_t seed = 0;
  measure::ScatterStats stats;
};

/// Layer j is traced with seed + j so that layers are independent.
inline std::vector<ScatterRow> run_scatter(const ExperimentConfig& cfg) {
  validate(cfg);
  std::vector<double> layers = cfg.core ? cfg.epsilons : std::vector<double>{0.0};
  std::vector<ScatterRow> rows;
  for (std::size_t j = 0; j < layers.size(); ++j) {
    const std::uint64_t seed = cfg.seed + j;
    geometry::dispatch_dimension(cfg.dimension, [&](auto dim) {
      constexpr std::size_t N = decltype(dim)::value;
      const auto scene = detail::make_scene<N>(cfg, layers[j]);
      rows.push_back({layers[j], seed, measure::estimate_scatter(scene, cfg.samples, seed, cfg.limits, cfg.threads)});
    });
  }
  return rows;
}

inline std::string scatter_csv(const std::vector<ScatterRow>& rows) {
  std::ostringstream out;
  out << kCsvVersion << '\n' << kScatterHeader << '\n';
  for (const auto& r : rows) {
    const auto& s = r.stats;
    out << fmt17(r.epsilon) << ',' << s.n_samples << ',' << r.seed << ',' << fmt17(s.mean_length.mean) << ','
        << fmt17(s.mean_length.std_error) << ',' << fmt17(s.trapped_fraction) << ',' << fmt17(s.corner_fraction)
        << ',' << fmt17(s.mean_bounces) << ',' << fmt17(s.diff_mean.mean) << ',' << fmt17(s.diff_mean.std_error)
        << '\n';
  }
  return out.str();
}

/// One parsed data row of a scatter CSV.
struct ScatterRecord {
  double epsilon;
  std::uint64_t n_samples;
  std::uint64_t seed;
  double mean_length;
  double stderr_length;
  double trapped_fraction;
  double corner_fraction;
  double mean_bounces;
  double diff_mean;
  double diff_stderr;
};

inline std::vector<ScatterRecord> parse_scatter_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kCsvVersion) {
    throw Error(ErrorCode::Schema, "scatter CSV must start with '" + std::string(kCsvVersion) + "'");
  }
  if (!std::getline(in, line) || line != kScatterHeader) {
    throw Error(ErrorCode::Schema, "scatter CSV header mismatch");
  }
  std::vector<ScatterRecord> rows;
  int line_no = 2;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::istringstream ls(line);
    for (std::string cell; std::getline(ls, cell, ',');) f.push_back(cell);
    if (f.size() != 10) {
      throw Error(ErrorCode::Schema, "line " + std::to_string(line_no) + ": expected 10 columns, got " +
                                         std::to_string(f.size()));
    }
    try {
      rows.push_back({std::stod(f[0]), std::stoull(f[1]), std::stoull(f[2]), std::stod(f[3]), std::stod(f[4]),
                      std::stod(f[5]), std::stod(f[6]), std::stod(f[7]), std::stod(f[8]), std::stod(f[9])});
    } catch (const std::exception&) {
      throw Error(ErrorCode::Schema, "line " + std::to_string(line_no) + ": unparsable number");
    }
  }
  return rows;
}

/// rho_hat = vol(bubble tube) / vol(Weyl tube) with the bubble volume from
/// Monte Carlo; 1 for Weyl tubes.
inline std::pair<double, double> layer_rho_hat(const ExperimentConfig& cfg, double eps) {
  if (cfg.mode != TubeMode::Bubble || !cfg.core) return {1.0, 0.0};
  return geometry::dispatch_dimension(cfg.dimension, [&](auto dim) {
    constexpr std::size_t N = decltype(dim)::value;
    const auto tube = obstacle::make_bubble_tube<N>(*cfg.core, cfg.bubble_count, eps, cfg.corner_tolerance);
    const auto vol = measure::mc_volume<N>([&](const geometry::Point<N>& p) { return tube.contains(p); },
                                           tube.bounding_box(), cfg.volume_samples, cfg.seed, cfg.threads);
    const double weyl = weyl::tube_volume(weyl::weyl_polynomial(*cfg.core, static_cast<int>(N)), eps);
    return std::pair<double, double>{vol.mean / weyl, vol.std_error / weyl};
  });
}

inline recovery::SceneMetadata scene_metadata(const ExperimentConfig& cfg) {
  return geometry::dispatch_dimension(cfg.dimension, [&](auto dim) {
    constexpr std::size_t N = decltype(dim)::value;
    const auto m = detail::make_container<N>(cfg);
    recovery::SceneMetadata meta;
    meta.n = static_cast<int>(N);
    meta.k = cfg.core ? obstacle::core_dimension(*cfg.core) : 0;
    meta.vol_M = measure::container_volume(m);
    meta.vol_dM = measure::container_boundary_area(m);
    meta.trapped_threshold = cfg.trapped_threshold;
    return meta;
  });
}

/// Layer observations from scatter records. With the difference estimator
/// the mean length is mean_chord(M) - mean(chord - L).
inline std::vector<recovery::LayerObservation> observations(const ExperimentConfig& cfg,
                                                            const std::vector<ScatterRecord>& rows) {
  const double chord = geometry::dispatch_dimension(cfg.dimension, [&](auto dim) {
    constexpr std::size_t N = decltype(dim)::value;
    return measure::mean_chord(detail::make_container<N>(cfg));
  });
  std::vector<recovery::LayerObservation> ladder;
  for (const auto& r : rows) {
    recovery::LayerObservation obs;
    obs.epsilon = r.epsilon;
    obs.trapped_fraction = r.trapped_fraction;
    obs.mean_length.n_samples = r.n_samples;
    obs.mean_length.seed = r.seed;
    if (cfg.estimator == Estimator::Difference) {
      obs.mean_length.mean = chord - r.diff_mean;
      obs.mean_length.std_error = r.diff_stderr;
    } else {
      obs.mean_length.mean = r.mean_length;
      obs.mean_length.std_error = r.stderr_length;
    }
    std::tie(obs.rho_hat, obs.rho_hat_std_error) = layer_rho_hat(cfg, r.epsilon);
    ladder.push_back(obs);
  }
  return ladder;
}

/// Recovery needs floor(k/2)+1 layers.
inline void validate_ladder(const ExperimentConfig& cfg) {
  if (!cfg.core) config_error(cfg, "/core", "recovery needs a core shape");
  const int k = obstacle::core_dimension(*cfg.core);
  const std::size_t need = recovery::required_layers(k);
  if (cfg.epsilons.size() < need) {
    config_error(cfg, "/epsilons", "a k=" + std::to_string(k) + " core needs at least " + std::to_string(need) +
                                       " tube radii, got " + std::to_string(cfg.epsilons.size()));
  }
}

inline recovery::RecoveryResult run_recover(const std::string& csv_text, const ExperimentConfig& cfg) {
  validate(cfg);
  validate_ladder(cfg);
  const auto rows = parse_scatter_csv(csv_text);
  return recovery::recover(observations(cfg, rows), scene_metadata(cfg));
}

inline std::string recovery_json(const recovery::RecoveryResult& r) { return recovery::to_json(r).dump(2) + "\n"; }

struct VolumeRow {
  double epsilon = 0.0;
  double analytic = 0.0;
  measure::Estimate mc;
  double z_score = 0.0;
  std::optional<measure::Estimate> bubble;  // bubble-tube volume
  std::optional<double> rho;
  std::optional<double> rho_hat;
};

/// Weyl polynomial against a Monte Carlo volume of the exact tube; bubble
/// mode also measures the union of balls and its roughness.
inline std::vector<VolumeRow> run_volume(const ExperimentConfig& cfg) {
  validate(cfg);
  if (!cfg.core) throw Error(ErrorCode::Config, "volume comparison needs a core shape");
  std::vector<VolumeRow> rows;
  geometry::dispatch_dimension(cfg.dimension, [&](auto dim) {
    constexpr std::size_t N = decltype(dim)::value;
    const auto poly = weyl::weyl_polynomial(*cfg.core, static_cast<int>(N));
    for (const double eps : cfg.epsilons) {
      const obstacle::WeylTube<N> tube(*cfg.core, eps);
      VolumeRow row;
      row.epsilon = eps;
      row.analytic = weyl::tube_volume(poly, eps);
      row.mc = measure::mc_volume<N>([&](const geometry::Point<N>& p) { return tube.contains(p); },
                                     tube.bounding_box(), cfg.volume_samples, cfg.seed, cfg.threads);
      row.z_score = row.mc.std_error > 0.0 ? (row.mc.mean - row.analytic) / row.mc.std_error : 0.0;
      if (cfg.mode == TubeMode::Bubble) {
        const auto bubble = obstacle::make_bubble_tube<N>(*cfg.core, cfg.bubble_count, eps, cfg.corner_tolerance);
        row.bubble = measure::mc_volume<N>([&](const geometry::Point<N>& p) { return bubble.contains(p); },
                                           bubble.bounding_box(), cfg.volume_samples, cfg.seed, cfg.threads);
        row.rho_hat = row.bubble->mean / row.analytic;
        row.rho = 1.0 - *row.rho_hat;
      }
      rows.push_back(row);
    }
  });
  return rows;
}

inline std::string volume_csv(const std::vector<VolumeRow>& rows) {
  const bool bubble = !rows.empty() && rows.front().bubble.has_value();
  std::ostringstream out;
  out << kCsvVersion << '\n' << "epsilon,analytic_volume,mc_volume,mc_stderr,z_score";
  if (bubble) out << ",bubble_volume,bubble_stderr,rho,rho_hat";
  out << '\n';
  for (const auto& r : rows) {
    out << fmt17(r.epsilon) << ',' << fmt17(r.analytic) << ',' << fmt17(r.mc.mean) << ',' << fmt17(r.mc.std_error)
        << ',' << fmt17(r.z_score);
    if (bubble) {
      out << ',' << fmt17(r.bubble->mean) << ',' << fmt17(r.bubble->std_error) << ',' << fmt17(*r.rho) << ','
          << fmt17(*r.rho_hat);
    }
    out << '\n';
  }
  return out.str();
}

namespace detail {

template <std::size_t N>
std::string point_str(const geometry::Vec<N>& p) {
  std::string s = "(";
  for (std::size_t i = 0; i < N; ++i) s += (i ? ", " : "") + fmt17(p[i]);
  return s + ")";
}

}  // namespace detail

/// Human-readable polyline of a single trajectory at the first tube radius.
/// `foot`/`direction` override the config's trace section.
inline std::string run_trace(const ExperimentConfig& cfg, std::optional<std::vector<double>> foot = std::nullopt,
                             std::optional<std::vector<double>> direction = std::nullopt) {
  validate(cfg);
  if (!foot) foot = cfg.trace_foot;
  if (!direction) direction = cfg.trace_direction;
  if (!foot || !direction) {
    throw Error(ErrorCode::InvalidStart, "trace needs a start foot and direction");
  }
  return geometry::dispatch_dimension(cfg.dimension, [&](auto dim) {
    constexpr std::size_t N = decltype(dim)::value;
    const double eps = cfg.core ? cfg.epsilons.front() : 0.0;
    const auto scene = detail::make_scene<N>(cfg, eps);
    const auto p = detail::to_point<N>(cfg, *foot, "/trace/foot");
    const auto d = geometry::UnitVector<N>::normalize(detail::to_point<N>(cfg, *direction, "/trace/direction"));
    const auto start = billiard::make_phase_point(scene.container(), p, d);
    std::vector<billiard::Segment<N>> log;
    const auto outcome = billiard::trace(scene, start, cfg.limits, &log);

    std::ostringstream out;
    out << "# start foot=" << detail::point_str(start.foot) << " dir=" << detail::point_str(start.dir.vec())
        << " eps=" << fmt17(eps) << '\n';
    for (std::size_t i = 0; i < log.size(); ++i) {
      const auto& s = log[i];
      out << "segment " << i + 1 << ": end=" << detail::point_str(s.end)
          << " normal=" << (s.normal ? detail::point_str(s.normal->vec()) : std::string("-"))
          << " length=" << fmt17(s.length) << " cumulative=" << fmt17(s.cumulative)
          << " tag=" << billiard::to_string(s.tag) << '\n';
    }
    std::visit(
        [&](const auto& o) {
          using O = std::decay_t<decltype(o)>;
          if constexpr (std::is_same_v<O, billiard::Exited<N>>) {
            out << "outcome: Exited length=" << fmt17(o.length) << " bounces=" << o.bounces
                << " exit=" << detail::point_str(o.exit.foot) << " dir=" << detail::point_str(o.exit.dir.vec()) << '\n';
          } else if constexpr (std::is_same_v<O, billiard::PresumedTrapped>) {
            out << "outcome: PresumedTrapped length=" << fmt17(o.length_so_far) << " bounces=" << o.bounces << '\n';
          } else {
            out << "outcome: CornerTerminated length=" << fmt17(o.length) << " bounces=" << o.bounces
                << " point=" << detail::point_str(o.point) << '\n';
          }
        },
        outcome);
    return out.str();
  });
}

}  // namespace wscatter::cli
