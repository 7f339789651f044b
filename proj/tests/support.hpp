#pragma once

#include <cstdint>

#include "wscatter/geometry.hpp"
#include "wscatter/rng.hpp"

namespace wscatter::fixtures {

template <std::size_t N>
geometry::UnitVector<N> random_unit(rng::Stream& rs) {
  geometry::Vec<N> g{};
  for (std::size_t i = 0; i < N; ++i) g[i] = rs.normal();
  return geometry::UnitVector<N>::normalize(g);
}

template <std::size_t N>
geometry::Point<N> random_point(rng::Stream& rs, double lo, double hi) {
  geometry::Point<N> p{};
  for (std::size_t i = 0; i < N; ++i) p[i] = rs.uniform(lo, hi);
  return p;
}

}  // namespace wscatter::fixtures
