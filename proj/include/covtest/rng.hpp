#pragma once

// Counter-derived random streams. A stream is a pure function of a master
// seed and a path of integers (replicate index, cell index, ...), so results
// never depend on which worker runs which replicate.

#include <cstdint>
#include <initializer_list>
#include <iterator>
#include <random>
#include <span>

#include <Eigen/Core>

namespace covtest::rng {

using Engine = std::mt19937_64;

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t master,
                                    std::initializer_list<std::uint64_t> path) noexcept {
  std::uint64_t state = mix64(master);
  for (std::uint64_t step : path) state = mix64(state ^ mix64(step + 0x632be59bd9b4e019ULL));
  return state;
}

inline Engine make_engine(std::uint64_t master, std::initializer_list<std::uint64_t> path) {
  return Engine(derive_seed(master, path));
}

/// Stream for permutation replicate `index` under `master`.
inline Engine replicate_engine(std::uint64_t master, std::uint64_t index) {
  return make_engine(master, {0x7065726dULL, index});
}

/// Uniform integer in [0, bound), bound >= 1. Lemire's multiply-and-reject,
/// which (unlike std::uniform_int_distribution) is identical on every
/// standard library.
inline std::uint64_t uniform_below(Engine& engine, std::uint64_t bound) {
  unsigned __int128 m = static_cast<unsigned __int128>(engine()) * bound;
  auto low = static_cast<std::uint64_t>(m);
  if (low < bound) {
    const std::uint64_t threshold = (0 - bound) % bound;
    while (low < threshold) {
      m = static_cast<unsigned __int128>(engine()) * bound;
      low = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::uint64_t>(m >> 64);
}

/// Fisher-Yates shuffle of any random-access range.
template <typename Range>
void shuffle(Range&& range, Engine& engine) {
  const auto n = static_cast<std::uint64_t>(std::size(range));
  for (std::uint64_t i = n; i > 1; --i) {
    const std::uint64_t j = uniform_below(engine, i);
    using std::swap;
    swap(range[i - 1], range[j]);
  }
}

/// Shuffles the entries of an Eigen vector expression (a row or column) in place.
template <typename Derived>
void shuffle_entries(Eigen::DenseBase<Derived>& v, Engine& engine) {
  for (Eigen::Index i = v.size(); i > 1; --i) {
    const auto j = static_cast<Eigen::Index>(uniform_below(engine, static_cast<std::uint64_t>(i)));
    std::swap(v.coeffRef(i - 1), v.coeffRef(j));
  }
}

}  // namespace covtest::rng
