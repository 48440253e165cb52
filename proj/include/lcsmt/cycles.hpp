#pragma once

#include <cstddef>
#include <vector>

#include "lcsmt/core.hpp"
#include "lcsmt/rational.hpp"

namespace lcsmt {

/// Periodic orbits of a finite permutation with the mean of h over each.
struct CycleDecomposition {
  struct Cycle {
    std::vector<std::size_t> states;  // in orbit order: states[j+1] = psi(states[j])
    Rational sum;
    Rational mean;
  };
  std::vector<Cycle> cycles;
  Rational max_mean;
  Rational min_mean;
  std::vector<std::size_t> cycle_of;  // state -> index into cycles

  std::size_t longest() const {
    std::size_t L = 0;
    for (const auto& c : cycles) L = std::max(L, c.states.size());
    return L;
  }
};

/// Exact cycle decomposition. Along a cycle A_n converges to the cycle mean,
/// so max_mean and min_mean are the limits of max_x A_n and min_x A_n.
inline CycleDecomposition cycle_mean_extrema(const FiniteSystem& sys) {
  const std::size_t m = sys.size();
  CycleDecomposition out;
  out.cycle_of.assign(m, m);
  for (std::size_t start = 0; start < m; ++start) {
    if (out.cycle_of[start] != m) continue;
    CycleDecomposition::Cycle c;
    std::size_t x = start;
    do {
      out.cycle_of[x] = out.cycles.size();
      c.states.push_back(x);
      c.sum += sys.factor(x);
      x = sys.forward(x);
    } while (x != start);
    c.mean = c.sum / static_cast<long>(c.states.size());
    out.cycles.push_back(std::move(c));
  }
  out.max_mean = out.cycles.front().mean;
  out.min_mean = out.cycles.front().mean;
  for (const auto& c : out.cycles) {
    if (c.mean > out.max_mean) out.max_mean = c.mean;
    if (c.mean < out.min_mean) out.min_mean = c.mean;
  }
  return out;
}

}  // namespace lcsmt
