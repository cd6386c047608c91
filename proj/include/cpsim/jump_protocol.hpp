#pragma once

#include <vector>

#include "cpsim/rng.hpp"

namespace cpsim {

struct JumpDraw {
  bool jumped = false;
  int site = -1;
};

// First-order jump decision shared by the MPS and dense engines so both
// consume the RNG stream identically: exactly two draws per step, whether or
// not a jump fires. Fixed consumption keeps runs that share a master seed
// (e.g. the members of a bond-dimension sweep) on the same random sequence
// even after their jump histories diverge, so paired trajectories stay
// maximally correlated and chi-to-chi comparisons are nearly noise-free.
inline JumpDraw draw_jump(const std::vector<double>& p, CounterRng& rng) {
  double p_tot = 0.0;
  for (double pk : p) p_tot += pk;
  JumpDraw out;
  const double u = rng.uniform();
  const double site_draw = rng.uniform();
  if (p_tot <= 0.0 || u >= p_tot) return out;
  out.jumped = true;
  const double target = site_draw * p_tot;
  double acc = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    acc += p[k];
    if (target < acc) {
      out.site = static_cast<int>(k);
      return out;
    }
  }
  out.site = static_cast<int>(p.size()) - 1;
  return out;
}

}  // namespace cpsim
