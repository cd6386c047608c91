#pragma once

#include <vector>

#include "cpsim/model.hpp"
#include "cpsim/mps.hpp"

namespace cpsim {

/// Product-state builders for the doubled space (d = 4).
Mps vectorized_absorbing_state(int sites);
Mps vectorized_seed_state(int sites);
Mps vectorized_identity(int sites);
/// Identity everywhere except vec(op) at `site`.
Mps vectorized_site_operator(int sites, const Matrix& op2, int site);
/// Pure-state (d = 2) seed product state.
Mps pure_seed_state(int sites);
Mps pure_vacuum_state(int sites);

struct DoubleSpaceOptions {
  ModelSpec spec;
  int chi_max = 64;
  double dt = 0.1;
  double t_max = 10.0;
  int measure_every = 1;     // steps between measurements
  double svd_cutoff = 1e-12;
  bool record_profile = false;
};

struct ObservableSeries {
  std::vector<double> times;
  std::vector<double> survival;       // P_sur(t)
  std::vector<double> total_density;  // N_a(t)
  std::vector<double> seed_density;   // n_seed(t)
  std::vector<double> op_entropy;     // max operator-space entanglement
  std::vector<double> error_estimate; // cumulative sqrt discarded weight
  std::vector<double> value;          // raw contraction (Heisenberg runs)
  std::vector<std::vector<double>> density_profile;
  std::vector<double> trace_log;      // per-step trace factors (Schrodinger)
  double max_imag_observed = 0.0;     // hermiticity proxy, monitored only
};

/// Evolve the vectorized seed state under the forward generator, renormalize
/// the trace each step, and record observables.
ObservableSeries run_schrodinger(const DoubleSpaceOptions& opts);

/// Evolve a vectorized observable under the dual generator and contract with
/// the fixed seed initial state at each measurement time. `survival` is only
/// filled when the observable is the absorbing-state projector
/// (survival_mode), as 1 - <O(t)|rho(0)>.
ObservableSeries run_heisenberg(const DoubleSpaceOptions& opts,
                                const Mps& observable,
                                bool survival_mode = false);

struct SeriesPeak {
  double time = 0.0;
  double value = 0.0;
};
SeriesPeak peak_of(const std::vector<double>& times,
                   const std::vector<double>& values);

}  // namespace cpsim
