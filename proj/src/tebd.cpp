#include "cpsim/tebd.hpp"

#include <cmath>

namespace cpsim {

namespace {

Vector basis4(int s) {
  Vector v = Vector::Zero(4);
  v(s) = 1.0;
  return v;
}

// Gate leaves the exact local vacuum pair invariant (pinned at build time).
bool fixes_vacuum(const TwoSiteGate& g) {
  for (Eigen::Index i = 0; i < g.matrix.rows(); ++i)
    if (g.matrix(i, 0) != Cplx(i == 0 ? 1.0 : 0.0, 0.0)) return false;
  return true;
}

}  // namespace

Mps vectorized_absorbing_state(int sites) {
  return Mps::product(std::vector<Vector>(sites, basis4(0)));
}

Mps vectorized_seed_state(int sites) {
  std::vector<Vector> locals(sites, basis4(0));
  locals[sites / 2] = basis4(3);  // |*><*| at the central site
  return Mps::product(locals);
}

Mps vectorized_identity(int sites) {
  Vector id = basis4(0) + basis4(3);
  // product() keeps sites unit-normalized; restore the exact amplitudes.
  Mps m = Mps::product(std::vector<Vector>(sites, id));
  m.scale(std::pow(2.0, sites / 2.0));
  return m;
}

Mps vectorized_site_operator(int sites, const Matrix& op2, int site) {
  Vector v(4);
  for (int m = 0; m < 2; ++m)
    for (int n = 0; n < 2; ++n) v(2 * m + n) = op2(m, n);
  std::vector<Vector> locals(sites, basis4(0) + basis4(3));
  locals.at(site) = v;
  double amp = v.norm() * std::pow(2.0, (sites - 1) / 2.0);
  Mps m = Mps::product(locals);
  m.scale(amp);
  return m;
}

Mps pure_seed_state(int sites) {
  Vector empty = Vector::Zero(2), occ = Vector::Zero(2);
  empty(0) = 1.0;
  occ(1) = 1.0;
  std::vector<Vector> locals(sites, empty);
  locals[sites / 2] = occ;
  return Mps::product(locals);
}

Mps pure_vacuum_state(int sites) {
  Vector empty = Vector::Zero(2);
  empty(0) = 1.0;
  return Mps::product(std::vector<Vector>(sites, empty));
}

namespace {

struct Recorder {
  const DoubleSpaceOptions& opts;
  Mps identity;
  Mps absorbing;
  Matrix n_lifted;
  double cumulative_discard = 0.0;

  explicit Recorder(const DoubleSpaceOptions& o)
      : opts(o),
        identity(vectorized_identity(o.spec.sites)),
        absorbing(vectorized_absorbing_state(o.spec.sites)),
        n_lifted(ops::lift_ket(ops::number())) {}

  void measure_schrodinger(double t, Mps& state, ObservableSeries& out) {
    std::vector<Cplx> profile = cross_profile(identity, n_lifted, state);
    double total = 0.0;
    for (const Cplx& v : profile) {
      total += v.real();
      out.max_imag_observed =
          std::max(out.max_imag_observed, std::abs(v.imag()));
    }
    out.times.push_back(t);
    out.total_density.push_back(total);
    out.seed_density.push_back(profile[opts.spec.seed_site()].real());
    out.survival.push_back(1.0 - std::real(overlap(absorbing, state)));
    state.refresh_spectra();
    out.op_entropy.push_back(state.max_entropy_over_bonds());
    out.error_estimate.push_back(std::sqrt(cumulative_discard));
    if (opts.record_profile) {
      std::vector<double> row(profile.size());
      for (std::size_t k = 0; k < profile.size(); ++k) row[k] = profile[k].real();
      out.density_profile.push_back(std::move(row));
    }
  }
};

int step_count(const DoubleSpaceOptions& opts) {
  const int n = static_cast<int>(std::llround(opts.t_max / opts.dt));
  if (n < 0) throw std::invalid_argument("t_max must be non-negative");
  return n;
}

// Sweep one full Trotter step, skipping gates strictly outside the light
// cone (both sites still in the exact local vacuum and the gate fixes it).
double sweep_step(Mps& state, const GateSchedule& sched,
                  const DoubleSpaceOptions& opts) {
  double discarded = 0.0;
  const std::size_t n = sched.gates.size();
  for (std::size_t i = 0; i < n; ++i) {
    const TwoSiteGate& g = sched.gates[i];
    if (state.is_trivial_basis_site(g.site) &&
        state.is_trivial_basis_site(g.site + 1) && fixes_vacuum(g))
      continue;
    // Leave the center on the side of the next gate to avoid long walks.
    const SweepDir dir = i + 1 < n && sched.gates[i + 1].site < g.site
                             ? SweepDir::Left
                             : SweepDir::Right;
    TruncationReport rep =
        state.apply_gate(g, opts.chi_max, opts.svd_cutoff, dir);
    discarded += rep.summed_discarded_weight();
  }
  return discarded;
}

}  // namespace

ObservableSeries run_schrodinger(const DoubleSpaceOptions& opts) {
  opts.spec.validate();
  const GateSchedule sched =
      build_trotter_schedule(opts.spec, Picture::schrodinger_double, opts.dt);
  Mps state = vectorized_seed_state(opts.spec.sites);
  Recorder rec(opts);
  ObservableSeries out;
  rec.measure_schrodinger(0.0, state, out);

  const int n_steps = step_count(opts);
  for (int step = 1; step <= n_steps; ++step) {
    rec.cumulative_discard += sweep_step(state, sched, opts);
    const Cplx trace = overlap(rec.identity, state);
    if (std::abs(trace) < 1e-300)
      throw std::runtime_error("trace collapsed during Schrodinger evolution");
    state.scale(1.0 / trace);
    out.trace_log.push_back(std::abs(trace));
    if (step % opts.measure_every == 0)
      rec.measure_schrodinger(step * opts.dt, state, out);
  }
  return out;
}

ObservableSeries run_heisenberg(const DoubleSpaceOptions& opts,
                                const Mps& observable, bool survival_mode) {
  opts.spec.validate();
  if (observable.size() != opts.spec.sites || observable.local_dim() != 4)
    throw std::invalid_argument("observable dimension mismatch");
  const GateSchedule sched =
      build_trotter_schedule(opts.spec, Picture::heisenberg_double, opts.dt);
  const Mps rho0 = vectorized_seed_state(opts.spec.sites);
  Mps state = observable;
  ObservableSeries out;
  double cumulative = 0.0;

  auto measure = [&](double t) {
    const Cplx val = overlap(state, rho0);
    out.max_imag_observed =
        std::max(out.max_imag_observed, std::abs(val.imag()));
    out.times.push_back(t);
    out.value.push_back(val.real());
    if (survival_mode) out.survival.push_back(1.0 - val.real());
    state.refresh_spectra();
    out.op_entropy.push_back(state.max_entropy_over_bonds());
    out.error_estimate.push_back(std::sqrt(cumulative));
  };

  measure(0.0);
  const int n_steps = step_count(opts);
  for (int step = 1; step <= n_steps; ++step) {
    cumulative += sweep_step(state, sched, opts);
    if (step % opts.measure_every == 0) measure(step * opts.dt);
  }
  return out;
}

SeriesPeak peak_of(const std::vector<double>& times,
                   const std::vector<double>& values) {
  if (values.empty() || values.size() != times.size())
    throw std::invalid_argument("peak_of: empty or mismatched series");
  SeriesPeak p;
  p.time = times[0];
  p.value = values[0];
  for (std::size_t i = 0; i < values.size(); ++i)
    if (values[i] > p.value) {
      p.value = values[i];
      p.time = times[i];
    }
  return p;
}

}  // namespace cpsim
