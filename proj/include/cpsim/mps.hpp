#pragma once

#include <Eigen/Dense>
#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

namespace cpsim {

using Cplx = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;

/// Dense two-site gate acting on sites (site, site+1), matrix d^2 x d^2.
struct TwoSiteGate {
  Matrix matrix;
  int site = 0;
  bool is_unitary = false;
};

/// Accumulated truncation bookkeeping for one or more gate sweeps.
struct TruncationReport {
  std::vector<double> per_bond_discarded_weight;
  double max_bond_entropy = 0.0;

  double summed_discarded_weight() const {
    double s = 0.0;
    for (double w : per_bond_discarded_weight) s += w;
    return s;
  }
  /// sqrt of the summed discarded weights.
  double global_error_estimate() const;

  void add(int bond, double weight, double entropy);
  void merge(const TruncationReport& other);
};

enum class SweepDir { Left, Right };

// Open-boundary MPS with local dimension d (2 for pure states, 4 for
// vectorized operators). Site tensor k has shape (chi_{k-1}, d, chi_k) and
// is stored as a (chi_{k-1}*d) x chi_k column-major matrix with the physical
// index fastest, i.e. element (a, s, b) lives at row a*d + s, column b.
//
// A mixed-canonical center is maintained lazily: tensors left of the center
// are left-isometries, tensors right of it are right-isometries. Bond
// spectra are cached per bond and flagged stale whenever a non-isometric
// operation touches the state.
class Mps {
 public:
  Mps() = default;

  /// Build a chi = 1 product state from per-site local vectors.
  static Mps product(const std::vector<Vector>& local_states);

  int size() const { return static_cast<int>(tensors_.size()); }
  int local_dim() const { return d_; }
  /// chi_k for bond k in [0, L]; chi_0 = chi_L = 1.
  int bond_dim(int bond) const;
  int max_bond_dim() const;

  const Matrix& tensor(int site) const { return tensors_.at(site); }
  Matrix& tensor_mut(int site) { return tensors_.at(site); }

  int ortho_center() const { return center_; }

  /// Move the orthogonality center to `center` via QR sweeps.
  void canonize(int center);

  double norm() const;
  void normalize();
  void scale(Cplx factor);

  /// Contract the gate into sites (g.site, g.site+1), re-split by SVD keeping
  /// at most chi_max singular values and none below svd_cutoff relative to
  /// the largest. Leaves the center at g.site (Left) or g.site+1 (Right).
  TruncationReport apply_gate(const TwoSiteGate& g, int chi_max,
                              double svd_cutoff,
                              SweepDir dir = SweepDir::Right);

  /// Apply a single-site operator at `site`; moves the center there first.
  void apply_local(const Matrix& op, int site, bool is_isometry = false);

  /// -sum_j lambda_j^2 log lambda_j^2 across bond k (natural log).
  /// Throws std::logic_error if the cached spectrum is stale.
  double schmidt_entropy(int bond) const;
  double max_entropy_over_bonds() const;

  const RealVector& bond_spectrum(int bond) const;
  bool spectrum_valid(int bond) const { return spectra_valid_.at(bond); }

  /// Full left-to-right SVD sweep refreshing every bond spectrum. Leaves the
  /// center at the last site. Does not truncate.
  void refresh_spectra();

  /// <psi| op_site |psi> via the orthogonality center (no normalization).
  Cplx expectation(const Matrix& op, int site);
  /// All single-site expectations in one center sweep over [lo, hi].
  std::vector<Cplx> site_expectations(const Matrix& op, int lo, int hi);
  std::vector<Cplx> site_expectations(const Matrix& op) {
    return site_expectations(op, 0, size() - 1);
  }

  /// True if the site tensor is exactly the first basis state with trivial
  /// bonds (used to skip gates outside the dynamical light cone).
  bool is_trivial_basis_site(int site) const;

  /// Full state vector, site 0 slowest. Guarded for small systems.
  Vector to_dense() const;

  /// Shapes and cached spectra, for inspection.
  std::string debug_dump() const;

 private:
  void move_center_right(int k);
  void move_center_left(int k);
  void invalidate_spectra_except(int bond);

  std::vector<Matrix> tensors_;
  int d_ = 0;
  int center_ = -1;
  std::vector<RealVector> spectra_;
  std::vector<bool> spectra_valid_;
};

/// <a|b> by transfer contraction; conjugation applied to a.
Cplx overlap(const Mps& a, const Mps& b);

/// <bra| op_site |ket>.
Cplx cross_expectation(const Mps& bra, const Matrix& op, int site,
                       const Mps& ket);

/// <bra| op_k |ket> for every site k in one environment sweep.
std::vector<Cplx> cross_profile(const Mps& bra, const Matrix& op,
                                const Mps& ket);

}  // namespace cpsim
