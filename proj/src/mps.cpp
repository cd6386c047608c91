#include "cpsim/mps.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>
#include <cmath>
#include <sstream>

#define LAPACK_COMPLEX_CUSTOM
#define lapack_complex_float std::complex<float>
#define lapack_complex_double std::complex<double>
#include <lapacke.h>

namespace cpsim {

namespace {

using StridedMap = Eigen::Map<Matrix, 0, Eigen::Stride<Eigen::Dynamic, Eigen::Dynamic>>;
using ConstStridedMap =
    Eigen::Map<const Matrix, 0, Eigen::Stride<Eigen::Dynamic, Eigen::Dynamic>>;

// View of the (chi_l x chi_r) slice of a site tensor at fixed physical
// index s. Storage has the physical index fastest within a column.
ConstStridedMap phys_slice(const Matrix& t, int s, int d) {
  const int chi_l = static_cast<int>(t.rows()) / d;
  return ConstStridedMap(t.data() + s, chi_l, t.cols(),
                         Eigen::Stride<Eigen::Dynamic, Eigen::Dynamic>(
                             t.rows(), d));
}

StridedMap phys_slice_mut(Matrix& t, int s, int d) {
  const int chi_l = static_cast<int>(t.rows()) / d;
  return StridedMap(t.data() + s, chi_l, t.cols(),
                    Eigen::Stride<Eigen::Dynamic, Eigen::Dynamic>(t.rows(), d));
}

// out[(a',s),b] = sum_a R[a',a] T[(a,s),b]
Matrix absorb_left(const Matrix& r, const Matrix& t, int d) {
  const int chi_l = static_cast<int>(t.rows()) / d;
  const int chi_r = static_cast<int>(t.cols());
  const int rr = static_cast<int>(r.rows());
  Matrix out(rr * d, chi_r);
  // One full-size product per physical index instead of a small product per
  // column: d is 2 or 4 while chi_r can be large.
  using Stride = Eigen::Stride<Eigen::Dynamic, Eigen::Dynamic>;
  for (int s = 0; s < d; ++s) {
    Eigen::Map<const Matrix, 0, Stride> ts(t.data() + s, chi_l, chi_r,
                                           Stride(t.rows() > 0 ? t.rows() : 1, d));
    Eigen::Map<Matrix, 0, Stride> os(out.data() + s, rr, chi_r,
                                     Stride(rr * d, d));
    os.noalias() = r * ts;
  }
  return out;
}

struct SvdSplit {
  Matrix u;        // (rows x keep)
  RealVector s;    // kept singular values, non-ascending
  Matrix vdag;     // (keep x cols)
  double discarded_weight = 0.0;  // relative to the full squared spectrum
};

SvdSplit truncated_svd(const Matrix& m, int chi_max, double cutoff) {
  if (chi_max < 1) throw std::invalid_argument("chi_max < 1");
  const Eigen::Index small = 16;
  const Eigen::Index rank = std::min(m.rows(), m.cols());
  Eigen::VectorXd sv;
  Matrix u, vdag_full;
  if (m.rows() <= small && m.cols() <= small) {
    Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    sv = svd.singularValues();
    u = svd.matrixU();
    vdag_full = svd.matrixV().adjoint();
  } else {
    // LAPACK divide-and-conquer; Eigen's BDCSVD is several times slower and
    // this call dominates the TEBD step cost.
    Matrix a = m;  // zgesdd destroys its input
    sv.resize(rank);
    u.resize(m.rows(), rank);
    vdag_full.resize(rank, m.cols());
    const lapack_int info = LAPACKE_zgesdd(
        LAPACK_COL_MAJOR, 'S', static_cast<lapack_int>(m.rows()),
        static_cast<lapack_int>(m.cols()),
        reinterpret_cast<lapack_complex_double*>(a.data()),
        static_cast<lapack_int>(a.rows()), sv.data(),
        reinterpret_cast<lapack_complex_double*>(u.data()),
        static_cast<lapack_int>(u.rows()),
        reinterpret_cast<lapack_complex_double*>(vdag_full.data()),
        static_cast<lapack_int>(vdag_full.rows()));
    if (info != 0) {
      // zgesdd can fail to converge on rare inputs; fall back to the slower
      // but more robust QR-preconditioned Jacobi.
      Eigen::JacobiSVD<Matrix> svd(m,
                                   Eigen::ComputeThinU | Eigen::ComputeThinV);
      sv = svd.singularValues();
      u = svd.matrixU();
      vdag_full = svd.matrixV().adjoint();
    }
  }
  const double total = sv.squaredNorm();
  const double floor_val = cutoff * (sv.size() > 0 ? sv(0) : 0.0);
  int keep = 0;
  for (Eigen::Index j = 0; j < sv.size(); ++j) {
    if (sv(j) > floor_val && sv(j) > 0.0) ++keep;
  }
  keep = std::min(keep, chi_max);
  keep = std::max(keep, 1);
  SvdSplit out;
  out.u = u.leftCols(keep);
  out.s = sv.head(keep);
  out.vdag = vdag_full.topRows(keep);
  const double kept = out.s.squaredNorm();
  out.discarded_weight = total > 0.0 ? std::max(0.0, (total - kept) / total) : 0.0;
  return out;
}

// Thin QR via blocked LAPACK; Eigen's HouseholderQR applies reflectors one
// rank-1 update at a time and shows up heavily in profiles of center moves.
void thin_qr(const Matrix& a, Matrix& q, Matrix& r) {
  const lapack_int m = static_cast<lapack_int>(a.rows());
  const lapack_int n = static_cast<lapack_int>(a.cols());
  const lapack_int k = std::min(m, n);
  q = a;
  std::vector<Cplx> tau(static_cast<std::size_t>(k));
  lapack_int info = LAPACKE_zgeqrf(LAPACK_COL_MAJOR, m, n,
                                   reinterpret_cast<lapack_complex_double*>(q.data()),
                                   m, reinterpret_cast<lapack_complex_double*>(tau.data()));
  if (info != 0) throw std::runtime_error("zgeqrf failed");
  r = q.topRows(k).triangularView<Eigen::Upper>();
  info = LAPACKE_zungqr(LAPACK_COL_MAJOR, m, k, k,
                        reinterpret_cast<lapack_complex_double*>(q.data()), m,
                        reinterpret_cast<lapack_complex_double*>(tau.data()));
  if (info != 0) throw std::runtime_error("zungqr failed");
  q.conservativeResize(m, k);
}

double entropy_of(const RealVector& lambda) {
  double s = 0.0;
  for (Eigen::Index j = 0; j < lambda.size(); ++j) {
    const double p = lambda(j) * lambda(j);
    if (p > 0.0) s -= p * std::log(p);
  }
  return s;
}

}  // namespace

double TruncationReport::global_error_estimate() const {
  return std::sqrt(summed_discarded_weight());
}

void TruncationReport::add(int bond, double weight, double entropy) {
  if (bond >= static_cast<int>(per_bond_discarded_weight.size()))
    per_bond_discarded_weight.resize(bond + 1, 0.0);
  per_bond_discarded_weight[bond] += weight;
  max_bond_entropy = std::max(max_bond_entropy, entropy);
}

void TruncationReport::merge(const TruncationReport& other) {
  if (other.per_bond_discarded_weight.size() > per_bond_discarded_weight.size())
    per_bond_discarded_weight.resize(other.per_bond_discarded_weight.size(), 0.0);
  for (std::size_t k = 0; k < other.per_bond_discarded_weight.size(); ++k)
    per_bond_discarded_weight[k] += other.per_bond_discarded_weight[k];
  max_bond_entropy = std::max(max_bond_entropy, other.max_bond_entropy);
}

Mps Mps::product(const std::vector<Vector>& local_states) {
  if (local_states.empty()) throw std::invalid_argument("empty product state");
  Mps m;
  m.d_ = static_cast<int>(local_states.front().size());
  if (m.d_ < 2) throw std::invalid_argument("local dimension < 2");
  for (const auto& v : local_states) {
    if (static_cast<int>(v.size()) != m.d_)
      throw std::invalid_argument("local state dimension mismatch");
    const double n = v.norm();
    if (n == 0.0) throw std::invalid_argument("zero-norm local state");
    Matrix t(m.d_, 1);
    t.col(0) = v / n;
    m.tensors_.push_back(std::move(t));
  }
  const int nb = m.size() - 1;
  m.spectra_.assign(nb, RealVector::Ones(1));
  m.spectra_valid_.assign(nb, true);
  m.center_ = 0;
  return m;
}

int Mps::bond_dim(int bond) const {
  if (bond <= 0 || bond >= size()) return 1;
  return static_cast<int>(tensors_[bond].rows()) / d_;
}

int Mps::max_bond_dim() const {
  int chi = 1;
  for (int k = 1; k < size(); ++k) chi = std::max(chi, bond_dim(k));
  return chi;
}

void Mps::move_center_right(int k) {
  Matrix q, rm;
  thin_qr(tensors_[k], q, rm);
  tensors_[k] = std::move(q);
  tensors_[k + 1] = absorb_left(rm, tensors_[k + 1], d_);
}

void Mps::move_center_left(int k) {
  const Matrix& t = tensors_[k];
  const int chi_l = static_cast<int>(t.rows()) / d_;
  const int chi_r = static_cast<int>(t.cols());
  Matrix a(chi_l, d_ * chi_r);
  for (int s = 0; s < d_; ++s)
    a.middleCols(static_cast<std::ptrdiff_t>(s) * chi_r, chi_r) =
        phys_slice(t, s, d_);
  Matrix q, rm;
  thin_qr(a.adjoint(), q, rm);
  const int r = static_cast<int>(std::min(a.rows(), a.cols()));
  Matrix qdag = q.adjoint();  // r x (d*chi_r)
  Matrix tnew(r * d_, chi_r);
  for (int s = 0; s < d_; ++s)
    phys_slice_mut(tnew, s, d_) =
        qdag.middleCols(static_cast<std::ptrdiff_t>(s) * chi_r, chi_r);
  tensors_[k] = std::move(tnew);
  tensors_[k - 1] = tensors_[k - 1] * rm.adjoint();
}

void Mps::canonize(int center) {
  if (center < 0 || center >= size())
    throw std::invalid_argument("canonize: center out of range");
  if (center_ == -1) {
    for (int k = 0; k + 1 < size(); ++k) move_center_right(k);
    center_ = size() - 1;
  }
  while (center_ < center) {
    move_center_right(center_);
    ++center_;
  }
  while (center_ > center) {
    move_center_left(center_);
    --center_;
  }
}

double Mps::norm() const {
  if (center_ >= 0) return tensors_[center_].norm();
  return std::sqrt(std::abs(overlap(*this, *this)));
}

void Mps::normalize() {
  const double n = norm();
  if (n == 0.0) throw std::runtime_error("cannot normalize zero state");
  if (center_ >= 0)
    tensors_[center_] /= n;
  else
    tensors_[0] /= n;
}

void Mps::scale(Cplx factor) {
  tensors_[center_ >= 0 ? center_ : 0] *= factor;
}

void Mps::invalidate_spectra_except(int bond) {
  for (int k = 0; k < static_cast<int>(spectra_valid_.size()); ++k)
    if (k != bond) spectra_valid_[k] = false;
}

TruncationReport Mps::apply_gate(const TwoSiteGate& g, int chi_max,
                                 double svd_cutoff, SweepDir dir) {
  const int k = g.site;
  if (k < 0 || k + 1 >= size())
    throw std::invalid_argument("gate site out of range");
  if (g.matrix.rows() != d_ * d_ || g.matrix.cols() != d_ * d_)
    throw std::invalid_argument("gate dimension does not match local_dim^2");
  if (chi_max < 1) throw std::invalid_argument("chi_max < 1");
  if (center_ != k && center_ != k + 1) canonize(k);

  const Matrix& tl = tensors_[k];
  const Matrix& tr = tensors_[k + 1];
  const int chi_l = static_cast<int>(tl.rows()) / d_;
  const int chi_m = static_cast<int>(tl.cols());
  const int chi_r = static_cast<int>(tr.cols());

  // theta(a*d + s1, s2*chi_r + b)
  Matrix b(chi_m, d_ * chi_r);
  for (int s2 = 0; s2 < d_; ++s2)
    b.middleCols(static_cast<std::ptrdiff_t>(s2) * chi_r, chi_r) =
        phys_slice(tr, s2, d_);
  Matrix theta = tl * b;

  Matrix thetap = Matrix::Zero(theta.rows(), theta.cols());
  for (int t1 = 0; t1 < d_; ++t1)
    for (int t2 = 0; t2 < d_; ++t2)
      for (int s1 = 0; s1 < d_; ++s1)
        for (int s2 = 0; s2 < d_; ++s2) {
          const Cplx c = g.matrix(t1 * d_ + t2, s1 * d_ + s2);
          if (c == Cplx(0.0, 0.0)) continue;
          phys_slice_mut(thetap, t1, d_)
              .middleCols(static_cast<std::ptrdiff_t>(t2) * chi_r, chi_r) +=
              c * phys_slice(theta, s1, d_)
                      .middleCols(static_cast<std::ptrdiff_t>(s2) * chi_r,
                                  chi_r);
        }

  SvdSplit split = truncated_svd(thetap, chi_max, svd_cutoff);
  const int keep = static_cast<int>(split.s.size());

  Matrix right(keep * d_, chi_r);
  if (dir == SweepDir::Right) {
    tensors_[k] = split.u;
    Matrix sv = split.s.cast<Cplx>().asDiagonal() * split.vdag;
    for (int s2 = 0; s2 < d_; ++s2)
      phys_slice_mut(right, s2, d_) =
          sv.middleCols(static_cast<std::ptrdiff_t>(s2) * chi_r, chi_r);
    tensors_[k + 1] = std::move(right);
    center_ = k + 1;
  } else {
    tensors_[k] = split.u * split.s.cast<Cplx>().asDiagonal();
    for (int s2 = 0; s2 < d_; ++s2)
      phys_slice_mut(right, s2, d_) =
          split.vdag.middleCols(static_cast<std::ptrdiff_t>(s2) * chi_r, chi_r);
    tensors_[k + 1] = std::move(right);
    center_ = k;
  }

  const double sn = split.s.norm();
  RealVector lambda = sn > 0.0 ? RealVector(split.s / sn) : split.s;
  spectra_[k] = lambda;
  spectra_valid_[k] = true;
  if (!g.is_unitary) invalidate_spectra_except(k);

  TruncationReport rep;
  rep.add(k, split.discarded_weight, entropy_of(lambda));
  return rep;
}

void Mps::apply_local(const Matrix& op, int site, bool is_isometry) {
  if (op.rows() != d_ || op.cols() != d_)
    throw std::invalid_argument("local operator dimension mismatch");
  canonize(site);
  Matrix& t = tensors_[site];
  const int chi_l = static_cast<int>(t.rows()) / d_;
  for (Eigen::Index bcol = 0; bcol < t.cols(); ++bcol) {
    Eigen::Map<Matrix> m(t.data() + bcol * t.rows(), d_, chi_l);
    m = (op * m).eval();
  }
  if (!is_isometry) invalidate_spectra_except(-1);
}

double Mps::schmidt_entropy(int bond) const {
  if (bond < 0 || bond >= size() - 1)
    throw std::invalid_argument("bond out of range");
  if (!spectra_valid_[bond])
    throw std::logic_error("stale bond spectrum; refresh_spectra() first");
  return entropy_of(spectra_[bond]);
}

double Mps::max_entropy_over_bonds() const {
  double s = 0.0;
  for (int k = 0; k + 1 < size(); ++k)
    s = std::max(s, schmidt_entropy(k));
  return s;
}

const RealVector& Mps::bond_spectrum(int bond) const {
  if (!spectra_valid_.at(bond))
    throw std::logic_error("stale bond spectrum; refresh_spectra() first");
  return spectra_[bond];
}

void Mps::refresh_spectra() {
  canonize(0);
  for (int k = 0; k + 1 < size(); ++k) {
    const Matrix& t = tensors_[k];
    SvdSplit split =
        truncated_svd(t, static_cast<int>(std::min(t.rows(), t.cols())), 0.0);
    tensors_[k] = split.u;
    Matrix carry = split.s.cast<Cplx>().asDiagonal() * split.vdag;
    tensors_[k + 1] = absorb_left(carry, tensors_[k + 1], d_);
    const double sn = split.s.norm();
    spectra_[k] = sn > 0.0 ? RealVector(split.s / sn) : split.s;
    spectra_valid_[k] = true;
  }
  center_ = size() - 1;
}

Cplx Mps::expectation(const Matrix& op, int site) {
  if (site < 0 || site >= size())
    throw std::invalid_argument("site out of range");
  if (op.rows() != d_ || op.cols() != d_)
    throw std::invalid_argument("operator dimension mismatch");
  canonize(site);
  const Matrix& t = tensors_[site];
  Cplx val(0.0, 0.0);
  for (int sp = 0; sp < d_; ++sp)
    for (int s = 0; s < d_; ++s) {
      const Cplx c = op(sp, s);
      if (c == Cplx(0.0, 0.0)) continue;
      val += c * phys_slice(t, sp, d_)
                     .conjugate()
                     .cwiseProduct(phys_slice(t, s, d_))
                     .sum();
    }
  return val;
}

std::vector<Cplx> Mps::site_expectations(const Matrix& op, int lo, int hi) {
  std::vector<Cplx> out(static_cast<std::size_t>(hi - lo + 1));
  // Sweep from whichever end is closer to the current center.
  const bool from_right = center_ >= 0 && center_ > (lo + hi) / 2;
  if (from_right) {
    canonize(hi);
    for (int k = hi; k >= lo; --k) {
      out[k - lo] = expectation(op, k);
      if (k > lo) {
        move_center_left(k);
        --center_;
      }
    }
  } else {
    canonize(lo);
    for (int k = lo; k <= hi; ++k) {
      out[k - lo] = expectation(op, k);
      if (k < hi) {
        move_center_right(k);
        ++center_;
      }
    }
  }
  return out;
}

bool Mps::is_trivial_basis_site(int site) const {
  const Matrix& t = tensors_[site];
  if (t.rows() != d_ || t.cols() != 1) return false;
  for (int s = 1; s < d_; ++s)
    if (t(s, 0) != Cplx(0.0, 0.0)) return false;
  return true;
}

Vector Mps::to_dense() const {
  double dims = 1.0;
  for (int k = 0; k < size(); ++k) dims *= d_;
  if (dims > (1 << 24)) throw std::runtime_error("to_dense: state too large");
  Matrix m = Matrix::Ones(1, 1);
  for (int k = 0; k < size(); ++k) {
    const Matrix& t = tensors_[k];
    const int chi_r = static_cast<int>(t.cols());
    Matrix next(m.rows() * d_, chi_r);
    for (int s = 0; s < d_; ++s)
      phys_slice_mut(next, s, d_) = m * phys_slice(t, s, d_);
    m = std::move(next);
  }
  return Vector(m.col(0));
}

std::string Mps::debug_dump() const {
  std::ostringstream os;
  os << "{\"L\":" << size() << ",\"d\":" << d_ << ",\"ortho_center\":" << center_
     << ",\"bond_dims\":[";
  for (int k = 1; k < size(); ++k) os << (k > 1 ? "," : "") << bond_dim(k);
  os << "],\"spectra\":[";
  for (int k = 0; k + 1 < size(); ++k) {
    os << (k > 0 ? "," : "");
    if (!spectra_valid_[k]) {
      os << "null";
      continue;
    }
    os << "[";
    for (Eigen::Index j = 0; j < spectra_[k].size(); ++j)
      os << (j > 0 ? "," : "") << spectra_[k](j);
    os << "]";
  }
  os << "]}";
  return os.str();
}

Cplx overlap(const Mps& a, const Mps& b) {
  if (a.size() != b.size() || a.local_dim() != b.local_dim())
    throw std::invalid_argument("overlap: shape mismatch");
  const int d = a.local_dim();
  Matrix e = Matrix::Ones(1, 1);
  for (int k = 0; k < a.size(); ++k) {
    const Matrix& ta = a.tensor(k);
    const Matrix& tb = b.tensor(k);
    Matrix next = Matrix::Zero(ta.cols(), tb.cols());
    for (int s = 0; s < d; ++s)
      next.noalias() +=
          phys_slice(ta, s, d).adjoint() * (e * phys_slice(tb, s, d));
    e = std::move(next);
  }
  return e(0, 0);
}

Cplx cross_expectation(const Mps& bra, const Matrix& op, int site,
                       const Mps& ket) {
  if (bra.size() != ket.size() || bra.local_dim() != ket.local_dim())
    throw std::invalid_argument("cross_expectation: shape mismatch");
  const int d = bra.local_dim();
  Matrix e = Matrix::Ones(1, 1);
  for (int k = 0; k < bra.size(); ++k) {
    const Matrix& ta = bra.tensor(k);
    const Matrix& tb = ket.tensor(k);
    Matrix next = Matrix::Zero(ta.cols(), tb.cols());
    if (k == site) {
      for (int sp = 0; sp < d; ++sp)
        for (int s = 0; s < d; ++s) {
          const Cplx c = op(sp, s);
          if (c == Cplx(0.0, 0.0)) continue;
          next.noalias() +=
              c * (phys_slice(ta, sp, d).adjoint() * (e * phys_slice(tb, s, d)));
        }
    } else {
      for (int s = 0; s < d; ++s)
        next.noalias() +=
            phys_slice(ta, s, d).adjoint() * (e * phys_slice(tb, s, d));
    }
    e = std::move(next);
  }
  return e(0, 0);
}

std::vector<Cplx> cross_profile(const Mps& bra, const Matrix& op,
                                const Mps& ket) {
  if (bra.size() != ket.size() || bra.local_dim() != ket.local_dim())
    throw std::invalid_argument("cross_profile: shape mismatch");
  const int d = bra.local_dim();
  const int n = bra.size();
  // Left environments: envs[k] covers sites [0, k-1].
  std::vector<Matrix> envs(n + 1);
  envs[0] = Matrix::Ones(1, 1);
  for (int k = 0; k < n; ++k) {
    const Matrix& ta = bra.tensor(k);
    const Matrix& tb = ket.tensor(k);
    Matrix next = Matrix::Zero(ta.cols(), tb.cols());
    for (int s = 0; s < d; ++s)
      next.noalias() +=
          phys_slice(ta, s, d).adjoint() * (envs[k] * phys_slice(tb, s, d));
    envs[k + 1] = std::move(next);
  }
  std::vector<Cplx> vals(n);
  // g(alpha,beta) sums sites [k+1, n-1] with conjugated bra entries.
  Matrix g = Matrix::Ones(1, 1);
  for (int k = n - 1; k >= 0; --k) {
    const Matrix& ta = bra.tensor(k);
    const Matrix& tb = ket.tensor(k);
    Cplx v(0.0, 0.0);
    for (int sp = 0; sp < d; ++sp)
      for (int s = 0; s < d; ++s) {
        const Cplx c = op(sp, s);
        if (c == Cplx(0.0, 0.0)) continue;
        Matrix w = phys_slice(ta, sp, d).adjoint() *
                   (envs[k] * phys_slice(tb, s, d));
        v += c * w.cwiseProduct(g).sum();
      }
    vals[k] = v;
    Matrix next = Matrix::Zero(ta.rows() / d, tb.rows() / d);
    for (int s = 0; s < d; ++s)
      next.noalias() += phys_slice(ta, s, d).conjugate() *
                        (g * phys_slice(tb, s, d).transpose());
    g = std::move(next);
  }
  return vals;
}

}  // namespace cpsim
