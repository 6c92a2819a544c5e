#include "qlink/qstate/dm.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

namespace qlink::qstate {

int qubit_count_for_dim(Eigen::Index dim) {
  int n = 0;
  Eigen::Index d = 1;
  while (d < dim) {
    d <<= 1;
    ++n;
  }
  if (d != dim || n < 1 || n > 4) {
    throw std::invalid_argument("dimension must be 2^n for n in 1..4");
  }
  return n;
}

Vec bell_state(Bell kind) {
  Vec v = Vec::Zero(4);
  const double s = 1.0 / std::sqrt(2.0);
  switch (kind) {
    case Bell::PhiPlus:
      v(0) = s;
      v(3) = s;
      break;
    case Bell::PhiMinus:
      v(0) = s;
      v(3) = -s;
      break;
    case Bell::PsiPlus:
      v(1) = s;
      v(2) = s;
      break;
    case Bell::PsiMinus:
      v(1) = s;
      v(2) = -s;
      break;
  }
  return v;
}

Vec ket(std::initializer_list<int> bits) {
  int n = static_cast<int>(bits.size());
  int idx = 0;
  for (int b : bits) idx = (idx << 1) | (b & 1);
  Vec v = Vec::Zero(Eigen::Index(1) << n);
  v(idx) = 1.0;
  return v;
}

Mat pauli_x() {
  Mat m(2, 2);
  m << 0, 1, 1, 0;
  return m;
}

Mat pauli_y() {
  Mat m(2, 2);
  m << Cplx(0, 0), Cplx(0, -1), Cplx(0, 1), Cplx(0, 0);
  return m;
}

Mat pauli_z() {
  Mat m(2, 2);
  m << 1, 0, 0, -1;
  return m;
}

Mat identity(int dim) { return Mat::Identity(dim, dim); }

Mat basis_rotation(Basis b) {
  const double s = 1.0 / std::sqrt(2.0);
  Mat m(2, 2);
  switch (b) {
    case Basis::X:
      m << s, s, s, -s;
      return m;
    case Basis::Y:
      m << Cplx(s, 0), Cplx(0, -s), Cplx(s, 0), Cplx(0, s);
      return m;
    case Basis::Z:
      return identity(2);
  }
  return identity(2);
}

DensityMatrix::DensityMatrix(Mat m) : m_(std::move(m)) {
  if (m_.rows() != m_.cols()) throw std::invalid_argument("density matrix must be square");
  qubits_ = qubit_count_for_dim(m_.rows());
}

DensityMatrix DensityMatrix::from_pure(const Vec& psi) {
  DensityMatrix d;
  d.m_ = psi * psi.adjoint();
  d.qubits_ = qubit_count_for_dim(psi.size());
  return d;
}

DensityMatrix DensityMatrix::maximally_mixed(int qubits) {
  Eigen::Index dim = Eigen::Index(1) << qubits;
  return DensityMatrix(Mat::Identity(dim, dim) / static_cast<double>(dim));
}

DensityMatrix DensityMatrix::tensor(const DensityMatrix& other) const {
  const Eigen::Index da = m_.rows(), db = other.m_.rows();
  Mat out(da * db, da * db);
  for (Eigen::Index i = 0; i < da; ++i)
    for (Eigen::Index j = 0; j < da; ++j)
      out.block(i * db, j * db, db, db) = m_(i, j) * other.m_;
  return DensityMatrix(std::move(out));
}

DensityMatrix DensityMatrix::partial_trace_keep(std::span<const int> keep) const {
  const int n = qubits_;
  const int k = static_cast<int>(keep.size());
  for (int q : keep) {
    if (q < 0 || q >= n) throw std::invalid_argument("partial_trace_keep: bad qubit index");
  }
  std::vector<int> drop;
  std::vector<bool> kept(n, false);
  for (int q : keep) kept[q] = true;
  for (int q = 0; q < n; ++q)
    if (!kept[q]) drop.push_back(q);

  const Eigen::Index dk = Eigen::Index(1) << k;
  const int nd = n - k;
  const Eigen::Index dd = Eigen::Index(1) << nd;
  Mat out = Mat::Zero(dk, dk);

  auto full_index = [&](Eigen::Index kept_bits, Eigen::Index drop_bits) {
    Eigen::Index idx = 0;
    for (int pos = 0; pos < k; ++pos) {
      int bit = static_cast<int>((kept_bits >> (k - 1 - pos)) & 1);
      idx |= Eigen::Index(bit) << (n - 1 - keep[pos]);
    }
    for (int pos = 0; pos < nd; ++pos) {
      int bit = static_cast<int>((drop_bits >> (nd - 1 - pos)) & 1);
      idx |= Eigen::Index(bit) << (n - 1 - drop[pos]);
    }
    return idx;
  };

  for (Eigen::Index i = 0; i < dk; ++i)
    for (Eigen::Index j = 0; j < dk; ++j) {
      Cplx acc = 0.0;
      for (Eigen::Index t = 0; t < dd; ++t) acc += m_(full_index(i, t), full_index(j, t));
      out(i, j) = acc;
    }
  return DensityMatrix(std::move(out));
}

DensityMatrix DensityMatrix::trace_out(int qubit) const {
  std::vector<int> keep;
  for (int q = 0; q < qubits_; ++q)
    if (q != qubit) keep.push_back(q);
  return partial_trace_keep(keep);
}

bool DensityMatrix::is_hermitian(double tol) const {
  return (m_ - m_.adjoint()).cwiseAbs().maxCoeff() <= tol;
}

bool DensityMatrix::is_trace_one(double tol) const {
  return std::abs(m_.trace() - Cplx(1.0, 0.0)) <= tol;
}

double DensityMatrix::min_eigenvalue() const {
  Eigen::SelfAdjointEigenSolver<Mat> es(((m_ + m_.adjoint()) / 2.0).eval(),
                                        Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

bool DensityMatrix::is_psd(double tol) const { return min_eigenvalue() >= -tol; }

void DensityMatrix::renormalize() {
  double tr = m_.trace().real();
  if (tr <= 0.0) throw std::runtime_error("renormalize: nonpositive trace");
  m_ /= tr;
}

Mat embed(const Mat& op, std::span<const int> targets, int total_qubits) {
  const int k = static_cast<int>(targets.size());
  const Eigen::Index dk = Eigen::Index(1) << k;
  if (op.rows() != dk || op.cols() != dk) {
    throw std::invalid_argument("embed: operator dimension does not match target count");
  }
  std::vector<bool> seen(total_qubits, false);
  for (int q : targets) {
    if (q < 0 || q >= total_qubits || seen[q]) throw std::invalid_argument("embed: bad targets");
    seen[q] = true;
  }
  const Eigen::Index dim = Eigen::Index(1) << total_qubits;
  Mat out = Mat::Zero(dim, dim);

  auto sub_bits = [&](Eigen::Index full) {
    Eigen::Index s = 0;
    for (int pos = 0; pos < k; ++pos) {
      int bit = static_cast<int>((full >> (total_qubits - 1 - targets[pos])) & 1);
      s = (s << 1) | bit;
    }
    return s;
  };
  Eigen::Index rest_mask = dim - 1;
  for (int q : targets) rest_mask &= ~(Eigen::Index(1) << (total_qubits - 1 - q));

  for (Eigen::Index i = 0; i < dim; ++i) {
    for (Eigen::Index j = 0; j < dim; ++j) {
      if ((i & rest_mask) != (j & rest_mask)) continue;
      out(i, j) = op(sub_bits(i), sub_bits(j));
    }
  }
  return out;
}

double fidelity(const DensityMatrix& rho, const Vec& target) {
  if (target.size() != rho.dim()) throw std::invalid_argument("fidelity: dimension mismatch");
  Cplx v = (target.adjoint() * rho.mat() * target)(0);
  if (std::abs(v.imag()) > 1e-10) throw std::runtime_error("fidelity: non-real overlap");
  double f = v.real();
  if (f < 0.0 && f > -1e-10) f = 0.0;
  if (f > 1.0 && f < 1.0 + 1e-10) f = 1.0;
  return f;
}

}  // namespace qlink::qstate
