#pragma once

#include <Eigen/Dense>
#include <complex>
#include <span>
#include <stdexcept>
#include <vector>

namespace qlink::qstate {

using Cplx = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;

inline constexpr double kHermTol = 1e-10;
inline constexpr double kTraceTol = 1e-10;
inline constexpr double kPsdTol = 1e-9;

enum class Bell { PhiPlus, PhiMinus, PsiPlus, PsiMinus };

Vec bell_state(Bell kind);
Vec ket(std::initializer_list<int> bits);

Mat pauli_x();
Mat pauli_y();
Mat pauli_z();
Mat identity(int dim);

/// Measurement axis for single-qubit readout.
enum class Basis : int { X = 0, Y = 1, Z = 2 };

/// Unitary U such that measuring Z after applying U is equivalent to
/// measuring in the requested basis.
Mat basis_rotation(Basis b);

/// Dense density matrix over 1..4 qubits. Qubit 0 is the leftmost tensor
/// factor (most significant index bits).
class DensityMatrix {
 public:
  DensityMatrix() = default;
  explicit DensityMatrix(Mat m);
  static DensityMatrix from_pure(const Vec& psi);
  static DensityMatrix maximally_mixed(int qubits);

  const Mat& mat() const { return m_; }
  Mat& mat() { return m_; }
  int dim() const { return static_cast<int>(m_.rows()); }
  int qubits() const { return qubits_; }

  DensityMatrix tensor(const DensityMatrix& other) const;

  /// Marginal over the listed qubits (kept in the given order).
  DensityMatrix partial_trace_keep(std::span<const int> keep) const;
  DensityMatrix trace_out(int qubit) const;

  double trace_real() const { return m_.trace().real(); }
  bool is_hermitian(double tol = kHermTol) const;
  bool is_trace_one(double tol = kTraceTol) const;
  double min_eigenvalue() const;
  bool is_psd(double tol = kPsdTol) const;
  bool valid() const { return is_hermitian() && is_trace_one() && is_psd(); }

  /// (m + m^dagger)/2; applied after every channel to stop numeric drift.
  void resymmetrize() { m_ = ((m_ + m_.adjoint()) / 2.0).eval(); }

  void renormalize();

 private:
  Mat m_;
  int qubits_ = 0;
};

/// Lifts a (2^k x 2^k) operator acting on `targets` (in order) to the full
/// space of `total_qubits`.
Mat embed(const Mat& op, std::span<const int> targets, int total_qubits);

/// <psi| rho |psi>, real within 1e-10.
double fidelity(const DensityMatrix& rho, const Vec& target);

int qubit_count_for_dim(Eigen::Index dim);

}  // namespace qlink::qstate
