#include "qlink/qstate/channels.hpp"

#include <cmath>

namespace qlink::qstate {

bool KrausChannel::is_trace_preserving(double tol) const {
  if (ops.empty()) return false;
  Mat acc = Mat::Zero(ops.front().rows(), ops.front().cols());
  for (const Mat& k : ops) acc += k.adjoint() * k;
  return (acc - Mat::Identity(acc.rows(), acc.cols())).cwiseAbs().maxCoeff() <= tol;
}

KrausChannel KrausChannel::dephasing(double p) {
  if (p < 0.0 || p > 1.0) throw std::invalid_argument("dephasing: p outside [0,1]");
  KrausChannel ch;
  ch.ops.push_back(std::sqrt(1.0 - p) * identity(2));
  ch.ops.push_back(std::sqrt(p) * pauli_z());
  return ch;
}

KrausChannel KrausChannel::depolarizing(double f) {
  if (f < 0.0 || f > 1.0) throw std::invalid_argument("depolarizing: f outside [0,1]");
  KrausChannel ch;
  const double q = (1.0 - f) / 3.0;
  ch.ops.push_back(std::sqrt(f) * identity(2));
  ch.ops.push_back(std::sqrt(q) * pauli_x());
  ch.ops.push_back(std::sqrt(q) * pauli_y());
  ch.ops.push_back(std::sqrt(q) * pauli_z());
  return ch;
}

KrausChannel KrausChannel::amplitude_damping(double p) {
  if (p < 0.0 || p > 1.0) throw std::invalid_argument("amplitude_damping: p outside [0,1]");
  KrausChannel ch;
  Mat k0(2, 2), k1(2, 2);
  k0 << 1, 0, 0, std::sqrt(1.0 - p);
  k1 << 0, std::sqrt(p), 0, 0;
  ch.ops.push_back(std::move(k0));
  ch.ops.push_back(std::move(k1));
  return ch;
}

KrausChannel KrausChannel::unitary(Mat u) {
  KrausChannel ch;
  ch.ops.push_back(std::move(u));
  return ch;
}

KrausChannel KrausChannel::identity_channel(int dim) {
  KrausChannel ch;
  ch.ops.push_back(identity(dim));
  return ch;
}

void apply_channel(DensityMatrix& rho, const KrausChannel& ch, std::span<const int> targets) {
  if (ch.ops.empty()) throw std::invalid_argument("apply_channel: empty channel");
  const Eigen::Index dk = Eigen::Index(1) << targets.size();
  if (ch.ops.front().rows() != dk) {
    throw std::invalid_argument("apply_channel: channel dimension does not match targets");
  }
  Mat out = Mat::Zero(rho.dim(), rho.dim());
  for (const Mat& k : ch.ops) {
    Mat kf = embed(k, targets, rho.qubits());
    out += kf * rho.mat() * kf.adjoint();
  }
  rho.mat() = std::move(out);
  rho.resymmetrize();
}

}  // namespace qlink::qstate
