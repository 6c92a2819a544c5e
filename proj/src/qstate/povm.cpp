#include "qlink/qstate/povm.hpp"

#include <cmath>

#include "qlink/des/rng.hpp"

namespace qlink::qstate {

bool Povm::complete(double tol) const {
  if (elements.empty()) return false;
  Mat acc = Mat::Zero(elements.front().rows(), elements.front().cols());
  for (const Mat& e : elements) acc += e;
  return (acc - Mat::Identity(acc.rows(), acc.cols())).cwiseAbs().maxCoeff() <= tol;
}

Povm beamsplitter_povm(Cplx mu, bool photon_counting) {
  const double mu2 = std::norm(mu);
  if (mu2 > 1.0 + 1e-12) throw std::invalid_argument("beamsplitter_povm: |mu| > 1");

  auto corner = [](double v) {
    Mat m = Mat::Zero(4, 4);
    m(3, 3) = v;
    return m;
  };
  Mat m00 = Mat::Zero(4, 4);
  m00(0, 0) = 1.0;

  Mat m10 = Mat::Zero(4, 4);
  m10(1, 1) = 0.5;
  m10(2, 2) = 0.5;
  m10(1, 2) = 0.5 * mu;
  m10(2, 1) = 0.5 * std::conj(mu);
  Mat m01 = Mat::Zero(4, 4);
  m01(1, 1) = 0.5;
  m01(2, 2) = 0.5;
  m01(1, 2) = -0.5 * mu;
  m01(2, 1) = -0.5 * std::conj(mu);

  Povm p;
  if (photon_counting) {
    p.elements = {m00,
                  m10,
                  m01,
                  corner(0.5 * (1.0 - mu2)),
                  corner(0.25 * (1.0 + mu2)),
                  corner(0.25 * (1.0 + mu2))};
    return p;
  }

  Mat t10 = m10 + corner(0.25 * (1.0 + mu2));
  Mat t01 = m01 + corner(0.25 * (1.0 + mu2));
  p.elements = {m00, t10, t01, corner(0.5 * (1.0 - mu2))};

  if (std::abs(mu.imag()) < 1e-14) {
    // Square roots exist in closed form for real mu.
    const double r = mu.real();
    const double sp = std::sqrt(1.0 + r), sm = std::sqrt(1.0 - r);
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    const double a = (sp + sm) * inv_sqrt2, b = (sp - sm) * inv_sqrt2;

    Mat e00 = Mat::Zero(4, 4);
    e00(0, 0) = 1.0;
    Mat e10 = Mat::Zero(4, 4);
    e10(1, 1) = 0.5 * a;
    e10(2, 2) = 0.5 * a;
    e10(1, 2) = 0.5 * b;
    e10(2, 1) = 0.5 * b;
    e10(3, 3) = 0.5 * std::sqrt(1.0 + mu2);
    Mat e01 = Mat::Zero(4, 4);
    e01(1, 1) = 0.5 * a;
    e01(2, 2) = 0.5 * a;
    e01(1, 2) = -0.5 * b;
    e01(2, 1) = -0.5 * b;
    e01(3, 3) = 0.5 * std::sqrt(1.0 + mu2);
    Mat e11 = Mat::Zero(4, 4);
    e11(3, 3) = std::sqrt((1.0 - mu2) / 2.0);
    p.kraus = {e00, e10, e01, e11};
  }
  return p;
}

Povm readout_povm(double f0, double f1) {
  if (f0 < 0.0 || f0 > 1.0 || f1 < 0.0 || f1 > 1.0) {
    throw std::invalid_argument("readout_povm: fidelities outside [0,1]");
  }
  Mat k0(2, 2), k1(2, 2);
  k0 << std::sqrt(f0), 0, 0, std::sqrt(1.0 - f1);
  k1 << std::sqrt(1.0 - f0), 0, 0, std::sqrt(f1);
  Povm p;
  p.elements = {k0.adjoint() * k0, k1.adjoint() * k1};
  p.kraus = {k0, k1};
  return p;
}

std::vector<double> povm_probabilities(const DensityMatrix& rho, const Povm& povm) {
  if (povm.elements.empty() || povm.elements.front().rows() != rho.dim()) {
    throw std::invalid_argument("povm_probabilities: dimension mismatch");
  }
  std::vector<double> probs;
  probs.reserve(povm.elements.size());
  double total = 0.0;
  for (const Mat& e : povm.elements) {
    double p = (e * rho.mat()).trace().real();
    if (p < 0.0 && p > -1e-12) p = 0.0;
    probs.push_back(p);
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw std::runtime_error("povm_probabilities: outcome probabilities do not sum to 1");
  }
  return probs;
}

std::pair<int, DensityMatrix> measure_povm(const DensityMatrix& rho, const Povm& povm,
                                           std::mt19937_64& rng) {
  if (!povm.kraus) throw std::invalid_argument("measure_povm: POVM lacks Kraus square roots");
  std::vector<double> probs = povm_probabilities(rho, povm);
  const int outcome = des::sample_index(rng, probs);
  const Mat& e = (*povm.kraus)[outcome];
  DensityMatrix post(Mat((e * rho.mat() * e.adjoint()).eval()));
  post.renormalize();
  post.resymmetrize();
  return {outcome, std::move(post)};
}

}  // namespace qlink::qstate
