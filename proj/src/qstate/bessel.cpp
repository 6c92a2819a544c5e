#include "qlink/qstate/bessel.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace qlink::qstate {

namespace {

// Modified Lentz evaluation of I1/I0 = 1/(2/x + 1/(4/x + 1/(6/x + ...))).
double ratio_continued_fraction(double x) {
  constexpr double tiny = 1e-300;
  constexpr double tol = 1e-12;
  double f = tiny;
  double c = f;
  double d = 0.0;
  for (int k = 1; k <= 200000; ++k) {
    const double b = 2.0 * k / x;  // partial denominator
    const double a = 1.0;          // partial numerator
    d = b + a * d;
    if (std::abs(d) < tiny) d = tiny;
    c = b + a / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = c * d;
    f *= delta;
    if (std::abs(delta - 1.0) < tol) return f;
  }
  throw std::runtime_error("bessel_i_ratio: continued fraction did not converge");
}

// Ratio of the large-argument series of I1 and I0 (shared exponential
// prefactor cancels). Accurate below 1e-12 for x >= 100.
double ratio_asymptotic(double x) {
  auto series = [&](double mu) {
    double term = 1.0, sum = 1.0;
    for (int k = 1; k <= 8; ++k) {
      const double f = mu - (2.0 * k - 1.0) * (2.0 * k - 1.0);
      term *= -f / (8.0 * x * k);
      sum += term;
    }
    return sum;
  };
  return series(4.0) / series(0.0);
}

}  // namespace

double bessel_i_ratio(double x) {
  if (!(x > 0.0)) throw std::invalid_argument("bessel_i_ratio: x must be positive");
  if (x >= 100.0) return ratio_asymptotic(x);
  return ratio_continued_fraction(x);
}

double phase_dephasing_param(double sigma_rad) {
  if (!(sigma_rad > 0.0)) {
    throw std::invalid_argument("phase_dephasing_param: sigma must be positive");
  }
  const double x = 1.0 / (sigma_rad * sigma_rad);
  if (x < 1e-290) return 0.5;  // sigma so large the quotient underflows to 0
  return (1.0 - bessel_i_ratio(x)) / 2.0;
}

}  // namespace qlink::qstate
