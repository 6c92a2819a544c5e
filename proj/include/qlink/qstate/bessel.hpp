#pragma once

namespace qlink::qstate {

/// I1(x)/I0(x) for x > 0, relative error <= 1e-9. Continued-fraction
/// evaluation with a 1e-12 stopping tolerance; asymptotic ratio for large x.
double bessel_i_ratio(double x);

/// Dephasing parameter for a phase of standard deviation `sigma_rad`:
/// p = (1 - I1(sigma^-2)/I0(sigma^-2)) / 2, in (0, 0.5).
double phase_dephasing_param(double sigma_rad);

}  // namespace qlink::qstate
