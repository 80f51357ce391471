#pragma once

namespace themetric {

// Regularized lower incomplete gamma P(a, x): series expansion for
// x < a + 1, continued fraction otherwise. Absolute tolerance 1e-10.
double regularized_gamma_p(double a, double x);

// Upper tail Q(a, x) = 1 - P(a, x).
double regularized_gamma_q(double a, double x);

// P(X >= x) for X ~ chi-square with df degrees of freedom.
double chi_square_upper_tail(double x, int df);

}  // namespace themetric
