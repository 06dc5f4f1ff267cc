// Small statistics helpers: chi-square tail probability (via the
// regularized incomplete gamma function) and mean/std summaries.
#pragma once

#include <span>

namespace sdd {

// Regularized upper incomplete gamma Q(a, x) = Gamma(a, x) / Gamma(a).
// a > 0, x >= 0. Series expansion for x < a + 1, continued fraction
// otherwise; absolute accuracy around 1e-12.
double gamma_q(double a, double x);

// Upper-tail p-value of a chi-square statistic with dof degrees of freedom.
double chi_square_p_value(double stat, int dof);

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // sample estimator (n - 1); 0 when n < 2
};
MeanStd mean_std(std::span<const double> xs);

}  // namespace sdd
