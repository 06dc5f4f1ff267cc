#include "sdd/stats.hpp"

#include <cmath>
#include <string>

#include "sdd/error.hpp"

namespace sdd {

namespace {

// Lower regularized gamma P(a, x) by power series; converges for x < a + 1.
double gamma_p_series(double a, double x) {
  double ap = a;
  double sum = 1.0 / a;
  double del = sum;
  for (int i = 0; i < 500; ++i) {
    ap += 1.0;
    del *= x / ap;
    sum += del;
    if (std::fabs(del) < std::fabs(sum) * 1e-15) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Upper regularized gamma Q(a, x) by Lentz continued fraction; x >= a + 1.
double gamma_q_cf(double a, double x) {
  const double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= 500; ++i) {
    double an = -static_cast<double>(i) * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < 1e-15) break;
  }
  return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

}  // namespace

double gamma_q(double a, double x) {
  if (!(a > 0.0))
    throw InputError("gamma_q: a must be > 0, got " + std::to_string(a));
  if (x < 0.0)
    throw InputError("gamma_q: x must be >= 0, got " + std::to_string(x));
  if (x == 0.0) return 1.0;
  if (x < a + 1.0) return 1.0 - gamma_p_series(a, x);
  return gamma_q_cf(a, x);
}

double chi_square_p_value(double stat, int dof) {
  if (dof <= 0)
    throw InputError("chi_square_p_value: dof must be positive, got " +
                     std::to_string(dof));
  if (stat < 0.0)
    throw InputError("chi_square_p_value: statistic must be >= 0, got " +
                     std::to_string(stat));
  return gamma_q(dof / 2.0, stat / 2.0);
}

MeanStd mean_std(std::span<const double> xs) {
  MeanStd r;
  if (xs.empty()) return r;
  double sum = 0.0;
  for (double x : xs) sum += x;
  r.mean = sum / static_cast<double>(xs.size());
  if (xs.size() < 2) return r;
  double acc = 0.0;
  for (double x : xs) {
    double d = x - r.mean;
    acc += d * d;
  }
  r.std = std::sqrt(acc / static_cast<double>(xs.size() - 1));
  return r;
}

}  // namespace sdd
