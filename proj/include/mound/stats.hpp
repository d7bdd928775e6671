#pragma once

#include <cmath>
#include <cstddef>
#include <span>

#include "mound/errors.hpp"

namespace mound {

// Continued-fraction core for the regularized incomplete beta function,
// evaluated by the modified Lentz method.
inline double betacf(double a, double b, double x) {
  constexpr int kMaxIter = 300;
  constexpr double kEps = 3e-15;
  constexpr double kFpMin = 1e-300;

  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kFpMin) d = kFpMin;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) return h;
  }
  throw ValidationError("incomplete beta continued fraction failed to converge");
}

// Regularized incomplete beta I_x(a, b).
inline double incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0))
    throw ValidationError("incomplete beta requires a > 0 and b > 0");
  if (x < 0.0 || x > 1.0)
    throw ValidationError("incomplete beta requires x in [0,1]");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                          a * std::log(x) + b * std::log(1.0 - x);
  const double front = std::exp(ln_front);
  // The continued fraction converges fast only below the distribution mean;
  // use the symmetry I_x(a,b) = 1 - I_(1-x)(b,a) on the far side.
  if (x < (a + 1.0) / (a + b + 2.0)) return front * betacf(a, b, x) / a;
  return 1.0 - front * betacf(b, a, 1.0 - x) / b;
}

// P(T <= t) for Student's t with nu degrees of freedom.
inline double student_t_cdf(double t, double nu) {
  if (!(nu > 0.0)) throw ValidationError("t CDF requires nu > 0");
  if (t == 0.0) return 0.5;
  const double x = nu / (nu + t * t);
  const double tail = 0.5 * incomplete_beta(nu / 2.0, 0.5, x);
  return t < 0.0 ? tail : 1.0 - tail;
}

struct TTestResult {
  double t = 0.0;
  double df = 0.0;
  double p_one_sided = 0.0; // left tail, P(T <= t)
  double p_two_sided = 0.0;
  double mean_diff = 0.0;
};

// Paired t-test on per-block scores: d_i = a_i - b_i,
// t = mean(d) / (sd(d) / sqrt(n)) with the sample (n-1) standard deviation.
inline TTestResult paired_t_test(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size())
    throw ValidationError("paired t-test requires equal-length samples");
  const std::size_t n = a.size();
  if (n < 2) throw ValidationError("paired t-test requires at least 2 pairs");
  double mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) mean += a[i] - b[i];
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dev = (a[i] - b[i]) - mean;
    ss += dev * dev;
  }
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));
  if (sd == 0.0)
    throw ValidationError("paired t-test is undefined for zero-variance differences");
  TTestResult r;
  r.mean_diff = mean;
  r.df = static_cast<double>(n - 1);
  r.t = mean / (sd / std::sqrt(static_cast<double>(n)));
  r.p_one_sided = student_t_cdf(r.t, r.df);
  r.p_two_sided = 2.0 * student_t_cdf(-std::fabs(r.t), r.df);
  return r;
}

} // namespace mound
