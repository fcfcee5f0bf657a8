#include "slhf/angular.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

namespace slhf {

double wigner3j_zero(int l1, int l2, int l3) {
  if (l1 < 0 || l2 < 0 || l3 < 0) return 0.0;
  if (l3 < std::abs(l1 - l2) || l3 > l1 + l2) return 0.0;
  const int j = l1 + l2 + l3;
  if (j % 2 != 0) return 0.0;
  const int g = j / 2;
  const double log_val =
      0.5 * (std::lgamma(j - 2 * l1 + 1.0) + std::lgamma(j - 2 * l2 + 1.0) +
             std::lgamma(j - 2 * l3 + 1.0) - std::lgamma(j + 2.0)) +
      std::lgamma(g + 1.0) - std::lgamma(g - l1 + 1.0) - std::lgamma(g - l2 + 1.0) -
      std::lgamma(g - l3 + 1.0);
  const double sign = (g % 2 == 0) ? 1.0 : -1.0;
  return sign * std::exp(log_val);
}

double clebsch_gordan_zero_sq(int l1, int l2, int big_l) {
  const double w = wigner3j_zero(l1, l2, big_l);
  return (2.0 * big_l + 1.0) * w * w;
}

double legendre_quadruple_integral(int a, int b, int c, int d) {
  // P_a P_b = sum_L (2L+1) (a b L;000)^2 P_L and int P_L P_c P_d = 2 (L c d;000)^2.
  double sum = 0.0;
  for (int big_l = std::abs(a - b); big_l <= a + b; ++big_l) {
    const double w1 = wigner3j_zero(a, b, big_l);
    const double w2 = wigner3j_zero(big_l, c, d);
    sum += (2.0 * big_l + 1.0) * w1 * w1 * 2.0 * w2 * w2;
  }
  return sum;
}

} // namespace slhf
