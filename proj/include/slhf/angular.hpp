#pragma once

namespace slhf {

/// Wigner 3j symbol (l1 l2 l3; 0 0 0).
double wigner3j_zero(int l1, int l2, int l3);

/// Squared Clebsch-Gordan coefficient |<l1 0 l2 0 | L 0>|^2.
double clebsch_gordan_zero_sq(int l1, int l2, int big_l);

/// Integral over mu in [-1, 1] of P_a P_b P_c P_d.
double legendre_quadruple_integral(int a, int b, int c, int d);

} // namespace slhf
