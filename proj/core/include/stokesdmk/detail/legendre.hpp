#pragma once

#include <vector>

namespace stokesdmk::detail {

/* Legendre polynomial helpers shared by the prolate window machinery and
 * the quadrature-based table builders.  All routines work on [-1,1] with
 * the standard (unnormalized) Legendre polynomials P_n. */

// P_0(x) .. P_n(x) by the three-term recurrence.
inline void legendre_all(double x, int n, double* P) {
    P[0] = 1.0;
    if (n == 0) return;
    P[1] = x;
    for (int k = 1; k < n; ++k)
        P[k + 1] = ((2 * k + 1) * x * P[k] - k * P[k - 1]) / (k + 1);
}

// Values and first three derivatives of P_0..P_n, using the stable
// recurrence P'_{k+1} = P'_{k-1} + (2k+1) P_k and its derivatives.
inline void legendre_all_derivs(double x, int n, double* P, double* D1, double* D2, double* D3) {
    legendre_all(x, n, P);
    D1[0] = 0.0;
    D2[0] = 0.0;
    D3[0] = 0.0;
    if (n == 0) return;
    D1[1] = 1.0;
    D2[1] = 0.0;
    D3[1] = 0.0;
    for (int k = 1; k < n; ++k) {
        D1[k + 1] = D1[k - 1] + (2 * k + 1) * P[k];
        D2[k + 1] = D2[k - 1] + (2 * k + 1) * D1[k];
        D3[k + 1] = D3[k - 1] + (2 * k + 1) * D2[k];
    }
}

// int_r^1 P_n(t) dt.  For n >= 1 this is (P_{n-1}(r) - P_{n+1}(r)) / (2n+1),
// which stays accurate as r -> 1 (no cancellation against the total mass).
inline double legendre_int_to_one(int n, double r, const double* P) {
    if (n == 0) return 1.0 - r;
    return (P[n - 1] - P[n + 1]) / (2 * n + 1);
}

// Table of derivatives P_n^(m)(0) for m = 0..mmax, n = 0..nmax, from
// (k+1) P_{k+1}^(m) = (2k+1) (x P_k^(m) + m P_k^(m-1)) - k P_{k-1}^(m) at x=0.
// D[m][n] holds P_n^(m)(0).
std::vector<std::vector<double>> legendre_derivs_at_zero(int mmax, int nmax);

// Gauss-Legendre nodes and weights on [-1,1].
void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w);

}  // namespace stokesdmk::detail
