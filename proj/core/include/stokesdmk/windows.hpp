#pragma once

#include <array>
#include <string>
#include <vector>

namespace stokesdmk {

/* Window functions for the kernel split.  phi is normalized to unit mass on
 * the line, so its Fourier transform satisfies phi_hat(0) = 1.
 *
 * Prolate: phi(r) = psi0c(r) / int_{-1}^{1} psi0c, truncated to [-1,1];
 *          phi_hat(k) = psi0c(k/c) / psi0c(0), exactly zero for |k| > c.
 * Gaussian: phi(r) = exp(-r^2/sigma^2) / (sigma sqrt(pi));
 *           phi_hat(k) = exp(-k^2 sigma^2 / 4). */

enum class WindowKind { prolate, gaussian };

struct WindowFunction {
    WindowKind kind = WindowKind::prolate;
    double c = 0.0;      // prolate bandlimit
    double sigma = 0.0;  // gaussian shape parameter

    // coefficient of P_{2j} (standard Legendre basis) in psi0c; prolate only
    std::vector<double> legendre_coeffs;
    double lambda0 = 0.0;      // eigenvalue of the Fourier integral operator
    double norm_r = 0.0;       // 1/int_{-1}^1 psi (prolate) or 1/(sigma sqrt(pi))
    double trunc_error = 0.0;  // |phi(1)/phi(0)|

    double psi0 = 0.0;  // psi0c(0), prolate only
    double chi0 = 0.0;  // eigenvalue of the prolate differential operator
};

WindowFunction build_prolate(double c);
WindowFunction build_gaussian(double sigma);

double window_eval(const WindowFunction& w, double r);
double window_deriv(const WindowFunction& w, double r);  // phi'(r)
double window_fourier(const WindowFunction& w, double k);
double window_fourier_deriv(const WindowFunction& w, double k, int order);  // order 1..3

// Phi(r) = 2 int_r^inf phi(t) dt; prolate: exactly 0 for r >= 1.
double phi_tail(const WindowFunction& w, double r);

// Taylor coefficients b_{2j}: phi_hat(k) = sum_{j=0..4} b_{2j} k^{2j} + O(k^10).
std::array<double, 5> window_fourier_taylor(const WindowFunction& w);

// Binary cache of the prolate Legendre coefficients (header: magic, version,
// c, count, then little-endian float64 coefficients).  dir == "" disables.
bool save_prolate_cache(const WindowFunction& w, const std::string& dir);
bool load_prolate_cache(double c, const std::string& dir, WindowFunction& out);

}  // namespace stokesdmk
