#include <cmath>
#include <stdexcept>

#include "stokesdmk/split.hpp"

/* Fourier transforms of the truncated Green's functions B^R = B rect(r/R),
 * H^R = H rect(r/R), and the mollified kernel symbols assembled from them.
 * Near k = 0 the explicit forms lose all digits to cancellation, so a few
 * series terms take over below kR = 0.1. */

namespace stokesdmk {

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;

double bessel_j0(double x) { return std::cyl_bessel_j(0.0, x); }
double bessel_j1(double x) { return std::cyl_bessel_j(1.0, x); }

}  // namespace

double truncated_biharmonic_fourier(double k, double R, int dim) {
    if (dim != 2 && dim != 3)
        throw std::invalid_argument("truncated_biharmonic_fourier: dim must be 2 or 3");
    if (R <= 0.0) throw std::invalid_argument("truncated_biharmonic_fourier: R must be positive");
    k = std::fabs(k);
    double u = k * R;
    double R4 = R * R * R * R;
    if (u < 0.1) {
        /* k^4 B_hat^R = sum_{m>=2} (-1)^m (m-1) u^{2m} / (2m+1)!   (3D)
         *             = sum_{m>=2} (-1)^m (m-1) u^{2m} / (4^m (m!)^2)  (2D) */
        double u2 = u * u;
        double sum = 0.0, pw = 1.0;
        for (int m = 2; m <= 9; ++m) {
            double denom;
            if (dim == 3) {
                denom = 1.0;
                for (int j = 2; j <= 2 * m + 1; ++j) denom *= j;
            } else {
                double fact = 1.0;
                for (int j = 2; j <= m; ++j) fact *= j;
                denom = std::pow(4.0, m) * fact * fact;
            }
            double term = (m % 2 == 0 ? 1.0 : -1.0) * (m - 1) / denom;
            sum += term * pw;
            pw *= u2;
        }
        return R4 * sum;
    }
    double k4 = k * k * k * k;
    if (dim == 3) return (1.0 + 0.5 * std::cos(u) - 1.5 * std::sin(u) / u) / k4;
    return (1.0 - bessel_j0(u) - 0.5 * u * bessel_j1(u)) / k4;
}

double truncated_harmonic_fourier(double k, double R, int dim) {
    if (dim != 2 && dim != 3)
        throw std::invalid_argument("truncated_harmonic_fourier: dim must be 2 or 3");
    if (R <= 0.0) throw std::invalid_argument("truncated_harmonic_fourier: R must be positive");
    k = std::fabs(k);
    double u = k * R;
    double R2 = R * R;
    if (dim == 3) {
        if (u < 0.1) {
            /* k^2 H_hat^R = sum_{m>=1} (-1)^{m+1} u^{2m} / (2m)! */
            double u2 = u * u;
            double sum = 0.0, pw = 1.0, fact = 1.0;
            for (int m = 1; m <= 8; ++m) {
                fact *= (2.0 * m - 1.0) * (2.0 * m);
                sum += (m % 2 == 1 ? 1.0 : -1.0) * pw / fact;
                pw *= u2;
            }
            return R2 * sum;
        }
        return (1.0 - std::cos(u)) / (k * k);
    }
    double logR = std::log(R);
    if (u < 0.1) {
        /* R^2 [ sum_{j>=0} (-1)^j u^{2j} / (4^{j+1} ((j+1)!)^2)
         *       - log R sum_{j>=0} (-1)^j u^{2j} / (2 4^j j! (j+1)!) ] */
        double u2 = u * u;
        double s1 = 0.0, s2 = 0.0, pw = 1.0;
        for (int j = 0; j <= 7; ++j) {
            double fj = 1.0, f1 = 1.0;
            for (int i = 2; i <= j; ++i) fj *= i;
            f1 = fj * (j + 1);
            double p4 = std::pow(4.0, j);
            double sgn = (j % 2 == 0) ? 1.0 : -1.0;
            s1 += sgn * pw / (4.0 * p4 * f1 * f1);
            s2 += sgn * pw / (2.0 * p4 * fj * f1);
            pw *= u2;
        }
        return R2 * (s1 - logR * s2);
    }
    return (1.0 - bessel_j0(u)) / (k * k) - R * logR * bessel_j1(u) / k;
}

void mollified_fourier_tensor(const SplitKernel& sk, const double* kvec, bool truncated,
                              std::complex<double>* out) {
    int d = sk.dim;
    double k2 = 0.0;
    for (int i = 0; i < d; ++i) k2 += kvec[i] * kvec[i];
    double k = std::sqrt(k2);
    if (k == 0.0 && !truncated)
        throw std::domain_error("mollified_fourier_tensor: k = 0 requires the truncated kernel");

    double R = sk.window_radius_R;
    const std::complex<double> I(0.0, 1.0);

    if (sk.kernel == KernelType::rotlet || sk.kernel == KernelType::harmonic) {
        /* harmonic-based kernels mollify with the window itself */
        double ph = window_fourier(sk.mollifier.window, k);
        double Hm = ph * (truncated ? truncated_harmonic_fourier(k, R, d)
                                    : 1.0 / k2);
        if (sk.kernel == KernelType::harmonic) {
            out[0] = Hm;
            return;
        }
        if (d == 2) {
            /* Omega_hat_j = -(i/2) eps_jl k_l H_hat_M */
            out[0] = -0.5 * I * kvec[1] * Hm;
            out[1] = 0.5 * I * kvec[0] * Hm;
            return;
        }
        for (int i = 0; i < 9; ++i) out[i] = 0.0;
        std::complex<double> c = -0.5 * I * Hm;
        /* Omega_hat_jl = -(i/2) eps_jlm k_m H_hat_M */
        out[0 * 3 + 1] = c * kvec[2];
        out[1 * 3 + 0] = -c * kvec[2];
        out[1 * 3 + 2] = c * kvec[0];
        out[2 * 3 + 1] = -c * kvec[0];
        out[2 * 3 + 0] = c * kvec[1];
        out[0 * 3 + 2] = -c * kvec[1];
        return;
    }

    double g = mollifier_fourier(sk.mollifier, k);
    double Bm = g * (truncated ? truncated_biharmonic_fourier(k, R, d) : 1.0 / (k2 * k2));

    switch (sk.kernel) {
        case KernelType::biharmonic:
            out[0] = Bm;
            return;
        case KernelType::stokeslet:
            for (int j = 0; j < d; ++j)
                for (int l = 0; l < d; ++l)
                    out[j * d + l] = ((j == l ? k2 : 0.0) - kvec[j] * kvec[l]) * Bm;
            return;
        case KernelType::stresslet:
            for (int j = 0; j < d; ++j)
                for (int l = 0; l < d; ++l)
                    for (int m = 0; m < d; ++m) {
                        double v = -2.0 * kvec[j] * kvec[l] * kvec[m];
                        if (j == l) v += kvec[m] * k2;
                        if (l == m) v += kvec[j] * k2;
                        if (m == j) v += kvec[l] * k2;
                        out[(j * d + l) * d + m] = I * v * Bm;
                    }
            return;
        default:
            throw std::logic_error("mollified_fourier_tensor: unreachable");
    }
}

}  // namespace stokesdmk
