#include <cmath>
#include <stdexcept>
#include <vector>

#include "stokesdmk/detail/legendre.hpp"
#include "stokesdmk/split.hpp"

/*
 * Quadrature pipeline for the residual radial functions.  The mollified
 * structural functions are radial Fourier integrals
 *
 *   S_M,*(r) = (1/2 pi^{d-1}) int_0^K X_*(k, r) Bhat^R(k) gamma_hat(k) k^{d-1} dk
 *              + (diagonal correction from the quadratic removed by B^R),
 *
 * where X_* collects radial derivatives of the Fourier mode F_k(r) (J_0(kr)
 * in 2D, sinc(kr) in 3D).  The rotlet needs only the harmonic analogue with
 * phi_hat.  Residual functions are exact minus mollified; in 2D the
 * Stokeslet diagonal keeps its -2r log r part analytic and the table stores
 * the mollified function itself.  This is the production path for 2D tables
 * and a cross-check of the 3D closed forms.
 */

namespace stokesdmk {

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;

/* high-order internal series keeps the small-k cancellation of the
 * truncated transforms below quadrature accuracy */
double bihar_trunc_fourier(double k, double R, int dim) {
    double u = k * R;
    if (u >= 1.0) return truncated_biharmonic_fourier(k, R, dim);
    double R4 = R * R * R * R;
    double u2 = u * u;
    double sum = 0.0, pw = 1.0;
    for (int m = 2; m <= 13; ++m) {
        double denom;
        if (dim == 3) {
            denom = 1.0;
            for (int j = 2; j <= 2 * m + 1; ++j) denom *= j;
        } else {
            double fact = 1.0;
            for (int j = 2; j <= m; ++j) fact *= j;
            denom = std::pow(4.0, m) * fact * fact;
        }
        sum += (m % 2 == 0 ? 1.0 : -1.0) * (m - 1) / denom * pw;
        pw *= u2;
    }
    return R4 * sum;
}

/* J_0(u) - J_1(u)/u and J_1(u) + J_0(u)/u - 2 J_1(u)/u^2 */
double bessel_g2(double u) {
    if (u < 0.5) {
        double u2 = u * u, sum = 0.0, pw = 1.0, fm = 1.0;
        for (int m = 0; m <= 8; ++m) {
            if (m > 0) fm *= m;
            double denom = 2.0 * std::pow(4.0, m) * fm * (fm * (m + 1));
            sum += (m % 2 == 0 ? 1.0 : -1.0) * (2.0 * m + 1.0) / denom * pw;
            pw *= u2;
        }
        return sum;
    }
    return std::cyl_bessel_j(0.0, u) - std::cyl_bessel_j(1.0, u) / u;
}

double bessel_g3(double u) {
    if (u < 0.5) {
        double u2 = u * u, sum = 0.0, pw = u, fj = 1.0;
        for (int j = 0; j <= 8; ++j) {
            if (j > 0) fj *= j;
            double fj1 = fj * (j + 1);
            double denom = std::pow(4.0, j + 1) * fj * fj1 * (j + 2);
            sum += (j % 2 == 0 ? 1.0 : -1.0) * (2.0 * j + 3.0) / denom * pw;
            pw *= u2;
        }
        return sum;
    }
    double j0 = std::cyl_bessel_j(0.0, u), j1 = std::cyl_bessel_j(1.0, u);
    return j1 + (j0 - 2.0 * j1 / u) / u;
}

/* sinc and derivatives; series below u = 0.5, spherical Bessel ODE above */
void sinc_derivs(double u, double out[4]) {
    if (u < 0.5) {
        double u2 = u * u;
        double f0 = 0.0, f1 = 0.0, f2 = 0.0, f3 = 0.0;
        double fact = 1.0; /* (2m+1)! */
        double pw = 1.0;   /* u^{2m} */
        for (int m = 0; m <= 10; ++m) {
            if (m > 0) fact *= (2.0 * m) * (2.0 * m + 1.0);
            double sgn = (m % 2 == 0) ? 1.0 : -1.0;
            double c = sgn / fact;
            f0 += c * pw;
            if (m >= 1) f1 += c * 2.0 * m * pw / u;
            if (m >= 1) f2 += c * 2.0 * m * (2.0 * m - 1.0) * pw / u2;
            if (m >= 2) f3 += c * 2.0 * m * (2.0 * m - 1.0) * (2.0 * m - 2.0) * pw / (u2 * u);
            pw *= u2;
        }
        if (u == 0.0) {
            out[0] = 1.0;
            out[1] = 0.0;
            out[2] = -1.0 / 3.0;
            out[3] = 0.0;
            return;
        }
        out[0] = f0;
        out[1] = f1;
        out[2] = f2;
        out[3] = f3;
        return;
    }
    double s = std::sin(u), c = std::cos(u);
    double f0 = s / u;
    double f1 = (c - f0) / u;
    double f2 = -f0 - 2.0 * f1 / u;
    double f3 = -f1 - 2.0 * f2 / u + 2.0 * f1 / (u * u);
    out[0] = f0;
    out[1] = f1;
    out[2] = f2;
    out[3] = f3;
}

struct PipeGrid {
    std::vector<double> k;   /* quadrature nodes on [0, K] */
    std::vector<double> wb;  /* weight * Bhat^R * gamma_hat * k^{d-1} / (2 pi^{d-1}) */
    std::vector<double> wp;  /* weight * phi_hat (rotlet path) */
};

PipeGrid make_grid(int dim, const WindowFunction& w, double R, double K, int panels) {
    PipeGrid g;
    static thread_local std::vector<double> gx, gw;
    if (gx.empty()) detail::gauss_legendre(32, gx, gw);
    Mollifier m{w};
    double hk = K / panels;
    double norm = 1.0 / (2.0 * std::pow(kPi, dim - 1));
    g.k.reserve(panels * gx.size());
    g.wb.reserve(panels * gx.size());
    g.wp.reserve(panels * gx.size());
    for (int p = 0; p < panels; ++p) {
        double mid = (p + 0.5) * hk, half = 0.5 * hk;
        for (size_t i = 0; i < gx.size(); ++i) {
            double k = mid + half * gx[i];
            double wt = gw[i] * half;
            g.k.push_back(k);
            g.wb.push_back(wt * bihar_trunc_fourier(k, R, dim) * mollifier_fourier(m, k) *
                           std::pow(k, dim - 1) * norm);
            g.wp.push_back(wt * window_fourier(w, k));
        }
    }
    return g;
}

/* mollified structural values (diag, offd) at radius r */
std::array<double, 2> mollified_at(const PipeGrid& g, KernelType kernel, int dim, double R,
                                   double r) {
    double diag = 0.0, offd = 0.0;
    if (kernel == KernelType::rotlet) {
        if (dim == 2) {
            double mo = 0.0;
            for (size_t i = 0; i < g.k.size(); ++i)
                mo += g.wp[i] * std::cyl_bessel_j(1.0, g.k[i] * r);
            return {0.0, r * mo};
        }
        double mo = 0.0;
        for (size_t i = 0; i < g.k.size(); ++i) {
            double d[4];
            sinc_derivs(g.k[i] * r, d);
            mo += g.wp[i] * g.k[i] * d[1];
        }
        return {0.0, -(2.0 * r * r / kPi) * mo};
    }
    for (size_t i = 0; i < g.k.size(); ++i) {
        double k = g.k[i], u = k * r;
        double xd, xo;
        if (dim == 2) {
            double j1 = std::cyl_bessel_j(1.0, u);
            double g2 = bessel_g2(u), g3 = bessel_g3(u);
            if (kernel == KernelType::stokeslet) {
                xd = 8.0 * kPi * r * k * k * g2;
                xo = 8.0 * kPi * (k * j1 - r * k * k * g2);
            } else {
                double base = k * j1 - r * k * k * g2;
                double cub = r * r * k * k * k * g3;
                xd = 8.0 * kPi * (base - cub);
                xo = 8.0 * kPi * (base - cub / 3.0);
            }
        } else {
            double d[4];
            sinc_derivs(u, d);
            double F1 = k * d[1], F2 = k * k * d[2], F3 = k * k * k * d[3];
            if (kernel == KernelType::stokeslet) {
                xd = -8.0 * kPi * (F1 + r * F2);
                xo = 8.0 * kPi * (-F1 + r * F2);
            } else {
                xd = -8.0 * kPi * r * r * F3;
                xo = 8.0 * kPi * (-F1 + r * F2 - r * r * F3 / 3.0);
            }
        }
        diag += g.wb[i] * xd;
        offd += g.wb[i] * xo;
    }
    if (kernel == KernelType::stokeslet) {
        /* diagonal correction from the quadratic removed by B^R */
        diag += dim == 3 ? 2.0 * r / R : 2.0 * r * (1.0 - std::log(R));
    }
    return {diag, offd};
}

double grid_bandlimit(const WindowFunction& w) {
    return w.kind == WindowKind::prolate ? w.c : 2.0 * std::sqrt(45.0) / w.sigma;
}

PipeGrid converged_grid(KernelType kernel, int dim, const WindowFunction& w, double R, double tol,
                        double r_max) {
    double K = grid_bandlimit(w);
    int panels = std::max(8, (int)std::ceil(K * (R + r_max) / (2.0 * kPi)) + 8);
    double qtol = std::max(1e-13, 1e-4 * tol);
    const double probes[] = {0.02, 0.2, 0.45, 0.7, 0.9, 0.999, r_max};
    PipeGrid a = make_grid(dim, w, R, K, panels);
    for (int iter = 0; iter < 4; ++iter) {
        PipeGrid b = make_grid(dim, w, R, K, panels * 2);
        double worst = 0.0;
        for (double r : probes) {
            if (r > r_max) continue;
            auto va = mollified_at(a, kernel, dim, R, r);
            auto vb = mollified_at(b, kernel, dim, R, r);
            for (int j = 0; j < 2; ++j) {
                double scale = std::max(1.0, std::fabs(vb[j]));
                worst = std::max(worst, std::fabs(va[j] - vb[j]) / scale);
            }
        }
        if (worst < qtol) return b;
        a = std::move(b);
        panels *= 2;
    }
    throw std::runtime_error("numeric_residual_pipeline: quadrature failed to converge");
}

double support_of(const WindowFunction& w) {
    return w.kind == WindowKind::prolate ? 1.0 : 1.05;
}

}  // namespace

std::vector<std::array<double, 2>> numeric_mollified_structural(
    KernelType kernel, int dim, const WindowFunction& window, double R, double tol,
    const std::vector<double>& radii) {
    if (dim != 2 && dim != 3)
        throw std::invalid_argument("numeric_mollified_structural: dim must be 2 or 3");
    if (kernel == KernelType::biharmonic || kernel == KernelType::harmonic)
        throw std::invalid_argument("numeric_mollified_structural: tensor kernels only");
    double r_max = support_of(window);
    for (double r : radii) r_max = std::max(r_max, r);
    PipeGrid g = converged_grid(kernel, dim, window, R, tol, r_max);
    std::vector<std::array<double, 2>> out;
    out.reserve(radii.size());
    for (double r : radii) out.push_back(mollified_at(g, kernel, dim, R, r));
    return out;
}

ResidualTables numeric_residual_pipeline(KernelType kernel, int dim, const WindowFunction& window,
                                         double R, double tol) {
    if (dim != 2 && dim != 3)
        throw std::invalid_argument("numeric_residual_pipeline: dim must be 2 or 3");
    if (kernel == KernelType::biharmonic || kernel == KernelType::harmonic)
        throw std::invalid_argument("numeric_residual_pipeline: tensor kernels only");

    ResidualTables rt;
    rt.dim = dim;
    rt.support = support_of(window);
    double sup = rt.support;
    PipeGrid g = converged_grid(kernel, dim, window, R, tol, sup);
    double fit_tol = std::max(1e-13, 0.05 * tol);

    switch (kernel) {
        case KernelType::stokeslet: {
            if (dim == 2) {
                /* the diagonal table stores the mollified function; the
                 * -2r log r exact part is applied analytically at eval */
                rt.diag_is_mollified = true;
                rt.s_diag = cheb_fit(
                    [&](double r) { return mollified_at(g, kernel, dim, R, r)[0]; }, 0.0, sup,
                    fit_tol);
                rt.s_offd = cheb_fit(
                    [&](double r) { return 2.0 * r - mollified_at(g, kernel, dim, R, r)[1]; }, 0.0,
                    sup, fit_tol);
            } else {
                rt.s_diag = cheb_fit(
                    [&](double r) { return 1.0 - mollified_at(g, kernel, dim, R, r)[0]; }, 0.0,
                    sup, fit_tol);
                rt.s_offd = cheb_fit(
                    [&](double r) { return 1.0 - mollified_at(g, kernel, dim, R, r)[1]; }, 0.0,
                    sup, fit_tol);
            }
            /* slope of S_M,diag at r = 0 */
            double lam = 0.0;
            for (size_t i = 0; i < g.k.size(); ++i) lam += g.wb[i] * g.k[i] * g.k[i];
            lam *= dim == 2 ? 4.0 * kPi : 16.0 * kPi / 3.0;
            lam += dim == 2 ? 2.0 * (1.0 - std::log(R)) : 2.0 / R;
            rt.stokeslet_self = -lam / (8.0 * kPi);
            break;
        }
        case KernelType::stresslet: {
            rt.t_diag = cheb_fit(
                [&](double r) { return -mollified_at(g, kernel, dim, R, r)[0]; }, 0.0, sup,
                fit_tol);
            rt.t_offd = cheb_fit(
                [&](double r) {
                    double exact = dim == 2 ? 4.0 * r / 3.0 : 1.0;
                    return exact - mollified_at(g, kernel, dim, R, r)[1];
                },
                0.0, sup, fit_tol);
            break;
        }
        case KernelType::rotlet:
            rt.w_offd = cheb_fit(
                [&](double r) { return 1.0 - mollified_at(g, kernel, dim, R, r)[1]; }, 0.0, sup,
                fit_tol);
            break;
        default:
            break;
    }
    return rt;
}

}  // namespace stokesdmk
