#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "stokesdmk/detail/legendre.hpp"
#include "stokesdmk/windows.hpp"

namespace stokesdmk {

namespace {

/* psi0c expanded over even normalized Legendre polynomials turns the prolate
 * differential operator -d/dx[(1-x^2) d/dx] + c^2 x^2 into a symmetric
 * tridiagonal matrix; psi0c is the eigenvector of the smallest eigenvalue.
 * Entries couple degrees n and n+2 (even n only). */

double diag_entry(int n, double c2) {
    double num = 2.0 * n * (n + 1) - 1.0;
    return n * (n + 1.0) + c2 * num / ((2.0 * n + 3) * (2.0 * n - 1));
}

double offdiag_entry(int n, double c2) {
    return c2 * (n + 1.0) * (n + 2.0) /
           ((2.0 * n + 3) * std::sqrt((2.0 * n + 1) * (2.0 * n + 5)));
}

// number of eigenvalues of the tridiagonal (d,e) strictly below x
int sturm_count(const std::vector<double>& d, const std::vector<double>& e, double x) {
    int count = 0;
    double q = d[0] - x;
    if (q < 0) ++count;
    for (size_t i = 1; i < d.size(); ++i) {
        double denom = (q == 0.0) ? 1e-300 : q;
        q = d[i] - x - e[i - 1] * e[i - 1] / denom;
        if (q < 0) ++count;
    }
    return count;
}

// solve (T - lambda I) w = rhs in place, Thomas elimination (no pivoting;
// fine here because the target eigenvalue is well separated)
void shifted_solve(const std::vector<double>& d, const std::vector<double>& e, double lambda,
                   std::vector<double>& rhs) {
    size_t m = d.size();
    std::vector<double> diag(m), upper(m - 1);
    for (size_t i = 0; i < m; ++i) diag[i] = d[i] - lambda;
    for (size_t i = 0; i + 1 < m; ++i) upper[i] = e[i];
    for (size_t i = 0; i + 1 < m; ++i) {
        if (diag[i] == 0.0) diag[i] = 1e-300;
        double f = e[i] / diag[i];
        diag[i + 1] -= f * upper[i];
        rhs[i + 1] -= f * rhs[i];
    }
    if (diag[m - 1] == 0.0) diag[m - 1] = 1e-300;
    rhs[m - 1] /= diag[m - 1];
    for (size_t i = m - 1; i-- > 0;)
        rhs[i] = (rhs[i] - upper[i] * rhs[i + 1]) / diag[i];
}

double norm2(const std::vector<double>& v) {
    double s = 0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

}  // namespace

WindowFunction build_prolate(double c) {
    if (!(c > 0.0)) throw std::invalid_argument("build_prolate: c must be positive");
    const double c2 = c * c;

    // even-degree subspace up to degree ceil(2c)+60
    int max_deg = static_cast<int>(std::ceil(2.0 * c)) + 60;
    int m = max_deg / 2 + 1;

    std::vector<double> d(m), e(m - 1);
    for (int j = 0; j < m; ++j) d[j] = diag_entry(2 * j, c2);
    for (int j = 0; j + 1 < m; ++j) e[j] = offdiag_entry(2 * j, c2);

    // smallest eigenvalue by Sturm bisection
    double lo = d[0], hi = d[0];
    for (int j = 0; j < m; ++j) {
        double r = (j > 0 ? std::abs(e[j - 1]) : 0.0) + (j + 1 < m ? std::abs(e[j]) : 0.0);
        lo = std::min(lo, d[j] - r);
        hi = std::max(hi, d[j] + r);
    }
    for (int it = 0; it < 200 && hi - lo > 1e-14 * (std::abs(lo) + std::abs(hi) + 1.0); ++it) {
        double mid = 0.5 * (lo + hi);
        if (sturm_count(d, e, mid) >= 1)
            hi = mid;
        else
            lo = mid;
    }
    double chi = 0.5 * (lo + hi);

    // inverse iteration with a Rayleigh-quotient polish
    std::vector<double> v(m, 1.0 / std::sqrt(static_cast<double>(m)));
    double lambda_shift = chi;
    for (int it = 0; it < 6; ++it) {
        shifted_solve(d, e, lambda_shift, v);
        double nv = norm2(v);
        if (!(nv > 0.0) || !std::isfinite(nv))
            throw std::runtime_error("build_prolate: inverse iteration failed at c=" +
                                     std::to_string(c));
        for (double& x : v) x /= nv;
        if (it == 2) {
            // Rayleigh quotient
            double r = 0;
            for (int j = 0; j < m; ++j) {
                double tv = d[j] * v[j];
                if (j > 0) tv += e[j - 1] * v[j - 1];
                if (j + 1 < m) tv += e[j] * v[j + 1];
                r += v[j] * tv;
            }
            lambda_shift = r;
        }
    }
    {
        double r = 0;
        for (int j = 0; j < m; ++j) {
            double tv = d[j] * v[j];
            if (j > 0) tv += e[j - 1] * v[j - 1];
            if (j + 1 < m) tv += e[j] * v[j + 1];
            r += v[j] * tv;
        }
        chi = r;
    }

    // normalized -> standard basis: coefficient of P_{2j} is vhat_j sqrt((4j+1)/2)
    std::vector<double> a(m);
    double amax = 0.0;
    for (int j = 0; j < m; ++j) {
        a[j] = v[j] * std::sqrt((4.0 * j + 1.0) / 2.0);
        amax = std::max(amax, std::abs(a[j]));
    }
    int keep = m;
    while (keep > 1 && std::abs(a[keep - 1]) < 1e-16 * amax) --keep;
    a.resize(keep);

    // psi(0) fixes the sign; psi(1) = sum a_j gives the truncation error
    auto D0 = detail::legendre_derivs_at_zero(0, 2 * keep);
    double psi0 = 0.0, psi1 = 0.0;
    for (int j = 0; j < keep; ++j) {
        psi0 += a[j] * D0[0][2 * j];
        psi1 += a[j];
    }
    if (psi0 < 0) {
        for (double& x : a) x = -x;
        psi0 = -psi0;
        psi1 = -psi1;
    }

    WindowFunction w;
    w.kind = WindowKind::prolate;
    w.c = c;
    w.legendre_coeffs = std::move(a);
    w.psi0 = psi0;
    w.chi0 = chi;
    double I0 = 2.0 * w.legendre_coeffs[0];  // int_{-1}^{1} psi = 2 a_0
    w.norm_r = 1.0 / I0;
    w.lambda0 = I0 / psi0;
    w.trunc_error = std::abs(psi1 / psi0);
    return w;
}

}  // namespace stokesdmk
