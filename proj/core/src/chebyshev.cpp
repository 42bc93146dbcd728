#include "stokesdmk/chebyshev.hpp"

#include <cmath>
#include <cstdlib>
#include <stdexcept>

namespace stokesdmk {

double ChebTable::eval(double x) const {
    if (coef.empty()) return 0.0;
    double t = (2.0 * x - lo - hi) / (hi - lo);
    double b1 = 0.0, b2 = 0.0;
    for (size_t k = coef.size(); k-- > 1;) {
        double b0 = 2.0 * t * b1 - b2 + coef[k];
        b2 = b1;
        b1 = b0;
    }
    return t * b1 - b2 + coef[0];
}

ChebTable cheb_fit(const std::function<double(double)>& f, double lo, double hi, double tol,
                   int max_n) {
    ChebTable tab;
    tab.lo = lo;
    tab.hi = hi;
    for (int n = 17; n <= max_n; n = 2 * n - 1) {
        std::vector<double> fv(n);
        for (int i = 0; i < n; ++i) {
            double s = std::cos(M_PI * (2 * i + 1) / (2.0 * n));
            fv[i] = f(0.5 * (lo + hi) + 0.5 * (hi - lo) * s);
        }
        // coefficients by the discrete cosine sum over first-kind nodes
        std::vector<double> c(n, 0.0);
        for (int k = 0; k < n; ++k) {
            double acc = 0.0;
            for (int i = 0; i < n; ++i)
                acc += fv[i] * std::cos(k * M_PI * (2 * i + 1) / (2.0 * n));
            c[k] = acc * (k == 0 ? 1.0 : 2.0) / n;
        }
        double cmax = 0.0;
        for (double v : c) cmax = std::max(cmax, std::abs(v));
        if (cmax == 0.0) {
            tab.coef.assign(1, 0.0);
            return tab;
        }
        // converged when the top eighth of the spectrum is negligible
        double tail = 0.0;
        for (int k = n - std::max(2, n / 8); k < n; ++k) tail = std::max(tail, std::abs(c[k]));
        if (tail <= tol * std::max(1.0, cmax) || 2 * n - 1 > max_n) {
            int keep = n;
            while (keep > 1 && std::abs(c[keep - 1]) < 0.1 * tol * std::max(1.0, cmax)) --keep;
            c.resize(keep);
            tab.coef = std::move(c);
            return tab;
        }
    }
    throw std::runtime_error("cheb_fit: not converged");
}

std::vector<double> cheb_nodes(int p) {
    std::vector<double> s(p);
    for (int i = 0; i < p; ++i) s[i] = std::cos(M_PI * (2 * i + 1) / (2.0 * p));
    return s;
}

std::vector<double> cheb_barycentric_weights(int p) {
    std::vector<double> w(p);
    for (int i = 0; i < p; ++i)
        w[i] = (i % 2 == 0 ? 1.0 : -1.0) * std::sin(M_PI * (2 * i + 1) / (2.0 * p));
    return w;
}

void cheb_interp_weights(int p, const std::vector<double>& nodes, const std::vector<double>& bary,
                         double y, double* out) {
    // barycentric form; exact-hit handling keeps the matrix a true delta there
    for (int j = 0; j < p; ++j) {
        double d = y - nodes[j];
        if (std::abs(d) < 1e-300) {
            for (int k = 0; k < p; ++k) out[k] = 0.0;
            out[j] = 1.0;
            return;
        }
        out[j] = bary[j] / d;
    }
    double s = 0.0;
    for (int j = 0; j < p; ++j) s += out[j];
    for (int j = 0; j < p; ++j) out[j] /= s;
}

std::vector<double> cheb_interp_matrix(int p, const std::vector<double>& y) {
    auto nodes = cheb_nodes(p);
    auto bary = cheb_barycentric_weights(p);
    std::vector<double> M(y.size() * p);
    for (size_t i = 0; i < y.size(); ++i) cheb_interp_weights(p, nodes, bary, y[i], &M[i * p]);
    return M;
}

}  // namespace stokesdmk
