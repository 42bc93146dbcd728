#include "stokesdmk/detail/legendre.hpp"

#include <cmath>

namespace stokesdmk::detail {

std::vector<std::vector<double>> legendre_derivs_at_zero(int mmax, int nmax) {
    std::vector<std::vector<double>> D(mmax + 1, std::vector<double>(nmax + 1, 0.0));
    // m = 0: P_0(0)=1, P_1(0)=0, (k+1)P_{k+1}(0) = -k P_{k-1}(0)
    D[0][0] = 1.0;
    for (int k = 1; k <= nmax - 1; ++k)
        D[0][k + 1] = -k * D[0][k - 1] / (k + 1);
    for (int m = 1; m <= mmax; ++m) {
        // P_0^(m) = 0; P_1^(m)(0) = (m==1); recurrence at x=0 drops the xP term.
        D[m][0] = 0.0;
        if (nmax >= 1) D[m][1] = (m == 1) ? 1.0 : 0.0;
        for (int k = 1; k <= nmax - 1; ++k)
            D[m][k + 1] = ((2 * k + 1) * m * D[m - 1][k] - k * D[m][k - 1]) / (k + 1);
    }
    return D;
}

void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
    x.assign(n, 0.0);
    w.assign(n, 0.0);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        // Tricomi-style initial guess, then Newton on P_n.
        double t = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        double p = 0, dp = 0;
        for (int it = 0; it < 64; ++it) {
            double pm = 1.0, pk = t;
            for (int k = 1; k < n; ++k) {
                double pn = ((2 * k + 1) * t * pk - k * pm) / (k + 1);
                pm = pk;
                pk = pn;
            }
            p = pk;
            dp = n * (t * pk - pm) / (t * t - 1.0);
            double dt = -p / dp;
            t += dt;
            if (std::abs(dt) < 1e-15) break;
        }
        x[i] = -t;
        x[n - 1 - i] = t;
        double ww = 2.0 / ((1.0 - t * t) * dp * dp);
        w[i] = ww;
        w[n - 1 - i] = ww;
    }
    if (n % 2 == 1) {
        // midpoint node: recompute weight at t=0
        double pm = 1.0, pk = 0.0;
        for (int k = 1; k < n; ++k) {
            double pn = ((2 * k + 1) * 0.0 * pk - k * pm) / (k + 1);
            pm = pk;
            pk = pn;
        }
        double dp = n * (0.0 - pm) / (0.0 - 1.0);
        x[n / 2] = 0.0;
        w[n / 2] = 2.0 / (dp * dp);
    }
}

}  // namespace stokesdmk::detail
