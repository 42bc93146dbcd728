#pragma once

#include <functional>
#include <vector>

namespace stokesdmk {

/* Chebyshev interpolation utilities: adaptive 1-D fits for the radial
 * kernel tables and first-kind node/barycentric helpers for the proxy
 * grids of the tree. */

struct ChebTable {
    double lo = 0.0, hi = 1.0;
    std::vector<double> coef;  // Chebyshev-basis coefficients on [lo,hi]

    double eval(double x) const;      // Clenshaw; callers clamp/short-circuit outside [lo,hi]
    bool empty() const { return coef.empty(); }
};

// Adaptive fit of f on [lo,hi]: sample at first-kind nodes, double the node
// count until the coefficient tail drops below tol (absolute, relative to the
// max coefficient), then truncate trailing negligible coefficients.
ChebTable cheb_fit(const std::function<double(double)>& f, double lo, double hi, double tol,
                   int max_n = 4097);

// First-kind Chebyshev nodes s_i = cos((2i+1)pi/(2p)) on (-1,1), descending.
std::vector<double> cheb_nodes(int p);

// Barycentric weights for the first-kind nodes: w_i = (-1)^i sin((2i+1)pi/(2p)).
std::vector<double> cheb_barycentric_weights(int p);

// Row-major p x p matrix M with M[i][j] = L_j(y_i): values of the Lagrange
// basis on the first-kind nodes, evaluated at arbitrary points y.
std::vector<double> cheb_interp_matrix(int p, const std::vector<double>& y);

// Interpolation weights L_j(y) for a single point (one row of the above).
void cheb_interp_weights(int p, const std::vector<double>& nodes,
                         const std::vector<double>& bary, double y, double* out);

}  // namespace stokesdmk
