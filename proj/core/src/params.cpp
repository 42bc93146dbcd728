#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "stokesdmk/dmk.hpp"

namespace stokesdmk {

namespace {

/* Tuned parameters at accuracies 1e-3, 1e-6, 1e-9, 1e-12: prolate band
   parameter q = 3c/pi and Chebyshev order p, then the Gaussian shape
   parameter qg = 6/(pi sigma^2) and its order pg.  The per-axis Fourier
   grid is N1 = 2q - 1 for both windows; N_per counts the top-level modes
   per axis for periodic sums. */
struct Row {
  double q, p, n_per;    /* prolate */
  double qg, pg, n_perg; /* gaussian */
};

constexpr Row kStokeslet[4] = {
    {10, 12, 3, 14, 14, 5},
    {17, 23, 5, 25, 28, 9},
    {25, 33, 9, 38, 43, 13},
    {31, 44, 11, 50, 58, 17},
};
constexpr Row kStresslet[4] = {
    {9, 11, 3, 11, 12, 3},
    {17, 22, 5, 26, 28, 9},
    {25, 33, 9, 40, 44, 13},
    {32, 44, 11, 54, 60, 17},
};
constexpr Row kRotlet[4] = {
    {7, 8, 3, 9, 9, 3},
    {14, 18, 5, 21, 23, 7},
    {20, 28, 7, 34, 38, 11},
    {27, 39, 9, 47, 53, 15},
};

constexpr double kLeafSize2d[4] = {120, 240, 360, 480};
constexpr double kLeafSize3d[4] = {600, 1200, 2000, 3000};

/* Piecewise-linear in t = -log10(eps) over the grid {3, 6, 9, 12}, with
   linear extrapolation at both ends.  Exact at the grid points. */
double interp_column(const double v[4], double t) {
  int seg = std::clamp(static_cast<int>(std::floor((t - 3.0) / 3.0)), 0, 2);
  double u = (t - 3.0 - 3.0 * seg) / 3.0;
  return v[seg] + u * (v[seg + 1] - v[seg]);
}

int ceil_int(double v) { return static_cast<int>(std::ceil(v - 1e-9)); }

int next_odd(double v) {
  int n = ceil_int(v);
  return (n % 2 == 0) ? n + 1 : n;
}

}  // namespace

DmkPlan select_parameters(KernelType kernel, double eps, WindowKind window,
                          int dim) {
  if (dim != 2 && dim != 3)
    throw std::invalid_argument("select_parameters: dim must be 2 or 3");
  if (!(eps >= 1e-13 && eps <= 1e-2))
    throw std::invalid_argument(
        "select_parameters: accuracy must lie in [1e-13, 1e-2]");

  const Row* rows = nullptr;
  switch (kernel) {
    case KernelType::stokeslet: rows = kStokeslet; break;
    case KernelType::stresslet: rows = kStresslet; break;
    case KernelType::rotlet: rows = kRotlet; break;
    default:
      throw std::invalid_argument(
          "select_parameters: no tuned parameters for this kernel");
  }

  double t = -std::log10(eps);
  double col[4];
  auto pick = [&](double Row::*field) {
    for (int i = 0; i < 4; ++i) col[i] = rows[i].*field;
    return interp_column(col, t);
  };

  DmkPlan plan;
  plan.kernel = kernel;
  plan.dim = dim;
  plan.window = window;
  plan.tol = eps;

  double q, p, n_per;
  if (window == WindowKind::prolate) {
    q = pick(&Row::q);
    p = pick(&Row::p);
    n_per = pick(&Row::n_per);
    plan.c = q * M_PI / 3.0;
  } else {
    q = pick(&Row::qg);
    p = pick(&Row::pg);
    n_per = pick(&Row::n_perg);
    plan.sigma = std::sqrt(6.0 / (M_PI * q));
  }
  plan.p = ceil_int(p);
  plan.N1 = 2 * ceil_int(q) - 1;
  plan.N_per = next_odd(n_per);

  const double* leaf = (dim == 2) ? kLeafSize2d : kLeafSize3d;
  for (int i = 0; i < 4; ++i) col[i] = leaf[i];
  plan.n_s = static_cast<int>(std::lround(interp_column(col, t)));

  /* Residual tables a couple of digits tighter than the target accuracy;
     the 2D tables are built by adaptive quadrature, so keep a floor. */
  plan.table_tol = std::max(0.03 * eps, dim == 2 ? 1e-12 : 1e-14);
  return plan;
}

int outgoing_channels(KernelType kernel, int dim) {
  switch (kernel) {
    case KernelType::stokeslet: return dim;
    case KernelType::stresslet: return dim * (dim + 1) / 2;
    case KernelType::rotlet: return dim == 3 ? 3 : 1;
    default:
      throw std::invalid_argument("outgoing_channels: unsupported kernel");
  }
}

}  // namespace stokesdmk
