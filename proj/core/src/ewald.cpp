#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "stokesdmk/oracle.hpp"
#include "stokesdmk/windows.hpp"

/*
 * Slow single-level reference evaluator built on the kernel split:
 *
 *   u = u_local + u_far + u_self (+ u0 for the periodic stresslet)
 *
 * u_local is the residual sum at unit scale.  u_far evaluates the mollified
 * kernel in Fourier space: free space by a trapezoidal quadrature of the
 * R-truncated transform on a grid of spacing h (default pi/3, which
 * periodizes at length 6 -- beyond the support of the truncated mollified
 * kernel for the unit box), periodic by the discrete Fourier series over
 * modes 2 pi kappa with the zero mode dropped.  Mode sums are accumulated
 * slab-by-slab along the outermost axis and compensated per target so that
 * millions of modes do not accumulate linear roundoff.
 */

namespace stokesdmk {

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;

struct Kahan {
  double sum = 0.0;
  double comp = 0.0;
  void add(double x) {
    double y = x - comp;
    double t = sum + y;
    comp = (t - sum) - y;
    sum = t;
  }
};

/* columns of the symbol tensor = per-source contracted strength entries */
int contracted_components(KernelType kernel, int dim) {
  switch (kernel) {
    case KernelType::stokeslet:
      return dim;
    case KernelType::stresslet:
      return dim * dim;
    case KernelType::rotlet:
      return dim == 3 ? 3 : 1;
    default:
      throw std::invalid_argument("ewald_reference: unsupported kernel");
  }
}

void contract_strength(KernelType kernel, int dim, const double* s,
                       double* out) {
  if (kernel == KernelType::stresslet) {
    for (int l = 0; l < dim; ++l)
      for (int m = 0; m < dim; ++m) out[l * dim + m] = s[l] * s[dim + m];
    return;
  }
  const int nc = contracted_components(kernel, dim);
  for (int c = 0; c < nc; ++c) out[c] = s[c];
}

/* smallest k with gamma_hat(k) < delta (gamma_hat decreasing for Gaussians) */
double gaussian_band(const Mollifier& m, double delta) {
  double lo = 0.0, hi = 1.0;
  while (mollifier_fourier(m, hi) >= delta) hi *= 2.0;
  for (int it = 0; it < 200; ++it) {
    double mid = 0.5 * (lo + hi);
    (mollifier_fourier(m, mid) >= delta ? lo : hi) = mid;
  }
  return hi;
}

}  // namespace

std::vector<double> ewald_reference(const SplitKernel& sk,
                                    const ParticleSystem& sys, EwaldMode mode,
                                    const EwaldGrid& grid,
                                    EwaldReport* report) {
  const KernelType kernel = sk.kernel;
  const int d = sk.dim;
  const bool periodic = (mode == EwaldMode::periodic);
  if (sys.dim != d)
    throw std::invalid_argument("ewald_reference: dimension mismatch");
  if (periodic && d == 2 && kernel == KernelType::stresslet)
    throw std::invalid_argument(
        "ewald_reference: the 2D periodic stresslet has no supported "
        "zero-mode convention");
  validate_system(kernel, sys, periodic);
  const ParticleSystem w = periodic ? wrap_into_box(sys) : sys;

  const int n = w.num_sources();
  const int m = w.num_targets();
  const int nstr = strength_components(kernel, d);
  const int ncc = contracted_components(kernel, d);
  const bool alias = w.targets_alias_sources();

  /* local residual part at unit scale (single-level split) */
  std::vector<double> u = direct_residual_sum(sk, w, 1.0, periodic);

  /* mode lattice: k = scale * (integer vector), ball in free space
     (|k| <= kcut), cube in periodic mode (|kappa|_inf <= kappa_max, != 0) */
  double scale, prefac, kcut = 0.0, est = 0.0;
  int mmax;
  if (!periodic) {
    const double h = grid.spacing > 0.0 ? grid.spacing : kPi / 3.0;
    if (grid.kmax > 0.0) {
      kcut = grid.kmax;
    } else if (sk.mollifier.window.kind == WindowKind::prolate) {
      kcut = sk.mollifier.window.c; /* gamma_hat vanishes beyond c exactly */
    } else {
      kcut = 1.2 * gaussian_band(sk.mollifier, grid.tol / 100.0);
    }
    scale = h;
    mmax = static_cast<int>(std::ceil(kcut / h - 1e-12));
    prefac = std::pow(h / (2.0 * kPi), d);
    est = mollifier_fourier(sk.mollifier, kcut);
  } else {
    int km = grid.kappa_max;
    if (km <= 0) {
      if (sk.mollifier.window.kind == WindowKind::prolate) {
        km = static_cast<int>(
            std::ceil(sk.mollifier.window.c / (2.0 * kPi) - 1e-12));
      } else {
        km = 1;
        while (mollifier_fourier(sk.mollifier, 2.0 * kPi * km) >=
               grid.tol / 100.0)
          ++km;
      }
    }
    scale = 2.0 * kPi;
    mmax = km;
    prefac = 1.0;
    est = mollifier_fourier(sk.mollifier, 2.0 * kPi * (km + 1));
  }

  /* enumerate admissible integer modes, outermost axis first and slowest */
  std::vector<std::array<int, 3>> modes;
  const double kcut2 = kcut * kcut * (1.0 + 1e-12);
  const int lo2 = d == 3 ? -mmax : 0, hi2 = d == 3 ? mmax : 0;
  for (int m2 = lo2; m2 <= hi2; ++m2)
    for (int m1 = -mmax; m1 <= mmax; ++m1)
      for (int m0 = -mmax; m0 <= mmax; ++m0) {
        if (periodic) {
          if (m0 == 0 && m1 == 0 && m2 == 0) continue;
        } else {
          const double k2 =
              scale * scale * (double(m0) * m0 + double(m1) * m1 +
                               double(m2) * m2);
          if (k2 > kcut2) continue;
        }
        modes.push_back({m0, m1, m2});
      }
  const std::size_t nmodes = modes.size();
  if (report) {
    report->est_quadrature_error = est;
    report->modes = static_cast<long long>(nmodes);
  }

  /* per-axis source phase tables e^{-i scale m x} */
  const int nm = 2 * mmax + 1;
  std::vector<std::complex<double>> sph(static_cast<std::size_t>(n) * d * nm);
  for (int a = 0; a < n; ++a)
    for (int i = 0; i < d; ++i)
      for (int q = -mmax; q <= mmax; ++q)
        sph[(static_cast<std::size_t>(a) * d + i) * nm + (q + mmax)] =
            std::polar(1.0, -scale * q * w.source(a)[i]);

  std::vector<double> rho(static_cast<std::size_t>(n) * ncc);
  for (int a = 0; a < n; ++a)
    contract_strength(kernel, d, w.strengths.data() + static_cast<std::size_t>(a) * nstr,
                      rho.data() + static_cast<std::size_t>(a) * ncc);

  /* pass 1: per mode, structure factor F_c and field vector v_j = sym . F */
  std::vector<std::complex<double>> v(nmodes * d);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t idx = 0; idx < static_cast<std::ptrdiff_t>(nmodes); ++idx) {
    const auto& mv = modes[idx];
    double kvec[3] = {scale * mv[0], scale * mv[1], scale * mv[2]};
    std::complex<double> F[9];
    for (int c = 0; c < ncc; ++c) F[c] = 0.0;
    for (int a = 0; a < n; ++a) {
      const std::complex<double>* pa =
          sph.data() + static_cast<std::size_t>(a) * d * nm;
      std::complex<double> p = pa[mv[0] + mmax] * pa[nm + mv[1] + mmax];
      if (d == 3) p *= pa[2 * nm + mv[2] + mmax];
      const double* ra = rho.data() + static_cast<std::size_t>(a) * ncc;
      for (int c = 0; c < ncc; ++c) F[c] += ra[c] * p;
    }
    std::complex<double> sym[27];
    mollified_fourier_tensor(sk, kvec, !periodic, sym);
    for (int j = 0; j < d; ++j) {
      std::complex<double> s = 0.0;
      for (int c = 0; c < ncc; ++c) s += sym[j * ncc + c] * F[c];
      v[idx * d + j] = s;
    }
  }

  /* pass 2: per target, phase-weighted mode sum with slab flushes keyed on
     the outermost axis index */
#pragma omp parallel for schedule(static)
  for (int b = 0; b < m; ++b) {
    std::vector<std::complex<double>> tph(static_cast<std::size_t>(d) * nm);
    for (int i = 0; i < d; ++i)
      for (int q = -mmax; q <= mmax; ++q)
        tph[static_cast<std::size_t>(i) * nm + (q + mmax)] =
            std::polar(1.0, scale * q * w.target(b)[i]);
    Kahan acc[3];
    double slab[3] = {0.0, 0.0, 0.0};
    int curk = nmodes ? modes[0][d - 1] : 0;
    int cur1 = 0;
    std::complex<double> p12 = 0.0;
    bool fresh = true;
    for (std::size_t idx = 0; idx < nmodes; ++idx) {
      const auto& mv = modes[idx];
      if (mv[d - 1] != curk) {
        for (int j = 0; j < d; ++j) {
          acc[j].add(slab[j]);
          slab[j] = 0.0;
        }
        curk = mv[d - 1];
        fresh = true;
      }
      if (fresh || mv[1] != cur1) {
        cur1 = mv[1];
        p12 = tph[nm + cur1 + mmax];
        if (d == 3) p12 *= tph[2 * nm + mv[2] + mmax];
        fresh = false;
      }
      const std::complex<double> p = tph[mv[0] + mmax] * p12;
      const std::complex<double>* vj = v.data() + idx * d;
      for (int j = 0; j < d; ++j)
        slab[j] += p.real() * vj[j].real() - p.imag() * vj[j].imag();
    }
    for (int j = 0; j < d; ++j) acc[j].add(slab[j]);
    for (int j = 0; j < d; ++j)
      u[static_cast<std::size_t>(b) * d + j] += prefac * acc[j].sum;
  }

  /* free-space constant correction from the R-truncation (Stokeslet only) */
  if (!periodic && kernel == KernelType::stokeslet && sk.corr_const != 0.0) {
    Kahan fsum[3];
    for (int a = 0; a < n; ++a)
      for (int j = 0; j < d; ++j)
        fsum[j].add(w.strengths[static_cast<std::size_t>(a) * d + j]);
    for (int b = 0; b < m; ++b)
      for (int j = 0; j < d; ++j)
        u[static_cast<std::size_t>(b) * d + j] += sk.corr_const * fsum[j].sum;
  }

  /* remove the spurious mollified self term when targets alias sources */
  if (alias && kernel == KernelType::stokeslet) {
    const double self = self_interaction(sk);
    for (int b = 0; b < m; ++b)
      for (int j = 0; j < d; ++j)
        u[static_cast<std::size_t>(b) * d + j] +=
            self * w.strengths[static_cast<std::size_t>(b) * d + j];
  }

  /* periodic stresslet zero-mean-flow term */
  if (periodic && kernel == KernelType::stresslet) {
    const std::vector<double> u0 = periodic_zero_mode(kernel, w);
    for (std::size_t i = 0; i < u.size(); ++i) u[i] += u0[i];
  }

  return u;
}

}  // namespace stokesdmk
