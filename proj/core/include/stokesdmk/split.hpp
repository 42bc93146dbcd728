#pragma once

#include <array>
#include <complex>
#include <string>

#include "stokesdmk/chebyshev.hpp"
#include "stokesdmk/windows.hpp"

/*
 * Kernel splitting for the Stokes family.  Every kernel here is derived from
 * the biharmonic Green's function B (Stokeslet, stresslet) or the harmonic
 * Green's function H (rotlet).  A window function phi induces the mollifier
 *
 *   gamma_hat(k) = phi_hat(k) - (1/2) k phi_hat'(k),
 *
 * which satisfies gamma_hat(0) = 1 and gamma_hat''(0) = 0, so the mollified
 * kernel K_M = gamma * K agrees with K outside the mollifier support and the
 * residual K_R = K - K_M is local.  In 3D the residual radial functions have
 * closed forms in terms of phi and its tail integral Phi; in 2D they are
 * computed by numerical quadrature of truncated Fourier integrals.  All
 * radial functions are stored as Chebyshev tables at unit scale; evaluation
 * at kernel scale nu rescales the radius (and, in 2D, the amplitude).
 */

namespace stokesdmk {

enum class KernelType { stokeslet, stresslet, rotlet, biharmonic, harmonic };

/* per-source strength doubles: stokeslet d, stresslet 2d (force + normal),
   rotlet 3 in 3D and 1 in 2D (scalar torque) */
int strength_components(KernelType kernel, int dim);

/* velocity components per target (d, except scalar kernels used in tests) */
int field_components(KernelType kernel, int dim);

struct Mollifier {
  WindowFunction window;
};

/* gamma_hat(k); exactly zero for prolate windows when |k| > c */
double mollifier_fourier(const Mollifier& m, double k);

/* coefficients a[j] of gamma_hat(k) = sum_j a[j] k^(2j) + O(k^10) */
std::array<double, 5> mollifier_fourier_taylor(const Mollifier& m);

/* 1-D inverse transform gamma(x) = (3/2) phi(x) + (1/2) x phi'(x) */
double mollifier_screen(const Mollifier& m, double x);

/* radial profile of the d-dimensional mollifier, by quadrature of the
   inverse radial Fourier transform */
double mollifier_radial(const Mollifier& m, double r, int dim);

/*
 * Truncated Fourier kernels.  B^R = B * rect(r/R) and H^R = H * rect(r/R)
 * have smooth, explicitly known transforms; near k = 0 a series expansion
 * avoids the 1/k^4 (resp. 1/k^2) cancellation.
 */
double truncated_biharmonic_fourier(double k, double R, int dim);
double truncated_harmonic_fourier(double k, double R, int dim);

struct SplitKernel {
  KernelType kernel = KernelType::stokeslet;
  int dim = 3;
  Mollifier mollifier;
  double window_radius_R = 0.0;  /* R = 1 + sqrt(d) for truncated kernels */
  double support = 1.0;          /* residual functions vanish for r/nu >= support */
  double table_tol = 0.0;
  double self_const = 0.0;       /* unit-scale diagonal self coefficient */
  double corr_const = 0.0;       /* free-space far-field constant (Stokeslet) */

  /* unit-scale radial tables on [0, support]; in 2D the Stokeslet diagonal
     table stores the mollified function S_M,diag (the exact -2r log r part
     is applied analytically at evaluation time) */
  ChebTable s_diag, s_offd;
  ChebTable t_diag, t_offd;
  ChebTable w_offd;
  ChebTable b_res;
  ChebTable phi;
};

SplitKernel build_split_kernel(KernelType kernel, int dim,
                               const WindowFunction& window, double tol);

/* residual biharmonic kernel and its first three derivatives (3D) */
double biharmonic_residual(const SplitKernel& sk, double r);
std::array<double, 3> biharmonic_residual_derivs(const SplitKernel& sk, double r);

/* unit-scale residual radial functions (table lookup with support clamp) */
double stokeslet_residual_diag(const SplitKernel& sk, double s);
double stokeslet_residual_offd(const SplitKernel& sk, double s);
double stresslet_residual_diag(const SplitKernel& sk, double s);
double stresslet_residual_offd(const SplitKernel& sk, double s);
double rotlet_residual_offd(const SplitKernel& sk, double s);

/*
 * Residual tensors at x for kernel scale nu (nu = 1 is the single-level
 * split).  Output sizes: stokeslet d*d, stresslet d*d*d, rotlet 3D d*d;
 * the 2D rotlet is the d-vector kernel of a scalar torque.
 */
void stokeslet_residual(const SplitKernel& sk, const double* x, double* out,
                        double nu = 1.0);
void stresslet_residual(const SplitKernel& sk, const double* x, double* out,
                        double nu = 1.0);
void rotlet_residual(const SplitKernel& sk, const double* x, double* out,
                     double nu = 1.0);

/*
 * Fused apply: u += K_R(x; nu) . strength, returning without touching u when
 * |x| >= nu * support.  strength layout: stokeslet f[d]; stresslet f[d],n[d]
 * packed; rotlet g[3] (3D) or g[1] (2D).
 */
void residual_apply(const SplitKernel& sk, const double* x, double nu,
                    const double* strength, double* u);

/* unit-scale self coefficient: u_self = self * rho_beta */
double self_interaction(const SplitKernel& sk);

/* self coefficient at kernel scale nu (1/nu law in 3D; additive log(nu)
   anomaly for the 2D Stokeslet) */
double self_interaction_scaled(const SplitKernel& sk, double nu);

/*
 * Mollified kernel symbol at wavevector kvec (unit scale).  truncated=true
 * replaces B_hat (resp. H_hat) by the R-truncated transform, which is smooth
 * at k = 0.  Output sizes as for the residual tensors.
 */
void mollified_fourier_tensor(const SplitKernel& sk, const double* kvec,
                              bool truncated, std::complex<double>* out);

/* radial functions produced by the Fourier-quadrature pipeline */
struct ResidualTables {
  int dim = 0;
  double support = 1.0;
  bool diag_is_mollified = false; /* 2D Stokeslet diagonal convention */
  ChebTable s_diag, s_offd;
  ChebTable t_diag, t_offd;
  ChebTable w_offd;
  double stokeslet_self = 0.0; /* unit-scale diagonal self coefficient */
};

ResidualTables numeric_residual_pipeline(KernelType kernel, int dim,
                                         const WindowFunction& window,
                                         double R, double tol);

/* mollified structural functions (diag, offd) at the given radii, by the
 * same quadrature; used to probe the residual decay beyond the support */
std::vector<std::array<double, 2>> numeric_mollified_structural(
    KernelType kernel, int dim, const WindowFunction& window, double R,
    double tol, const std::vector<double>& radii);

/* versioned little-endian binary table files */
void export_split_kernel(const SplitKernel& sk, const std::string& path);
SplitKernel import_split_kernel(const std::string& path);

}  // namespace stokesdmk
