#pragma once

#include <vector>

#include "stokesdmk/split.hpp"

/*
 * Reference evaluators: O(N*M) direct sums of the exact kernels, direct
 * residual-only sums, and a slow single-level Ewald-style reference built
 * from the kernel split (free space via trapezoidal Fourier quadrature of
 * the truncated mollified kernel; periodic via a discrete Fourier series).
 * These are deliberately simple and serve as ground truth for the fast
 * evaluator; per-target accumulation is compensated (Kahan) so the
 * references stay trustworthy at 1e-12 tolerances.
 */

namespace stokesdmk {

/*
 * A point-interaction problem on the unit box [-1/2, 1/2]^d.
 *   sources:   N*dim coordinates, point-major.
 *   targets:   M*dim coordinates; empty means the targets alias the sources
 *              (self interactions are then excluded from all sums).
 *   strengths: N*strength_components(kernel, dim) values, point-major.
 *              Stokeslet: force f. Stresslet: force f then normal n, packed
 *              per source. Rotlet: torque g (3 components in 3D, scalar in
 *              2D).
 */
struct ParticleSystem {
  int dim = 3;
  std::vector<double> sources;
  std::vector<double> targets;
  std::vector<double> strengths;

  int num_sources() const { return static_cast<int>(sources.size()) / dim; }
  bool targets_alias_sources() const { return targets.empty(); }
  int num_targets() const {
    return targets_alias_sources() ? num_sources()
                                   : static_cast<int>(targets.size()) / dim;
  }
  const double* source(int a) const { return sources.data() + a * dim; }
  const double* target(int b) const {
    return (targets_alias_sources() ? sources.data() : targets.data()) +
           b * dim;
  }
};

/*
 * Checks coordinates against the unit box and strength arrays for length and
 * finiteness; throws std::invalid_argument on violation.  In periodic mode
 * out-of-box coordinates are legal (they wrap); use wrap_into_box to obtain
 * the canonical representative.
 */
void validate_system(KernelType kernel, const ParticleSystem& sys,
                     bool periodic);

/* Canonical periodic representative: every coordinate mapped to [-1/2, 1/2). */
ParticleSystem wrap_into_box(const ParticleSystem& sys);

/*
 * Exact free-space sum u(x_b) = sum_a K(x_b - x_a) . s_a over all sources,
 * excluding a = b when the targets alias the sources.  Throws
 * std::domain_error if a target coincides with a distinct source.
 */
std::vector<double> direct_sum(KernelType kernel, const ParticleSystem& sys);

/*
 * Residual-only sum at kernel scale nu = cutoff: pairs separated by more
 * than the cutoff contribute nothing (exactly, for windows of compact
 * support; up to the window tail bound otherwise).  Periodic mode sums over
 * image shifts p in {-1,0,1}^d, which is sufficient while cutoff <= 1.
 */
std::vector<double> direct_residual_sum(const SplitKernel& sk,
                                        const ParticleSystem& sys,
                                        double cutoff, bool periodic);

/* Zero-mean-flow term of the periodic stresslet sum,
   u0(x_b) = -sum_a (x_b - x_a) (f_a . n_a); zero for the other kernels. */
std::vector<double> periodic_zero_mode(KernelType kernel,
                                       const ParticleSystem& sys);

enum class EwaldMode { free_space, periodic };

/*
 * Quadrature controls for ewald_reference.  Zero fields select automatic
 * values: spacing pi/3 (the level-0 convention for the unit box), free-space
 * mode cap at the window bandlimit (prolate: exactly c; Gaussian: the radius
 * where gamma_hat falls below tol/100, with a 1.2 margin), and periodic mode
 * cap at the smallest kappa with gamma_hat(2 pi kappa) < tol/100.
 */
struct EwaldGrid {
  double tol = 1e-12;
  double spacing = 0.0;
  double kmax = 0.0;
  int kappa_max = 0;
};

struct EwaldReport {
  double est_quadrature_error = 0.0; /* window tail magnitude at the cut */
  long long modes = 0;               /* Fourier modes evaluated */
};

/*
 * Single-level split reference: u = u_local + u_far + u_self (+ u0 for the
 * periodic stresslet).  Free space evaluates the truncated mollified kernel
 * by a trapezoidal Fourier sum plus the constant correction on the Stokeslet
 * diagonal; periodic mode evaluates the discrete Fourier series over modes
 * 2 pi kappa, kappa != 0.  The 2D periodic stresslet has no supported
 * zero-mode convention and is rejected.
 */
std::vector<double> ewald_reference(const SplitKernel& sk,
                                    const ParticleSystem& sys, EwaldMode mode,
                                    const EwaldGrid& grid = {},
                                    EwaldReport* report = nullptr);

}  // namespace stokesdmk
