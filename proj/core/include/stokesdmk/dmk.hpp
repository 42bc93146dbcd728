#pragma once

#include <vector>

#include "stokesdmk/oracle.hpp"
#include "stokesdmk/split.hpp"
#include "stokesdmk/tree.hpp"

/*
 * Multilevel fast summation.  The exact kernel telescopes into a smooth
 * top-level part, one bandlimited "difference" kernel per tree level, and a
 * residual whose support shrinks with the leaf size:
 *
 *   K = K_M(. ; r_0) + sum_l [K_M(. ; r_{l+1}) - K_M(. ; r_l)] + K_R(. ; r_leaf)
 *
 * with r_l = 2^-l the box side at level l.  Source strengths are collected
 * onto per-box Chebyshev proxy grids (upward pass), each difference kernel
 * is applied between same-level neighbor boxes as a diagonal multiplier on
 * small tensor-product Fourier grids (downward pass), accumulated potentials
 * are interpolated from parents to children and finally to the targets, and
 * the residual is summed directly over neighbor leaves.
 */

namespace stokesdmk {

/* Tuned evaluation parameters for one kernel / accuracy / window choice. */
struct DmkPlan {
  KernelType kernel = KernelType::stokeslet;
  int dim = 3;
  WindowKind window = WindowKind::prolate;
  double tol = 1e-6;  /* requested relative accuracy */

  double c = 0.0;     /* prolate band limit (prolate window only) */
  double sigma = 0.0; /* Gaussian width (gaussian window only) */
  int p = 0;          /* Chebyshev proxy order per axis */
  int N1 = 0;         /* Fourier modes per axis on every level grid */
  int N_per = 0;      /* modes per axis of the periodic top-level sum */
  int n_s = 0;        /* leaf subdivision threshold (sources per box) */
  double table_tol = 0.0; /* accuracy target for the radial residual tables */
};

/*
 * Parameter selection.  Accuracies 1e-3, 1e-6, 1e-9, 1e-12 reproduce the
 * tuned table exactly; other tolerances in [1e-13, 1e-2] interpolate the
 * table columns piecewise-linearly in log10(eps) (linearly extrapolated at
 * the ends), rounding grid sizes up.  Throws std::invalid_argument for
 * tolerances outside [1e-13, 1e-2], kernels without tuned parameters
 * (biharmonic, harmonic) or an unsupported dimension.
 */
DmkPlan select_parameters(KernelType kernel, double eps, WindowKind window,
                          int dim);

/*
 * Scalar charge channels carried per outgoing proxy node: d for the
 * Stokeslet force, 3 (3D) or 1 (2D) for the rotlet torque, and d(d+1)/2 for
 * the stresslet, whose field depends on force f and normal n only through
 * the symmetric tensor  f n^T + n f^T + (f.n) I  (packed diagonal first).
 */
int outgoing_channels(KernelType kernel, int dim);

/* Per-box nodal data on p^dim Chebyshev proxy grids (node layout matches
   proxy_nodes: axis 0 fastest).  values holds num_boxes * channels * p^dim
   doubles; channel-major within a box. */
struct ProxyData {
  int p = 0;
  int dim = 3;
  int channels = 0;
  std::vector<double> values;

  int nodes_per_box() const {
    int n = p * p;
    return dim == 3 ? n * p : n;
  }
  int box_stride() const { return channels * nodes_per_box(); }
  double* box(int id) { return values.data() + size_t(id) * box_stride(); }
  const double* box(int id) const {
    return values.data() + size_t(id) * box_stride();
  }
};

/* Collects source strengths (caller point order, packed as in
   ParticleSystem) onto every box's outgoing proxy grid: leaves by Chebyshev
   anterpolation of their own sources, parents by merging their children. */
ProxyData upward_pass(const Tree& tree, const DmkPlan& plan,
                      const std::vector<double>& strengths);

/* Zero-initialized incoming potentials (dim velocity channels per box). */
ProxyData make_incoming(const Tree& tree, const DmkPlan& plan);

/*
 * Adds the top-level smooth field to the root's incoming potentials.  Free
 * space: trapezoidal Fourier sum (spacing pi/3) of the R-truncated mollified
 * kernel at unit scale.  Periodic: lattice sum over modes 2 pi kappa,
 * |kappa|_inf <= (N_per-1)/2, zero mode dropped (the Stokeslet free-space
 * correction constant and the stresslet periodic zero mode are applied in
 * evaluate, not here).
 */
void root_far_field(const Tree& tree, const DmkPlan& plan,
                    const SplitKernel& sk, const ProxyData& outgoing,
                    bool periodic, ProxyData& incoming);

/*
 * Level-by-level difference-kernel convolutions and parent-to-child
 * interpolation.  A box at level l receives the level-l difference kernel
 * from every colleague entry (periodic image shifts included); a leaf skips
 * only its own zero-shift entry, whose interactions the residual pass
 * evaluates at the leaf scale.  incoming must already hold the root far
 * field.
 */
void downward_pass(const Tree& tree, const DmkPlan& plan,
                   const SplitKernel& sk, const ProxyData& outgoing,
                   bool periodic, ProxyData& incoming);

/* Interpolates accumulated leaf potentials to the target points; returns
   dim components per target in caller point order. */
std::vector<double> target_far_fields(const Tree& tree, const DmkPlan& plan,
                                      const ProxyData& incoming);

/*
 * Direct residual sums over each leaf's near field, in caller point order.
 * Pair scales follow the telescoping: for a leaf at level l, own-box pairs
 * use scale r_l, same-level colleague leaves and fine neighbors use r_{l+1},
 * and coarse neighbors use r_l (both sides of a cross-level pair agree on
 * the finer box's side).  When targets alias the sources the spurious
 * smooth self-interaction is removed at the leaf scale.  Throws
 * std::domain_error when distinct points coincide.
 */
std::vector<double> residual_pass(const Tree& tree, const DmkPlan& plan,
                                  const SplitKernel& sk,
                                  const std::vector<double>& strengths,
                                  bool periodic);

/* Wall-clock breakdown and the plan that produced a result. */
struct DmkReport {
  DmkPlan plan;
  int num_boxes = 0;
  int max_level = 0;
  int num_sources = 0;
  int num_targets = 0;
  double t_tree = 0.0;     /* seconds */
  double t_upward = 0.0;
  double t_root = 0.0;
  double t_downward = 0.0;
  double t_residual = 0.0;
};

/* Full evaluation with an explicit plan (the plan's kernel/dim/window must
   match the system); used for parameter studies.  When tables is non-null
   it is used instead of rebuilding the split tables from the plan (it must
   match the plan's kernel, dimension and window kind). */
std::vector<double> evaluate_with_plan(const DmkPlan& plan,
                                       const ParticleSystem& sys,
                                       EwaldMode mode,
                                       DmkReport* report = nullptr,
                                       const SplitKernel* tables = nullptr);

/* Selects parameters for eps and evaluates all pairwise velocities.
   Output: dim components per target, caller point order. */
std::vector<double> evaluate(KernelType kernel, const ParticleSystem& sys,
                             double eps, WindowKind window, EwaldMode mode,
                             DmkReport* report = nullptr);

}  // namespace stokesdmk
