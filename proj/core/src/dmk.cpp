#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "stokesdmk/dmk.hpp"

namespace stokesdmk {

namespace {

using cplx = std::complex<double>;

constexpr double kPi = 3.14159265358979323846;

int nodes_per_box(int p, int dim) { return dim == 3 ? p * p * p : p * p; }

/* ---------------- Chebyshev interpolation machinery ---------------- */

struct Cheb1D {
  int p = 0;
  std::vector<double> nodes;   /* cos((2i+1) pi / (2p)), descending */
  std::vector<double> weights; /* barycentric: (-1)^i sin((2i+1) pi / (2p)) */

  explicit Cheb1D(int p_) : p(p_), nodes(p_), weights(p_) {
    for (int i = 0; i < p; ++i) {
      double a = (2.0 * i + 1.0) * kPi / (2.0 * p);
      nodes[i] = std::cos(a);
      weights[i] = (i % 2 ? -1.0 : 1.0) * std::sin(a);
    }
  }

  /* Lagrange basis values at x (barycentric form; exact at the nodes). */
  void basis(double x, double* out) const {
    for (int i = 0; i < p; ++i) {
      if (x == nodes[i]) {
        for (int j = 0; j < p; ++j) out[j] = (j == i) ? 1.0 : 0.0;
        return;
      }
    }
    double s = 0.0;
    for (int i = 0; i < p; ++i) {
      out[i] = weights[i] / (x - nodes[i]);
      s += out[i];
    }
    double inv = 1.0 / s;
    for (int i = 0; i < p; ++i) out[i] *= inv;
  }
};

/* Child-grid interpolation matrix for one axis: row i holds the parent
   Lagrange basis evaluated at child node i, the child covering the lower
   (bit = 0) or upper (bit = 1) half of the parent interval. */
std::vector<double> child_interp_matrix(const Cheb1D& cb, int bit) {
  int p = cb.p;
  std::vector<double> M(size_t(p) * p);
  double off = bit ? 1.0 : -1.0;
  for (int i = 0; i < p; ++i)
    cb.basis((cb.nodes[i] + off) * 0.5, M.data() + size_t(i) * p);
  return M;
}

std::vector<double> transpose_matrix(const std::vector<double>& M, int p) {
  std::vector<double> T(size_t(p) * p);
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < p; ++j) T[size_t(j) * p + i] = M[size_t(i) * p + j];
  return T;
}

/* out[i0,i1,i2] += sum_j M0[i0,j0] M1[i1,j1] Mz[i2,j2] in[j0,j1,j2].
   All axes have p points except the third, which has pz (1 in 2D, with
   Mz = {1}).  Layout: axis 0 fastest. */
struct TensorScratch {
  std::vector<double> t1, t2;
};

void tensor_apply_add(int p, int pz, const double* M0, const double* M1,
                      const double* Mz, const double* in, double* out,
                      TensorScratch& s) {
  size_t plane = size_t(p) * p;
  s.t1.assign(pz * plane, 0.0);
  s.t2.assign(pz * plane, 0.0);
  /* axis 0 */
  for (int jz = 0; jz < pz; ++jz)
    for (int j1 = 0; j1 < p; ++j1) {
      const double* ri = in + (size_t(jz) * p + j1) * p;
      double* ro = s.t1.data() + (size_t(jz) * p + j1) * p;
      for (int i0 = 0; i0 < p; ++i0) {
        const double* mrow = M0 + size_t(i0) * p;
        double acc = 0.0;
        for (int j0 = 0; j0 < p; ++j0) acc += mrow[j0] * ri[j0];
        ro[i0] = acc;
      }
    }
  /* axis 1 */
  for (int jz = 0; jz < pz; ++jz)
    for (int i1 = 0; i1 < p; ++i1) {
      double* ro = s.t2.data() + (size_t(jz) * p + i1) * p;
      const double* mrow = M1 + size_t(i1) * p;
      for (int j1 = 0; j1 < p; ++j1) {
        double m = mrow[j1];
        const double* ri = s.t1.data() + (size_t(jz) * p + j1) * p;
        for (int i0 = 0; i0 < p; ++i0) ro[i0] += m * ri[i0];
      }
    }
  /* axis 2 */
  for (int iz = 0; iz < pz; ++iz) {
    const double* mrow = Mz + size_t(iz) * pz;
    double* ro = out + size_t(iz) * plane;
    for (int jz = 0; jz < pz; ++jz) {
      double m = mrow[jz];
      const double* ri = s.t2.data() + size_t(jz) * plane;
      for (size_t n = 0; n < plane; ++n) ro[n] += m * ri[n];
    }
  }
}

/* ---------------- small tensor-product Fourier grids ----------------
 *
 * Modes m in [-M, M]^dim (third axis collapsed to m2 = 0 in 2D), linear
 * index (m0+M) + N*((m1+M) + N*(m2+Mz)).  The per-axis transform matrix is
 * E[m][i] = exp(-I theta m s_i) with s_i the unit Chebyshev nodes; theta
 * encodes the grid spacing times the half box side.
 */
struct GridTransform {
  int d, p, pz, N, Nz, M, Mz;
  std::vector<cplx> E;    /* (m+M)*p + i */
  std::vector<cplx> Et;   /* transposed, conjugated: i*N + (m+M) */
  std::vector<cplx> Ez;   /* third axis (identity {1} in 2D) */
  std::vector<cplx> Ezt;

  GridTransform(int d_, const Cheb1D& cb, int N_, double theta)
      : d(d_), p(cb.p), pz(d_ == 3 ? cb.p : 1), N(N_),
        Nz(d_ == 3 ? N_ : 1), M((N_ - 1) / 2), Mz(d_ == 3 ? (N_ - 1) / 2 : 0) {
    E.resize(size_t(N) * p);
    Et.resize(size_t(p) * N);
    for (int m = -M; m <= M; ++m)
      for (int i = 0; i < p; ++i) {
        cplx v = std::polar(1.0, -theta * m * cb.nodes[i]);
        E[size_t(m + M) * p + i] = v;
        Et[size_t(i) * N + (m + M)] = std::conj(v);
      }
    if (d == 3) {
      Ez = E;
      Ezt = Et;
    } else {
      Ez.assign(1, cplx(1.0, 0.0));
      Ezt.assign(1, cplx(1.0, 0.0));
    }
  }

  size_t modes() const { return size_t(Nz) * N * N; }
};

struct XformScratch {
  std::vector<cplx> a, b;
  std::vector<double> prodw;
  TensorScratch tens;
};

/* real nodal data w[pz*p*p] -> complex Fourier samples G[Nz*N*N] */
void forward_grid(const GridTransform& T, const double* w, cplx* G,
                  XformScratch& s) {
  int p = T.p, pz = T.pz, N = T.N, Nz = T.Nz;
  s.a.resize(size_t(pz) * p * N);
  s.b.assign(size_t(pz) * N * N, cplx(0.0));
  for (int iz = 0; iz < pz; ++iz)
    for (int iy = 0; iy < p; ++iy) {
      const double* wr = w + (size_t(iz) * p + iy) * p;
      cplx* ar = s.a.data() + (size_t(iz) * p + iy) * N;
      for (int m = 0; m < N; ++m) {
        const cplx* er = T.E.data() + size_t(m) * p;
        cplx acc(0.0);
        for (int i = 0; i < p; ++i) acc += er[i] * wr[i];
        ar[m] = acc;
      }
    }
  for (int iz = 0; iz < pz; ++iz)
    for (int my = 0; my < N; ++my) {
      cplx* br = s.b.data() + (size_t(iz) * N + my) * N;
      const cplx* er = T.E.data() + size_t(my) * p;
      for (int iy = 0; iy < p; ++iy) {
        cplx c = er[iy];
        const cplx* ar = s.a.data() + (size_t(iz) * p + iy) * N;
        for (int mx = 0; mx < N; ++mx) br[mx] += c * ar[mx];
      }
    }
  size_t plane = size_t(N) * N;
  for (int mz = 0; mz < Nz; ++mz) {
    cplx* gr = G + size_t(mz) * plane;
    std::fill(gr, gr + plane, cplx(0.0));
    const cplx* er = T.Ez.data() + size_t(mz) * pz;
    for (int iz = 0; iz < pz; ++iz) {
      cplx c = er[iz];
      const cplx* br = s.b.data() + size_t(iz) * plane;
      for (size_t n = 0; n < plane; ++n) gr[n] += c * br[n];
    }
  }
}

/* complex Fourier samples F[Nz*N*N] -> out[pz*p*p] += pf * Re(inverse) */
void inverse_grid_add(const GridTransform& T, const cplx* F, double pf,
                      double* out, XformScratch& s) {
  int p = T.p, pz = T.pz, N = T.N, Nz = T.Nz;
  size_t plane = size_t(N) * N;
  s.a.assign(size_t(pz) * plane, cplx(0.0));
  s.b.assign(size_t(pz) * p * N, cplx(0.0));
  for (int iz = 0; iz < pz; ++iz) {
    cplx* ar = s.a.data() + size_t(iz) * plane;
    const cplx* er = T.Ezt.data() + size_t(iz) * Nz;
    for (int mz = 0; mz < Nz; ++mz) {
      cplx c = er[mz];
      const cplx* fr = F + size_t(mz) * plane;
      for (size_t n = 0; n < plane; ++n) ar[n] += c * fr[n];
    }
  }
  for (int iz = 0; iz < pz; ++iz)
    for (int iy = 0; iy < p; ++iy) {
      cplx* br = s.b.data() + (size_t(iz) * p + iy) * N;
      const cplx* er = T.Et.data() + size_t(iy) * N;
      for (int my = 0; my < N; ++my) {
        cplx c = er[my];
        const cplx* ar = s.a.data() + (size_t(iz) * N + my) * N;
        for (int mx = 0; mx < N; ++mx) br[mx] += c * ar[mx];
      }
    }
  for (int iz = 0; iz < pz; ++iz)
    for (int iy = 0; iy < p; ++iy) {
      const cplx* br = s.b.data() + (size_t(iz) * p + iy) * N;
      double* orow = out + (size_t(iz) * p + iy) * p;
      for (int ix = 0; ix < p; ++ix) {
        const cplx* er = T.Et.data() + size_t(ix) * N;
        cplx acc(0.0);
        for (int mx = 0; mx < N; ++mx) acc += er[mx] * br[mx];
        orow[ix] += pf * acc.real();
      }
    }
}

/* ---------------- diagonal symbol tables ---------------- */

enum class SymbolGrid { level_diff, root_free, root_periodic };

bool is_harmonic_based(KernelType k) { return k == KernelType::rotlet; }

/* Radial factor of the kernel symbol on one grid, indexed by the integer
 * squared mode radius s2 (|k| = h sqrt(s2)):
 *   level_diff:    [g(k r_fine) - g(k r_coarse)] / k^4  (g = gamma_hat;
 *                  the rotlet uses phi_hat / k^2), by an even Taylor series
 *                  when k r_coarse < 0.05;
 *   root_free:     g(k) * truncated Green's function transform;
 *   root_periodic: g(k) / k^4 (resp. / k^2), zero mode dropped.
 */
std::vector<double> build_symbol_table(const SplitKernel& sk, double h,
                                       int s2max, SymbolGrid kind,
                                       double r_coarse, double r_fine) {
  const bool harm = is_harmonic_based(sk.kernel);
  const WindowFunction& win = sk.mollifier.window;
  double R = sk.window_radius_R;
  int d = sk.dim;

  /* series coefficients: gamma_hat = sum_j a[j] k^(2j) (a[1] = 0), and
     phi_hat = sum_j b[j] k^(2j) with b[2] = -a[2], b[3] = -a[3]/2 and b[1]
     recovered from a short finite difference of phi_hat near zero */
  std::array<double, 5> a = mollifier_fourier_taylor(sk.mollifier);
  double b4 = -a[2], b6 = -a[3] / 2.0;
  double h0 = 0.02, h02 = h0 * h0;
  double b2 = (window_fourier(win, h0) - 1.0) / h02 - b4 * h02 - b6 * h02 * h02;

  double rc2 = r_coarse * r_coarse, rf2 = r_fine * r_fine;

  std::vector<double> A(size_t(s2max) + 1, 0.0);
  for (int s2 = 0; s2 <= s2max; ++s2) {
    double k = h * std::sqrt(double(s2));
    double k2 = k * k;
    double v = 0.0;
    switch (kind) {
      case SymbolGrid::root_free:
        v = harm ? window_fourier(win, k) * truncated_harmonic_fourier(k, R, d)
                 : mollifier_fourier(sk.mollifier, k) *
                       truncated_biharmonic_fourier(k, R, d);
        break;
      case SymbolGrid::root_periodic:
        if (s2 == 0) {
          v = 0.0;
        } else {
          v = harm ? window_fourier(win, k) / k2
                   : mollifier_fourier(sk.mollifier, k) / (k2 * k2);
        }
        break;
      case SymbolGrid::level_diff:
        if (k * r_coarse < 0.05) {
          if (harm) {
            v = b2 * (rf2 - rc2) + b4 * (rf2 * rf2 - rc2 * rc2) * k2 +
                b6 * (rf2 * rf2 * rf2 - rc2 * rc2 * rc2) * k2 * k2;
          } else {
            v = a[2] * (rf2 * rf2 - rc2 * rc2) +
                a[3] * (rf2 * rf2 * rf2 - rc2 * rc2 * rc2) * k2 +
                a[4] * (rf2 * rf2 * rf2 * rf2 - rc2 * rc2 * rc2 * rc2) * k2 * k2;
          }
        } else if (harm) {
          v = (window_fourier(win, k * r_fine) -
               window_fourier(win, k * r_coarse)) / k2;
        } else {
          v = (mollifier_fourier(sk.mollifier, k * r_fine) -
               mollifier_fourier(sk.mollifier, k * r_coarse)) / (k2 * k2);
        }
        break;
    }
    A[s2] = v;
  }
  return A;
}

/* Per-(m2, m1) bound on |m0| outside of which the symbol vanishes: the
   prolate window is exactly zero beyond its band limit, so whole mode rows
   can be skipped; Gaussian grids keep every mode. */
std::vector<int> build_row_limits(const GridTransform& T, double band_r2) {
  std::vector<int> lim(size_t(T.Nz) * T.N);
  for (int mz = -T.Mz; mz <= T.Mz; ++mz)
    for (int my = -T.M; my <= T.M; ++my) {
      double rem = band_r2 - double(mz) * mz - double(my) * my;
      int v = -1;
      if (rem >= 0.0) v = std::min(T.M, int(std::floor(std::sqrt(rem))));
      lim[size_t(mz + T.Mz) * T.N + (my + T.M)] = v;
    }
  return lim;
}

/* 3^d colleague translation phases: offsets between same-level box centers
   are integer multiples tau in {-1,0,1} of the box side, and h r = 2 pi / 3
   on every level grid, so the per-axis factor is a cube root of unity:
   rows[tau+1][m+M] = exp(-2 pi I m tau / 3). */
std::array<std::vector<cplx>, 3> build_phase_rows(int N) {
  int M = (N - 1) / 2;
  const cplx w[3] = {cplx(1.0, 0.0),
                     cplx(-0.5, -0.8660254037844386467637232),
                     cplx(-0.5, 0.8660254037844386467637232)};
  std::array<std::vector<cplx>, 3> rows;
  for (int tau = -1; tau <= 1; ++tau) {
    rows[tau + 1].resize(N);
    for (int m = -M; m <= M; ++m) {
      int r = ((m * tau) % 3 + 3) % 3;
      rows[tau + 1][m + M] = w[r];
    }
  }
  return rows;
}

/* Phi[ch][modes] += phase(tau) applied to G[ch][modes]. */
void accumulate_phased(const GridTransform& T,
                       const std::array<std::vector<cplx>, 3>& rows,
                       const std::array<int, 3>& tau,
                       const std::vector<int>& m0lim, int channels,
                       const cplx* G, cplx* Phi, std::vector<cplx>& phrow) {
  int N = T.N, Nz = T.Nz, M = T.M;
  size_t modes = T.modes();
  const cplx* r0 = rows[tau[0] + 1].data();
  const cplx* r1 = rows[tau[1] + 1].data();
  const cplx* r2 = rows[tau[2] + 1].data();
  phrow.resize(N);
  for (int mz = 0; mz < Nz; ++mz) {
    cplx cz = (T.d == 3) ? r2[mz] : cplx(1.0, 0.0);
    for (int my = 0; my < N; ++my) {
      int lim = m0lim[size_t(mz) * N + my];
      if (lim < 0) continue;
      cplx cyz = cz * r1[my];
      size_t base = (size_t(mz) * N + my) * N;
      int lo = M - lim, hi = M + lim;
      for (int mx = lo; mx <= hi; ++mx) phrow[mx] = cyz * r0[mx];
      for (int c = 0; c < channels; ++c) {
        const cplx* g = G + size_t(c) * modes + base;
        cplx* ph = Phi + size_t(c) * modes + base;
        for (int mx = lo; mx <= hi; ++mx) ph[mx] += phrow[mx] * g[mx];
      }
    }
  }
}

/* Applies the kernel symbol on one grid: charge channels -> d velocity
   components, F zeroed outside the active band. */
void apply_symbol(KernelType kernel, const GridTransform& T, double h,
                  const std::vector<double>& A, const std::vector<int>& m0lim,
                  const cplx* Phi, cplx* F) {
  int N = T.N, Nz = T.Nz, M = T.M, Mz = T.Mz, d = T.d;
  size_t modes = T.modes();
  std::fill(F, F + size_t(d) * modes, cplx(0.0));
  const cplx I(0.0, 1.0);
  for (int mz = 0; mz < Nz; ++mz) {
    double k2v = h * (mz - Mz);
    for (int my = 0; my < N; ++my) {
      int lim = m0lim[size_t(mz) * N + my];
      if (lim < 0) continue;
      double k1v = h * (my - M);
      size_t base = (size_t(mz) * N + my) * N;
      int s2yz = (mz - Mz) * (mz - Mz) + (my - M) * (my - M);
      for (int mx = M - lim; mx <= M + lim; ++mx) {
        int m0 = mx - M;
        double av = A[size_t(s2yz + m0 * m0)];
        if (av == 0.0) continue;
        double k0v = h * m0;
        double kk = k0v * k0v + k1v * k1v + k2v * k2v;
        size_t g = base + mx;
        switch (kernel) {
          case KernelType::stokeslet: {
            if (d == 3) {
              cplx f0 = Phi[g], f1 = Phi[modes + g], f2 = Phi[2 * modes + g];
              cplx kf = k0v * f0 + k1v * f1 + k2v * f2;
              F[g] = av * (kk * f0 - k0v * kf);
              F[modes + g] = av * (kk * f1 - k1v * kf);
              F[2 * modes + g] = av * (kk * f2 - k2v * kf);
            } else {
              cplx f0 = Phi[g], f1 = Phi[modes + g];
              cplx kf = k0v * f0 + k1v * f1;
              F[g] = av * (kk * f0 - k0v * kf);
              F[modes + g] = av * (kk * f1 - k1v * kf);
            }
            break;
          }
          case KernelType::stresslet: {
            if (d == 3) {
              cplx S00 = Phi[g], S11 = Phi[modes + g], S22 = Phi[2 * modes + g];
              cplx S01 = Phi[3 * modes + g], S02 = Phi[4 * modes + g];
              cplx S12 = Phi[5 * modes + g];
              cplx Sk0 = S00 * k0v + S01 * k1v + S02 * k2v;
              cplx Sk1 = S01 * k0v + S11 * k1v + S12 * k2v;
              cplx Sk2 = S02 * k0v + S12 * k1v + S22 * k2v;
              cplx kSk = k0v * Sk0 + k1v * Sk1 + k2v * Sk2;
              cplx wtr = (S00 + S11 + S22) * (kk / 5.0);
              F[g] = I * (av * (kk * Sk0 - k0v * kSk + k0v * wtr));
              F[modes + g] = I * (av * (kk * Sk1 - k1v * kSk + k1v * wtr));
              F[2 * modes + g] = I * (av * (kk * Sk2 - k2v * kSk + k2v * wtr));
            } else {
              cplx S00 = Phi[g], S11 = Phi[modes + g], S01 = Phi[2 * modes + g];
              cplx Sk0 = S00 * k0v + S01 * k1v;
              cplx Sk1 = S01 * k0v + S11 * k1v;
              cplx kSk = k0v * Sk0 + k1v * Sk1;
              cplx wtr = (S00 + S11) * (kk / 4.0);
              F[g] = I * (av * (kk * Sk0 - k0v * kSk + k0v * wtr));
              F[modes + g] = I * (av * (kk * Sk1 - k1v * kSk + k1v * wtr));
            }
            break;
          }
          case KernelType::rotlet: {
            if (d == 3) {
              cplx g0 = Phi[g], g1 = Phi[modes + g], g2 = Phi[2 * modes + g];
              cplx hI = cplx(0.0, -0.5 * av);
              F[g] = hI * (g1 * k2v - g2 * k1v);
              F[modes + g] = hI * (g2 * k0v - g0 * k2v);
              F[2 * modes + g] = hI * (g0 * k1v - g1 * k0v);
            } else {
              cplx g0 = Phi[g];
              F[g] = cplx(0.0, -0.5 * av) * (k1v * g0);
              F[modes + g] = cplx(0.0, 0.5 * av) * (k0v * g0);
            }
            break;
          }
          default:
            throw std::invalid_argument("apply_symbol: unsupported kernel");
        }
      }
    }
  }
}

/* band limit in mode-index units, squared; everything active for Gaussian */
double band_radius_sq(const DmkPlan& plan, const GridTransform& T,
                      double mode_spacing_times_scale) {
  if (plan.window != WindowKind::prolate) return 3.0 * double(T.M) * T.M + 1.0;
  double b = plan.c / mode_spacing_times_scale;
  return b * b * (1.0 + 1e-12);
}

/* ---------------- shared per-pass helpers ---------------- */

std::array<const double*, 3> axis_matrices(const std::vector<double>* M,
                                           const double* unit, int dim,
                                           int ci) {
  /* per-axis child matrices selected by the child index bits */
  std::array<const double*, 3> r;
  r[0] = M[(ci >> 0) & 1].data();
  r[1] = M[(ci >> 1) & 1].data();
  r[2] = dim == 3 ? M[(ci >> 2) & 1].data() : unit;
  return r;
}

void build_source_channels(KernelType kernel, int dim, const double* str,
                           double* ch) {
  switch (kernel) {
    case KernelType::stokeslet:
      for (int j = 0; j < dim; ++j) ch[j] = str[j];
      break;
    case KernelType::stresslet: {
      const double* f = str;
      const double* n = str + dim;
      double w = 0.0;
      for (int j = 0; j < dim; ++j) w += f[j] * n[j];
      if (dim == 3) {
        ch[0] = 2.0 * f[0] * n[0] + w;
        ch[1] = 2.0 * f[1] * n[1] + w;
        ch[2] = 2.0 * f[2] * n[2] + w;
        ch[3] = f[0] * n[1] + f[1] * n[0];
        ch[4] = f[0] * n[2] + f[2] * n[0];
        ch[5] = f[1] * n[2] + f[2] * n[1];
      } else {
        ch[0] = 2.0 * f[0] * n[0] + w;
        ch[1] = 2.0 * f[1] * n[1] + w;
        ch[2] = f[0] * n[1] + f[1] * n[0];
      }
      break;
    }
    case KernelType::rotlet: {
      int nc = dim == 3 ? 3 : 1;
      for (int j = 0; j < nc; ++j) ch[j] = str[j];
      break;
    }
    default:
      throw std::invalid_argument("upward_pass: unsupported kernel");
  }
}

const std::vector<double>& target_points(const Tree& t) {
  return t.targets_alias_sources ? t.src_points : t.tgt_points;
}
const std::vector<int>& target_perm(const Tree& t) {
  return t.targets_alias_sources ? t.src_perm : t.tgt_perm;
}

void check_plan(const Tree& tree, const DmkPlan& plan) {
  if (tree.dim != plan.dim)
    throw std::invalid_argument("dmk: tree and plan dimensions differ");
  if (tree.proxy_order != plan.p)
    throw std::invalid_argument("dmk: tree proxy order does not match plan");
}

struct Kahan {
  double sum = 0.0, comp = 0.0;
  void add(double v) {
    double y = v - comp;
    double t = sum + y;
    comp = (t - sum) - y;
    sum = t;
  }
};

}  // namespace

/* ---------------- upward pass ---------------- */

ProxyData upward_pass(const Tree& tree, const DmkPlan& plan,
                      const std::vector<double>& strengths) {
  check_plan(tree, plan);
  int d = plan.dim, p = plan.p;
  int sc = strength_components(plan.kernel, d);
  int nch = outgoing_channels(plan.kernel, d);
  int n = int(tree.src_points.size()) / d;
  if (int(strengths.size()) != n * sc)
    throw std::invalid_argument("upward_pass: strength array size mismatch");

  /* permuted per-source channel data */
  std::vector<double> schan(size_t(n) * nch);
  for (int i = 0; i < n; ++i)
    build_source_channels(plan.kernel, d,
                          strengths.data() + size_t(tree.src_perm[i]) * sc,
                          schan.data() + size_t(i) * nch);

  ProxyData out;
  out.p = p;
  out.dim = d;
  out.channels = nch;
  int nodes = nodes_per_box(p, d);
  out.values.assign(size_t(tree.num_boxes()) * nch * nodes, 0.0);

  Cheb1D cb(p);
  int pz = d == 3 ? p : 1;

  /* leaves: anterpolate their own sources */
  std::vector<int> leaves;
  for (int b = 0; b < tree.num_boxes(); ++b)
    if (tree.boxes[b].leaf && tree.box_src_count(b) > 0) leaves.push_back(b);

#pragma omp parallel
  {
    std::vector<double> bx(p), by(p), bz(p);
    std::vector<double> prodw(nodes);
#pragma omp for schedule(static)
    for (int li = 0; li < int(leaves.size()); ++li) {
      int b = leaves[li];
      const TreeBox& box = tree.boxes[b];
      auto c = tree.box_center(b);
      double half = 0.5 * tree.box_side(b);
      double* w = out.box(b);
      for (int i = box.src_begin; i < box.src_end; ++i) {
        const double* x = tree.src_points.data() + size_t(i) * d;
        cb.basis((x[0] - c[0]) / half, bx.data());
        cb.basis((x[1] - c[1]) / half, by.data());
        if (d == 3)
          cb.basis((x[2] - c[2]) / half, bz.data());
        else
          bz[0] = 1.0;
        for (int iz = 0; iz < pz; ++iz) {
          double wz = bz[iz];
          for (int iy = 0; iy < p; ++iy) {
            double wyz = wz * by[iy];
            double* pw = prodw.data() + (size_t(iz) * p + iy) * p;
            for (int ix = 0; ix < p; ++ix) pw[ix] = wyz * bx[ix];
          }
        }
        const double* sch = schan.data() + size_t(i) * nch;
        for (int ch = 0; ch < nch; ++ch) {
          double sv = sch[ch];
          double* wc = w + size_t(ch) * nodes;
          for (int nd = 0; nd < nodes; ++nd) wc[nd] += sv * prodw[nd];
        }
      }
    }
  }

  /* merge children into parents, deepest level first (anterpolation =
     transposed child interpolation) */
  std::vector<double> Mc[2] = {child_interp_matrix(cb, 0),
                               child_interp_matrix(cb, 1)};
  std::vector<double> Mt[2] = {transpose_matrix(Mc[0], p),
                               transpose_matrix(Mc[1], p)};
  const double unit[1] = {1.0};
  int nchild = 1 << d;
  for (int lev = tree.max_level - 1; lev >= 0; --lev) {
    const std::vector<int>& ids = tree.level_boxes[lev];
#pragma omp parallel
    {
      TensorScratch ts;
#pragma omp for schedule(static)
      for (int ii = 0; ii < int(ids.size()); ++ii) {
        int b = ids[ii];
        const TreeBox& box = tree.boxes[b];
        if (box.leaf || tree.box_src_count(b) == 0) continue;
        for (int ci = 0; ci < nchild; ++ci) {
          int cid = box.first_child + ci;
          if (tree.box_src_count(cid) == 0) continue;
          auto Ms = axis_matrices(Mt, unit, d, ci);
          for (int ch = 0; ch < nch; ++ch)
            tensor_apply_add(p, pz, Ms[0], Ms[1], Ms[2],
                             out.box(cid) + size_t(ch) * nodes,
                             out.box(b) + size_t(ch) * nodes, ts);
        }
      }
    }
  }
  return out;
}

ProxyData make_incoming(const Tree& tree, const DmkPlan& plan) {
  check_plan(tree, plan);
  ProxyData in;
  in.p = plan.p;
  in.dim = plan.dim;
  in.channels = plan.dim;
  in.values.assign(
      size_t(tree.num_boxes()) * in.channels * nodes_per_box(plan.p, plan.dim),
      0.0);
  return in;
}

/* ---------------- top-level far field ---------------- */

void root_far_field(const Tree& tree, const DmkPlan& plan,
                    const SplitKernel& sk, const ProxyData& outgoing,
                    bool periodic, ProxyData& incoming) {
  check_plan(tree, plan);
  int d = plan.dim;
  int nch = outgoing.channels;
  Cheb1D cb(plan.p);

  int N = periodic ? plan.N_per : plan.N1;
  double h = periodic ? 2.0 * kPi : kPi / 3.0;
  /* root proxy offsets are s_i / 2, so theta = h / 2 */
  GridTransform T(d, cb, N, 0.5 * h);
  double pf = periodic ? 1.0 : std::pow(1.0 / 6.0, d);

  std::vector<double> A = build_symbol_table(
      sk, h, 3 * T.M * T.M, periodic ? SymbolGrid::root_periodic : SymbolGrid::root_free,
      1.0, 1.0);
  std::vector<int> lim = build_row_limits(T, band_radius_sq(plan, T, h));

  size_t modes = T.modes();
  XformScratch xs;
  std::vector<cplx> G(size_t(nch) * modes), F(size_t(d) * modes);
  for (int ch = 0; ch < nch; ++ch)
    forward_grid(T, outgoing.box(0) + size_t(ch) * nodes_per_box(plan.p, d),
                 G.data() + size_t(ch) * modes, xs);
  apply_symbol(plan.kernel, T, h, A, lim, G.data(), F.data());
  for (int j = 0; j < d; ++j)
    inverse_grid_add(T, F.data() + size_t(j) * modes, pf,
                     incoming.box(0) + size_t(j) * nodes_per_box(plan.p, d),
                     xs);
}

/* ---------------- downward pass ---------------- */

void downward_pass(const Tree& tree, const DmkPlan& plan,
                   const SplitKernel& sk, const ProxyData& outgoing,
                   bool periodic, ProxyData& incoming) {
  (void)periodic; /* periodic images enter through the colleague shifts */
  check_plan(tree, plan);
  int d = plan.dim, p = plan.p;
  int nch = outgoing.channels;
  int nodes = nodes_per_box(p, d);
  Cheb1D cb(p);

  /* difference-level grids share one transform: spacing times half side is
     always pi/3 */
  GridTransform T(d, cb, plan.N1, kPi / 3.0);
  size_t modes = T.modes();
  auto rows = build_phase_rows(plan.N1);
  /* band limit in mode units: c / (h r_fine) = 3 c / pi on every level */
  std::vector<int> lim = build_row_limits(
      T, band_radius_sq(plan, T, kPi / 3.0));

  std::vector<double> Mc[2] = {child_interp_matrix(cb, 0),
                               child_interp_matrix(cb, 1)};
  const double unit[1] = {1.0};
  int nchild = 1 << d;

  struct Entry {
    int slot;
    std::array<int, 3> tau;
  };
  std::vector<cplx> Gbuf;
  std::vector<int> slot_box;
  std::vector<int> members;
  std::vector<std::vector<Entry>> entries;

  for (int lev = 0; lev <= tree.max_level; ++lev) {
    const std::vector<int>& ids = tree.level_boxes[lev];
    if (ids.empty()) continue;
    double r_c = std::ldexp(1.0, -lev);
    double r_f = 0.5 * r_c;
    double h = kPi / (3.0 * r_f);
    double pf = std::pow(1.0 / (6.0 * r_f), d);
    std::vector<double> A =
        build_symbol_table(sk, h, 3 * T.M * T.M, SymbolGrid::level_diff, r_c, r_f);
    std::int64_t side_int = std::int64_t(1) << (30 - lev);

    /* process boxes grouped by parent (siblings share most colleagues) */
    size_t gb = 0;
    while (gb < ids.size()) {
      size_t ge = gb + 1;
      while (ge < ids.size() &&
             tree.boxes[ids[ge]].parent == tree.boxes[ids[gb]].parent)
        ++ge;

      members.clear();
      entries.clear();
      slot_box.clear();
      for (size_t ii = gb; ii < ge; ++ii) {
        int b = ids[ii];
        if (tree.box_tgt_count(b) == 0) continue;
        const TreeNeighbors& nb = neighbor_query(tree, b);
        std::vector<Entry> es;
        for (const NeighborEntry& ce : nb.colleagues) {
          if (tree.boxes[b].leaf && ce.box == b && ce.shift[0] == 0 &&
              ce.shift[1] == 0 && ce.shift[2] == 0)
            continue;
          if (tree.box_src_count(ce.box) == 0) continue;
          int slot = -1;
          for (int si = 0; si < int(slot_box.size()); ++si)
            if (slot_box[si] == ce.box) {
              slot = si;
              break;
            }
          if (slot < 0) {
            slot = int(slot_box.size());
            slot_box.push_back(ce.box);
          }
          Entry e;
          e.slot = slot;
          for (int ax = 0; ax < 3; ++ax) {
            if (ax >= d) {
              e.tau[ax] = 0;
              continue;
            }
            std::int64_t diff = std::int64_t(tree.boxes[ce.box].anchor[ax]) +
                                (std::int64_t(ce.shift[ax]) << 30) -
                                std::int64_t(tree.boxes[b].anchor[ax]);
            e.tau[ax] = int(diff / side_int);
          }
          es.push_back(e);
        }
        if (es.empty()) continue;
        members.push_back(b);
        entries.push_back(std::move(es));
      }

      if (!members.empty()) {
        Gbuf.resize(slot_box.size() * size_t(nch) * modes);
#pragma omp parallel
        {
          XformScratch xs;
#pragma omp for schedule(static)
          for (int si = 0; si < int(slot_box.size()); ++si)
            for (int ch = 0; ch < nch; ++ch)
              forward_grid(T, outgoing.box(slot_box[si]) + size_t(ch) * nodes,
                           Gbuf.data() + (size_t(si) * nch + ch) * modes, xs);
        }
#pragma omp parallel
        {
          XformScratch xs;
          std::vector<cplx> Phi(size_t(nch) * modes);
          std::vector<cplx> F(size_t(d) * modes);
          std::vector<cplx> phrow;
#pragma omp for schedule(static)
          for (int mi = 0; mi < int(members.size()); ++mi) {
            int b = members[mi];
            std::fill(Phi.begin(), Phi.end(), cplx(0.0));
            for (const Entry& e : entries[mi])
              accumulate_phased(T, rows,
                                {e.tau[0], e.tau[1], e.tau[2]}, lim, nch,
                                Gbuf.data() + size_t(e.slot) * nch * modes,
                                Phi.data(), phrow);
            apply_symbol(plan.kernel, T, h, A, lim, Phi.data(), F.data());
            for (int j = 0; j < d; ++j)
              inverse_grid_add(T, F.data() + size_t(j) * modes, pf,
                               incoming.box(b) + size_t(j) * nodes, xs);
          }
        }
      }
      gb = ge;
    }

    /* interpolate accumulated potentials down to the children */
#pragma omp parallel
    {
      TensorScratch ts;
#pragma omp for schedule(static)
      for (int ii = 0; ii < int(ids.size()); ++ii) {
        int b = ids[ii];
        const TreeBox& box = tree.boxes[b];
        if (box.leaf || tree.box_tgt_count(b) == 0) continue;
        for (int ci = 0; ci < nchild; ++ci) {
          int cid = box.first_child + ci;
          if (tree.box_tgt_count(cid) == 0) continue;
          auto Ms = axis_matrices(Mc, unit, d, ci);
          int pz = d == 3 ? p : 1;
          for (int j = 0; j < d; ++j)
            tensor_apply_add(p, pz, Ms[0], Ms[1], Ms[2],
                             incoming.box(b) + size_t(j) * nodes,
                             incoming.box(cid) + size_t(j) * nodes, ts);
        }
      }
    }
  }
}

/* ---------------- target interpolation ---------------- */

std::vector<double> target_far_fields(const Tree& tree, const DmkPlan& plan,
                                      const ProxyData& incoming) {
  check_plan(tree, plan);
  int d = plan.dim, p = plan.p;
  int nodes = nodes_per_box(p, d);
  const std::vector<double>& tp = target_points(tree);
  const std::vector<int>& perm = target_perm(tree);
  int nt = int(tp.size()) / d;
  std::vector<double> u(size_t(nt) * d, 0.0);
  Cheb1D cb(p);
  int pz = d == 3 ? p : 1;

  std::vector<int> leaves;
  for (int b = 0; b < tree.num_boxes(); ++b)
    if (tree.boxes[b].leaf && tree.box_tgt_count(b) > 0) leaves.push_back(b);

#pragma omp parallel
  {
    std::vector<double> bx(p), by(p), bz(p);
    std::vector<double> prodw(nodes);
#pragma omp for schedule(static)
    for (int li = 0; li < int(leaves.size()); ++li) {
      int b = leaves[li];
      const TreeBox& box = tree.boxes[b];
      auto c = tree.box_center(b);
      double half = 0.5 * tree.box_side(b);
      const double* w = incoming.box(b);
      for (int t = box.tgt_begin; t < box.tgt_end; ++t) {
        const double* x = tp.data() + size_t(t) * d;
        cb.basis((x[0] - c[0]) / half, bx.data());
        cb.basis((x[1] - c[1]) / half, by.data());
        if (d == 3)
          cb.basis((x[2] - c[2]) / half, bz.data());
        else
          bz[0] = 1.0;
        for (int iz = 0; iz < pz; ++iz) {
          double wz = bz[iz];
          for (int iy = 0; iy < p; ++iy) {
            double wyz = wz * by[iy];
            double* pw = prodw.data() + (size_t(iz) * p + iy) * p;
            for (int ix = 0; ix < p; ++ix) pw[ix] = wyz * bx[ix];
          }
        }
        double* ut = u.data() + size_t(perm[t]) * d;
        for (int j = 0; j < d; ++j) {
          const double* wc = w + size_t(j) * nodes;
          double acc = 0.0;
          for (int nd = 0; nd < nodes; ++nd) acc += prodw[nd] * wc[nd];
          ut[j] = acc;
        }
      }
    }
  }
  return u;
}

/* ---------------- residual pass ---------------- */

std::vector<double> residual_pass(const Tree& tree, const DmkPlan& plan,
                                  const SplitKernel& sk,
                                  const std::vector<double>& strengths,
                                  bool periodic) {
  (void)periodic; /* periodic images enter through the neighbor shifts */
  check_plan(tree, plan);
  int d = plan.dim;
  int sc = strength_components(plan.kernel, d);
  int n = int(tree.src_points.size()) / d;
  if (int(strengths.size()) != n * sc)
    throw std::invalid_argument("residual_pass: strength array size mismatch");

  std::vector<double> sstr(size_t(n) * sc);
  for (int i = 0; i < n; ++i)
    for (int cpp = 0; cpp < sc; ++cpp)
      sstr[size_t(i) * sc + cpp] = strengths[size_t(tree.src_perm[i]) * sc + cpp];

  const std::vector<double>& tp = target_points(tree);
  const std::vector<int>& perm = target_perm(tree);
  int nt = int(tp.size()) / d;
  bool alias = tree.targets_alias_sources;
  std::vector<double> u(size_t(nt) * d, 0.0);

  std::vector<int> leaves;
  for (int b = 0; b < tree.num_boxes(); ++b)
    if (tree.boxes[b].leaf && tree.box_tgt_count(b) > 0) leaves.push_back(b);

  std::atomic<bool> singular(false);

  struct NearRange {
    int begin, end;
    double shift[3];
    double nu;
    bool self_range; /* own box, zero shift: alias diagonal skipped */
  };

#pragma omp parallel
  {
    std::vector<NearRange> ranges;
    std::vector<double> tmp(size_t(d) * 3);
#pragma omp for schedule(dynamic, 4)
    for (int li = 0; li < int(leaves.size()); ++li) {
      int b = leaves[li];
      const TreeBox& box = tree.boxes[b];
      double r_l = tree.box_side(b);
      double r_f = 0.5 * r_l;

      ranges.clear();
      auto add_range = [&](int src_box, const std::array<std::int8_t, 3>& sh,
                           double nu, bool selfr) {
        const TreeBox& sb = tree.boxes[src_box];
        if (sb.src_end == sb.src_begin) return;
        NearRange r;
        r.begin = sb.src_begin;
        r.end = sb.src_end;
        for (int ax = 0; ax < 3; ++ax) r.shift[ax] = double(sh[ax]);
        r.nu = nu;
        r.self_range = selfr;
        ranges.push_back(r);
      };

      add_range(b, {0, 0, 0}, r_l, true);
      const TreeNeighbors& nb = neighbor_query(tree, b);
      for (const NeighborEntry& e : nb.colleagues) {
        if (e.box == b && e.shift[0] == 0 && e.shift[1] == 0 &&
            e.shift[2] == 0)
          continue;
        if (!tree.boxes[e.box].leaf) continue;
        add_range(e.box, e.shift, r_f, false);
      }
      for (const NeighborEntry& e : nb.coarse) add_range(e.box, e.shift, r_l, false);
      for (const NeighborEntry& e : nb.fine) add_range(e.box, e.shift, r_f, false);

      double selfc = alias ? self_interaction_scaled(sk, r_l) : 0.0;

      for (int t = box.tgt_begin; t < box.tgt_end; ++t) {
        const double* xt = tp.data() + size_t(t) * d;
        Kahan acc[3];
        for (const NearRange& r : ranges) {
          double sup = r.nu * sk.support;
          double sup2 = sup * sup;
          for (int a = r.begin; a < r.end; ++a) {
            if (alias && r.self_range && a == t) continue;
            const double* xs = tree.src_points.data() + size_t(a) * d;
            double x[3] = {0.0, 0.0, 0.0};
            double r2 = 0.0;
            for (int ax = 0; ax < d; ++ax) {
              x[ax] = xt[ax] - (xs[ax] + r.shift[ax]);
              r2 += x[ax] * x[ax];
            }
            if (r2 >= sup2) continue;
            if (r2 == 0.0) {
              singular.store(true, std::memory_order_relaxed);
              continue;
            }
            for (int j = 0; j < d; ++j) tmp[j] = 0.0;
            residual_apply(sk, x, r.nu, sstr.data() + size_t(a) * sc,
                           tmp.data());
            for (int j = 0; j < d; ++j) acc[j].add(tmp[j]);
          }
        }
        if (alias && selfc != 0.0) {
          const double* f = sstr.data() + size_t(t) * sc;
          for (int j = 0; j < d; ++j) acc[j].add(selfc * f[j]);
        }
        double* ut = u.data() + size_t(perm[t]) * d;
        for (int j = 0; j < d; ++j) ut[j] = acc[j].sum;
      }
    }
  }
  if (singular.load())
    throw std::domain_error("residual_pass: coincident points");
  return u;
}

/* ---------------- full evaluation ---------------- */

std::vector<double> evaluate_with_plan(const DmkPlan& plan,
                                       const ParticleSystem& sys,
                                       EwaldMode mode, DmkReport* report,
                                       const SplitKernel* tables) {
  using clock = std::chrono::steady_clock;
  auto secs = [](clock::time_point a, clock::time_point b) {
    return std::chrono::duration<double>(b - a).count();
  };

  bool periodic = (mode == EwaldMode::periodic);
  if (plan.dim != sys.dim)
    throw std::invalid_argument("evaluate: plan and system dimensions differ");
  validate_system(plan.kernel, sys, periodic);
  if (periodic && plan.kernel == KernelType::stresslet && plan.dim == 2)
    throw std::invalid_argument(
        "evaluate: the periodic 2D stresslet sum is not absolutely convergent");
  if (tables && (tables->kernel != plan.kernel || tables->dim != plan.dim ||
                 tables->mollifier.window.kind != plan.window))
    throw std::invalid_argument(
        "evaluate: supplied split tables do not match the plan");

  ParticleSystem w = periodic ? wrap_into_box(sys) : sys;

  SplitKernel built;
  if (!tables) {
    WindowFunction win = (plan.window == WindowKind::prolate)
                             ? build_prolate(plan.c)
                             : build_gaussian(plan.sigma);
    double tt = plan.table_tol > 0.0
                    ? plan.table_tol
                    : std::max(0.03 * plan.tol, plan.dim == 2 ? 1e-12 : 1e-14);
    built = build_split_kernel(plan.kernel, plan.dim, win, tt);
  }
  const SplitKernel& sk = tables ? *tables : built;

  auto t0 = clock::now();
  Tree tree = build_tree(w.sources, w.targets, plan.n_s, plan.dim, periodic,
                         plan.p);
  auto t1 = clock::now();
  ProxyData outgoing = upward_pass(tree, plan, w.strengths);
  auto t2 = clock::now();
  ProxyData incoming = make_incoming(tree, plan);
  root_far_field(tree, plan, sk, outgoing, periodic, incoming);
  auto t3 = clock::now();
  downward_pass(tree, plan, sk, outgoing, periodic, incoming);
  std::vector<double> u = target_far_fields(tree, plan, incoming);
  auto t4 = clock::now();
  std::vector<double> ur = residual_pass(tree, plan, sk, w.strengths, periodic);
  auto t5 = clock::now();

  int d = plan.dim;
  int nt = sys.num_targets();
  for (size_t i = 0; i < u.size(); ++i) u[i] += ur[i];

  if (plan.kernel == KernelType::stokeslet && !periodic &&
      sk.corr_const != 0.0) {
    Kahan fs[3];
    int ns = sys.num_sources();
    for (int a = 0; a < ns; ++a)
      for (int j = 0; j < d; ++j) fs[j].add(w.strengths[size_t(a) * d + j]);
    for (int t = 0; t < nt; ++t)
      for (int j = 0; j < d; ++j) u[size_t(t) * d + j] += sk.corr_const * fs[j].sum;
  }
  if (plan.kernel == KernelType::stresslet && periodic) {
    std::vector<double> u0 = periodic_zero_mode(plan.kernel, w);
    for (size_t i = 0; i < u.size(); ++i) u[i] += u0[i];
  }

  if (report) {
    report->plan = plan;
    report->num_boxes = tree.num_boxes();
    report->max_level = tree.max_level;
    report->num_sources = sys.num_sources();
    report->num_targets = nt;
    report->t_tree = secs(t0, t1);
    report->t_upward = secs(t1, t2);
    report->t_root = secs(t2, t3);
    report->t_downward = secs(t3, t4);
    report->t_residual = secs(t4, t5);
  }
  return u;
}

std::vector<double> evaluate(KernelType kernel, const ParticleSystem& sys,
                             double eps, WindowKind window, EwaldMode mode,
                             DmkReport* report) {
  DmkPlan plan = select_parameters(kernel, eps, window, sys.dim);
  return evaluate_with_plan(plan, sys, mode, report);
}

}  // namespace stokesdmk
