/*
 * Acceptance gate: runs the project's end-to-end checks and prints exactly
 * one PASS/FAIL line per criterion, with pinned tolerances stated inline.
 * Exit status is the number of failed criteria, so the gate can run under
 * ctest.  Every check compares the library against an independent reference
 * computed here (closed forms, quadrature, direct summation, or the
 * single-level Ewald-style oracle); nothing is read from disk.
 */
#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdarg>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "stokesdmk/detail/legendre.hpp"
#include "stokesdmk/dmk.hpp"
#include "stokesdmk/oracle.hpp"
#include "stokesdmk/pointgen.hpp"
#include "stokesdmk/split.hpp"
#include "stokesdmk/windows.hpp"

using namespace stokesdmk;

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;

void appendf(std::string& s, const char* fmt, ...) {
    char buf[512];
    va_list ap;
    va_start(ap, fmt);
    std::vsnprintf(buf, sizeof buf, fmt, ap);
    va_end(ap);
    s += buf;
}

const char* kname(KernelType k) {
    switch (k) {
        case KernelType::stokeslet: return "stokeslet";
        case KernelType::stresslet: return "stresslet";
        case KernelType::rotlet: return "rotlet";
        case KernelType::biharmonic: return "biharmonic";
        default: return "harmonic";
    }
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

/* ----- quadrature helpers ----- */

double quad(const std::function<double(double)>& f, double a, double b, int n) {
    std::vector<double> x, w;
    detail::gauss_legendre(n, x, w);
    double s = 0;
    for (int i = 0; i < n; ++i) s += w[i] * f(0.5 * (a + b) + 0.5 * (b - a) * x[i]);
    return 0.5 * (b - a) * s;
}

double quad_panels(const std::function<double(double)>& f, double a, double b, int panels,
                   int n = 32) {
    double s = 0, h = (b - a) / panels;
    for (int p = 0; p < panels; ++p) s += quad(f, a + p * h, a + (p + 1) * h, n);
    return s;
}

/* ----- exact kernels (tensor form, unit-box convention) ----- */

void exact_stokeslet(int d, const double* x, double* out) {
    double r2 = 0;
    for (int i = 0; i < d; ++i) r2 += x[i] * x[i];
    double r = std::sqrt(r2);
    for (int j = 0; j < d; ++j)
        for (int l = 0; l < d; ++l) {
            double v = x[j] * x[l] / r2;
            if (d == 3) {
                v = (v + (j == l ? 1.0 : 0.0)) / (8.0 * kPi * r);
            } else {
                v = (v - (j == l ? std::log(r) : 0.0)) / (4.0 * kPi);
            }
            out[j * d + l] = v;
        }
}

void exact_stresslet(int d, const double* x, double* out) {
    double r2 = 0;
    for (int i = 0; i < d; ++i) r2 += x[i] * x[i];
    double c = d == 3 ? -3.0 / (4.0 * kPi * std::pow(r2, 2.5)) : -1.0 / (kPi * r2 * r2);
    for (int j = 0; j < d; ++j)
        for (int l = 0; l < d; ++l)
            for (int m = 0; m < d; ++m) out[(j * d + l) * d + m] = c * x[j] * x[l] * x[m];
}

void exact_rotlet(int d, const double* x, double* out) {
    double r2 = 0;
    for (int i = 0; i < d; ++i) r2 += x[i] * x[i];
    if (d == 2) {
        out[0] = x[1] / (4.0 * kPi * r2);
        out[1] = -x[0] / (4.0 * kPi * r2);
        return;
    }
    double r = std::sqrt(r2), c = 1.0 / (8.0 * kPi * r2 * r);
    for (int i = 0; i < 9; ++i) out[i] = 0.0;
    out[0 * 3 + 1] = c * x[2];
    out[1 * 3 + 0] = -c * x[2];
    out[1 * 3 + 2] = c * x[0];
    out[2 * 3 + 1] = -c * x[0];
    out[2 * 3 + 0] = c * x[1];
    out[0 * 3 + 2] = -c * x[1];
}

int symbol_components(const SplitKernel& sk) {
    int d = sk.dim;
    if (sk.kernel == KernelType::stresslet) return d * d * d;
    if (sk.kernel == KernelType::rotlet) return d == 2 ? 2 : 9;
    return d * d;
}

/* trapezoid sum of the truncated mollified symbol on an X-periodic grid for
   a batch of targets; slab-wise accumulation keeps roundoff below the
   identity tolerances */
void far_field_batch(const SplitKernel& sk, const std::vector<std::array<double, 3>>& xs,
                     double X, std::vector<std::array<double, 27>>& out) {
    int d = sk.dim;
    double h = 2.0 * kPi / X;
    const WindowFunction& w = sk.mollifier.window;
    double K = w.kind == WindowKind::prolate ? w.c : 2.0 * std::sqrt(43.0) / w.sigma;
    int mmax = (int)std::ceil(K / h - 1e-12);
    int nm = 2 * mmax + 1, nt = (int)xs.size(), nc = symbol_components(sk);

    std::vector<std::complex<double>> ph(nt * 3 * nm, {1.0, 0.0});
    for (int t = 0; t < nt; ++t)
        for (int i = 0; i < d; ++i)
            for (int m = -mmax; m <= mmax; ++m)
                ph[(t * 3 + i) * nm + m + mmax] =
                    std::complex<double>(std::cos(h * m * xs[t][i]), std::sin(h * m * xs[t][i]));

    std::vector<std::complex<double>> acc(nt * nc, 0.0), slab(nt * nc);
    std::vector<std::complex<double>> sym(nc);
    int m2lo = d == 3 ? -mmax : 0, m2hi = d == 3 ? mmax : 0;
    for (int m2 = m2lo; m2 <= m2hi; ++m2) {
        std::fill(slab.begin(), slab.end(), std::complex<double>(0.0, 0.0));
        for (int m1 = -mmax; m1 <= mmax; ++m1)
            for (int m0 = -mmax; m0 <= mmax; ++m0) {
                double kv[3] = {h * m0, h * m1, h * m2};
                double k2 = kv[0] * kv[0] + kv[1] * kv[1] + kv[2] * kv[2];
                if (k2 > K * K * (1.0 + 1e-12)) continue;
                mollified_fourier_tensor(sk, kv, true, sym.data());
                for (int t = 0; t < nt; ++t) {
                    std::complex<double> p = ph[(t * 3 + 0) * nm + m0 + mmax] *
                                             ph[(t * 3 + 1) * nm + m1 + mmax];
                    if (d == 3) p *= ph[(t * 3 + 2) * nm + m2 + mmax];
                    for (int c = 0; c < nc; ++c) slab[t * nc + c] += sym[c] * p;
                }
            }
        for (int i = 0; i < nt * nc; ++i) acc[i] += slab[i];
    }
    double scale = std::pow(h / (2.0 * kPi), d);
    out.assign(nt, {});
    for (int t = 0; t < nt; ++t)
        for (int c = 0; c < nc; ++c) out[t][c] = acc[t * nc + c].real() * scale;
}

double rel_err(const double* a, const double* b, int n) {
    double num = 0, den = 0;
    for (int i = 0; i < n; ++i) {
        num += (a[i] - b[i]) * (a[i] - b[i]);
        den += b[i] * b[i];
    }
    return std::sqrt(num / std::max(den, 1e-300));
}

std::vector<std::array<double, 3>> random_targets(int dim, int n, double rlo, double rhi,
                                                  unsigned seed) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> ulen(rlo, rhi);
    std::uniform_real_distribution<double> udir(-1.0, 1.0);
    std::vector<std::array<double, 3>> xs(n, {0.0, 0.0, 0.0});
    for (auto& x : xs) {
        double nr = 0;
        do {
            for (int i = 0; i < dim; ++i) x[i] = udir(rng);
            nr = std::sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]);
        } while (nr < 0.1);
        double len = ulen(rng);
        for (int i = 0; i < dim; ++i) x[i] *= len / nr;
    }
    return xs;
}

/* worst relative error of (far field + residual) against the exact kernel */
double identity_error(const SplitKernel& sk, const std::vector<std::array<double, 3>>& xs,
                      double X) {
    int d = sk.dim, nc = symbol_components(sk);
    std::vector<std::array<double, 27>> far;
    far_field_batch(sk, xs, X, far);
    double worst = 0.0;
    for (size_t t = 0; t < xs.size(); ++t) {
        double ref[27], res[27], tot[27];
        if (sk.kernel == KernelType::stokeslet) {
            exact_stokeslet(d, xs[t].data(), ref);
            stokeslet_residual(sk, xs[t].data(), res);
            for (int j = 0; j < d; ++j) far[t][j * d + j] += sk.corr_const;
        } else if (sk.kernel == KernelType::stresslet) {
            exact_stresslet(d, xs[t].data(), ref);
            stresslet_residual(sk, xs[t].data(), res);
        } else {
            exact_rotlet(d, xs[t].data(), ref);
            rotlet_residual(sk, xs[t].data(), res);
        }
        for (int c = 0; c < nc; ++c) tot[c] = far[t][c] + res[c];
        worst = std::max(worst, rel_err(tot, ref, nc));
    }
    return worst;
}

/* ----- particle-system helpers ----- */

double rel_l2(const std::vector<double>& u, const std::vector<double>& ref) {
    double num = 0, den = 0;
    for (size_t i = 0; i < u.size(); ++i) {
        double d = u[i] - ref[i];
        num += d * d;
        den += ref[i] * ref[i];
    }
    if (den == 0.0) return num == 0.0 ? 0.0 : INFINITY;
    return std::sqrt(num / den);
}

std::vector<double> make_strengths(KernelType kernel, int dim, int n, std::uint64_t seed) {
    int sc = strength_components(kernel, dim);
    std::mt19937_64 rng(seed);
    auto u = [&] { return (rng() >> 11) * 0x1.0p-53 - 0.5; };
    std::vector<double> s((size_t)n * sc);
    for (double& v : s) v = u();
    if (kernel == KernelType::stresslet) {
        for (int a = 0; a < n; ++a) {
            double* nv = s.data() + (size_t)a * sc + dim;
            double len = 0;
            for (int i = 0; i < dim; ++i) len += nv[i] * nv[i];
            len = std::sqrt(len);
            if (len < 1e-9) {
                nv[0] = 1.0;
                for (int i = 1; i < dim; ++i) nv[i] = 0.0;
            } else {
                for (int i = 0; i < dim; ++i) nv[i] /= len;
            }
        }
    }
    return s;
}

ParticleSystem make_system(KernelType kernel, PointDistribution dist, int n, int dim,
                           std::uint64_t seed) {
    ParticleSystem sys;
    sys.dim = dim;
    sys.sources = generate_points(dist, n, dim, seed);
    sys.strengths = make_strengths(kernel, dim, n, seed ^ 0x5f5f5f5fULL);
    return sys;
}

const KernelType kAllKernels[] = {KernelType::stokeslet, KernelType::stresslet,
                                  KernelType::rotlet};

/* =====================================================================
 * Criterion 1: the two-piece split reproduces the exact kernel.
 * For every kernel x dimension x window, the residual tensor plus the
 * quadrature-inverted truncated mollified part must match the exact kernel
 * at 100 random separations to 1e-10 (3D, closed-form tables) resp. 1e-8
 * (2D, quadrature-built tables at table tolerance 1e-9).  Separations are
 * drawn from the split's designed domain: the R-truncated mollified kernel
 * equals the untruncated one only while the mollifier shell |x| + support
 * stays inside R, so the identity holds for r <= R - support, with zero
 * margin at the edge itself; we sample 2% inside that edge.
 * ===================================================================== */
bool crit_split_identity(std::string& d) {
    struct Cfg {
        int dim;
        WindowKind wk;
        double par;
        double tol, bound;
        unsigned seed;
    };
    const Cfg cfgs[] = {
        {3, WindowKind::prolate, 31.0 * kPi / 3.0, 1e-12, 1e-10, 2024},
        {3, WindowKind::gaussian, std::sqrt(6.0 / (50.0 * kPi)), 1e-12, 1e-10, 2025},
        {2, WindowKind::prolate, 25.0 * kPi / 3.0, 1e-9, 1e-8, 2026},
        {2, WindowKind::gaussian, std::sqrt(6.0 / (38.0 * kPi)), 1e-9, 1e-8, 2027},
    };
    bool ok = true;
    double worst3 = 0, worst2 = 0;
    for (const Cfg& c : cfgs) {
        WindowFunction w = c.wk == WindowKind::prolate ? build_prolate(c.par)
                                                       : build_gaussian(c.par);
        std::vector<SplitKernel> sks;
        for (KernelType k : kAllKernels) sks.push_back(build_split_kernel(k, c.dim, w, c.tol));
        double cap = 0.98 * (sks[0].window_radius_R - sks[0].support);
        auto xs = random_targets(c.dim, 100, 0.05, cap, c.seed);
        for (const SplitKernel& sk : sks) {
            double e = identity_error(sk, xs, 6.0);
            if (c.dim == 3) worst3 = std::max(worst3, e);
            else worst2 = std::max(worst2, e);
            if (e > c.bound) ok = false;
        }
    }
    appendf(d, "worst rel 3D %.1e (tol 1e-10), 2D %.1e (tol 1e-8), 100 separations each",
            worst3, worst2);
    return ok;
}

/* =====================================================================
 * Criterion 2: Gaussian-window split against the classical closed forms.
 * gamma_hat(k) = (1 + k^2 s^2/4) exp(-k^2 s^2/4); the biharmonic residual
 * B_R(r) = -(r/8pi) erfc(r/s) + (s/8 pi^{3/2}) exp(-r^2/s^2); the mollified
 * Stokeslet symbol gamma_hat(k) (k^2 I - k k^T)/k^4.  All to 1e-13.
 * ===================================================================== */
bool crit_gaussian_closed_forms(std::string& d) {
    double sigma = std::sqrt(6.0 / (25.0 * kPi));
    WindowFunction w = build_gaussian(sigma);
    Mollifier m{w};
    bool ok = true;

    double worst_g = 0.0;
    for (int i = 0; i < 1000; ++i) {
        double k = (i + 0.5) * (10.0 / sigma) / 1000.0;
        double t = 0.25 * k * k * sigma * sigma;
        double closed = (1.0 + t) * std::exp(-t);
        worst_g = std::max(worst_g, std::fabs(mollifier_fourier(m, k) - closed));
    }
    if (mollifier_fourier(m, 0.0) != 1.0) ok = false;
    if (worst_g > 1e-13) ok = false;

    SplitKernel bk = build_split_kernel(KernelType::biharmonic, 3, w, 1e-12);
    double worst_b = 0.0;
    for (int i = 0; i <= 200; ++i) {
        double r = i / 200.0;
        double closed = -(r / (8.0 * kPi)) * std::erfc(r / sigma) +
                        (sigma / (8.0 * std::pow(kPi, 1.5))) * std::exp(-r * r / (sigma * sigma));
        worst_b = std::max(worst_b, std::fabs(biharmonic_residual(bk, r) - closed));
    }
    if (worst_b > 1e-13) ok = false;

    SplitKernel sk = build_split_kernel(KernelType::stokeslet, 3, w, 1e-12);
    std::mt19937 rng(7171);
    std::uniform_real_distribution<double> ulen(0.1, 30.0), udir(-1.0, 1.0);
    double worst_s = 0.0;
    for (int i = 0; i < 1000; ++i) {
        double kv[3], k2 = 0;
        do {
            k2 = 0;
            for (double& v : kv) v = udir(rng);
            for (double v : kv) k2 += v * v;
        } while (k2 < 1e-4);
        double scale = ulen(rng) / std::sqrt(k2);
        for (double& v : kv) v *= scale;
        k2 = kv[0] * kv[0] + kv[1] * kv[1] + kv[2] * kv[2];
        double t = 0.25 * k2 * sigma * sigma;
        double g = (1.0 + t) * std::exp(-t);
        std::complex<double> sym[9];
        mollified_fourier_tensor(sk, kv, false, sym);
        double ref[9], got[9];
        for (int j = 0; j < 3; ++j)
            for (int l = 0; l < 3; ++l) {
                ref[j * 3 + l] = g * ((j == l ? k2 : 0.0) - kv[j] * kv[l]) / (k2 * k2);
                got[j * 3 + l] = sym[j * 3 + l].real();
            }
        worst_s = std::max(worst_s, rel_err(got, ref, 9));
    }
    if (worst_s > 1e-13) ok = false;

    appendf(d, "screen %.1e, biharmonic residual %.1e, symbol %.1e (all vs 1e-13)",
            worst_g, worst_b, worst_s);
    return ok;
}

/* =====================================================================
 * Criterion 3: prolate residuals decay past the window support.  For every
 * tuned prolate bandlimit, the residual radial structure functions at
 * r in [1,3] must stay below 10x the window truncation error |phi(1)/phi(0)|.
 * The probe enlarges the truncation radius to R = 4.2 + sqrt(d) so that the
 * quadrature sees the untruncated mollified kernel on all of [0,3] (with
 * the production R = 1 + sqrt(d), truncation itself would dominate beyond
 * r = R - support and mask the residual decay being measured).
 * ===================================================================== */
bool crit_prolate_residual_decay(std::string& d) {
    struct Rows {
        KernelType k;
        std::array<int, 4> qs;
    };
    const Rows rows[] = {
        {KernelType::stokeslet, {10, 17, 25, 31}},
        {KernelType::stresslet, {9, 17, 25, 32}},
        {KernelType::rotlet, {7, 14, 20, 27}},
    };
    const std::vector<double> radii = {1.0, 1.1, 1.3, 1.7, 2.2, 3.0};
    bool ok = true;
    std::string worst_at;
    for (int dim : {2, 3}) {
        double R = 4.2 + std::sqrt((double)dim);
        for (const Rows& row : rows) {
            for (int q : row.qs) {
                WindowFunction w = build_prolate(q * kPi / 3.0);
                double bound = 10.0 * w.trunc_error;
                auto mv = numeric_mollified_structural(row.k, dim, w, R, 1e-12, radii);
                double row_worst = 0.0;
                double row_r = 0.0;
                for (size_t i = 0; i < radii.size(); ++i) {
                    double r = radii[i];
                    double fd = 0.0, fo = 0.0;
                    if (row.k == KernelType::stokeslet) {
                        fd = (dim == 3 ? 1.0 : -2.0 * r * std::log(r)) - mv[i][0];
                        fo = (dim == 3 ? 1.0 : 2.0 * r) - mv[i][1];
                    } else if (row.k == KernelType::stresslet) {
                        fd = -mv[i][0];
                        fo = (dim == 3 ? 1.0 : 4.0 * r / 3.0) - mv[i][1];
                    } else {
                        fo = 1.0 - mv[i][1];
                    }
                    double worst_f = std::max(std::fabs(fd), std::fabs(fo));
                    if (worst_f > row_worst) {
                        row_worst = worst_f;
                        row_r = r;
                    }
                }
                if (row_worst > bound) {
                    ok = false;
                    appendf(worst_at, "%s%s %dD q=%d r=%.1f at %.0fx", worst_at.empty() ? "" : ", ",
                            kname(row.k), dim, q, row_r, row_worst / bound);
                }
            }
        }
    }
    if (ok) appendf(d, "all 24 rows within 10x trunc_error on [1,3]");
    else appendf(d, "over bound: %s", worst_at.c_str());
    return ok;
}

/* =====================================================================
 * Criterion 4: 3D free-space accuracy at the tuned prolate parameters.
 * N = 5000 uniform points, every kernel, requested tolerances 1e-3/1e-6/1e-9
 * must be met exactly; 1e-12 must reach 5e-12 (conditioning floor).
 * ===================================================================== */
bool crit_free_space_3d(std::string& d) {
    bool ok = true;
    double worst_ratio = 0.0;
    std::string worst_at;
    for (KernelType k : kAllKernels) {
        ParticleSystem sys = make_system(k, PointDistribution::uniform_cube, 5000, 3, 424242);
        std::vector<double> ref = direct_sum(k, sys);
        for (double eps : {1e-3, 1e-6, 1e-9, 1e-12}) {
            double bound = eps == 1e-12 ? 5e-12 : eps;
            std::vector<double> u =
                evaluate(k, sys, eps, WindowKind::prolate, EwaldMode::free_space);
            double e = rel_l2(u, ref);
            if (e > bound) ok = false;
            if (e / bound > worst_ratio) {
                worst_ratio = e / bound;
                worst_at.clear();
                appendf(worst_at, "%s eps=%.0e rel=%.2e", kname(k), eps, e);
            }
        }
    }
    appendf(d, "N=5000, all kernels x {1e-3..1e-12}; worst margin %s (ratio %.2f)",
            worst_at.c_str(), worst_ratio);
    return ok;
}

/* =====================================================================
 * Criterion 5: grid economy of the prolate window.  At every tuned accuracy
 * the prolate level-grid size must satisfy N1 <= 0.7 * N1(gaussian).
 * ===================================================================== */
bool crit_grid_economy(std::string& d) {
    bool ok = true;
    std::string fails;
    for (KernelType k : kAllKernels) {
        for (double eps : {1e-3, 1e-6, 1e-9, 1e-12}) {
            DmkPlan pp = select_parameters(k, eps, WindowKind::prolate, 3);
            DmkPlan pg = select_parameters(k, eps, WindowKind::gaussian, 3);
            if (pp.N1 > 0.7 * pg.N1) {
                ok = false;
                appendf(fails, "%s%s@%.0e %d>0.7*%d", fails.empty() ? "" : ", ", kname(k),
                        eps, pp.N1, pg.N1);
            }
        }
    }
    if (ok) appendf(d, "N1(prolate) <= 0.7 N1(gaussian) on all 12 tuned rows");
    else appendf(d, "violated: %s", fails.c_str());
    return ok;
}

/* =====================================================================
 * Criterion 6: cube-periodic accuracy.  N = 1000 uniform 3D points at
 * eps = 1e-6 (prolate): every kernel within 2 eps of the single-level
 * Ewald-style reference (stresslet including the zero-mean-flow term), and
 * invariance under integer lattice shifts of the sources to 1e-10.
 * ===================================================================== */
bool crit_periodic(std::string& d) {
    bool ok = true;
    double worst = 0.0, worst_shift = 0.0;
    for (KernelType k : kAllKernels) {
        ParticleSystem sys = make_system(k, PointDistribution::uniform_cube, 1000, 3, 777001);
        DmkPlan plan = select_parameters(k, 1e-6, WindowKind::prolate, 3);
        SplitKernel sk = build_split_kernel(k, 3, build_prolate(plan.c), plan.table_tol);
        std::vector<double> ref = ewald_reference(sk, sys, EwaldMode::periodic);
        std::vector<double> u = evaluate(k, sys, 1e-6, WindowKind::prolate, EwaldMode::periodic);
        double e = rel_l2(u, ref);
        worst = std::max(worst, e);
        if (e > 2e-6) ok = false;

        ParticleSystem shifted = sys;
        const double sh[3] = {1.0, -2.0, 3.0};
        for (size_t i = 0; i < shifted.sources.size(); i += 3)
            for (int c = 0; c < 3; ++c) shifted.sources[i + c] += sh[c];
        shifted = wrap_into_box(shifted);
        std::vector<double> u2 =
            evaluate(k, shifted, 1e-6, WindowKind::prolate, EwaldMode::periodic);
        double es = rel_l2(u2, u);
        worst_shift = std::max(worst_shift, es);
        if (es > 1e-10) ok = false;
    }
    appendf(d, "worst rel vs reference %.2e (tol 2e-6), lattice-shift drift %.1e (tol 1e-10)",
            worst, worst_shift);
    return ok;
}

/* =====================================================================
 * Criterion 7: adaptivity.  A tight corner cluster (radius 2^-5 ball) of
 * N = 2e4 points, 3D Stokeslet at eps = 1e-6, must stay within eps of the
 * direct sum and cost at most 5x the uniform distribution of the same size.
 * ===================================================================== */
bool crit_corner_cluster(std::string& d) {
    KernelType k = KernelType::stokeslet;
    ParticleSystem uni = make_system(k, PointDistribution::uniform_cube, 20000, 3, 909001);
    ParticleSystem clu = make_system(k, PointDistribution::corner_cluster, 20000, 3, 909002);

    auto t0 = std::chrono::steady_clock::now();
    evaluate(k, uni, 1e-6, WindowKind::prolate, EwaldMode::free_space);
    double t_uni = seconds_since(t0);

    t0 = std::chrono::steady_clock::now();
    std::vector<double> u = evaluate(k, clu, 1e-6, WindowKind::prolate, EwaldMode::free_space);
    double t_clu = seconds_since(t0);

    double e = rel_l2(u, direct_sum(k, clu));
    bool ok = e <= 1e-6 && t_clu <= 5.0 * t_uni;
    appendf(d, "cluster rel %.2e (tol 1e-6); time %.1fs vs uniform %.1fs (ratio %.2f, cap 5)",
            e, t_clu, t_uni, t_clu / t_uni);
    return ok;
}

/* =====================================================================
 * Criterion 8: near-linear scaling.  3D Stokeslet at eps = 1e-3 on perturbed
 * spheres of N = 1e5 / 2e5 / 4e5 points: each doubling of N must scale the
 * wall time by a factor in [1.5, 2.7].
 * ===================================================================== */
bool crit_scaling(std::string& d) {
    KernelType k = KernelType::stokeslet;
    const int ns[3] = {100000, 200000, 400000};
    double times[3];
    for (int i = 0; i < 3; ++i) {
        ParticleSystem sys =
            make_system(k, PointDistribution::perturbed_sphere, ns[i], 3, 515000 + i);
        auto t0 = std::chrono::steady_clock::now();
        evaluate(k, sys, 1e-3, WindowKind::prolate, EwaldMode::free_space);
        times[i] = seconds_since(t0);
    }
    double r1 = times[1] / times[0], r2 = times[2] / times[1];
    bool ok = r1 >= 1.5 && r1 <= 2.7 && r2 >= 1.5 && r2 <= 2.7;
    appendf(d, "times %.1f/%.1f/%.1fs, doubling ratios %.2f, %.2f (window [1.5, 2.7])",
            times[0], times[1], times[2], r1, r2);
    return ok;
}

/* =====================================================================
 * Criterion 9: cross-validation of the table pipelines plus 2D end-to-end
 * accuracy.  (a) 3D residual tables from the Fourier-quadrature pipeline
 * agree with the closed-form build to 1e-12 (gated on the Gaussian window,
 * whose transform pair is exact; the clamped prolate band is reported).
 * (b) The 2D Stokeslet far-field correction constant is (1 - log R)/(4 pi)
 * and the quadrature self coefficient is independent of the truncation
 * radius R.  (c) 2D free-space sums at N = 2000 uniform points meet the
 * requested tolerance for every kernel at eps in {1e-3, 1e-6, 1e-9}.
 * ===================================================================== */
bool crit_tables_and_2d(std::string& d) {
    bool ok = true;

    /* (a) numeric pipeline vs closed-form tables, 3D */
    double R3 = 1.0 + std::sqrt(3.0);
    double worst_gauss = 0.0, worst_prolate = 0.0;
    for (WindowKind wk : {WindowKind::gaussian, WindowKind::prolate}) {
        WindowFunction w = wk == WindowKind::gaussian
                               ? build_gaussian(std::sqrt(6.0 / (50.0 * kPi)))
                               : build_prolate(31.0 * kPi / 3.0);
        double& worst = wk == WindowKind::gaussian ? worst_gauss : worst_prolate;
        for (KernelType k : kAllKernels) {
            SplitKernel sk = build_split_kernel(k, 3, w, 1e-12);
            ResidualTables rt = numeric_residual_pipeline(k, 3, w, R3, 1e-12);
            for (int i = 0; i < 50; ++i) {
                double s = i * 0.02;
                if (k == KernelType::stokeslet) {
                    worst = std::max(worst, std::fabs(rt.s_diag.eval(s) -
                                                      stokeslet_residual_diag(sk, s)));
                    worst = std::max(worst, std::fabs(rt.s_offd.eval(s) -
                                                      stokeslet_residual_offd(sk, s)));
                } else if (k == KernelType::stresslet) {
                    worst = std::max(worst, std::fabs(rt.t_diag.eval(s) -
                                                      stresslet_residual_diag(sk, s)));
                    worst = std::max(worst, std::fabs(rt.t_offd.eval(s) -
                                                      stresslet_residual_offd(sk, s)));
                } else {
                    worst = std::max(worst, std::fabs(rt.w_offd.eval(s) -
                                                      rotlet_residual_offd(sk, s)));
                }
            }
            if (k == KernelType::stokeslet)
                worst = std::max(worst, std::fabs(rt.stokeslet_self - sk.self_const));
        }
    }
    if (worst_gauss > 1e-12) ok = false;

    /* (b) 2D Stokeslet correction-constant structure.  If the explicit
       (1 - log R)/(4 pi) compensation were wrong, doubling R would shift the
       quadrature self coefficient by (log 2)/(8 pi) ~ 2.8e-2; the 1e-10 pin
       sits eight orders below that and just above the ~1e-11 panel-error
       accumulation of the doubled-R quadrature. */
    WindowFunction w2 = build_prolate(25.0 * kPi / 3.0);
    SplitKernel sk2 = build_split_kernel(KernelType::stokeslet, 2, w2, 1e-9);
    double R2 = sk2.window_radius_R;
    double corr_dev = std::fabs(sk2.corr_const - (1.0 - std::log(R2)) / (4.0 * kPi));
    ResidualTables rtA = numeric_residual_pipeline(KernelType::stokeslet, 2, w2, R2, 1e-9);
    ResidualTables rtB = numeric_residual_pipeline(KernelType::stokeslet, 2, w2, 2.0 * R2, 1e-9);
    double self_dev = std::fabs(rtA.stokeslet_self - rtB.stokeslet_self);
    if (corr_dev > 1e-15 || self_dev > 1e-10) ok = false;

    /* (c) 2D free-space accuracy at the tuned prolate parameters */
    std::string acc2d;
    for (KernelType k : kAllKernels) {
        ParticleSystem sys = make_system(k, PointDistribution::uniform_cube, 2000, 2, 606001);
        std::vector<double> ref = direct_sum(k, sys);
        for (double eps : {1e-3, 1e-6, 1e-9}) {
            std::vector<double> u =
                evaluate(k, sys, eps, WindowKind::prolate, EwaldMode::free_space);
            double e = rel_l2(u, ref);
            if (e > eps) {
                ok = false;
                appendf(acc2d, "; %s@%.0e rel %.2e > eps", kname(k), eps, e);
            }
        }
    }
    appendf(d,
            "3D tables: gaussian %.1e (tol 1e-12), prolate %.1e (clamped band, reported); "
            "2D corr dev %.1e, self R-drift %.1e%s",
            worst_gauss, worst_prolate, corr_dev, self_dev,
            acc2d.empty() ? "; 2D sums all within eps" : acc2d.c_str());
    return ok;
}

/* =====================================================================
 * Criterion 10: mollifier normalization.  gamma_hat(0) = 1 exactly, zero
 * curvature at k = 0 (finite differences, 1e-8), and vanishing discrete
 * mass defect and second moment (radial quadrature, 1e-10) in d = 2 and 3,
 * for a prolate (c = 12 pi) and a Gaussian window.
 * ===================================================================== */
bool crit_moments(std::string& d) {
    bool ok = true;
    double worst_mass = 0.0, worst_mom2 = 0.0, worst_curv = 0.0;
    for (WindowKind wk : {WindowKind::prolate, WindowKind::gaussian}) {
        WindowFunction w =
            wk == WindowKind::prolate ? build_prolate(12.0 * kPi) : build_gaussian(0.25);
        Mollifier m{w};
        if (mollifier_fourier(m, 0.0) != 1.0) ok = false;
        double h = 1e-3;
        double curv =
            (mollifier_fourier(m, h) - 2.0 * mollifier_fourier(m, 0.0) + mollifier_fourier(m, -h)) /
            (h * h);
        worst_curv = std::max(worst_curv, std::fabs(curv));
        double rmax = wk == WindowKind::prolate ? 1.0 : 2.5;
        for (int dim : {2, 3}) {
            auto sphere = [&](double r) { return dim == 2 ? 2.0 * kPi * r : 4.0 * kPi * r * r; };
            double mass = quad_panels(
                [&](double r) { return mollifier_radial(m, r, dim) * sphere(r); }, 0.0, rmax, 32);
            double mom2 = quad_panels(
                [&](double r) { return mollifier_radial(m, r, dim) * sphere(r) * r * r; }, 0.0,
                rmax, 32);
            worst_mass = std::max(worst_mass, std::fabs(mass - 1.0));
            worst_mom2 = std::max(worst_mom2, std::fabs(mom2));
        }
    }
    if (worst_curv > 1e-8 || worst_mass > 1e-10 || worst_mom2 > 1e-10) ok = false;
    appendf(d, "curvature %.1e (tol 1e-8), mass defect %.1e, 2nd moment %.1e (tol 1e-10)",
            worst_curv, worst_mass, worst_mom2);
    return ok;
}

}  // namespace

int main() {
    struct Criterion {
        const char* name;
        double budget;  /* seconds; 0 = unconstrained */
        bool (*fn)(std::string&);
    };
    const Criterion criteria[] = {
        {"kernel split identity", 60.0, crit_split_identity},
        {"gaussian closed forms", 0.0, crit_gaussian_closed_forms},
        {"prolate residual decay", 0.0, crit_prolate_residual_decay},
        {"3D free-space accuracy", 300.0, crit_free_space_3d},
        {"prolate grid economy", 0.0, crit_grid_economy},
        {"periodic accuracy + lattice shifts", 120.0, crit_periodic},
        {"adaptive corner cluster", 120.0, crit_corner_cluster},
        {"near-linear scaling", 600.0, crit_scaling},
        {"table cross-checks + 2D accuracy", 120.0, crit_tables_and_2d},
        {"mollifier moments", 0.0, crit_moments},
    };

    int failures = 0;
    for (size_t i = 0; i < std::size(criteria); ++i) {
        const Criterion& c = criteria[i];
        auto t0 = std::chrono::steady_clock::now();
        std::string detail;
        bool ok = false;
        try {
            ok = c.fn(detail);
        } catch (const std::exception& ex) {
            detail.clear();
            appendf(detail, "exception: %s", ex.what());
        }
        double secs = seconds_since(t0);
        if (c.budget > 0 && secs > c.budget) {
            ok = false;
            appendf(detail, "; EXCEEDED %.0fs budget", c.budget);
        }
        failures += ok ? 0 : 1;
        std::printf("[%s] %2zu. %-36s %s (%.1fs)\n", ok ? "PASS" : "FAIL", i + 1, c.name,
                    detail.c_str(), secs);
        std::fflush(stdout);
    }
    std::printf("acceptance: %d of %zu criteria passed\n",
                (int)std::size(criteria) - failures, std::size(criteria));
    return failures;
}
