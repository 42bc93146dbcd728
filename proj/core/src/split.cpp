#include "stokesdmk/split.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "stokesdmk/detail/legendre.hpp"

namespace stokesdmk {

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;

/* residual support at unit scale: prolate windows vanish beyond r = 1
 * exactly; the gaussian tail beyond 1.05 sits below the table tolerance
 * for every parameter row */
double window_support(const WindowFunction& w) {
    return w.kind == WindowKind::prolate ? 1.0 : 1.05;
}

/* int_r^inf t phi(t) dt */
double phi_tail_moment(const WindowFunction& w, double r) {
    if (w.kind == WindowKind::gaussian) {
        double s = r / w.sigma;
        return w.sigma * std::exp(-s * s) / (2.0 * std::sqrt(kPi));
    }
    if (r >= 1.0) return 0.0;
    /* t * phi(t) is a polynomial of degree <= 2N+1; 64 nodes integrate it
     * exactly for every bandlimit used here */
    static thread_local std::vector<double> gx, gw;
    if (gx.empty()) detail::gauss_legendre(64, gx, gw);
    double a = std::max(r, 0.0), mid = 0.5 * (a + 1.0), half = 0.5 * (1.0 - a);
    double sum = 0.0;
    for (size_t i = 0; i < gx.size(); ++i) {
        double t = mid + half * gx[i];
        sum += gw[i] * t * window_eval(w, t);
    }
    return half * sum;
}

}  // namespace

int strength_components(KernelType kernel, int dim) {
    switch (kernel) {
        case KernelType::stokeslet: return dim;
        case KernelType::stresslet: return 2 * dim;
        case KernelType::rotlet: return dim == 3 ? 3 : 1;
        case KernelType::biharmonic:
        case KernelType::harmonic: return 1;
    }
    return 0;
}

int field_components(KernelType kernel, int dim) {
    switch (kernel) {
        case KernelType::stokeslet:
        case KernelType::stresslet:
        case KernelType::rotlet: return dim;
        case KernelType::biharmonic:
        case KernelType::harmonic: return 1;
    }
    return 0;
}

double mollifier_fourier(const Mollifier& m, double k) {
    k = std::fabs(k);
    if (m.window.kind == WindowKind::prolate && k >= m.window.c) return 0.0;
    return window_fourier(m.window, k) - 0.5 * k * window_fourier_deriv(m.window, k, 1);
}

std::array<double, 5> mollifier_fourier_taylor(const Mollifier& m) {
    std::array<double, 5> b = window_fourier_taylor(m.window);
    /* gamma_hat = sum_j (1-j) b_{2j} k^{2j} */
    return {b[0], 0.0, -b[2], -2.0 * b[3], -3.0 * b[4]};
}

double mollifier_screen(const Mollifier& m, double x) {
    x = std::fabs(x);
    if (m.window.kind == WindowKind::prolate && x >= 1.0) return 0.0;
    return 1.5 * window_eval(m.window, x) + 0.5 * x * window_deriv(m.window, x);
}

double mollifier_radial(const Mollifier& m, double r, int dim) {
    if (dim != 2 && dim != 3) throw std::invalid_argument("mollifier_radial: dim must be 2 or 3");
    r = std::fabs(r);
    const WindowFunction& w = m.window;
    double K = w.kind == WindowKind::prolate ? w.c : 2.0 * std::sqrt(45.0) / w.sigma;
    int panels = std::max(8, (int)std::ceil(K * (r + 1.0) / (2.0 * kPi)) + 4);
    static thread_local std::vector<double> gx, gw;
    if (gx.empty()) detail::gauss_legendre(32, gx, gw);
    double sum = 0.0;
    double hk = K / panels;
    for (int pnl = 0; pnl < panels; ++pnl) {
        double mid = (pnl + 0.5) * hk, half = 0.5 * hk;
        for (size_t i = 0; i < gx.size(); ++i) {
            double k = mid + half * gx[i];
            double g = mollifier_fourier(m, k);
            double u = k * r;
            double F;
            if (dim == 2) {
                F = std::cyl_bessel_j(0, u);
            } else {
                F = u < 1e-8 ? 1.0 - u * u / 6.0 : std::sin(u) / u;
            }
            sum += gw[i] * half * F * g * std::pow(k, dim - 1);
        }
    }
    return sum / (2.0 * std::pow(kPi, dim - 1));
}

double self_interaction(const SplitKernel& sk) { return sk.self_const; }

double self_interaction_scaled(const SplitKernel& sk, double nu) {
    switch (sk.kernel) {
        case KernelType::stresslet:
        case KernelType::rotlet: return 0.0;
        case KernelType::stokeslet:
            if (sk.dim == 2) return sk.self_const + std::log(nu) / (4.0 * kPi);
            return sk.self_const / nu;
        case KernelType::harmonic: return sk.self_const / nu;
        case KernelType::biharmonic: return sk.self_const * nu;
    }
    return 0.0;
}

double biharmonic_residual(const SplitKernel& sk, double r) {
    if (sk.kernel != KernelType::biharmonic || sk.dim != 3)
        throw std::domain_error("biharmonic_residual: requires the 3D biharmonic kernel");
    r = std::fabs(r);
    if (r >= sk.support) return 0.0;
    return sk.b_res.eval(r);
}

std::array<double, 3> biharmonic_residual_derivs(const SplitKernel& sk, double r) {
    if (sk.kernel != KernelType::biharmonic || sk.dim != 3)
        throw std::domain_error("biharmonic_residual_derivs: requires the 3D biharmonic kernel");
    r = std::fabs(r);
    const WindowFunction& w = sk.mollifier.window;
    if (r >= sk.support) return {0.0, 0.0, 0.0};
    double phi = window_eval(w, r);
    return {-phi_tail(w, r) / (8.0 * kPi), phi / (4.0 * kPi), window_deriv(w, r) / (4.0 * kPi)};
}

double stokeslet_residual_diag(const SplitKernel& sk, double s) {
    s = std::fabs(s);
    if (s >= sk.support) return 0.0;
    if (sk.dim == 2) {
        double exact = s > 0.0 ? -2.0 * s * std::log(s) : 0.0;
        return exact - sk.s_diag.eval(s);
    }
    return sk.s_diag.eval(s);
}

double stokeslet_residual_offd(const SplitKernel& sk, double s) {
    s = std::fabs(s);
    if (s >= sk.support) return 0.0;
    return sk.s_offd.eval(s);
}

double stresslet_residual_diag(const SplitKernel& sk, double s) {
    s = std::fabs(s);
    if (s >= sk.support) return 0.0;
    return sk.t_diag.eval(s);
}

double stresslet_residual_offd(const SplitKernel& sk, double s) {
    s = std::fabs(s);
    if (s >= sk.support) return 0.0;
    return sk.t_offd.eval(s);
}

double rotlet_residual_offd(const SplitKernel& sk, double s) {
    s = std::fabs(s);
    if (s >= sk.support) return 0.0;
    return sk.w_offd.eval(s);
}

namespace {

double norm2(const double* x, int dim) {
    double s = 0.0;
    for (int i = 0; i < dim; ++i) s += x[i] * x[i];
    return s;
}

}  // namespace

void stokeslet_residual(const SplitKernel& sk, const double* x, double* out, double nu) {
    int d = sk.dim;
    double r2 = norm2(x, d);
    if (r2 == 0.0) throw std::domain_error("stokeslet_residual: r = 0");
    for (int i = 0; i < d * d; ++i) out[i] = 0.0;
    double r = std::sqrt(r2), s = r / nu;
    if (s >= sk.support) return;
    /* 2D structural functions scale as nu * f(r/nu), 3D as f(r/nu); the
     * assembly uses the physical radius in both */
    double amp = d == 2 ? nu : 1.0;
    double fd = amp * stokeslet_residual_diag(sk, s);
    double fo = amp * stokeslet_residual_offd(sk, s);
    double c0 = 1.0 / (8.0 * kPi * r);
    for (int j = 0; j < d; ++j) {
        out[j * d + j] += fd * c0;
        for (int l = 0; l < d; ++l) out[j * d + l] += fo * c0 * x[j] * x[l] / r2;
    }
}

void stresslet_residual(const SplitKernel& sk, const double* x, double* out, double nu) {
    int d = sk.dim;
    double r2 = norm2(x, d);
    if (r2 == 0.0) throw std::domain_error("stresslet_residual: r = 0");
    for (int i = 0; i < d * d * d; ++i) out[i] = 0.0;
    double r = std::sqrt(r2), s = r / nu;
    if (s >= sk.support) return;
    double amp = d == 2 ? nu : 1.0;
    double fd = amp * stresslet_residual_diag(sk, s);
    double fo = amp * stresslet_residual_offd(sk, s);
    double cd = fd / (8.0 * kPi * r2 * r);
    double co = -3.0 * fo / (4.0 * kPi * r2 * r2 * r);
    for (int j = 0; j < d; ++j)
        for (int l = 0; l < d; ++l)
            for (int m = 0; m < d; ++m) {
                double v = co * x[j] * x[l] * x[m];
                if (j == l) v += cd * x[m];
                if (l == m) v += cd * x[j];
                if (m == j) v += cd * x[l];
                out[(j * d + l) * d + m] = v;
            }
}

void rotlet_residual(const SplitKernel& sk, const double* x, double* out, double nu) {
    int d = sk.dim;
    double r2 = norm2(x, d);
    if (r2 == 0.0) throw std::domain_error("rotlet_residual: r = 0");
    int n = d == 3 ? 9 : 2;
    for (int i = 0; i < n; ++i) out[i] = 0.0;
    double r = std::sqrt(r2), s = r / nu;
    if (s >= sk.support) return;
    double fo = rotlet_residual_offd(sk, s);
    if (d == 2) {
        double c0 = fo / (4.0 * kPi * r2);
        out[0] = c0 * x[1];
        out[1] = -c0 * x[0];
        return;
    }
    double c0 = fo / (8.0 * kPi * r2 * r);
    /* Omega_jl = c0 eps_jlm x_m */
    out[0 * 3 + 1] = c0 * x[2];
    out[1 * 3 + 0] = -c0 * x[2];
    out[1 * 3 + 2] = c0 * x[0];
    out[2 * 3 + 1] = -c0 * x[0];
    out[2 * 3 + 0] = c0 * x[1];
    out[0 * 3 + 2] = -c0 * x[1];
}

void residual_apply(const SplitKernel& sk, const double* x, double nu, const double* strength,
                    double* u) {
    int d = sk.dim;
    double r2 = norm2(x, d);
    double cut = nu * sk.support;
    if (r2 >= cut * cut || r2 == 0.0) return;
    double r = std::sqrt(r2), s = r / nu;
    switch (sk.kernel) {
        case KernelType::stokeslet: {
            double amp = d == 2 ? nu : 1.0;
            double fd = amp * stokeslet_residual_diag(sk, s);
            double fo = amp * stokeslet_residual_offd(sk, s);
            double c0 = 1.0 / (8.0 * kPi * r);
            double xf = 0.0;
            for (int i = 0; i < d; ++i) xf += x[i] * strength[i];
            double cf = fo * c0 * xf / r2;
            for (int j = 0; j < d; ++j) u[j] += fd * c0 * strength[j] + cf * x[j];
            return;
        }
        case KernelType::stresslet: {
            const double* f = strength;
            const double* nrm = strength + d;
            double amp = d == 2 ? nu : 1.0;
            double fd = amp * stresslet_residual_diag(sk, s);
            double fo = amp * stresslet_residual_offd(sk, s);
            double xf = 0.0, xn = 0.0, fn = 0.0;
            for (int i = 0; i < d; ++i) {
                xf += x[i] * f[i];
                xn += x[i] * nrm[i];
                fn += f[i] * nrm[i];
            }
            double cd = fd / (8.0 * kPi * r2 * r);
            double co = -3.0 * fo * xf * xn / (4.0 * kPi * r2 * r2 * r);
            for (int j = 0; j < d; ++j)
                u[j] += cd * (f[j] * xn + x[j] * fn + nrm[j] * xf) + co * x[j];
            return;
        }
        case KernelType::rotlet: {
            double fo = rotlet_residual_offd(sk, s);
            if (d == 2) {
                double c0 = fo * strength[0] / (4.0 * kPi * r2);
                u[0] += c0 * x[1];
                u[1] -= c0 * x[0];
                return;
            }
            double c0 = fo / (8.0 * kPi * r2 * r);
            const double* g = strength;
            u[0] += c0 * (g[1] * x[2] - g[2] * x[1]);
            u[1] += c0 * (g[2] * x[0] - g[0] * x[2]);
            u[2] += c0 * (g[0] * x[1] - g[1] * x[0]);
            return;
        }
        case KernelType::biharmonic:
            u[0] += nu * sk.b_res.eval(s) * strength[0];
            return;
        case KernelType::harmonic:
            u[0] += sk.phi.eval(s) / (4.0 * kPi * r) * strength[0];
            return;
    }
}

SplitKernel build_split_kernel(KernelType kernel, int dim, const WindowFunction& window,
                               double tol) {
    if (dim != 2 && dim != 3) throw std::invalid_argument("build_split_kernel: dim must be 2 or 3");
    if (!(tol >= 1e-14 && tol <= 1e-3))
        throw std::invalid_argument("build_split_kernel: tol must lie in [1e-14, 1e-3]");
    if (dim == 2 && (kernel == KernelType::biharmonic || kernel == KernelType::harmonic))
        throw std::invalid_argument("build_split_kernel: scalar kernels are built in 3D only");

    SplitKernel sk;
    sk.kernel = kernel;
    sk.dim = dim;
    sk.mollifier.window = window;
    sk.window_radius_R = 1.0 + std::sqrt((double)dim);
    sk.support = window_support(window);
    sk.table_tol = tol;

    const WindowFunction& w = window;
    double sup = sk.support;

    if (dim == 3) {
        /* closed forms in terms of phi and its tail integrals */
        double fit_tol = 1e-14;
        sk.phi = cheb_fit([&](double r) { return phi_tail(w, r); }, 0.0, sup, fit_tol);
        switch (kernel) {
            case KernelType::stokeslet:
                sk.s_diag = cheb_fit(
                    [&](double r) { return phi_tail(w, r) - 2.0 * r * window_eval(w, r); }, 0.0,
                    sup, fit_tol);
                sk.s_offd = cheb_fit(
                    [&](double r) { return phi_tail(w, r) + 2.0 * r * window_eval(w, r); }, 0.0,
                    sup, fit_tol);
                sk.self_const = -window_eval(w, 0.0) / (2.0 * kPi);
                sk.corr_const = 1.0 / (4.0 * kPi * sk.window_radius_R);
                break;
            case KernelType::stresslet:
                sk.t_diag = cheb_fit([&](double r) { return -2.0 * r * r * window_deriv(w, r); },
                                     0.0, sup, fit_tol);
                sk.t_offd = cheb_fit(
                    [&](double r) {
                        return phi_tail(w, r) + 2.0 * r * window_eval(w, r) -
                               (2.0 / 3.0) * r * r * window_deriv(w, r);
                    },
                    0.0, sup, fit_tol);
                break;
            case KernelType::rotlet:
                sk.w_offd = cheb_fit(
                    [&](double r) { return phi_tail(w, r) + 2.0 * r * window_eval(w, r); }, 0.0,
                    sup, fit_tol);
                break;
            case KernelType::biharmonic:
                sk.b_res = cheb_fit(
                    [&](double r) {
                        return -(r * phi_tail(w, r) - 2.0 * phi_tail_moment(w, r)) / (8.0 * kPi);
                    },
                    0.0, sup, fit_tol);
                sk.self_const = phi_tail_moment(w, 0.0) / (4.0 * kPi);
                break;
            case KernelType::harmonic:
                sk.self_const = -window_eval(w, 0.0) / (2.0 * kPi);
                break;
        }
        return sk;
    }

    /* 2D: radial functions by Fourier quadrature */
    ResidualTables rt = numeric_residual_pipeline(kernel, 2, window, sk.window_radius_R, tol);
    sk.s_diag = rt.s_diag;
    sk.s_offd = rt.s_offd;
    sk.t_diag = rt.t_diag;
    sk.t_offd = rt.t_offd;
    sk.w_offd = rt.w_offd;
    sk.support = rt.support;
    if (kernel == KernelType::stokeslet) {
        sk.self_const = rt.stokeslet_self;
        sk.corr_const = (1.0 - std::log(sk.window_radius_R)) / (4.0 * kPi);
    }
    return sk;
}

/* ---- binary export / import ---- */

namespace {

constexpr char kMagic[8] = {'S', 'D', 'M', 'K', 'S', 'P', 'L', 'T'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::ostream& os, std::uint32_t v) { os.write((const char*)&v, 4); }
void put_i32(std::ostream& os, std::int32_t v) { os.write((const char*)&v, 4); }
void put_f64(std::ostream& os, double v) { os.write((const char*)&v, 8); }

std::uint32_t get_u32(std::istream& is) {
    std::uint32_t v = 0;
    is.read((char*)&v, 4);
    return v;
}
std::int32_t get_i32(std::istream& is) {
    std::int32_t v = 0;
    is.read((char*)&v, 4);
    return v;
}
double get_f64(std::istream& is) {
    double v = 0;
    is.read((char*)&v, 8);
    return v;
}

void put_table(std::ostream& os, const ChebTable& t) {
    put_f64(os, t.lo);
    put_f64(os, t.hi);
    put_u32(os, (std::uint32_t)t.coef.size());
    for (double c : t.coef) put_f64(os, c);
}

ChebTable get_table(std::istream& is) {
    ChebTable t;
    t.lo = get_f64(is);
    t.hi = get_f64(is);
    std::uint32_t n = get_u32(is);
    t.coef.resize(n);
    for (auto& c : t.coef) c = get_f64(is);
    return t;
}

}  // namespace

void export_split_kernel(const SplitKernel& sk, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("export_split_kernel: cannot open " + path);
    os.write(kMagic, 8);
    put_u32(os, kVersion);
    put_i32(os, (std::int32_t)sk.kernel);
    put_i32(os, sk.dim);
    const WindowFunction& w = sk.mollifier.window;
    put_i32(os, (std::int32_t)w.kind);
    put_f64(os, w.c);
    put_f64(os, w.sigma);
    put_u32(os, (std::uint32_t)w.legendre_coeffs.size());
    for (double v : w.legendre_coeffs) put_f64(os, v);
    put_f64(os, w.lambda0);
    put_f64(os, w.norm_r);
    put_f64(os, w.trunc_error);
    put_f64(os, w.psi0);
    put_f64(os, w.chi0);
    put_f64(os, sk.window_radius_R);
    put_f64(os, sk.support);
    put_f64(os, sk.table_tol);
    put_f64(os, sk.self_const);
    put_f64(os, sk.corr_const);
    for (const ChebTable* t :
         {&sk.s_diag, &sk.s_offd, &sk.t_diag, &sk.t_offd, &sk.w_offd, &sk.b_res, &sk.phi})
        put_table(os, *t);
    if (!os) throw std::runtime_error("export_split_kernel: write failed for " + path);
}

SplitKernel import_split_kernel(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("import_split_kernel: cannot open " + path);
    char magic[8];
    is.read(magic, 8);
    if (!is || std::memcmp(magic, kMagic, 8) != 0)
        throw std::runtime_error("import_split_kernel: bad magic in " + path);
    std::uint32_t ver = get_u32(is);
    if (ver != kVersion) throw std::runtime_error("import_split_kernel: unsupported version");
    SplitKernel sk;
    sk.kernel = (KernelType)get_i32(is);
    sk.dim = get_i32(is);
    WindowFunction& w = sk.mollifier.window;
    w.kind = (WindowKind)get_i32(is);
    w.c = get_f64(is);
    w.sigma = get_f64(is);
    w.legendre_coeffs.resize(get_u32(is));
    for (auto& v : w.legendre_coeffs) v = get_f64(is);
    w.lambda0 = get_f64(is);
    w.norm_r = get_f64(is);
    w.trunc_error = get_f64(is);
    w.psi0 = get_f64(is);
    w.chi0 = get_f64(is);
    sk.window_radius_R = get_f64(is);
    sk.support = get_f64(is);
    sk.table_tol = get_f64(is);
    sk.self_const = get_f64(is);
    sk.corr_const = get_f64(is);
    for (ChebTable* t :
         {&sk.s_diag, &sk.s_offd, &sk.t_diag, &sk.t_offd, &sk.w_offd, &sk.b_res, &sk.phi})
        *t = get_table(is);
    if (!is) throw std::runtime_error("import_split_kernel: truncated file " + path);
    return sk;
}

}  // namespace stokesdmk
