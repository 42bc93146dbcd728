#include "stokesdmk/windows.hpp"

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <stdexcept>

#include "stokesdmk/detail/legendre.hpp"

namespace stokesdmk {

namespace {

constexpr char kCacheMagic[8] = {'S', 'D', 'M', 'K', 'P', 'S', 'W', 'F'};
constexpr uint32_t kCacheVersion = 1;

// psi and derivatives up to `order` from the even Legendre series
void psi_eval(const WindowFunction& w, double x, int order, double* out) {
    int nmax = 2 * (static_cast<int>(w.legendre_coeffs.size()) - 1);
    std::vector<double> P(nmax + 1), D1, D2, D3;
    for (int i = 0; i <= order; ++i) out[i] = 0.0;
    if (order == 0) {
        detail::legendre_all(x, nmax, P.data());
    } else {
        D1.resize(nmax + 1);
        D2.resize(nmax + 1);
        D3.resize(nmax + 1);
        detail::legendre_all_derivs(x, nmax, P.data(), D1.data(), D2.data(), D3.data());
    }
    for (size_t j = 0; j < w.legendre_coeffs.size(); ++j) {
        double a = w.legendre_coeffs[j];
        out[0] += a * P[2 * j];
        if (order >= 1) out[1] += a * D1[2 * j];
        if (order >= 2) out[2] += a * D2[2 * j];
        if (order >= 3) out[3] += a * D3[2 * j];
    }
}

}  // namespace

WindowFunction build_gaussian(double sigma) {
    if (!(sigma > 0.0)) throw std::invalid_argument("build_gaussian: sigma must be positive");
    WindowFunction w;
    w.kind = WindowKind::gaussian;
    w.sigma = sigma;
    w.norm_r = 1.0 / (sigma * std::sqrt(M_PI));
    w.trunc_error = std::exp(-1.0 / (sigma * sigma));
    return w;
}

double window_eval(const WindowFunction& w, double r) {
    if (w.kind == WindowKind::gaussian)
        return std::exp(-r * r / (w.sigma * w.sigma)) * w.norm_r;
    if (std::abs(r) > 1.0) return 0.0;
    double psi;
    psi_eval(w, r, 0, &psi);
    return psi * w.norm_r;
}

double window_deriv(const WindowFunction& w, double r) {
    if (w.kind == WindowKind::gaussian)
        return -2.0 * r / (w.sigma * w.sigma) * window_eval(w, r);
    if (std::abs(r) > 1.0) return 0.0;
    double v[2];
    psi_eval(w, r, 1, v);
    return v[1] * w.norm_r;
}

double window_fourier(const WindowFunction& w, double k) {
    if (w.kind == WindowKind::gaussian)
        return std::exp(-k * k * w.sigma * w.sigma / 4.0);
    if (std::abs(k) > w.c) return 0.0;
    double psi;
    psi_eval(w, k / w.c, 0, &psi);
    return psi / w.psi0;
}

double window_fourier_deriv(const WindowFunction& w, double k, int order) {
    if (order < 1 || order > 3)
        throw std::invalid_argument("window_fourier_deriv: order must be 1..3");
    if (w.kind == WindowKind::gaussian) {
        double s2 = w.sigma * w.sigma;
        double g = std::exp(-k * k * s2 / 4.0);
        switch (order) {
            case 1: return -0.5 * k * s2 * g;
            case 2: return (-0.5 * s2 + 0.25 * k * k * s2 * s2) * g;
            default:
                return (0.75 * k * s2 * s2 - 0.125 * k * k * k * s2 * s2 * s2) * g;
        }
    }
    if (std::abs(k) > w.c) return 0.0;
    double v[4];
    psi_eval(w, k / w.c, order, v);
    return v[order] / (std::pow(w.c, order) * w.psi0);
}

double phi_tail(const WindowFunction& w, double r) {
    if (r < 0) r = -r;
    if (w.kind == WindowKind::gaussian) return std::erfc(r / w.sigma);
    if (r >= 1.0) return 0.0;
    int nmax = 2 * (static_cast<int>(w.legendre_coeffs.size()) - 1) + 1;
    std::vector<double> P(nmax + 1);
    detail::legendre_all(r, nmax, P.data());
    double acc = 0.0;
    for (size_t j = 0; j < w.legendre_coeffs.size(); ++j)
        acc += w.legendre_coeffs[j] * detail::legendre_int_to_one(2 * j, r, P.data());
    return 2.0 * acc * w.norm_r;
}

std::array<double, 5> window_fourier_taylor(const WindowFunction& w) {
    std::array<double, 5> b{};
    if (w.kind == WindowKind::gaussian) {
        double q = -w.sigma * w.sigma / 4.0;
        double f = 1.0;
        for (int j = 0; j <= 4; ++j) {
            b[j] = f;
            f *= q / (j + 1);
        }
        return b;
    }
    int nmax = 2 * (static_cast<int>(w.legendre_coeffs.size()) - 1);
    auto D = detail::legendre_derivs_at_zero(8, nmax);
    double fact = 1.0;  // (2j)!
    double cpow = 1.0;  // c^{2j}
    for (int j = 0; j <= 4; ++j) {
        if (j > 0) {
            fact *= (2.0 * j - 1.0) * (2.0 * j);
            cpow *= w.c * w.c;
        }
        double psi2j = 0.0;
        for (size_t m = 0; m < w.legendre_coeffs.size(); ++m)
            psi2j += w.legendre_coeffs[m] * D[2 * j][2 * m];
        b[j] = psi2j / (cpow * fact * w.psi0);
    }
    return b;
}

namespace {

std::string cache_path(double c, const std::string& dir) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "pswf_c%.6f.bin", c);
    return dir + "/" + buf;
}

}  // namespace

bool save_prolate_cache(const WindowFunction& w, const std::string& dir) {
    if (dir.empty() || w.kind != WindowKind::prolate) return false;
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    FILE* f = std::fopen(cache_path(w.c, dir).c_str(), "wb");
    if (!f) return false;
    uint32_t count = static_cast<uint32_t>(w.legendre_coeffs.size());
    bool ok = std::fwrite(kCacheMagic, 1, 8, f) == 8 &&
              std::fwrite(&kCacheVersion, sizeof kCacheVersion, 1, f) == 1 &&
              std::fwrite(&w.c, sizeof w.c, 1, f) == 1 &&
              std::fwrite(&count, sizeof count, 1, f) == 1 &&
              std::fwrite(w.legendre_coeffs.data(), sizeof(double), count, f) == count;
    std::fclose(f);
    return ok;
}

bool load_prolate_cache(double c, const std::string& dir, WindowFunction& out) {
    if (dir.empty()) return false;
    FILE* f = std::fopen(cache_path(c, dir).c_str(), "rb");
    if (!f) return false;
    char magic[8];
    uint32_t version = 0, count = 0;
    double cfile = 0;
    bool ok = std::fread(magic, 1, 8, f) == 8 && std::memcmp(magic, kCacheMagic, 8) == 0 &&
              std::fread(&version, sizeof version, 1, f) == 1 && version == kCacheVersion &&
              std::fread(&cfile, sizeof cfile, 1, f) == 1 && cfile == c &&
              std::fread(&count, sizeof count, 1, f) == 1 && count > 0 && count < (1u << 20);
    if (ok) {
        out.legendre_coeffs.resize(count);
        ok = std::fread(out.legendre_coeffs.data(), sizeof(double), count, f) == count;
    }
    std::fclose(f);
    if (!ok) return false;

    out.kind = WindowKind::prolate;
    out.c = c;
    out.sigma = 0.0;
    auto D0 = detail::legendre_derivs_at_zero(0, 2 * (count - 1));
    double psi0 = 0.0, psi1 = 0.0;
    for (uint32_t j = 0; j < count; ++j) {
        psi0 += out.legendre_coeffs[j] * D0[0][2 * j];
        psi1 += out.legendre_coeffs[j];
    }
    out.psi0 = psi0;
    double I0 = 2.0 * out.legendre_coeffs[0];
    out.norm_r = 1.0 / I0;
    out.lambda0 = I0 / psi0;
    out.trunc_error = std::abs(psi1 / psi0);
    return true;
}

}  // namespace stokesdmk
