#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <random>
#include <vector>

#include "doctest.h"
#include "stokesdmk/detail/legendre.hpp"
#include "stokesdmk/windows.hpp"

using namespace stokesdmk;

namespace {

// independent Legendre-series evaluator (Clenshaw), used as a second opinion
// against the recurrence-summation path inside the library
double clenshaw_even_legendre(const std::vector<double>& even_coeffs, double x) {
    int n = 2 * (static_cast<int>(even_coeffs.size()) - 1);
    std::vector<double> a(n + 1, 0.0);
    for (size_t j = 0; j < even_coeffs.size(); ++j) a[2 * j] = even_coeffs[j];
    double b1 = 0.0, b2 = 0.0;
    for (int k = n; k >= 1; --k) {
        double alpha = (2.0 * k + 1.0) * x / (k + 1.0);
        double beta_next = -(k + 1.0) / (k + 2.0);
        double b0 = a[k] + alpha * b1 + beta_next * b2;
        b2 = b1;
        b1 = b0;
    }
    return a[0] + x * b1 - 0.5 * b2;
}

double quad_01(const std::function<double(double)>& f, double a, double b, int n) {
    std::vector<double> x, w;
    detail::gauss_legendre(n, x, w);
    double s = 0;
    for (int i = 0; i < n; ++i)
        s += w[i] * f(0.5 * (a + b) + 0.5 * (b - a) * x[i]);
    return 0.5 * (b - a) * s;
}

}  // namespace

TEST_CASE("prolate window basic identities at c=32") {
    auto w = build_prolate(32.0);

    CHECK(w.trunc_error <= 1e-10);
    CHECK(window_fourier(w, 0.0) == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(window_fourier(w, 33.0) == 0.0);
    CHECK(window_fourier(w, -40.0) == 0.0);
    CHECK(window_eval(w, 1.2) == 0.0);

    // evenness on a grid
    for (double r : {0.1, 0.37, 0.66, 0.89, 0.999})
        CHECK(window_eval(w, r) == doctest::Approx(window_eval(w, -r)).epsilon(1e-15));

    // unit mass over the support
    double mass = quad_01([&](double t) { return window_eval(w, t); }, -1.0, 1.0, 400);
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-12));

    // lambda0 * psi(0) = int_{-1}^{1} psi
    double I0 = quad_01([&](double t) { return window_eval(w, t) / w.norm_r; }, -1.0, 1.0, 400);
    CHECK(w.lambda0 * w.psi0 == doctest::Approx(I0).epsilon(1e-13));
}

TEST_CASE("prolate eigen-relation of the Fourier integral operator") {
    auto w = build_prolate(32.0);
    std::vector<double> gx, gw;
    detail::gauss_legendre(600, gx, gw);
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
        double x = U(rng);
        double integral = 0.0;
        for (size_t i = 0; i < gx.size(); ++i) {
            double psi_t = window_eval(w, gx[i]) / w.norm_r;
            integral += gw[i] * psi_t * std::cos(w.c * gx[i] * x);
        }
        double lhs = w.lambda0 * (window_eval(w, x) / w.norm_r);
        CHECK(lhs == doctest::Approx(integral).epsilon(1e-12));
    }
}

TEST_CASE("prolate series evaluation cross-checked by Clenshaw") {
    auto w = build_prolate(32.0);
    for (double r : {0.0, 0.1, 0.25, 0.5, 0.77, 0.95, 1.0}) {
        double direct = window_eval(w, r);
        double indep = clenshaw_even_legendre(w.legendre_coeffs, r) * w.norm_r;
        CHECK(direct == doctest::Approx(indep).epsilon(1e-14));
    }
}

TEST_CASE("window Fourier transform agrees with direct quadrature") {
    auto wp = build_prolate(32.0);
    auto wg = build_gaussian(0.2);
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> U(0.0, 30.0);
    for (int i = 0; i < 200; ++i) {
        double k = U(rng);
        double qp = quad_01([&](double r) { return window_eval(wp, r) * std::cos(k * r); },
                            -1.0, 1.0, 500);
        CHECK(window_fourier(wp, k) == doctest::Approx(qp).epsilon(1e-11));
    }
    for (double k : {0.0, 1.0, 4.0, 9.0}) {
        double qg = quad_01([&](double r) { return window_eval(wg, r) * std::cos(k * r); },
                            -4.0, 4.0, 400);
        CHECK(window_fourier(wg, k) == doctest::Approx(qg).epsilon(1e-11));
    }
}

TEST_CASE("Fourier derivatives match finite differences") {
    auto w = build_prolate(32.0);
    double k = 5.0, h = 1e-5;
    double fd1 = (window_fourier(w, k + h) - window_fourier(w, k - h)) / (2 * h);
    CHECK(window_fourier_deriv(w, k, 1) == doctest::Approx(fd1).epsilon(1e-8));
    double fd2 =
        (window_fourier(w, k + h) - 2 * window_fourier(w, k) + window_fourier(w, k - h)) / (h * h);
    CHECK(window_fourier_deriv(w, k, 2) == doctest::Approx(fd2).epsilon(1e-5));
    double fd3 = (window_fourier_deriv(w, k + h, 2) - window_fourier_deriv(w, k - h, 2)) / (2 * h);
    CHECK(window_fourier_deriv(w, k, 3) == doctest::Approx(fd3).epsilon(1e-7));

    // phi_hat is even, so the odd derivative vanishes at k=0
    CHECK(std::abs(window_fourier_deriv(w, 0.0, 1)) < 1e-14);

    auto wg = build_gaussian(0.3);
    CHECK(window_fourier_deriv(wg, 0.0, 2) ==
          doctest::Approx(-0.5 * wg.sigma * wg.sigma).epsilon(1e-14));
}

TEST_CASE("window derivative matches finite differences") {
    auto wp = build_prolate(32.0);
    auto wg = build_gaussian(0.25);
    for (double r : {0.1, 0.4, 0.83}) {
        double h = 1e-6;
        double fd = (window_eval(wp, r + h) - window_eval(wp, r - h)) / (2 * h);
        CHECK(window_deriv(wp, r) == doctest::Approx(fd).epsilon(1e-7));
        fd = (window_eval(wg, r + h) - window_eval(wg, r - h)) / (2 * h);
        CHECK(window_deriv(wg, r) == doctest::Approx(fd).epsilon(1e-7));
    }
}

TEST_CASE("phi_tail") {
    auto w = build_prolate(32.0);
    CHECK(phi_tail(w, 0.0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(phi_tail(w, 1.0) == 0.0);
    CHECK(phi_tail(w, 2.5) == 0.0);

    double q = 2.0 * quad_01([&](double t) { return window_eval(w, t); }, 0.3, 1.0, 400);
    CHECK(phi_tail(w, 0.3) == doctest::Approx(q).epsilon(1e-13));

    // nonincreasing, range [0,1]
    double prev = 1.0;
    for (int i = 0; i <= 100; ++i) {
        double v = phi_tail(w, i / 100.0);
        CHECK(v <= prev + 1e-15);
        CHECK(v >= -1e-15);
        CHECK(v <= 1.0 + 1e-15);
        prev = v;
    }

    auto wg = build_gaussian(0.2);
    for (double r : {0.0, 0.13, 0.4, 1.0})
        CHECK(phi_tail(wg, r) == doctest::Approx(std::erfc(r / wg.sigma)).epsilon(1e-14));
}

TEST_CASE("gaussian closed forms") {
    auto w = build_gaussian(0.2);
    CHECK(window_eval(w, 0.0) == doctest::Approx(1.0 / (0.2 * std::sqrt(M_PI))).epsilon(1e-15));
    CHECK(window_fourier(w, 50.0) == doctest::Approx(std::exp(-25.0)).epsilon(1e-13));
    CHECK(std::abs(window_eval(w, 1.0) / window_eval(w, 0.0) - std::exp(-25.0)) < 1e-24);
    CHECK(w.trunc_error == doctest::Approx(std::exp(-25.0)).epsilon(1e-13));
    CHECK(window_fourier(w, 0.0) == 1.0);
}

TEST_CASE("Fourier Taylor coefficients near zero") {
    auto wp = build_prolate(20.0);
    auto b = window_fourier_taylor(wp);
    CHECK(b[0] == doctest::Approx(1.0).epsilon(1e-13));
    for (double k : {0.05, 0.1, 0.2}) {
        double series = 0, kp = 1;
        for (int j = 0; j <= 4; ++j) {
            series += b[j] * kp;
            kp *= k * k;
        }
        CHECK(series == doctest::Approx(window_fourier(wp, k)).epsilon(1e-12));
    }
    auto wg = build_gaussian(0.3);
    auto bg = window_fourier_taylor(wg);
    CHECK(bg[1] == doctest::Approx(-0.3 * 0.3 / 4.0).epsilon(1e-15));
    CHECK(bg[2] == doctest::Approx(0.5 * std::pow(0.3 * 0.3 / 4.0, 2)).epsilon(1e-14));
}

TEST_CASE("prolate build across the practical c range") {
    double prev_trunc = 1.0;
    for (double c : {M_PI, 10.0, 32.0, 60.0, 60.0 * M_PI}) {
        auto w = build_prolate(c);
        CHECK(window_fourier(w, 0.0) == doctest::Approx(1.0).epsilon(1e-12));
        double mass = quad_01([&](double t) { return window_eval(w, t); }, -1.0, 1.0, 800);
        CHECK(mass == doctest::Approx(1.0).epsilon(1e-11));
        if (c >= 10.0 && prev_trunc > 1e-15) {
            CHECK(w.trunc_error < prev_trunc);
            prev_trunc = w.trunc_error;
        }
    }
}

TEST_CASE("prolate coefficient cache roundtrip") {
    auto w = build_prolate(24.0);
    auto dir = (std::filesystem::temp_directory_path() / "sdmk_cache_test").string();
    REQUIRE(save_prolate_cache(w, dir));
    WindowFunction r;
    REQUIRE(load_prolate_cache(24.0, dir, r));
    REQUIRE(r.legendre_coeffs.size() == w.legendre_coeffs.size());
    for (size_t i = 0; i < r.legendre_coeffs.size(); ++i)
        CHECK(r.legendre_coeffs[i] == w.legendre_coeffs[i]);
    CHECK(r.lambda0 == doctest::Approx(w.lambda0).epsilon(1e-15));
    CHECK(r.trunc_error == doctest::Approx(w.trunc_error).epsilon(1e-12));
    CHECK(load_prolate_cache(25.0, dir, r) == false);
    std::filesystem::remove_all(dir);
}
