#include "stokesdmk/oracle.hpp"

#include <array>
#include <atomic>
#include <cmath>
#include <stdexcept>

/*
 * Direct reference sums.  Everything here is O(N*M) by design; per-target
 * accumulation is compensated so the references remain meaningful at 1e-12
 * relative tolerances even for large N.
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

/* u += K(x) . s for the exact free-space kernel; x = target - source. */
void accumulate_exact(KernelType kernel, int dim, const double* x, double r2,
                      const double* s, Kahan* u) {
  if (dim == 3) {
    const double r = std::sqrt(r2);
    switch (kernel) {
      case KernelType::stokeslet: {
        const double xf = x[0] * s[0] + x[1] * s[1] + x[2] * s[2];
        const double c1 = 1.0 / (8.0 * kPi * r);
        const double c2 = xf / (8.0 * kPi * r2 * r);
        for (int j = 0; j < 3; ++j) u[j].add(c1 * s[j] + c2 * x[j]);
        return;
      }
      case KernelType::stresslet: {
        const double* f = s;
        const double* n = s + 3;
        const double xf = x[0] * f[0] + x[1] * f[1] + x[2] * f[2];
        const double xn = x[0] * n[0] + x[1] * n[1] + x[2] * n[2];
        const double c = -3.0 / (4.0 * kPi) * xf * xn / (r2 * r2 * r);
        for (int j = 0; j < 3; ++j) u[j].add(c * x[j]);
        return;
      }
      case KernelType::rotlet: {
        const double c = 1.0 / (8.0 * kPi * r2 * r);
        u[0].add(c * (s[1] * x[2] - s[2] * x[1]));
        u[1].add(c * (s[2] * x[0] - s[0] * x[2]));
        u[2].add(c * (s[0] * x[1] - s[1] * x[0]));
        return;
      }
      default:
        break;
    }
  } else {
    switch (kernel) {
      case KernelType::stokeslet: {
        const double xf = x[0] * s[0] + x[1] * s[1];
        const double c1 = -0.5 * std::log(r2) / (4.0 * kPi);
        const double c2 = xf / (4.0 * kPi * r2);
        for (int j = 0; j < 2; ++j) u[j].add(c1 * s[j] + c2 * x[j]);
        return;
      }
      case KernelType::stresslet: {
        const double* f = s;
        const double* n = s + 2;
        const double xf = x[0] * f[0] + x[1] * f[1];
        const double xn = x[0] * n[0] + x[1] * n[1];
        const double c = -xf * xn / (kPi * r2 * r2);
        for (int j = 0; j < 2; ++j) u[j].add(c * x[j]);
        return;
      }
      case KernelType::rotlet: {
        const double c = s[0] / (4.0 * kPi * r2);
        u[0].add(c * x[1]);
        u[1].add(-c * x[0]);
        return;
      }
      default:
        break;
    }
  }
  throw std::invalid_argument("direct_sum: unsupported kernel");
}

void check_vector_kernel(KernelType kernel) {
  if (kernel != KernelType::stokeslet && kernel != KernelType::stresslet &&
      kernel != KernelType::rotlet)
    throw std::invalid_argument(
        "particle sums support the Stokeslet, stresslet, and rotlet kernels");
}

}  // namespace

void validate_system(KernelType kernel, const ParticleSystem& sys,
                     bool periodic) {
  check_vector_kernel(kernel);
  const int d = sys.dim;
  if (d != 2 && d != 3)
    throw std::invalid_argument("ParticleSystem: dim must be 2 or 3");
  if (sys.sources.empty() || sys.sources.size() % d != 0)
    throw std::invalid_argument("ParticleSystem: bad source array length");
  if (!sys.targets.empty() && sys.targets.size() % d != 0)
    throw std::invalid_argument("ParticleSystem: bad target array length");
  const std::size_t n = sys.sources.size() / d;
  const std::size_t nc = strength_components(kernel, d);
  if (sys.strengths.size() != n * nc)
    throw std::invalid_argument("ParticleSystem: bad strength array length");
  for (double v : sys.strengths)
    if (!std::isfinite(v))
      throw std::invalid_argument("ParticleSystem: non-finite strength");
  auto check_coords = [&](const std::vector<double>& pts) {
    for (double v : pts) {
      if (!std::isfinite(v))
        throw std::invalid_argument("ParticleSystem: non-finite coordinate");
      if (!periodic && (v < -0.5 || v > 0.5))
        throw std::invalid_argument(
            "ParticleSystem: coordinate outside the unit box");
    }
  };
  check_coords(sys.sources);
  check_coords(sys.targets);
}

ParticleSystem wrap_into_box(const ParticleSystem& sys) {
  ParticleSystem w = sys;
  auto wrap = [](std::vector<double>& pts) {
    for (double& v : pts) v -= std::floor(v + 0.5);
  };
  wrap(w.sources);
  wrap(w.targets);
  return w;
}

std::vector<double> direct_sum(KernelType kernel, const ParticleSystem& sys) {
  validate_system(kernel, sys, false);
  const int d = sys.dim;
  const int n = sys.num_sources();
  const int m = sys.num_targets();
  const int nc = strength_components(kernel, d);
  const bool alias = sys.targets_alias_sources();
  std::vector<double> out(static_cast<std::size_t>(m) * d, 0.0);
  std::atomic<bool> singular{false};
#pragma omp parallel for schedule(static)
  for (int b = 0; b < m; ++b) {
    const double* xb = sys.target(b);
    Kahan acc[3];
    double x[3];
    for (int a = 0; a < n; ++a) {
      if (alias && a == b) continue;
      const double* xa = sys.source(a);
      double r2 = 0.0;
      for (int i = 0; i < d; ++i) {
        x[i] = xb[i] - xa[i];
        r2 += x[i] * x[i];
      }
      if (r2 == 0.0) {
        singular.store(true, std::memory_order_relaxed);
        continue;
      }
      accumulate_exact(kernel, d, x, r2,
                       sys.strengths.data() + static_cast<std::size_t>(a) * nc,
                       acc);
    }
    for (int j = 0; j < d; ++j)
      out[static_cast<std::size_t>(b) * d + j] = acc[j].sum;
  }
  if (singular.load())
    throw std::domain_error("direct_sum: coincident points");
  return out;
}

std::vector<double> direct_residual_sum(const SplitKernel& sk,
                                        const ParticleSystem& sys,
                                        double cutoff, bool periodic) {
  if (!(cutoff > 0.0))
    throw std::invalid_argument("direct_residual_sum: cutoff must be positive");
  if (periodic && cutoff > 1.0)
    throw std::invalid_argument(
        "direct_residual_sum: periodic image sums require cutoff <= 1");
  if (sys.dim != sk.dim)
    throw std::invalid_argument("direct_residual_sum: dimension mismatch");
  validate_system(sk.kernel, sys, periodic);
  const ParticleSystem w = periodic ? wrap_into_box(sys) : sys;

  const int d = w.dim;
  const int n = w.num_sources();
  const int m = w.num_targets();
  const int nc = strength_components(sk.kernel, d);
  const bool alias = w.targets_alias_sources();
  const double sup2 = cutoff * sk.support * cutoff * sk.support;

  /* image shifts; {0}^d when free-space */
  std::vector<std::array<double, 3>> shifts;
  if (periodic) {
    const int lo = -1, hi = 1;
    for (int i2 = (d == 3 ? lo : 0); i2 <= (d == 3 ? hi : 0); ++i2)
      for (int i1 = lo; i1 <= hi; ++i1)
        for (int i0 = lo; i0 <= hi; ++i0)
          shifts.push_back({double(i0), double(i1), double(i2)});
  } else {
    shifts.push_back({0.0, 0.0, 0.0});
  }

  std::vector<double> out(static_cast<std::size_t>(m) * d, 0.0);
  std::atomic<bool> singular{false};
#pragma omp parallel for schedule(static)
  for (int b = 0; b < m; ++b) {
    const double* xb = w.target(b);
    Kahan acc[3];
    double x[3];
    for (int a = 0; a < n; ++a) {
      const double* xa = w.source(a);
      const double* str =
          w.strengths.data() + static_cast<std::size_t>(a) * nc;
      for (const auto& p : shifts) {
        bool zero_shift = (p[0] == 0.0 && p[1] == 0.0 && (d == 2 || p[2] == 0.0));
        if (alias && a == b && zero_shift) continue;
        double r2 = 0.0;
        for (int i = 0; i < d; ++i) {
          x[i] = xb[i] - xa[i] - p[i];
          r2 += x[i] * x[i];
        }
        if (r2 == 0.0) {
          singular.store(true, std::memory_order_relaxed);
          continue;
        }
        if (r2 >= sup2) continue;
        double tmp[3] = {0.0, 0.0, 0.0};
        residual_apply(sk, x, cutoff, str, tmp);
        for (int j = 0; j < d; ++j) acc[j].add(tmp[j]);
      }
    }
    for (int j = 0; j < d; ++j)
      out[static_cast<std::size_t>(b) * d + j] = acc[j].sum;
  }
  if (singular.load())
    throw std::domain_error("direct_residual_sum: coincident points");
  return out;
}

std::vector<double> periodic_zero_mode(KernelType kernel,
                                       const ParticleSystem& sys) {
  validate_system(kernel, sys, true);
  const ParticleSystem w = wrap_into_box(sys);
  const int d = w.dim;
  const int m = w.num_targets();
  std::vector<double> out(static_cast<std::size_t>(m) * d, 0.0);
  if (kernel != KernelType::stresslet) return out;

  /* u0(x_b) = -sum_a (x_b - x_a)(f_a . n_a) = -W x_b + sum_a x_a w_a */
  const int n = w.num_sources();
  Kahan wt, mom[3];
  for (int a = 0; a < n; ++a) {
    const double* s = w.strengths.data() + static_cast<std::size_t>(a) * 2 * d;
    double fn = 0.0;
    for (int i = 0; i < d; ++i) fn += s[i] * s[d + i];
    wt.add(fn);
    for (int i = 0; i < d; ++i) mom[i].add(w.source(a)[i] * fn);
  }
  for (int b = 0; b < m; ++b)
    for (int j = 0; j < d; ++j)
      out[static_cast<std::size_t>(b) * d + j] =
          mom[j].sum - wt.sum * w.target(b)[j];
  return out;
}

}  // namespace stokesdmk
