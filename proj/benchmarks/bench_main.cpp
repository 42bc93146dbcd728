#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "stokesdmk/dmk.hpp"
#include "stokesdmk/pointgen.hpp"
#include "stokesdmk/split.hpp"
#include "stokesdmk/tree.hpp"
#include "stokesdmk/windows.hpp"

using namespace stokesdmk;

namespace {

std::vector<double> bench_strengths(KernelType kernel, int dim, int n) {
    std::mt19937_64 rng(12345);
    int sc = strength_components(kernel, dim);
    std::vector<double> s(std::size_t(n) * sc);
    for (double& v : s) v = ((rng() >> 11) * 0x1.0p-53) - 0.5;
    return s;
}

const SplitKernel& stokeslet_tables_3d() {
    static SplitKernel sk = [] {
        DmkPlan plan = select_parameters(KernelType::stokeslet, 1e-6, WindowKind::prolate, 3);
        return build_split_kernel(KernelType::stokeslet, 3, build_prolate(plan.c),
                                  plan.table_tol);
    }();
    return sk;
}

}  // namespace

/* ---- window evaluation ---- */

static void BM_WindowEvalProlate(benchmark::State& state) {
    WindowFunction w = build_prolate(17.0 * 3.14159265358979 / 3.0);
    double x = 0.0;
    for (auto _ : state) {
        x += 1e-4;
        if (x > 0.999) x = 0.0;
        benchmark::DoNotOptimize(window_eval(w, x));
    }
}
BENCHMARK(BM_WindowEvalProlate);

static void BM_WindowFourierProlate(benchmark::State& state) {
    WindowFunction w = build_prolate(17.0 * 3.14159265358979 / 3.0);
    double k = 0.0;
    for (auto _ : state) {
        k += 1e-3;
        if (k > w.c) k = 0.0;
        benchmark::DoNotOptimize(window_fourier(w, k));
    }
}
BENCHMARK(BM_WindowFourierProlate);

static void BM_WindowEvalGaussian(benchmark::State& state) {
    WindowFunction w = build_gaussian(0.33);
    double x = 0.0;
    for (auto _ : state) {
        x += 1e-4;
        if (x > 0.999) x = 0.0;
        benchmark::DoNotOptimize(window_eval(w, x));
    }
}
BENCHMARK(BM_WindowEvalGaussian);

/* ---- residual kernel for one source-target pair ---- */

static void BM_ResidualPair3D(benchmark::State& state) {
    const SplitKernel& sk = stokeslet_tables_3d();
    double x[3] = {0.21, -0.11, 0.05};
    double f[3] = {0.4, -0.3, 0.8};
    double u[3] = {0.0, 0.0, 0.0};
    for (auto _ : state) {
        residual_apply(sk, x, 0.5, f, u);
        benchmark::DoNotOptimize(u);
    }
}
BENCHMARK(BM_ResidualPair3D);

static void BM_ResidualPair2D(benchmark::State& state) {
    DmkPlan plan = select_parameters(KernelType::stresslet, 1e-6, WindowKind::prolate, 2);
    SplitKernel sk =
        build_split_kernel(KernelType::stresslet, 2, build_prolate(plan.c), plan.table_tol);
    double x[2] = {0.21, -0.11};
    double s[4] = {0.4, -0.3, 0.6, 0.8};
    double u[2] = {0.0, 0.0};
    for (auto _ : state) {
        residual_apply(sk, x, 0.5, s, u);
        benchmark::DoNotOptimize(u);
    }
}
BENCHMARK(BM_ResidualPair2D);

/* ---- tree construction ---- */

static void BM_TreeBuild(benchmark::State& state) {
    int n = int(state.range(0));
    std::vector<double> pts = generate_points(PointDistribution::uniform_cube, n, 3, 17);
    std::vector<double> none;
    for (auto _ : state) {
        Tree t = build_tree(pts, none, 600, 3, false, 23);
        benchmark::DoNotOptimize(t.num_boxes());
    }
    state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_TreeBuild)->Arg(10000)->Arg(100000);

/* ---- full evaluation ---- */

static void BM_Evaluate(benchmark::State& state) {
    int n = int(state.range(0));
    double eps = state.range(1) == 3 ? 1e-3 : 1e-6;
    DmkPlan plan = select_parameters(KernelType::stokeslet, eps, WindowKind::prolate, 3);
    SplitKernel sk =
        build_split_kernel(KernelType::stokeslet, 3, build_prolate(plan.c), plan.table_tol);
    ParticleSystem sys;
    sys.dim = 3;
    sys.sources = generate_points(PointDistribution::uniform_cube, n, 3, 23);
    sys.strengths = bench_strengths(KernelType::stokeslet, 3, n);
    for (auto _ : state) {
        std::vector<double> u =
            evaluate_with_plan(plan, sys, EwaldMode::free_space, nullptr, &sk);
        benchmark::DoNotOptimize(u.data());
    }
    state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_Evaluate)->Args({10000, 3})->Args({10000, 6})->Args({50000, 3})
    ->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
