#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "stokesdmk/dmk.hpp"
#include "stokesdmk/oracle.hpp"
#include "stokesdmk/pointgen.hpp"
#include "stokesdmk/split.hpp"
#include "stokesdmk/windows.hpp"

#ifndef STOKESDMK_VERSION
#define STOKESDMK_VERSION "0.0.0"
#endif

using namespace stokesdmk;

namespace {

struct ExperimentConfig {
    KernelType kernel = KernelType::stokeslet;
    int dim = 3;
    EwaldMode mode = EwaldMode::free_space;
    WindowKind window = WindowKind::prolate;
    double eps = 1e-6;
    int n_sources = 5000;
    int n_targets = 0; /* 0: targets alias the sources */
    PointDistribution gen = PointDistribution::uniform_cube;
    std::uint64_t seed = 1;
    int repetitions = 1;
    bool zero_strengths = false;
    std::string out;
};

const char* kernel_name(KernelType k) {
    switch (k) {
        case KernelType::stokeslet: return "stokeslet";
        case KernelType::stresslet: return "stresslet";
        case KernelType::rotlet: return "rotlet";
        case KernelType::biharmonic: return "biharmonic";
        case KernelType::harmonic: return "harmonic";
    }
    return "?";
}

double unit_double(std::mt19937_64& rng) { return (rng() >> 11) * 0x1.0p-53; }

/* i.i.d. uniform strengths in [-1/2, 1/2] per component; stresslet normals
 * are normalized to unit length */
std::vector<double> make_strengths(KernelType kernel, int dim, int n,
                                   std::uint64_t seed) {
    std::seed_seq seq{std::uint32_t(seed), std::uint32_t(seed >> 32), 0x73747273u};
    std::mt19937_64 rng(seq);
    int sc = strength_components(kernel, dim);
    std::vector<double> s(std::size_t(n) * sc);
    for (double& v : s) v = unit_double(rng) - 0.5;
    if (kernel == KernelType::stresslet) {
        for (int i = 0; i < n; ++i) {
            double* nrm = s.data() + std::size_t(i) * sc + dim;
            double len = 0.0;
            for (int a = 0; a < dim; ++a) len += nrm[a] * nrm[a];
            len = std::sqrt(len);
            if (len < 1e-9) {
                nrm[0] = 1.0;
                for (int a = 1; a < dim; ++a) nrm[a] = 0.0;
            } else {
                for (int a = 0; a < dim; ++a) nrm[a] /= len;
            }
        }
    }
    return s;
}

ParticleSystem make_system(const ExperimentConfig& cfg, int n_sources) {
    ParticleSystem sys;
    sys.dim = cfg.dim;
    sys.sources = generate_points(cfg.gen, n_sources, cfg.dim, cfg.seed);
    if (cfg.n_targets > 0)
        sys.targets = generate_points(cfg.gen, cfg.n_targets, cfg.dim, cfg.seed ^ 0x74677473u);
    sys.strengths = make_strengths(cfg.kernel, cfg.dim, n_sources, cfg.seed);
    if (cfg.zero_strengths) std::fill(sys.strengths.begin(), sys.strengths.end(), 0.0);
    return sys;
}

double rel_l2(const std::vector<double>& got, const std::vector<double>& want) {
    double num = 0.0, den = 0.0;
    for (size_t i = 0; i < got.size(); ++i) {
        double d = got[i] - want[i];
        num += d * d;
        den += want[i] * want[i];
    }
    if (den == 0.0) return num == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    return std::sqrt(num / den);
}

/* split tables, optionally cached in $STOKESDMK_CACHE_DIR */
SplitKernel make_tables(const DmkPlan& plan) {
    WindowFunction win = plan.window == WindowKind::prolate ? build_prolate(plan.c)
                                                            : build_gaussian(plan.sigma);
    double tt = plan.table_tol > 0.0
                    ? plan.table_tol
                    : std::max(0.03 * plan.tol, plan.dim == 2 ? 1e-12 : 1e-14);
    const char* dir = std::getenv("STOKESDMK_CACHE_DIR");
    if (!dir || !*dir) return build_split_kernel(plan.kernel, plan.dim, win, tt);

    std::ostringstream name;
    name << dir << "/" << kernel_name(plan.kernel) << "-" << plan.dim << "d-"
         << (plan.window == WindowKind::prolate ? "prolate" : "gaussian") << "-";
    name.precision(17);
    name << (plan.window == WindowKind::prolate ? plan.c : plan.sigma) << "-" << tt << ".tables";
    std::string path = name.str();
    try {
        SplitKernel sk = import_split_kernel(path);
        if (sk.kernel == plan.kernel && sk.dim == plan.dim &&
            sk.mollifier.window.kind == plan.window)
            return sk;
    } catch (const std::exception&) {
        /* absent or unreadable: rebuild below */
    }
    SplitKernel sk = build_split_kernel(plan.kernel, plan.dim, win, tt);
    try {
        export_split_kernel(sk, path);
    } catch (const std::exception&) {
        /* cache directory not writable: carry on uncached */
    }
    return sk;
}

class CsvSink {
  public:
    explicit CsvSink(const std::string& path) {
        if (!path.empty()) {
            file_.open(path, std::ios::binary); /* binary: LF endings everywhere */
            if (!file_) throw std::runtime_error("cannot open output file: " + path);
        }
    }
    std::ostream& os() { return file_.is_open() ? file_ : std::cout; }

    void header(const ExperimentConfig& cfg, const DmkPlan& plan) {
        std::ostream& o = os();
        o.precision(17);
        o << "# tool=stokesdmk-cli version=" << STOKESDMK_VERSION << "\n";
        o << "# kernel=" << kernel_name(cfg.kernel) << " dim=" << cfg.dim
          << " mode=" << (cfg.mode == EwaldMode::periodic ? "periodic" : "free")
          << " window=" << (cfg.window == WindowKind::prolate ? "prolate" : "gaussian")
          << " eps=" << cfg.eps << "\n";
        o << "# n=" << cfg.n_sources << " targets=" << cfg.n_targets
          << " gen=" << distribution_name(cfg.gen) << " seed=" << cfg.seed
          << " repetitions=" << cfg.repetitions << "\n";
        o << "# plan: c=" << plan.c << " sigma=" << plan.sigma << " p=" << plan.p
          << " N1=" << plan.N1 << " N_per=" << plan.N_per << " n_s=" << plan.n_s
          << " table_tol=" << plan.table_tol << "\n";
        o << "kernel,dim,mode,window,eps,N,pass,seconds,rel_l2,c,p,N1,N_per,n_s\n";
    }

    void row(const ExperimentConfig& cfg, const DmkPlan& plan, int n,
             const std::string& pass, double seconds, double rel) {
        std::ostream& o = os();
        o.precision(17);
        o << kernel_name(cfg.kernel) << "," << cfg.dim << ","
          << (cfg.mode == EwaldMode::periodic ? "periodic" : "free") << ","
          << (cfg.window == WindowKind::prolate ? "prolate" : "gaussian") << "," << cfg.eps
          << "," << n << "," << pass << "," << seconds << ",";
        if (std::isnan(rel))
            o << "";
        else
            o << rel;
        o << "," << plan.c << "," << plan.p << "," << plan.N1 << "," << plan.N_per << ","
          << plan.n_s << "\n";
    }

  private:
    std::ofstream file_;
};

constexpr double kNoError = std::numeric_limits<double>::quiet_NaN();

/* evaluate cfg.repetitions times; keep the fastest per-pass timings */
std::vector<double> timed_evaluate(const DmkPlan& plan, const ParticleSystem& sys,
                                   EwaldMode mode, const SplitKernel& sk, int reps,
                                   DmkReport& best) {
    std::vector<double> u;
    for (int r = 0; r < std::max(1, reps); ++r) {
        DmkReport rep;
        u = evaluate_with_plan(plan, sys, mode, &rep, &sk);
        if (r == 0) {
            best = rep;
        } else {
            best.t_tree = std::min(best.t_tree, rep.t_tree);
            best.t_upward = std::min(best.t_upward, rep.t_upward);
            best.t_root = std::min(best.t_root, rep.t_root);
            best.t_downward = std::min(best.t_downward, rep.t_downward);
            best.t_residual = std::min(best.t_residual, rep.t_residual);
        }
    }
    return u;
}

void emit_pass_rows(CsvSink& csv, const ExperimentConfig& cfg, const DmkPlan& plan, int n,
                    const DmkReport& rep, double rel) {
    csv.row(cfg, plan, n, "tree", rep.t_tree, rel);
    csv.row(cfg, plan, n, "upward", rep.t_upward, rel);
    csv.row(cfg, plan, n, "root", rep.t_root, rel);
    csv.row(cfg, plan, n, "downward", rep.t_downward, rel);
    csv.row(cfg, plan, n, "residual", rep.t_residual, rel);
    csv.row(cfg, plan, n, "total",
            rep.t_tree + rep.t_upward + rep.t_root + rep.t_downward + rep.t_residual, rel);
}

int run_accuracy(const ExperimentConfig& cfg) {
    if (cfg.n_sources > 50000 || cfg.n_targets > 50000)
        throw std::invalid_argument(
            "accuracy mode compares against the direct oracle; N must be <= 5e4");
    DmkPlan plan = select_parameters(cfg.kernel, cfg.eps, cfg.window, cfg.dim);
    SplitKernel sk = make_tables(plan);
    ParticleSystem sys = make_system(cfg, cfg.n_sources);

    std::vector<double> ref = cfg.mode == EwaldMode::periodic
                                  ? ewald_reference(sk, sys, EwaldMode::periodic)
                                  : direct_sum(cfg.kernel, sys);
    DmkReport rep;
    std::vector<double> u = timed_evaluate(plan, sys, cfg.mode, sk, cfg.repetitions, rep);
    double rel = rel_l2(u, ref);

    CsvSink csv(cfg.out);
    csv.header(cfg, plan);
    emit_pass_rows(csv, cfg, plan, cfg.n_sources, rep, rel);

    std::cerr << "accuracy: rel_l2=" << rel << " target=" << cfg.eps
              << (rel <= cfg.eps ? "  [pass]" : "  [FAIL]") << "\n";
    return rel <= cfg.eps ? 0 : 1;
}

int run_scaling(const ExperimentConfig& cfg, const std::vector<int>& n_list) {
    if (n_list.empty()) throw std::invalid_argument("scaling mode needs a nonempty N list");
    if (!std::is_sorted(n_list.begin(), n_list.end()))
        throw std::invalid_argument("scaling mode needs an ascending N list");
    DmkPlan plan = select_parameters(cfg.kernel, cfg.eps, cfg.window, cfg.dim);
    SplitKernel sk = make_tables(plan);

    CsvSink csv(cfg.out);
    csv.header(cfg, plan);
    std::vector<double> totals;
    for (int n : n_list) {
        ParticleSystem sys = make_system(cfg, n);
        DmkReport rep;
        timed_evaluate(plan, sys, cfg.mode, sk, cfg.repetitions, rep);
        emit_pass_rows(csv, cfg, plan, n, rep, kNoError);
        totals.push_back(rep.t_tree + rep.t_upward + rep.t_root + rep.t_downward +
                         rep.t_residual);
    }
    for (size_t i = 1; i < totals.size(); ++i)
        std::cerr << "scaling: N " << n_list[i - 1] << " -> " << n_list[i]
                  << "  time ratio = " << totals[i] / totals[i - 1] << "\n";
    return 0;
}

int run_sweep(const ExperimentConfig& cfg) {
    if (cfg.n_sources > 20000)
        throw std::invalid_argument("sweep mode compares against the direct oracle; N <= 2e4");
    if (cfg.mode == EwaldMode::periodic)
        throw std::invalid_argument("sweep mode runs in free space");

    DmkPlan base = select_parameters(cfg.kernel, cfg.eps, cfg.window, cfg.dim);
    ParticleSystem sys = make_system(cfg, cfg.n_sources);
    std::vector<double> ref = direct_sum(cfg.kernel, sys);

    double q_t = 3.0 * base.c / 3.141592653589793;
    if (cfg.window == WindowKind::gaussian) q_t = 6.0 / (3.141592653589793 * base.sigma * base.sigma);

    std::vector<double> qs;
    for (int dq = -6; dq <= 3; ++dq)
        if (q_t + dq >= 4.0) qs.push_back(q_t + dq);
    std::vector<int> ps;
    for (int dp = -8; dp <= 4; dp += 2)
        if (base.p + dp >= 4) ps.push_back(base.p + dp);

    CsvSink csv(cfg.out);
    csv.header(cfg, base);

    std::vector<double> best_err(ps.size(), std::numeric_limits<double>::infinity());
    std::vector<DmkPlan> best_plan(ps.size(), base);
    for (double q : qs) {
        DmkPlan plan = base;
        if (cfg.window == WindowKind::prolate) {
            plan.c = q * 3.141592653589793 / 3.0;
        } else {
            plan.sigma = std::sqrt(6.0 / (3.141592653589793 * q));
        }
        plan.N1 = 2 * int(std::ceil(q)) - 1;
        SplitKernel sk = make_tables(plan);
        for (size_t ip = 0; ip < ps.size(); ++ip) {
            plan.p = ps[ip];
            DmkReport rep;
            std::vector<double> u = timed_evaluate(plan, sys, cfg.mode, sk, 1, rep);
            double rel = rel_l2(u, ref);
            csv.row(cfg, plan, cfg.n_sources, "sweep",
                    rep.t_tree + rep.t_upward + rep.t_root + rep.t_downward + rep.t_residual,
                    rel);
            if (rel < best_err[ip]) {
                best_err[ip] = rel;
                best_plan[ip] = plan;
            }
        }
    }
    /* per-p minimal-error frontier, for regression fits */
    for (size_t ip = 0; ip < ps.size(); ++ip)
        csv.row(cfg, best_plan[ip], cfg.n_sources, "frontier", 0.0, best_err[ip]);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Fast Stokes summation: accuracy, scaling and parameter-sweep experiments"};
    app.set_version_flag("--version", STOKESDMK_VERSION);

    ExperimentConfig cfg;
    std::string kernel = "stokeslet", mode = "free", window = "prolate", gen = "uniform";
    std::string scaling;
    bool sweep = false;
    std::uint64_t seed = 1;

    app.add_option("--kernel", kernel, "stokeslet | stresslet | rotlet")
        ->check(CLI::IsMember({"stokeslet", "stresslet", "rotlet"}));
    app.add_option("--dim", cfg.dim, "2 | 3")->check(CLI::IsMember({2, 3}));
    app.add_option("--mode", mode, "free | periodic")->check(CLI::IsMember({"free", "periodic"}));
    app.add_option("--window", window, "prolate | gaussian")
        ->check(CLI::IsMember({"prolate", "gaussian"}));
    app.add_option("--eps", cfg.eps, "target relative accuracy");
    app.add_option("--n", cfg.n_sources, "number of source points")->check(CLI::PositiveNumber);
    app.add_option("--targets", cfg.n_targets, "separate targets (0: targets = sources)");
    app.add_option("--gen", gen,
                   "uniform | circle | sphere | cluster (long names also accepted)");
    app.add_option("--seed", seed, "RNG seed");
    app.add_option("--reps", cfg.repetitions, "repetitions (fastest timing kept)");
    app.add_option("--out", cfg.out, "CSV output path (default: stdout)");
    app.add_flag("--zero-strengths", cfg.zero_strengths,
                 "zero all strengths (sanity: field and error must vanish)");
    app.add_flag("--sweep", sweep, "sweep (c, p) around the tuned values");
    app.add_option("--scaling", scaling, "comma-separated ascending N list");

    CLI11_PARSE(app, argc, argv);

    try {
        cfg.kernel = kernel == "stresslet" ? KernelType::stresslet
                     : kernel == "rotlet"  ? KernelType::rotlet
                                           : KernelType::stokeslet;
        cfg.mode = mode == "periodic" ? EwaldMode::periodic : EwaldMode::free_space;
        cfg.window = window == "gaussian" ? WindowKind::gaussian : WindowKind::prolate;
        cfg.seed = seed;
        if (gen == "uniform")
            cfg.gen = PointDistribution::uniform_cube;
        else if (gen == "circle")
            cfg.gen = PointDistribution::perturbed_circle;
        else if (gen == "sphere")
            cfg.gen = PointDistribution::perturbed_sphere;
        else if (gen == "cluster")
            cfg.gen = PointDistribution::corner_cluster;
        else
            cfg.gen = parse_distribution(gen);

        if (!scaling.empty()) {
            std::vector<int> n_list;
            std::stringstream ss(scaling);
            std::string tok;
            while (std::getline(ss, tok, ',')) n_list.push_back(int(std::stod(tok)));
            return run_scaling(cfg, n_list);
        }
        if (sweep) return run_sweep(cfg);
        return run_accuracy(cfg);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
