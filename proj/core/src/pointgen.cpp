#include "stokesdmk/pointgen.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace stokesdmk {

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;

/* uniform double in [0, 1) from the top 53 bits of a raw draw */
double unit_double(std::mt19937_64& rng) { return (rng() >> 11) * 0x1.0p-53; }

/* uniform in [-1, 1) */
double sym_double(std::mt19937_64& rng) { return 2.0 * unit_double(rng) - 1.0; }

std::mt19937_64 make_stream(PointDistribution dist, int dim, std::uint64_t seed) {
    std::seed_seq seq{std::uint32_t(seed), std::uint32_t(seed >> 32),
                      std::uint32_t(dist), std::uint32_t(dim), 0x9e3779b9u};
    return std::mt19937_64(seq);
}

}  // namespace

PointDistribution parse_distribution(const std::string& name) {
    if (name == "uniform-cube") return PointDistribution::uniform_cube;
    if (name == "perturbed-circle") return PointDistribution::perturbed_circle;
    if (name == "perturbed-sphere") return PointDistribution::perturbed_sphere;
    if (name == "corner-cluster") return PointDistribution::corner_cluster;
    throw std::invalid_argument("parse_distribution: unknown distribution '" + name + "'");
}

std::string distribution_name(PointDistribution dist) {
    switch (dist) {
        case PointDistribution::uniform_cube: return "uniform-cube";
        case PointDistribution::perturbed_circle: return "perturbed-circle";
        case PointDistribution::perturbed_sphere: return "perturbed-sphere";
        case PointDistribution::corner_cluster: return "corner-cluster";
    }
    return "?";
}

std::vector<double> generate_points(PointDistribution dist, int n, int dim,
                                    std::uint64_t seed) {
    if (dim != 2 && dim != 3) throw std::invalid_argument("generate_points: dim must be 2 or 3");
    if (n < 0) throw std::invalid_argument("generate_points: negative count");
    if (dist == PointDistribution::perturbed_circle && dim != 2)
        throw std::invalid_argument("generate_points: perturbed-circle needs dim 2");
    if (dist == PointDistribution::perturbed_sphere && dim != 3)
        throw std::invalid_argument("generate_points: perturbed-sphere needs dim 3");

    std::mt19937_64 rng = make_stream(dist, dim, seed);
    std::vector<double> pts(std::size_t(n) * dim);

    switch (dist) {
        case PointDistribution::uniform_cube:
            for (double& v : pts) v = 0.5 * sym_double(rng);
            break;

        case PointDistribution::perturbed_circle:
            for (int i = 0; i < n; ++i) {
                double r = 0.35 + 0.05 * sym_double(rng);
                double th = 2.0 * kPi * unit_double(rng);
                pts[std::size_t(i) * 2 + 0] = r * std::cos(th);
                pts[std::size_t(i) * 2 + 1] = r * std::sin(th);
            }
            break;

        case PointDistribution::perturbed_sphere:
            for (int i = 0; i < n; ++i) {
                double r = 0.35 + 0.05 * sym_double(rng);
                double z = sym_double(rng);
                double th = 2.0 * kPi * unit_double(rng);
                double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
                pts[std::size_t(i) * 3 + 0] = r * rho * std::cos(th);
                pts[std::size_t(i) * 3 + 1] = r * rho * std::sin(th);
                pts[std::size_t(i) * 3 + 2] = r * z;
            }
            break;

        case PointDistribution::corner_cluster: {
            /* uniform in the ball of radius 2^-5, folded into the orthant
             * that points from the corner (-1/2, ...) into the box */
            const double rad = 0x1.0p-5;
            for (int i = 0; i < n; ++i) {
                double y[3];
                for (;;) {
                    double s2 = 0.0;
                    for (int a = 0; a < dim; ++a) {
                        y[a] = sym_double(rng);
                        s2 += y[a] * y[a];
                    }
                    if (s2 <= 1.0) break;
                }
                for (int a = 0; a < dim; ++a)
                    pts[std::size_t(i) * dim + a] = -0.5 + rad * std::fabs(y[a]);
            }
            break;
        }
    }
    return pts;
}

}  // namespace stokesdmk
