#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace stokesdmk {

/* Deterministic point-set generators for experiments and stress tests.
 * All generators emit point-major coordinates inside the unit box
 * [-1/2, 1/2]^dim and are reproducible across platforms: the stream is a
 * std::mt19937_64 (fully specified by the standard) seeded from the user
 * seed and a per-generator tag, and uniform doubles are derived from raw
 * 64-bit draws with a fixed 53-bit mapping rather than
 * std::uniform_real_distribution, whose output is implementation-defined. */
enum class PointDistribution {
    uniform_cube,     /* iid uniform in the box */
    perturbed_circle, /* dim 2: radius 0.35 plus uniform radial jitter 0.05 */
    perturbed_sphere, /* dim 3: radius 0.35 plus uniform radial jitter 0.05 */
    corner_cluster,   /* ball of radius 2^-5 against one corner of the box */
};

/* Parse a CLI name: uniform-cube | perturbed-circle | perturbed-sphere |
 * corner-cluster.  Throws std::invalid_argument for anything else. */
PointDistribution parse_distribution(const std::string& name);
std::string distribution_name(PointDistribution dist);

/* Generate n points in dim dimensions (point-major, n*dim doubles).
 * Distinct seeds give independent streams; the same seed always reproduces
 * the same set.  Throws std::invalid_argument when the distribution does
 * not match dim (circle needs dim 2, sphere dim 3) or dim is not 2 or 3. */
std::vector<double> generate_points(PointDistribution dist, int n, int dim,
                                    std::uint64_t seed);

}  // namespace stokesdmk
