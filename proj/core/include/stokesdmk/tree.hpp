#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <vector>

/*
 * Adaptive, level-restricted 2^d-tree over sources and targets on the unit
 * box [-1/2, 1/2]^d, in free-space and periodic variants.
 *
 * Coordinates are quantized to 30 bits per axis; all box geometry (anchors,
 * sides, adjacency) is exact integer arithmetic in units of 2^-30.  Points
 * are sorted in Morton order (axis 0 in the least-significant interleaved
 * bit); the applied permutations are stored so callers can un-permute
 * per-point outputs.  Boxes are half-open along each axis, so every point
 * belongs to exactly one leaf; a coordinate exactly at +1/2 is clamped into
 * the last cell.
 */

namespace stokesdmk {

inline constexpr int kTreeMaxLevel = 30;

struct TreeBox {
  int level = 0;
  int parent = -1;
  int first_child = -1; /* 2^d contiguous ids; -1 for leaves */
  bool leaf = true;
  std::array<std::int32_t, 3> anchor = {0, 0, 0}; /* lo corner, 2^-30 units */
  int src_begin = 0, src_end = 0; /* into the permuted source array */
  int tgt_begin = 0, tgt_end = 0; /* into the permuted target array */
};

/* A neighboring box together with the lattice translation (in unit-cell
   lengths) that brings it next to the querying box; always zero when the
   tree is free-space. */
struct NeighborEntry {
  int box = -1;
  std::array<std::int8_t, 3> shift = {0, 0, 0};
};

struct TreeNeighbors {
  /* same-level boxes sharing a boundary point, including the box itself */
  std::vector<NeighborEntry> colleagues;
  /* leaf boxes one level coarser sharing a boundary point */
  std::vector<NeighborEntry> coarse;
  /* leaf boxes one level finer sharing a boundary point (never descendants) */
  std::vector<NeighborEntry> fine;
};

struct Tree {
  int dim = 3;
  bool periodic = false;
  int n_s = 0;         /* leaf capacity (sources only drive subdivision) */
  int proxy_order = 0; /* Chebyshev nodes per dimension */
  int max_level = 0;   /* deepest level present */
  bool depth_capped = false; /* hit kTreeMaxLevel with > n_s sources */
  bool targets_alias_sources = false;

  std::vector<TreeBox> boxes; /* boxes[0] is the root */
  std::vector<std::vector<int>> level_boxes;
  std::vector<TreeNeighbors> neighbors;

  /* Morton-permuted copies of the input points and the permutations:
     src_points[i] is input point src_perm[i] (likewise for targets). */
  std::vector<double> src_points, tgt_points;
  std::vector<int> src_perm, tgt_perm;
  /* quantized per-axis coordinates of the permuted points */
  std::vector<std::array<std::int32_t, 3>> src_q, tgt_q;

  int num_boxes() const { return static_cast<int>(boxes.size()); }
  double box_side(int b) const;
  std::array<double, 3> box_center(int b) const;
  int box_src_count(int b) const {
    return boxes[b].src_end - boxes[b].src_begin;
  }
  int box_tgt_count(int b) const {
    return boxes[b].tgt_end - boxes[b].tgt_begin;
  }
};

/*
 * Builds the tree: Morton sort, adaptive subdivision until every leaf holds
 * at most n_s sources (or sits at the depth cap), 2:1 level-restriction
 * repair (wrapped adjacency counts when periodic), then neighbor lists.
 * An empty target array means the targets alias the sources.  Throws
 * std::invalid_argument for out-of-box points or bad parameters.
 */
Tree build_tree(const std::vector<double>& sources,
                const std::vector<double>& targets, int n_s, int dim,
                bool periodic, int proxy_order);

/* Neighbor lists of one box (precomputed at build time). */
const TreeNeighbors& neighbor_query(const Tree& tree, int box);

/* Tensor-product proxy grid of the box: proxy_order^dim points, point-major,
   axis 0 fastest; 1-D nodes are cos((2i+1)pi/(2p)) scaled by half the box
   side about the center, so they lie strictly inside the box. */
std::vector<double> proxy_nodes(const Tree& tree, int box);

/* Line-oriented structural dump (levels, anchors, counts, neighbor ids) for
   fixture tests and debugging. */
void dump_tree(const Tree& tree, std::ostream& os);

}  // namespace stokesdmk
