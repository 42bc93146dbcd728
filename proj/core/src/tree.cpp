#include "stokesdmk/tree.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>
#include <ostream>
#include <stdexcept>

namespace stokesdmk {

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;
constexpr std::int64_t kCells = std::int64_t(1) << kTreeMaxLevel;

using Key = unsigned __int128;

std::array<std::int32_t, 3> quantize(const double* x, int dim) {
  std::array<std::int32_t, 3> q = {0, 0, 0};
  for (int i = 0; i < dim; ++i) {
    const std::int64_t v =
        static_cast<std::int64_t>(std::floor((x[i] + 0.5) * double(kCells)));
    q[i] = static_cast<std::int32_t>(std::clamp<std::int64_t>(v, 0, kCells - 1));
  }
  return q;
}

Key morton_key(const std::array<std::int32_t, 3>& q, int dim) {
  Key key = 0;
  for (int bit = 0; bit < kTreeMaxLevel; ++bit)
    for (int i = 0; i < dim; ++i)
      key |= static_cast<Key>((q[i] >> bit) & 1) << (bit * dim + i);
  return key;
}

/* child slot of a point inside a box at the given level (level <= 29) */
int child_index(const std::array<std::int32_t, 3>& q, int level, int dim) {
  int ci = 0;
  for (int i = 0; i < dim; ++i)
    ci |= ((q[i] >> (kTreeMaxLevel - 1 - level)) & 1) << i;
  return ci;
}

/* closed boxes sharing at least a boundary point, c translated by shift */
bool boxes_touch(const Tree& t, int b, int c,
                 const std::array<std::int8_t, 3>& shift) {
  const std::int64_t sb = kCells >> t.boxes[b].level;
  const std::int64_t sc = kCells >> t.boxes[c].level;
  for (int i = 0; i < t.dim; ++i) {
    const std::int64_t lo1 = t.boxes[b].anchor[i];
    const std::int64_t lo2 = t.boxes[c].anchor[i] + shift[i] * kCells;
    if (lo1 > lo2 + sc || lo2 > lo1 + sb) return false;
  }
  return true;
}

struct Builder {
  Tree t;
  int nchild = 0;

  void subdivide(int b) {
    const int lev = t.boxes[b].level;
    const std::int32_t half = std::int32_t(1) << (kTreeMaxLevel - 1 - lev);
    const int fc = t.num_boxes();
    t.boxes[b].leaf = false;
    t.boxes[b].first_child = fc;
    t.max_level = std::max(t.max_level, lev + 1);

    const auto part = [&](const std::vector<std::array<std::int32_t, 3>>& q,
                          int begin, int end, int* bnd) {
      int pos = begin;
      for (int ci = 0; ci < nchild; ++ci) {
        bnd[ci] = pos;
        while (pos < end && child_index(q[pos], lev, t.dim) == ci) ++pos;
      }
      bnd[nchild] = pos;
    };
    int sbnd[9], tbnd[9];
    part(t.src_q, t.boxes[b].src_begin, t.boxes[b].src_end, sbnd);
    if (t.targets_alias_sources)
      std::copy(sbnd, sbnd + nchild + 1, tbnd);
    else
      part(t.tgt_q, t.boxes[b].tgt_begin, t.boxes[b].tgt_end, tbnd);

    const auto panchor = t.boxes[b].anchor;
    for (int ci = 0; ci < nchild; ++ci) {
      TreeBox child;
      child.level = lev + 1;
      child.parent = b;
      for (int i = 0; i < t.dim; ++i)
        child.anchor[i] = panchor[i] + ((ci >> i) & 1) * half;
      child.src_begin = sbnd[ci];
      child.src_end = sbnd[ci + 1];
      child.tgt_begin = tbnd[ci];
      child.tgt_end = tbnd[ci + 1];
      t.boxes.push_back(child);
    }
  }

  /* deepest existing box containing a quantized point */
  int descend(const std::array<std::int32_t, 3>& q) const {
    int b = 0;
    while (!t.boxes[b].leaf)
      b = t.boxes[b].first_child + child_index(q, t.boxes[b].level, t.dim);
    return b;
  }

  void refine_to_capacity() {
    std::vector<int> stack = {0};
    while (!stack.empty()) {
      const int b = stack.back();
      stack.pop_back();
      if (t.box_src_count(b) <= t.n_s) continue;
      if (t.boxes[b].level >= kTreeMaxLevel) {
        t.depth_capped = true;
        continue;
      }
      subdivide(b);
      for (int ci = 0; ci < nchild; ++ci)
        stack.push_back(t.boxes[b].first_child + nchild - 1 - ci);
    }
  }

  void repair_level_restriction() {
    bool changed = true;
    while (changed) {
      changed = false;
      std::vector<int> leaves;
      for (int b = 0; b < t.num_boxes(); ++b)
        if (t.boxes[b].leaf) leaves.push_back(b);
      for (const int b : leaves) {
        if (!t.boxes[b].leaf) continue;
        const int lev = t.boxes[b].level;
        if (lev < 2) continue;
        const std::int64_t side = kCells >> lev;
        const int lo2 = t.dim == 3 ? -1 : 0, hi2 = t.dim == 3 ? 1 : 0;
        for (int o2 = lo2; o2 <= hi2; ++o2)
          for (int o1 = -1; o1 <= 1; ++o1)
            for (int o0 = -1; o0 <= 1; ++o0) {
              if (o0 == 0 && o1 == 0 && o2 == 0) continue;
              const int off[3] = {o0, o1, o2};
              std::array<std::int32_t, 3> probe = {0, 0, 0};
              bool inside = true;
              for (int i = 0; i < t.dim; ++i) {
                std::int64_t v =
                    t.boxes[b].anchor[i] + off[i] * side + side / 2;
                if (t.periodic)
                  v = ((v % kCells) + kCells) % kCells;
                else if (v < 0 || v >= kCells) {
                  inside = false;
                  break;
                }
                probe[i] = static_cast<std::int32_t>(v);
              }
              if (!inside) continue;
              const int a = descend(probe);
              if (t.boxes[a].leaf && t.boxes[a].level <= lev - 2) {
                subdivide(a);
                changed = true;
              }
            }
      }
    }
  }

  void build_neighbors() {
    const int nb = t.num_boxes();
    t.neighbors.assign(nb, {});
    t.level_boxes.assign(t.max_level + 1, {});
    for (int b = 0; b < nb; ++b) t.level_boxes[t.boxes[b].level].push_back(b);

    if (t.periodic) {
      const int lo2 = t.dim == 3 ? -1 : 0, hi2 = t.dim == 3 ? 1 : 0;
      for (int s2 = lo2; s2 <= hi2; ++s2)
        for (int s1 = -1; s1 <= 1; ++s1)
          for (int s0 = -1; s0 <= 1; ++s0)
            t.neighbors[0].colleagues.push_back(
                {0, {std::int8_t(s0), std::int8_t(s1), std::int8_t(s2)}});
    } else {
      t.neighbors[0].colleagues.push_back({0, {0, 0, 0}});
    }

    for (int lev = 1; lev <= t.max_level; ++lev)
      for (const int b : t.level_boxes[lev]) {
        const int par = t.boxes[b].parent;
        for (const NeighborEntry& pc : t.neighbors[par].colleagues) {
          if (t.boxes[pc.box].leaf) {
            if (boxes_touch(t, b, pc.box, pc.shift))
              t.neighbors[b].coarse.push_back(pc);
            continue;
          }
          for (int ci = 0; ci < nchild; ++ci) {
            const int d = t.boxes[pc.box].first_child + ci;
            if (boxes_touch(t, b, d, pc.shift))
              t.neighbors[b].colleagues.push_back({d, pc.shift});
          }
        }
      }

    for (int b = 0; b < nb; ++b)
      for (const NeighborEntry& ce : t.neighbors[b].colleagues) {
        if (ce.box == b && ce.shift == std::array<std::int8_t, 3>{0, 0, 0})
          continue;
        if (t.boxes[ce.box].leaf) continue;
        for (int ci = 0; ci < nchild; ++ci) {
          const int d = t.boxes[ce.box].first_child + ci;
          if (t.boxes[d].leaf && boxes_touch(t, b, d, ce.shift))
            t.neighbors[b].fine.push_back({d, ce.shift});
        }
      }
  }
};

}  // namespace

double Tree::box_side(int b) const {
  return std::ldexp(1.0, -boxes[b].level);
}

std::array<double, 3> Tree::box_center(int b) const {
  std::array<double, 3> c = {0.0, 0.0, 0.0};
  const double side = box_side(b);
  for (int i = 0; i < dim; ++i)
    c[i] = std::ldexp(double(boxes[b].anchor[i]), -kTreeMaxLevel) - 0.5 +
           0.5 * side;
  return c;
}

Tree build_tree(const std::vector<double>& sources,
                const std::vector<double>& targets, int n_s, int dim,
                bool periodic, int proxy_order) {
  if (dim != 2 && dim != 3)
    throw std::invalid_argument("build_tree: dim must be 2 or 3");
  if (n_s < 1) throw std::invalid_argument("build_tree: n_s must be >= 1");
  if (proxy_order < 1)
    throw std::invalid_argument("build_tree: proxy order must be >= 1");
  if (sources.empty() || sources.size() % dim != 0 ||
      targets.size() % dim != 0)
    throw std::invalid_argument("build_tree: bad point array length");
  for (const std::vector<double>* pts : {&sources, &targets})
    for (double v : *pts)
      if (!(v >= -0.5 && v <= 0.5))
        throw std::invalid_argument("build_tree: point outside the unit box");

  Builder bld;
  Tree& t = bld.t;
  t.dim = dim;
  t.periodic = periodic;
  t.n_s = n_s;
  t.proxy_order = proxy_order;
  t.targets_alias_sources = targets.empty();
  bld.nchild = 1 << dim;

  const int n = static_cast<int>(sources.size()) / dim;
  const int m = static_cast<int>(targets.size()) / dim;

  const auto sort_points = [&](const std::vector<double>& pts, int count,
                               std::vector<double>& out_pts,
                               std::vector<int>& out_perm,
                               std::vector<std::array<std::int32_t, 3>>& out_q) {
    std::vector<std::pair<Key, int>> keyed(count);
    for (int i = 0; i < count; ++i)
      keyed[i] = {morton_key(quantize(pts.data() + std::size_t(i) * dim, dim),
                             dim),
                  i};
    std::sort(keyed.begin(), keyed.end());
    out_pts.resize(pts.size());
    out_perm.resize(count);
    out_q.resize(count);
    for (int i = 0; i < count; ++i) {
      const int src = keyed[i].second;
      out_perm[i] = src;
      for (int k = 0; k < dim; ++k)
        out_pts[std::size_t(i) * dim + k] = pts[std::size_t(src) * dim + k];
      out_q[i] = quantize(out_pts.data() + std::size_t(i) * dim, dim);
    }
  };
  sort_points(sources, n, t.src_points, t.src_perm, t.src_q);
  if (!t.targets_alias_sources)
    sort_points(targets, m, t.tgt_points, t.tgt_perm, t.tgt_q);

  TreeBox root;
  root.src_begin = 0;
  root.src_end = n;
  root.tgt_begin = 0;
  root.tgt_end = t.targets_alias_sources ? n : m;
  t.boxes.push_back(root);

  bld.refine_to_capacity();
  bld.repair_level_restriction();
  bld.build_neighbors();

  if (t.depth_capped)
    std::cerr << "build_tree: depth cap " << kTreeMaxLevel
              << " reached with leaves above capacity (duplicate points?)\n";
  return std::move(bld.t);
}

const TreeNeighbors& neighbor_query(const Tree& tree, int box) {
  return tree.neighbors.at(box);
}

std::vector<double> proxy_nodes(const Tree& tree, int box) {
  const int p = tree.proxy_order;
  const int d = tree.dim;
  const auto ctr = tree.box_center(box);
  const double half = 0.5 * tree.box_side(box);
  std::vector<double> nodes1(p);
  for (int i = 0; i < p; ++i)
    nodes1[i] = std::cos((2 * i + 1) * kPi / (2.0 * p));
  int total = 1;
  for (int i = 0; i < d; ++i) total *= p;
  std::vector<double> out(std::size_t(total) * d);
  for (int flat = 0; flat < total; ++flat) {
    int rem = flat;
    for (int i = 0; i < d; ++i) {
      out[std::size_t(flat) * d + i] = ctr[i] + half * nodes1[rem % p];
      rem /= p;
    }
  }
  return out;
}

void dump_tree(const Tree& tree, std::ostream& os) {
  const auto put_list = [&](const char* tag,
                            const std::vector<NeighborEntry>& lst) {
    os << ' ' << tag << "={";
    for (std::size_t i = 0; i < lst.size(); ++i) {
      if (i) os << ' ';
      os << lst[i].box;
      const auto& s = lst[i].shift;
      if (s[0] || s[1] || s[2])
        os << '@' << int(s[0]) << ',' << int(s[1]) << ',' << int(s[2]);
    }
    os << '}';
  };
  os << "tree dim=" << tree.dim << " periodic=" << int(tree.periodic)
     << " n_s=" << tree.n_s << " p=" << tree.proxy_order
     << " boxes=" << tree.num_boxes() << " max_level=" << tree.max_level
     << '\n';
  for (int b = 0; b < tree.num_boxes(); ++b) {
    const TreeBox& bx = tree.boxes[b];
    os << b << " L" << bx.level << " a=" << bx.anchor[0] << ','
       << bx.anchor[1];
    if (tree.dim == 3) os << ',' << bx.anchor[2];
    os << (bx.leaf ? " leaf" : " node") << " src=[" << bx.src_begin << ','
       << bx.src_end << ") tgt=[" << bx.tgt_begin << ',' << bx.tgt_end << ")";
    put_list("col", tree.neighbors[b].colleagues);
    put_list("crs", tree.neighbors[b].coarse);
    put_list("fin", tree.neighbors[b].fine);
    os << '\n';
  }
}

}  // namespace stokesdmk
