#pragma once
// Nearest-neighbour search over phase-space rows [strain | stress].
//
// BruteForce is exact: ties go to the smallest row index.
// KdForest builds num_trees randomized kd-trees (split dimension drawn from
// the five highest-variance coordinates, split at the mean) and searches
// them together with one shared priority queue; max_checks bounds the number
// of leaf buckets visited per query.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <queue>
#include <random>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "ddslp/error.hpp"
#include "ddslp/parallel.hpp"
#include "ddslp/phase.hpp"

namespace ddslp {

enum class NnMode { BruteForce, KdForest };

struct NnOptions {
  NnMode mode = NnMode::BruteForce;
  int num_trees = 20;
  int max_checks = 256;
  int leaf_size = 8;
  std::uint64_t seed = 0;
  /// Optional per-coordinate multipliers (length 2d) applied to data and
  /// queries before measuring distance. Empty means raw Euclidean.
  Eigen::VectorXd coord_scale;
};

class NnIndex {
 public:
  NnIndex() = default;

  NnIndex(const RowMatrix& points, NnOptions opt) : opt_(std::move(opt)) { build(points); }
  NnIndex(const DataSet& ds, NnOptions opt) : opt_(std::move(opt)) { build(RowMatrix(ds.phase())); }

  [[nodiscard]] int size() const { return static_cast<int>(pts_.rows()); }
  [[nodiscard]] int dim() const { return static_cast<int>(pts_.cols()); }
  [[nodiscard]] const NnOptions& options() const { return opt_; }

  /// Index of the nearest stored row.
  [[nodiscard]] int query(const Eigen::Ref<const Eigen::VectorXd>& q) const {
    const Eigen::VectorXd s = scaled(q);
    return opt_.mode == NnMode::BruteForce ? brute(s.data()) : forest_knn(s.data(), 1).front();
  }

  /// The k nearest rows, nearest first.
  [[nodiscard]] std::vector<int> knn(const Eigen::Ref<const Eigen::VectorXd>& q, int k) const {
    if (k < 1) throw InvalidArgument("knn: k must be positive");
    k = std::min(k, size());
    const Eigen::VectorXd s = scaled(q);
    if (opt_.mode == NnMode::KdForest) return forest_knn(s.data(), k);
    std::vector<std::pair<double, int>> all(static_cast<std::size_t>(size()));
    for (int i = 0; i < size(); ++i) all[static_cast<std::size_t>(i)] = {dist2(s.data(), i), i};
    std::partial_sort(all.begin(), all.begin() + k, all.end());
    std::vector<int> out(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) out[static_cast<std::size_t>(i)] = all[static_cast<std::size_t>(i)].second;
    return out;
  }

 private:
  struct Node {
    int child[2] = {-1, -1};  // -1 marks a leaf
    int dim = 0;
    double value = 0.0;
    int begin = 0, end = 0;  // leaf range into the tree's index array
  };
  struct Tree {
    std::vector<Node> nodes;
    std::vector<int> index;
  };

  void build(const RowMatrix& points) {
    if (points.rows() == 0) throw EmptyInputError("NnIndex: no points");
    pts_ = points;
    if (opt_.coord_scale.size() > 0) {
      if (opt_.coord_scale.size() != pts_.cols()) throw DimensionError("NnIndex: coord_scale length mismatch");
      pts_ = pts_ * opt_.coord_scale.asDiagonal();
    }
    if (opt_.mode == NnMode::BruteForce) return;
    if (opt_.num_trees < 1 || opt_.max_checks < 1 || opt_.leaf_size < 1)
      throw InvalidArgument("NnIndex: num_trees, max_checks and leaf_size must be positive");
    trees_.resize(static_cast<std::size_t>(opt_.num_trees));
    parallel_for(opt_.num_trees, 0, [&](int t) {
      std::mt19937_64 rng(opt_.seed + 0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(t + 1));
      Tree& tree = trees_[static_cast<std::size_t>(t)];
      tree.index.resize(static_cast<std::size_t>(size()));
      std::iota(tree.index.begin(), tree.index.end(), 0);
      build_node(tree, 0, size(), rng);
    });
  }

  int build_node(Tree& tree, int begin, int end, std::mt19937_64& rng) {
    const int id = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    if (end - begin <= opt_.leaf_size) {
      tree.nodes[static_cast<std::size_t>(id)].begin = begin;
      tree.nodes[static_cast<std::size_t>(id)].end = end;
      return id;
    }
    // mean and variance from at most 100 rows of the range
    const int cols = dim();
    const int sample = std::min(end - begin, 100);
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(cols), var = Eigen::VectorXd::Zero(cols);
    for (int i = 0; i < sample; ++i) mean += pts_.row(tree.index[static_cast<std::size_t>(begin + i)]).transpose();
    mean /= sample;
    for (int i = 0; i < sample; ++i)
      var += (pts_.row(tree.index[static_cast<std::size_t>(begin + i)]).transpose() - mean).cwiseAbs2();
    std::vector<int> order(static_cast<std::size_t>(cols));
    std::iota(order.begin(), order.end(), 0);
    const int top = std::min(5, cols);
    std::partial_sort(order.begin(), order.begin() + top, order.end(), [&](int a, int b) { return var[a] > var[b]; });
    const int d = order[static_cast<std::size_t>(std::uniform_int_distribution<int>(0, top - 1)(rng))];
    const double value = mean[d];

    auto first = tree.index.begin() + begin, last = tree.index.begin() + end;
    auto mid = std::partition(first, last, [&](int r) { return pts_(r, d) < value; });
    int split = static_cast<int>(mid - tree.index.begin());
    if (split == begin || split == end) split = begin + (end - begin) / 2;  // all on one side

    const int left = build_node(tree, begin, split, rng);
    const int right = build_node(tree, split, end, rng);
    Node& n = tree.nodes[static_cast<std::size_t>(id)];
    n.child[0] = left;
    n.child[1] = right;
    n.dim = d;
    n.value = value;
    return id;
  }

  [[nodiscard]] Eigen::VectorXd scaled(const Eigen::Ref<const Eigen::VectorXd>& q) const {
    if (q.size() != dim())
      throw DimensionError("nn query: expected " + std::to_string(dim()) + " coordinates, got " + std::to_string(q.size()));
    if (opt_.coord_scale.size() > 0) return q.cwiseProduct(opt_.coord_scale);
    return q;
  }

  [[nodiscard]] double dist2(const double* q, int r) const {
    double s = 0.0;
    for (int c = 0; c < dim(); ++c) {
      const double d = pts_(r, c) - q[c];
      s += d * d;
    }
    return s;
  }

  [[nodiscard]] int brute(const double* q) const {
    int best = 0;
    double bd = dist2(q, 0);
    for (int i = 1; i < size(); ++i) {
      const double d = dist2(q, i);
      if (d < bd) {
        bd = d;
        best = i;
      }
    }
    return best;
  }

  [[nodiscard]] std::vector<int> forest_knn(const double* q, int k) const {
    // max-heap of the current k best (distance, index)
    std::priority_queue<std::pair<double, int>> best;
    auto offer = [&](int r) {
      const double d = dist2(q, r);
      const std::pair<double, int> cand{d, r};
      if (static_cast<int>(best.size()) < k) best.push(cand);
      else if (cand < best.top()) {
        best.pop();
        best.push(cand);
      }
    };
    auto worst = [&] {
      return static_cast<int>(best.size()) < k ? std::numeric_limits<double>::infinity() : best.top().first;
    };
    using Branch = std::tuple<double, int, int>;  // (lower bound, tree, node)
    std::priority_queue<Branch, std::vector<Branch>, std::greater<>> branches;
    int checks = 0;
    std::vector<int> seen;

    auto descend = [&](int t, int node, double mindist) {
      const Tree& tree = trees_[static_cast<std::size_t>(t)];
      while (tree.nodes[static_cast<std::size_t>(node)].child[0] >= 0) {
        const Node& n = tree.nodes[static_cast<std::size_t>(node)];
        const double diff = q[n.dim] - n.value;
        const int near = diff < 0.0 ? 0 : 1;
        const double other = mindist + diff * diff;
        if (other < worst()) branches.emplace(other, t, n.child[1 - near]);
        node = n.child[near];
      }
      const Node& leaf = tree.nodes[static_cast<std::size_t>(node)];
      for (int i = leaf.begin; i < leaf.end; ++i) {
        const int r = tree.index[static_cast<std::size_t>(i)];
        if (k == 1 || std::find(seen.begin(), seen.end(), r) == seen.end()) {
          if (k > 1) seen.push_back(r);
          offer(r);
        }
      }
      ++checks;
    };

    for (int t = 0; t < static_cast<int>(trees_.size()); ++t) descend(t, 0, 0.0);
    while (!branches.empty() && checks < opt_.max_checks) {
      const auto [lb, t, node] = branches.top();
      branches.pop();
      if (lb >= worst()) break;
      descend(t, node, lb);
    }

    std::vector<int> out(best.size());
    for (auto it = out.rbegin(); it != out.rend(); ++it) {
      *it = best.top().second;
      best.pop();
    }
    return out;
  }

  NnOptions opt_;
  RowMatrix pts_;
  std::vector<Tree> trees_;
};

}  // namespace ddslp
