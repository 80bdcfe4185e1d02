#pragma once

#include "docrect/geometry.hpp"

#include <algorithm>
#include <numeric>
#include <queue>
#include <utility>
#include <vector>

namespace docrect {

/// Static KD-tree over a point set. Exact k-nearest queries; ties in distance
/// resolve to the lower point index.
template <int Dim>
class KdTree {
 public:
  using Point = Eigen::Matrix<double, Dim, 1>;

  explicit KdTree(std::vector<Point> points) : points_(std::move(points)) {
    if (points_.empty()) throw Error("kd-tree over an empty point set");
    order_.resize(points_.size());
    std::iota(order_.begin(), order_.end(), 0);
    nodes_.reserve(2 * points_.size() / kLeaf + 2);
    build(0, static_cast<int>(points_.size()));
  }

  int size() const { return static_cast<int>(points_.size()); }
  const Point& point(int i) const { return points_[i]; }

  /// Indices of the k nearest points, sorted by (distance, index).
  std::vector<int> knn(const Point& query, int k) const {
    if (k < 1 || k > size()) throw Error("k must be in [1, point count]");
    Heap heap;
    search(0, query, k, heap);
    std::vector<int> out(heap.size());
    for (int i = static_cast<int>(heap.size()) - 1; i >= 0; --i) {
      out[i] = heap.top().second;
      heap.pop();
    }
    return out;
  }

  /// Indices of all points within `radius` (inclusive), unsorted.
  std::vector<int> within(const Point& query, double radius) const {
    std::vector<int> out;
    radius_search(0, query, radius * radius, out);
    return out;
  }

 private:
  static constexpr int kLeaf = 8;
  using Entry = std::pair<double, int>;  // (squared distance, index); max-heap
  using Heap = std::priority_queue<Entry>;

  struct Node {
    int begin = 0, end = 0;
    int axis = -1;  // -1 for leaves
    double split = 0.0;
    int left = -1, right = -1;
    Point lo, hi;
  };

  int build(int begin, int end) {
    const int id = static_cast<int>(nodes_.size());
    Node node;
    node.begin = begin;
    node.end = end;
    nodes_.push_back(node);
    Point lo = points_[order_[begin]], hi = lo;
    for (int i = begin; i < end; ++i) {
      lo = lo.cwiseMin(points_[order_[i]]);
      hi = hi.cwiseMax(points_[order_[i]]);
    }
    nodes_[id].lo = lo;
    nodes_[id].hi = hi;
    if (end - begin <= kLeaf) return id;
    int axis;
    (hi - lo).maxCoeff(&axis);
    const int mid = (begin + end) / 2;
    std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                     [&](int a, int b) { return points_[a][axis] < points_[b][axis]; });
    nodes_[id].axis = axis;
    nodes_[id].split = points_[order_[mid]][axis];
    const int l = build(begin, mid);
    const int r = build(mid, end);
    nodes_[id].left = l;
    nodes_[id].right = r;
    return id;
  }

  double box_distance2(const Node& n, const Point& q) const {
    return (q.cwiseMax(n.lo).cwiseMin(n.hi) - q).squaredNorm();
  }

  void search(int id, const Point& q, int k, Heap& heap) const {
    const Node& n = nodes_[id];
    if (static_cast<int>(heap.size()) == k && box_distance2(n, q) > heap.top().first) return;
    if (n.axis < 0) {
      for (int i = n.begin; i < n.end; ++i) {
        const int idx = order_[i];
        const Entry e{(points_[idx] - q).squaredNorm(), idx};
        if (static_cast<int>(heap.size()) < k) {
          heap.push(e);
        } else if (e < heap.top()) {
          heap.pop();
          heap.push(e);
        }
      }
      return;
    }
    const bool left_first = q[n.axis] < n.split;
    search(left_first ? n.left : n.right, q, k, heap);
    search(left_first ? n.right : n.left, q, k, heap);
  }

  void radius_search(int id, const Point& q, double r2, std::vector<int>& out) const {
    const Node& n = nodes_[id];
    if (box_distance2(n, q) > r2) return;
    if (n.axis < 0) {
      for (int i = n.begin; i < n.end; ++i)
        if ((points_[order_[i]] - q).squaredNorm() <= r2) out.push_back(order_[i]);
      return;
    }
    radius_search(n.left, q, r2, out);
    radius_search(n.right, q, r2, out);
  }

  std::vector<Point> points_;
  std::vector<int> order_;
  std::vector<Node> nodes_;
};

}  // namespace docrect
