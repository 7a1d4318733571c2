// Static 3D k-d tree for nearest-neighbor queries over a point set.
#pragma once

#include <algorithm>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "meshreg/geometry.hpp"

namespace meshreg {

// Built once over an immutable point array; queries are const and reentrant.
// Median splits on the widest axis of each node's bounding box.
class KdTree {
 public:
  KdTree() = default;

  explicit KdTree(std::vector<Vec3> points) : points_(std::move(points)) {
    if (points_.empty()) throw std::invalid_argument("KdTree over empty point set");
    order_.resize(points_.size());
    std::iota(order_.begin(), order_.end(), 0);
    nodes_.reserve(2 * points_.size());
    root_ = build(0, static_cast<int>(order_.size()));
  }

  struct Hit {
    int index = -1;
    double sq_dist = std::numeric_limits<double>::infinity();
  };

  // Index of the nearest stored point and its squared distance.
  Hit nearest(const Vec3& query) const {
    Hit best;
    search(root_, query, best);
    return best;
  }

  const std::vector<Vec3>& points() const { return points_; }

 private:
  struct Node {
    int left = -1, right = -1;
    int begin = 0, end = 0;  // leaf range into order_
    int axis = 0;
    double split = 0.0;
  };

  static constexpr int kLeafSize = 8;

  int build(int begin, int end) {
    Node node;
    node.begin = begin;
    node.end = end;
    if (end - begin > kLeafSize) {
      Vec3 lo = points_[order_[begin]], hi = lo;
      for (int i = begin + 1; i < end; ++i) {
        lo = lo.cwiseMin(points_[order_[i]]);
        hi = hi.cwiseMax(points_[order_[i]]);
      }
      int axis;
      (hi - lo).maxCoeff(&axis);
      const int mid = (begin + end) / 2;
      std::nth_element(order_.begin() + begin, order_.begin() + mid,
                       order_.begin() + end, [&](int a, int b) {
                         return points_[a][axis] < points_[b][axis];
                       });
      node.axis = axis;
      node.split = points_[order_[mid]][axis];
      const int id = static_cast<int>(nodes_.size());
      nodes_.push_back(node);
      const int left = build(begin, mid);
      const int right = build(mid, end);
      nodes_[id].left = left;
      nodes_[id].right = right;
      return id;
    }
    nodes_.push_back(node);
    return static_cast<int>(nodes_.size()) - 1;
  }

  void search(int id, const Vec3& query, Hit& best) const {
    const Node& node = nodes_[id];
    if (node.left < 0) {
      for (int i = node.begin; i < node.end; ++i) {
        const double d = (points_[order_[i]] - query).squaredNorm();
        if (d < best.sq_dist) best = {order_[i], d};
      }
      return;
    }
    const double delta = query[node.axis] - node.split;
    const int near = delta < 0 ? node.left : node.right;
    const int far = delta < 0 ? node.right : node.left;
    search(near, query, best);
    if (delta * delta < best.sq_dist) search(far, query, best);
  }

  std::vector<Vec3> points_;
  std::vector<int> order_;
  std::vector<Node> nodes_;
  int root_ = -1;
};

}  // namespace meshreg
