#include "mendkit/kdtree.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace mendkit {

namespace {
constexpr int kLeafSize = 16;
}

KdTree3::KdTree3(std::vector<Vec3> points) : points_(std::move(points)) {
    if (points_.empty()) throw std::invalid_argument("KdTree3: empty point set");
    order_.resize(points_.size());
    std::iota(order_.begin(), order_.end(), 0u);
    build(0, static_cast<int>(points_.size()));
}

int KdTree3::build(int begin, int end) {
    Node node;
    int index = static_cast<int>(nodes_.size());
    nodes_.push_back(node);
    if (end - begin <= kLeafSize) {
        nodes_[index].begin = begin;
        nodes_[index].end = end;
        return index;
    }
    Aabb box;
    for (int i = begin; i < end; ++i) box.expand(points_[order_[i]]);
    Vec3 ext = box.extent();
    int axis = 0;
    if (ext.y > ext.x) axis = 1;
    if (ext.z > ext[axis]) axis = 2;
    int mid = (begin + end) / 2;
    std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                     [&](uint32_t a, uint32_t b) {
                         double ca = points_[a][axis], cb = points_[b][axis];
                         return ca < cb || (ca == cb && a < b);
                     });
    nodes_[index].axis = axis;
    nodes_[index].split = points_[order_[mid]][axis];
    int left = build(begin, mid);
    int right = build(mid, end);
    nodes_[index].left = left;
    nodes_[index].right = right;
    nodes_[index].begin = nodes_[index].end = 0;
    return index;
}

void KdTree3::search(int nodeIdx, const Vec3& q, Result& best) const {
    const Node& node = nodes_[nodeIdx];
    if (node.left < 0) {
        for (int i = node.begin; i < node.end; ++i) {
            uint32_t idx = order_[i];
            double d2 = (points_[idx] - q).norm2();
            if (d2 < best.dist2) {
                best.dist2 = d2;
                best.index = idx;
            }
        }
        return;
    }
    double diff = q[node.axis] - node.split;
    int near = diff <= 0.0 ? node.left : node.right;
    int far = diff <= 0.0 ? node.right : node.left;
    search(near, q, best);
    if (diff * diff < best.dist2) search(far, q, best);
}

KdTree3::Result KdTree3::nearest(const Vec3& query) const {
    Result best;
    search(0, query, best);
    return best;
}

}  // namespace mendkit
