#pragma once

#include <vector>

#include "mendkit/core.hpp"

namespace mendkit {

// Exact nearest-neighbor index over 3D points (median-split kd-tree with
// branch-and-bound search; no approximation).
class KdTree3 {
public:
    explicit KdTree3(std::vector<Vec3> points);

    struct Result {
        uint32_t index = 0;
        double dist2 = 1e300;
    };
    Result nearest(const Vec3& query) const;

    size_t size() const { return points_.size(); }
    const Vec3& point(uint32_t i) const { return points_[i]; }

private:
    struct Node {
        int left = -1, right = -1;
        int begin = 0, end = 0;  // leaf range in order_
        int axis = 0;
        double split = 0.0;
    };
    int build(int begin, int end);
    void search(int node, const Vec3& q, Result& best) const;

    std::vector<Vec3> points_;
    std::vector<uint32_t> order_;
    std::vector<Node> nodes_;
};

}  // namespace mendkit
