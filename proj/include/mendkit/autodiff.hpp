#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "mendkit/core.hpp"

namespace mendkit::ad {

// Reverse-mode automatic differentiation over matrix-valued nodes (rows =
// batch). Forward values are computed eagerly on node creation; backward()
// seeds a scalar root and accumulates exact gradients of the recorded
// computation. Templated so a 32-bit mode exists for speed; training runs in
// 64-bit by default.
template <typename S>
class Tape {
public:
    using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;

    int leaf(Mat v) { return push(Op::Leaf, -1, -1, std::move(v)); }

    // X (BxI) * W (IxO)
    int matmul(int x, int w) {
        checkCols(x, rows_unused, w);
        return push(Op::MatMul, x, w, val(x) * val(w));
    }
    int addRow(int x, int bias) {
        if (val(bias).rows() != 1 || val(bias).cols() != val(x).cols())
            throw std::invalid_argument("addRow: bias shape mismatch");
        Mat v = val(x);
        v.rowwise() += val(bias).row(0);
        return push(Op::AddRow, x, bias, std::move(v));
    }
    int relu(int x) { return push(Op::Relu, x, -1, val(x).cwiseMax(S(0))); }
    int logistic(int x) {
        Mat v = val(x).unaryExpr([](S a) {
            if (a >= S(0)) return S(1) / (S(1) + std::exp(-a));
            S e = std::exp(a);
            return e / (S(1) + e);
        });
        return push(Op::Logistic, x, -1, std::move(v));
    }
    int mul(int a, int b) {
        checkSameShape(a, b);
        return push(Op::Mul, a, b, val(a).cwiseProduct(val(b)));
    }
    int oneMinus(int x) {
        return push(Op::OneMinus, x, -1, (S(1) - val(x).array()).matrix());
    }
    int sub(int a, int b) {
        checkSameShape(a, b);
        return push(Op::Sub, a, b, val(a) - val(b));
    }
    int add(int a, int b) {
        checkSameShape(a, b);
        return push(Op::Add, a, b, val(a) + val(b));
    }
    int square(int x) { return push(Op::Square, x, -1, val(x).cwiseProduct(val(x))); }
    int scale(int x, S c) {
        int id = push(Op::Scale, x, -1, val(x) * c);
        nodes_[id].scalar = c;
        return id;
    }
    // Elementwise binary cross-entropy against a constant 0/1 target, with
    // probabilities clamped to [eps, 1-eps].
    int bceVs(int p, Mat target) {
        checkShape(p, target);
        const S eps = S(kLogEps);
        Mat v(val(p).rows(), val(p).cols());
        const Mat& pm = val(p);
        for (Eigen::Index j = 0; j < pm.cols(); ++j)
            for (Eigen::Index i = 0; i < pm.rows(); ++i) {
                S ph = std::min(std::max(pm(i, j), eps), S(1) - eps);
                S y = target(i, j);
                v(i, j) = -(y * std::log(ph) + (S(1) - y) * std::log(S(1) - ph));
            }
        int id = push(Op::BceVs, p, -1, std::move(v));
        nodes_[id].aux = std::move(target);
        return id;
    }
    int mean(int x) {
        Mat v(1, 1);
        v(0, 0) = val(x).sum() / S(val(x).size());
        return push(Op::Mean, x, -1, std::move(v));
    }
    // Elementwise clamp to [eps, 1]; gradient passes only inside the band.
    int clampEps1(int x) {
        const S eps = S(kLogEps);
        Mat v = val(x).unaryExpr([eps](S a) { return std::min(std::max(a, eps), S(1)); });
        return push(Op::ClampEps1, x, -1, std::move(v));
    }
    int logE(int x) {
        return push(Op::Log, x, -1, val(x).unaryExpr([](S a) { return std::log(a); }));
    }
    int broadcastRows(int z, Eigen::Index rows) {
        if (val(z).rows() != 1) throw std::invalid_argument("broadcastRows: expect row vector");
        return push(Op::BroadcastRows, z, -1, val(z).replicate(rows, 1));
    }
    int concatCols(int a, int b) {
        if (val(a).rows() != val(b).rows())
            throw std::invalid_argument("concatCols: row mismatch");
        Mat v(val(a).rows(), val(a).cols() + val(b).cols());
        v.leftCols(val(a).cols()) = val(a);
        v.rightCols(val(b).cols()) = val(b);
        return push(Op::ConcatCols, a, b, std::move(v));
    }
    int l1(int x) {
        Mat v(1, 1);
        v(0, 0) = val(x).cwiseAbs().sum();
        return push(Op::L1, x, -1, std::move(v));
    }

    const Mat& val(int id) const { return nodes_[id].val; }
    const Mat& grad(int id) const { return nodes_[id].grad; }

    // Exact reverse-mode gradients of node `root` (must be 1x1).
    void backward(int root) {
        if (val(root).size() != 1) throw std::invalid_argument("backward: root must be scalar");
        if (!std::isfinite(static_cast<double>(val(root)(0, 0))))
            throw std::runtime_error("backward: non-finite loss");
        for (int i = 0; i <= root; ++i)
            nodes_[i].grad = Mat::Zero(nodes_[i].val.rows(), nodes_[i].val.cols());
        nodes_[root].grad(0, 0) = S(1);

        const S eps = S(kLogEps);
        for (int i = root; i >= 0; --i) {
            Node& n = nodes_[i];
            if (n.op == Op::Leaf) continue;
            const Mat& g = n.grad;
            switch (n.op) {
                case Op::MatMul:
                    nodes_[n.a].grad.noalias() += g * nodes_[n.b].val.transpose();
                    nodes_[n.b].grad.noalias() += nodes_[n.a].val.transpose() * g;
                    break;
                case Op::AddRow:
                    nodes_[n.a].grad += g;
                    nodes_[n.b].grad.row(0) += g.colwise().sum();
                    break;
                case Op::Relu:
                    nodes_[n.a].grad.array() +=
                        g.array() * (nodes_[n.a].val.array() > S(0)).template cast<S>();
                    break;
                case Op::Logistic:
                    nodes_[n.a].grad.array() +=
                        g.array() * n.val.array() * (S(1) - n.val.array());
                    break;
                case Op::Mul:
                    nodes_[n.a].grad.array() += g.array() * nodes_[n.b].val.array();
                    nodes_[n.b].grad.array() += g.array() * nodes_[n.a].val.array();
                    break;
                case Op::OneMinus:
                    nodes_[n.a].grad -= g;
                    break;
                case Op::Sub:
                    nodes_[n.a].grad += g;
                    nodes_[n.b].grad -= g;
                    break;
                case Op::Add:
                    nodes_[n.a].grad += g;
                    nodes_[n.b].grad += g;
                    break;
                case Op::Square:
                    nodes_[n.a].grad.array() += g.array() * S(2) * nodes_[n.a].val.array();
                    break;
                case Op::Scale:
                    nodes_[n.a].grad += g * n.scalar;
                    break;
                case Op::BceVs: {
                    const Mat& p = nodes_[n.a].val;
                    Mat& pg = nodes_[n.a].grad;
                    for (Eigen::Index c = 0; c < p.cols(); ++c)
                        for (Eigen::Index r = 0; r < p.rows(); ++r) {
                            S pv = p(r, c);
                            if (pv <= eps || pv >= S(1) - eps) continue;  // clamped: flat
                            pg(r, c) += g(r, c) * (pv - n.aux(r, c)) / (pv * (S(1) - pv));
                        }
                    break;
                }
                case Op::Mean:
                    nodes_[n.a].grad.array() += g(0, 0) / S(nodes_[n.a].val.size());
                    break;
                case Op::ClampEps1: {
                    const Mat& x = nodes_[n.a].val;
                    nodes_[n.a].grad.array() +=
                        g.array() *
                        ((x.array() >= eps) && (x.array() <= S(1))).template cast<S>();
                    break;
                }
                case Op::Log:
                    nodes_[n.a].grad.array() += g.array() / nodes_[n.a].val.array();
                    break;
                case Op::BroadcastRows:
                    nodes_[n.a].grad.row(0) += g.colwise().sum();
                    break;
                case Op::ConcatCols:
                    nodes_[n.a].grad += g.leftCols(nodes_[n.a].val.cols());
                    nodes_[n.b].grad += g.rightCols(nodes_[n.b].val.cols());
                    break;
                case Op::L1:
                    nodes_[n.a].grad.array() +=
                        g(0, 0) * nodes_[n.a].val.array().unaryExpr([](S a) {
                            return a > S(0) ? S(1) : (a < S(0) ? S(-1) : S(0));
                        });
                    break;
                case Op::Leaf:
                    break;
            }
        }
    }

    size_t size() const { return nodes_.size(); }

private:
    enum class Op : uint8_t {
        Leaf, MatMul, AddRow, Relu, Logistic, Mul, OneMinus, Sub, Add, Square,
        Scale, BceVs, Mean, ClampEps1, Log, BroadcastRows, ConcatCols, L1
    };
    struct Node {
        Op op;
        int a, b;
        S scalar{};
        Mat val, grad, aux;
    };

    int push(Op op, int a, int b, Mat v) {
        nodes_.push_back(Node{op, a, b, S(0), std::move(v), {}, {}});
        return static_cast<int>(nodes_.size()) - 1;
    }
    void checkSameShape(int a, int b) const {
        if (val(a).rows() != val(b).rows() || val(a).cols() != val(b).cols())
            throw std::invalid_argument("shape mismatch");
    }
    void checkShape(int a, const Mat& m) const {
        if (val(a).rows() != m.rows() || val(a).cols() != m.cols())
            throw std::invalid_argument("shape mismatch");
    }
    static constexpr int rows_unused = -1;
    void checkCols(int x, int, int w) const {
        if (val(x).cols() != val(w).rows())
            throw std::invalid_argument("matmul: inner dimension mismatch");
    }

    std::vector<Node> nodes_;
};

using TapeD = Tape<double>;
using TapeF = Tape<float>;

}  // namespace mendkit::ad
