// Copyright 2026 The gatdec Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Dense reverse-mode automatic differentiation over row-major matrices.
//
// A Tensor is a shared handle onto a node of the computation graph. Leaves
// created with Tensor::parameter accumulate gradients across backward calls
// until zero_grad() is called; interior nodes get fresh gradients on every
// backward pass. A graph may be differentiated once.

#ifndef GATDEC_TENSOR_HPP
#define GATDEC_TENSOR_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "gatdec/errors.hpp"

namespace gatdec {

namespace detail {

struct Node {
    size_t rows = 0;
    size_t cols = 0;
    std::vector<double> value;
    std::vector<double> grad;
    bool requires_grad = false;
    bool consumed = false;
    std::vector<std::shared_ptr<Node>> parents;
    std::function<void(Node &)> backward_fn;

    bool is_leaf() const {
        return parents.empty();
    }
};

}  // namespace detail

class Tensor {
   public:
    Tensor() = default;

    static Tensor constant(size_t rows, size_t cols, std::vector<double> values) {
        return make(rows, cols, std::move(values), false);
    }
    static Tensor parameter(size_t rows, size_t cols, std::vector<double> values) {
        return make(rows, cols, std::move(values), true);
    }
    static Tensor zeros(size_t rows, size_t cols, bool requires_grad = false) {
        return make(rows, cols, std::vector<double>(rows * cols, 0.0), requires_grad);
    }
    static Tensor scalar(double v, bool requires_grad = false) {
        return make(1, 1, {v}, requires_grad);
    }

    bool defined() const {
        return node_ != nullptr;
    }
    size_t rows() const {
        return node_->rows;
    }
    size_t cols() const {
        return node_->cols;
    }
    size_t size() const {
        return node_->value.size();
    }
    bool requires_grad() const {
        return node_->requires_grad;
    }

    std::span<const double> values() const {
        return node_->value;
    }
    std::span<double> mutable_values() {
        return node_->value;
    }
    double at(size_t r, size_t c) const {
        return node_->value[r * node_->cols + c];
    }
    double item() const {
        if (size() != 1) {
            throw ContractError("item() on a tensor with " + std::to_string(size()) + " entries");
        }
        return node_->value[0];
    }

    /// Empty until a backward pass reaches this tensor.
    std::span<const double> grad() const {
        return node_->grad;
    }
    std::span<double> mutable_grad() {
        return node_->grad;
    }
    void zero_grad() {
        node_->grad.assign(node_->value.size(), 0.0);
    }

    /// Fresh leaf holding a copy of the values.
    Tensor clone() const {
        return make(rows(), cols(), node_->value, node_->requires_grad);
    }

    /// Builds an interior node. backward_fn reads self.grad and accumulates
    /// into parents that require gradients.
    static Tensor from_op(
        size_t rows,
        size_t cols,
        std::vector<double> values,
        std::vector<Tensor> parents,
        std::function<void(detail::Node &)> backward_fn) {
        Tensor t = make(rows, cols, std::move(values), false);
        for (auto &p : parents) {
            t.node_->requires_grad |= p.node_->requires_grad;
            t.node_->parents.push_back(p.node_);
        }
        if (t.node_->requires_grad) {
            t.node_->backward_fn = std::move(backward_fn);
        } else {
            t.node_->parents.clear();
        }
        return t;
    }

    detail::Node &node() const {
        return *node_;
    }

    friend void backward(const Tensor &loss);

   private:
    static Tensor make(size_t rows, size_t cols, std::vector<double> values, bool requires_grad) {
        if (values.size() != rows * cols) {
            throw ContractError(
                "tensor of shape " + std::to_string(rows) + "x" + std::to_string(cols) + " given " +
                std::to_string(values.size()) + " values");
        }
        Tensor t;
        t.node_ = std::make_shared<detail::Node>();
        t.node_->rows = rows;
        t.node_->cols = cols;
        t.node_->value = std::move(values);
        t.node_->requires_grad = requires_grad;
        return t;
    }

    std::shared_ptr<detail::Node> node_;
};

namespace detail {

inline std::string shape_str(const Tensor &t) {
    return std::to_string(t.rows()) + "x" + std::to_string(t.cols());
}

inline void require(bool ok, const std::string &msg) {
    if (!ok) {
        throw DimensionError(msg);
    }
}

/// Gradient buffer of a parent, allocated on first use.
inline std::vector<double> &grad_of(Node &n) {
    if (n.grad.size() != n.value.size()) {
        n.grad.assign(n.value.size(), 0.0);
    }
    return n.grad;
}

inline bool wants(const Node &n) {
    return n.requires_grad;
}

}  // namespace detail

/// Reverse-mode pass from a scalar. Leaves accumulate; interior nodes reset.
inline void backward(const Tensor &loss) {
    if (!loss.defined() || loss.size() != 1) {
        throw ContractError("backward() requires a scalar loss");
    }
    detail::Node *root = loss.node_.get();
    if (root->consumed) {
        throw ContractError("backward() called twice on the same graph");
    }
    if (!root->requires_grad) {
        return;
    }

    // Iterative post-order DFS gives a topological order.
    std::vector<detail::Node *> order;
    std::unordered_set<detail::Node *> visited;
    std::vector<std::pair<detail::Node *, size_t>> stack{{root, 0}};
    visited.insert(root);
    while (!stack.empty()) {
        auto &[n, next] = stack.back();
        if (next < n->parents.size()) {
            detail::Node *p = n->parents[next++].get();
            if (p->requires_grad && visited.insert(p).second) {
                stack.emplace_back(p, 0);
            }
        } else {
            order.push_back(n);
            stack.pop_back();
        }
    }

    for (auto *n : order) {
        if (!n->is_leaf()) {
            n->grad.assign(n->value.size(), 0.0);
        } else {
            detail::grad_of(*n);
        }
    }
    root->grad[0] += 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        detail::Node *n = *it;
        if (n->backward_fn) {
            n->backward_fn(*n);
        }
    }
    for (auto *n : order) {
        if (!n->is_leaf()) {
            n->consumed = true;
            n->backward_fn = nullptr;
            n->parents.clear();
        }
    }
}

inline Tensor matmul(const Tensor &a, const Tensor &b) {
    detail::require(
        a.cols() == b.rows(), "matmul shape mismatch " + detail::shape_str(a) + " * " + detail::shape_str(b));
    size_t m = a.rows(), k = a.cols(), n = b.cols();
    std::vector<double> out(m * n, 0.0);
    auto av = a.values();
    auto bv = b.values();
    for (size_t i = 0; i < m; i++) {
        for (size_t p = 0; p < k; p++) {
            double x = av[i * k + p];
            for (size_t j = 0; j < n; j++) {
                out[i * n + j] += x * bv[p * n + j];
            }
        }
    }
    return Tensor::from_op(m, n, std::move(out), {a, b}, [m, k, n](detail::Node &self) {
        auto &A = *self.parents[0];
        auto &B = *self.parents[1];
        const auto &g = self.grad;
        if (detail::wants(A)) {
            auto &ga = detail::grad_of(A);
            for (size_t i = 0; i < m; i++) {
                for (size_t p = 0; p < k; p++) {
                    double s = 0;
                    for (size_t j = 0; j < n; j++) {
                        s += g[i * n + j] * B.value[p * n + j];
                    }
                    ga[i * k + p] += s;
                }
            }
        }
        if (detail::wants(B)) {
            auto &gb = detail::grad_of(B);
            for (size_t i = 0; i < m; i++) {
                for (size_t p = 0; p < k; p++) {
                    double x = A.value[i * k + p];
                    for (size_t j = 0; j < n; j++) {
                        gb[p * n + j] += x * g[i * n + j];
                    }
                }
            }
        }
    });
}

namespace detail {

enum class Binary { Add, Sub, Mul };

// b is either the same shape as a or a single row broadcast over a's rows.
inline Tensor binary(const Tensor &a, const Tensor &b, Binary op) {
    bool same = a.rows() == b.rows() && a.cols() == b.cols();
    bool row_bcast = b.rows() == 1 && b.cols() == a.cols();
    require(same || row_bcast, "elementwise shape mismatch " + shape_str(a) + " vs " + shape_str(b));
    size_t m = a.rows(), n = a.cols();
    std::vector<double> out(m * n);
    auto av = a.values();
    auto bv = b.values();
    for (size_t i = 0; i < m; i++) {
        for (size_t j = 0; j < n; j++) {
            double x = av[i * n + j];
            double y = bv[same ? i * n + j : j];
            out[i * n + j] = op == Binary::Add ? x + y : op == Binary::Sub ? x - y : x * y;
        }
    }
    return Tensor::from_op(m, n, std::move(out), {a, b}, [m, n, same, op](Node &self) {
        auto &A = *self.parents[0];
        auto &B = *self.parents[1];
        const auto &g = self.grad;
        if (wants(A)) {
            auto &ga = grad_of(A);
            for (size_t i = 0; i < m * n; i++) {
                ga[i] += op == Binary::Mul ? g[i] * B.value[same ? i : i % n] : g[i];
            }
        }
        if (wants(B)) {
            auto &gb = grad_of(B);
            for (size_t i = 0; i < m * n; i++) {
                double d = op == Binary::Add ? g[i] : op == Binary::Sub ? -g[i] : g[i] * A.value[i];
                gb[same ? i : i % n] += d;
            }
        }
    });
}

template <typename F, typename DF>
Tensor unary(const Tensor &x, F f, DF df) {
    std::vector<double> out(x.size());
    auto xv = x.values();
    for (size_t i = 0; i < out.size(); i++) {
        out[i] = f(xv[i]);
    }
    return Tensor::from_op(x.rows(), x.cols(), std::move(out), {x}, [df](Node &self) {
        auto &X = *self.parents[0];
        auto &gx = grad_of(X);
        for (size_t i = 0; i < gx.size(); i++) {
            gx[i] += self.grad[i] * df(X.value[i], self.value[i]);
        }
    });
}

}  // namespace detail

/// Elementwise; b may be a 1 x cols row broadcast over a's rows.
inline Tensor add(const Tensor &a, const Tensor &b) {
    return detail::binary(a, b, detail::Binary::Add);
}
inline Tensor sub(const Tensor &a, const Tensor &b) {
    return detail::binary(a, b, detail::Binary::Sub);
}
inline Tensor mul(const Tensor &a, const Tensor &b) {
    return detail::binary(a, b, detail::Binary::Mul);
}

inline Tensor scale(const Tensor &x, double c) {
    return detail::unary(x, [c](double v) { return c * v; }, [c](double, double) { return c; });
}

inline Tensor relu(const Tensor &x) {
    return detail::unary(
        x, [](double v) { return v > 0 ? v : 0.0; }, [](double v, double) { return v > 0 ? 1.0 : 0.0; });
}

inline Tensor leaky_relu(const Tensor &x, double slope) {
    return detail::unary(
        x,
        [slope](double v) { return v > 0 ? v : slope * v; },
        [slope](double v, double) { return v > 0 ? 1.0 : slope; });
}

inline double stable_sigmoid(double v) {
    if (v >= 0) {
        return 1.0 / (1.0 + std::exp(-v));
    }
    double e = std::exp(v);
    return e / (1.0 + e);
}

inline Tensor sigmoid(const Tensor &x) {
    return detail::unary(x, stable_sigmoid, [](double, double y) { return y * (1.0 - y); });
}

/// log(1 + exp(x)) without overflow.
inline Tensor softplus(const Tensor &x) {
    return detail::unary(
        x,
        [](double v) { return std::max(v, 0.0) + std::log1p(std::exp(-std::abs(v))); },
        [](double v, double) { return stable_sigmoid(v); });
}

/// [a | b] along columns; both have the same row count.
inline Tensor concat_cols(const Tensor &a, const Tensor &b) {
    detail::require(
        a.rows() == b.rows(), "concat_cols row mismatch " + detail::shape_str(a) + " vs " + detail::shape_str(b));
    size_t m = a.rows(), p = a.cols(), q = b.cols();
    std::vector<double> out(m * (p + q));
    for (size_t i = 0; i < m; i++) {
        std::copy_n(a.values().begin() + i * p, p, out.begin() + i * (p + q));
        std::copy_n(b.values().begin() + i * q, q, out.begin() + i * (p + q) + p);
    }
    return Tensor::from_op(m, p + q, std::move(out), {a, b}, [m, p, q](detail::Node &self) {
        auto &A = *self.parents[0];
        auto &B = *self.parents[1];
        for (size_t i = 0; i < m; i++) {
            if (detail::wants(A)) {
                auto &ga = detail::grad_of(A);
                for (size_t j = 0; j < p; j++) {
                    ga[i * p + j] += self.grad[i * (p + q) + j];
                }
            }
            if (detail::wants(B)) {
                auto &gb = detail::grad_of(B);
                for (size_t j = 0; j < q; j++) {
                    gb[i * q + j] += self.grad[i * (p + q) + p + j];
                }
            }
        }
    });
}

/// Row k of the result is row index[k] of x.
inline Tensor gather_rows(const Tensor &x, std::vector<size_t> index) {
    size_t d = x.cols();
    std::vector<double> out(index.size() * d);
    for (size_t k = 0; k < index.size(); k++) {
        detail::require(index[k] < x.rows(), "gather_rows index out of range");
        std::copy_n(x.values().begin() + index[k] * d, d, out.begin() + k * d);
    }
    size_t n = index.size();
    return Tensor::from_op(n, d, std::move(out), {x}, [index = std::move(index), d](detail::Node &self) {
        auto &gx = detail::grad_of(*self.parents[0]);
        for (size_t k = 0; k < index.size(); k++) {
            for (size_t j = 0; j < d; j++) {
                gx[index[k] * d + j] += self.grad[k * d + j];
            }
        }
    });
}

/// Softmax of a column of scores within each segment. Max-shifted per segment.
inline Tensor segment_softmax(const Tensor &scores, std::vector<size_t> segments, size_t n_segments) {
    detail::require(scores.cols() == 1, "segment_softmax expects a column of scores");
    detail::require(segments.size() == scores.rows(), "segment_softmax segment count mismatch");
    size_t e = scores.rows();
    auto sv = scores.values();
    std::vector<double> seg_max(n_segments, -std::numeric_limits<double>::infinity());
    for (size_t k = 0; k < e; k++) {
        detail::require(segments[k] < n_segments, "segment id out of range");
        seg_max[segments[k]] = std::max(seg_max[segments[k]], sv[k]);
    }
    std::vector<double> out(e);
    std::vector<double> seg_sum(n_segments, 0.0);
    for (size_t k = 0; k < e; k++) {
        out[k] = std::exp(sv[k] - seg_max[segments[k]]);
        seg_sum[segments[k]] += out[k];
    }
    for (size_t k = 0; k < e; k++) {
        out[k] /= seg_sum[segments[k]];
    }
    return Tensor::from_op(
        e, 1, std::move(out), {scores}, [segments = std::move(segments), n_segments](detail::Node &self) {
            std::vector<double> dot(n_segments, 0.0);
            for (size_t k = 0; k < segments.size(); k++) {
                dot[segments[k]] += self.value[k] * self.grad[k];
            }
            auto &gx = detail::grad_of(*self.parents[0]);
            for (size_t k = 0; k < segments.size(); k++) {
                gx[k] += self.value[k] * (self.grad[k] - dot[segments[k]]);
            }
        });
}

/// out[s] = sum over rows k with segments[k] == s of weights[k] * values[k].
inline Tensor segment_weighted_sum(
    const Tensor &values, const Tensor &weights, std::vector<size_t> segments, size_t n_segments) {
    detail::require(weights.cols() == 1 && weights.rows() == values.rows(), "segment_weighted_sum weight shape");
    detail::require(segments.size() == values.rows(), "segment_weighted_sum segment count mismatch");
    size_t d = values.cols();
    std::vector<double> out(n_segments * d, 0.0);
    auto vv = values.values();
    auto wv = weights.values();
    for (size_t k = 0; k < segments.size(); k++) {
        detail::require(segments[k] < n_segments, "segment id out of range");
        for (size_t j = 0; j < d; j++) {
            out[segments[k] * d + j] += wv[k] * vv[k * d + j];
        }
    }
    return Tensor::from_op(
        n_segments, d, std::move(out), {values, weights}, [segments = std::move(segments), d](detail::Node &self) {
            auto &V = *self.parents[0];
            auto &W = *self.parents[1];
            for (size_t k = 0; k < segments.size(); k++) {
                const double *g = self.grad.data() + segments[k] * d;
                if (detail::wants(V)) {
                    auto &gv = detail::grad_of(V);
                    for (size_t j = 0; j < d; j++) {
                        gv[k * d + j] += W.value[k] * g[j];
                    }
                }
                if (detail::wants(W)) {
                    double s = 0;
                    for (size_t j = 0; j < d; j++) {
                        s += V.value[k * d + j] * g[j];
                    }
                    detail::grad_of(W)[k] += s;
                }
            }
        });
}

inline Tensor mean_rows(const Tensor &x) {
    detail::require(x.rows() > 0, "mean_rows of an empty tensor");
    size_t m = x.rows(), d = x.cols();
    std::vector<double> out(d, 0.0);
    for (size_t i = 0; i < m; i++) {
        for (size_t j = 0; j < d; j++) {
            out[j] += x.values()[i * d + j];
        }
    }
    for (auto &v : out) {
        v /= double(m);
    }
    return Tensor::from_op(1, d, std::move(out), {x}, [m, d](detail::Node &self) {
        auto &gx = detail::grad_of(*self.parents[0]);
        for (size_t i = 0; i < m; i++) {
            for (size_t j = 0; j < d; j++) {
                gx[i * d + j] += self.grad[j] / double(m);
            }
        }
    });
}

inline Tensor sum(const Tensor &x) {
    double s = 0;
    for (double v : x.values()) {
        s += v;
    }
    return Tensor::from_op(1, 1, {s}, {x}, [](detail::Node &self) {
        auto &gx = detail::grad_of(*self.parents[0]);
        for (auto &g : gx) {
            g += self.grad[0];
        }
    });
}

inline Tensor mean(const Tensor &x) {
    detail::require(x.size() > 0, "mean of an empty tensor");
    return scale(sum(x), 1.0 / double(x.size()));
}

/// Per-row normalization with the biased (1/d) variance:
///   y = gain * (x - mu) / sqrt(var + eps) + bias
/// gain and bias are 1 x d rows.
inline Tensor layer_norm(const Tensor &x, const Tensor &gain, const Tensor &bias, double eps = 1e-5) {
    size_t m = x.rows(), d = x.cols();
    detail::require(gain.rows() == 1 && gain.cols() == d, "layer_norm gain shape");
    detail::require(bias.rows() == 1 && bias.cols() == d, "layer_norm bias shape");
    std::vector<double> xhat(m * d);
    std::vector<double> inv_std(m);
    std::vector<double> out(m * d);
    auto xv = x.values();
    for (size_t i = 0; i < m; i++) {
        double mu = 0;
        for (size_t j = 0; j < d; j++) {
            mu += xv[i * d + j];
        }
        mu /= double(d);
        double var = 0;
        for (size_t j = 0; j < d; j++) {
            double c = xv[i * d + j] - mu;
            var += c * c;
        }
        var /= double(d);
        inv_std[i] = 1.0 / std::sqrt(var + eps);
        for (size_t j = 0; j < d; j++) {
            xhat[i * d + j] = (xv[i * d + j] - mu) * inv_std[i];
            out[i * d + j] = gain.values()[j] * xhat[i * d + j] + bias.values()[j];
        }
    }
    return Tensor::from_op(
        m,
        d,
        std::move(out),
        {x, gain, bias},
        [m, d, xhat = std::move(xhat), inv_std = std::move(inv_std)](detail::Node &self) {
            auto &X = *self.parents[0];
            auto &G = *self.parents[1];
            auto &B = *self.parents[2];
            const auto &g = self.grad;
            if (detail::wants(G)) {
                auto &gg = detail::grad_of(G);
                for (size_t i = 0; i < m * d; i++) {
                    gg[i % d] += g[i] * xhat[i];
                }
            }
            if (detail::wants(B)) {
                auto &gb = detail::grad_of(B);
                for (size_t i = 0; i < m * d; i++) {
                    gb[i % d] += g[i];
                }
            }
            if (detail::wants(X)) {
                auto &gx = detail::grad_of(X);
                for (size_t i = 0; i < m; i++) {
                    double mean_dxhat = 0, mean_dxhat_xhat = 0;
                    for (size_t j = 0; j < d; j++) {
                        double dxh = g[i * d + j] * G.value[j];
                        mean_dxhat += dxh;
                        mean_dxhat_xhat += dxh * xhat[i * d + j];
                    }
                    mean_dxhat /= double(d);
                    mean_dxhat_xhat /= double(d);
                    for (size_t j = 0; j < d; j++) {
                        double dxh = g[i * d + j] * G.value[j];
                        gx[i * d + j] += inv_std[i] * (dxh - mean_dxhat - xhat[i * d + j] * mean_dxhat_xhat);
                    }
                }
            }
        });
}

}  // namespace gatdec

#endif
