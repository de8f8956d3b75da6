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


// Dual-head GATv2 decoder over a time-flattened syndrome graph.
//
//   features (n x T)
//     -> GATv2 -> LayerNorm -> ReLU
//     -> GATv2 -> LayerNorm -> ReLU          = H (n x heads*head_dim)
//   graph head: MLP(mean_rows(H))             -> one logit
//   edge head:  MLP([H_i | H_j]) per edge i<j -> one logit per edge
//
// Attention runs over the complete graph plus self loops. Each undirected
// edge carries a fixed, untrained score offset (static_edge_weights) added to
// every head's attention score on that edge in both directions.

#ifndef GATDEC_MODEL_HPP
#define GATDEC_MODEL_HPP

#include <cmath>
#include <cstdint>
#include <cstring>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gatdec/errors.hpp"
#include "gatdec/graph.hpp"
#include "gatdec/random.hpp"
#include "gatdec/tensor.hpp"
#include "json.hpp"

namespace gatdec {

struct ModelConfig {
    size_t heads = 4;
    size_t head_dim = 8;
    size_t graph_hidden = 16;
    size_t edge_hidden = 16;
    double leaky_slope = 0.2;
    double layer_norm_eps = 1e-5;
    /// static_edge_weights are drawn uniform in [-scale, scale].
    double static_weight_scale = 0.1;
    uint64_t seed = 42;

    size_t width() const {
        return heads * head_dim;
    }

    void validate() const {
        if (heads == 0 || head_dim == 0 || graph_hidden == 0 || edge_hidden == 0) {
            throw ConfigError("model widths and head count must be positive");
        }
        if (!(leaky_slope > 0) || !(layer_norm_eps > 0) || static_weight_scale < 0) {
            throw ConfigError("leaky slope and layer norm eps must be positive");
        }
    }
};

inline void to_json(nlohmann::json &j, const ModelConfig &c) {
    j = {{"heads", c.heads},
         {"head_dim", c.head_dim},
         {"graph_hidden", c.graph_hidden},
         {"edge_hidden", c.edge_hidden},
         {"leaky_slope", c.leaky_slope},
         {"layer_norm_eps", c.layer_norm_eps},
         {"static_weight_scale", c.static_weight_scale},
         {"seed", c.seed}};
}

inline void from_json(const nlohmann::json &j, ModelConfig &c) {
    j.at("heads").get_to(c.heads);
    j.at("head_dim").get_to(c.head_dim);
    j.at("graph_hidden").get_to(c.graph_hidden);
    j.at("edge_hidden").get_to(c.edge_hidden);
    j.at("leaky_slope").get_to(c.leaky_slope);
    j.at("layer_norm_eps").get_to(c.layer_norm_eps);
    j.at("static_weight_scale").get_to(c.static_weight_scale);
    j.at("seed").get_to(c.seed);
}

struct GatHead {
    Tensor w_left;   // d_in x head_dim, applied to the destination node
    Tensor w_right;  // d_in x head_dim, applied to the source node and the message
    Tensor attn;     // head_dim x 1
    Tensor bias;     // 1 x head_dim
};

struct GatLayer {
    std::vector<GatHead> heads;
};

struct NormParams {
    Tensor gain;
    Tensor bias;
};

struct MlpParams {
    Tensor w1, b1, w2, b2;
};

struct ModelParams {
    size_t input_dim = 0;
    GatLayer gat1, gat2;
    NormParams norm1, norm2;
    MlpParams graph_head;
    MlpParams edge_head;
    /// One per undirected edge, not trained.
    std::vector<double> static_edge_weights;

    ModelParams() = default;
    ModelParams(const ModelParams &other) : ModelParams(shallow_copy(other)) {
        for_each_tensor([](const std::string &, Tensor &t) { t = t.clone(); });
    }
    ModelParams &operator=(const ModelParams &other) {
        if (this != &other) {
            ModelParams tmp(other);
            *this = std::move(tmp);
        }
        return *this;
    }
    ModelParams(ModelParams &&) = default;
    ModelParams &operator=(ModelParams &&) = default;

    /// Visits every trainable tensor in a fixed order with a stable name.
    template <typename F>
    void for_each_tensor(F &&f) {
        visit(*this, f);
    }
    template <typename F>
    void for_each_tensor(F &&f) const {
        visit(const_cast<ModelParams &>(*this), [&](const std::string &name, Tensor &t) {
            f(name, static_cast<const Tensor &>(t));
        });
    }

    std::vector<Tensor> trainable() const {
        std::vector<Tensor> out;
        for_each_tensor([&](const std::string &, const Tensor &t) { out.push_back(t); });
        return out;
    }

    size_t n_trainable() const {
        size_t n = 0;
        for_each_tensor([&](const std::string &, const Tensor &t) { n += t.size(); });
        return n;
    }

    std::vector<double> flatten() const {
        std::vector<double> out;
        for_each_tensor([&](const std::string &, const Tensor &t) {
            out.insert(out.end(), t.values().begin(), t.values().end());
        });
        return out;
    }

    void unflatten(std::span<const double> flat) {
        if (flat.size() != n_trainable()) {
            throw DimensionError(
                "unflatten given " + std::to_string(flat.size()) + " values for " + std::to_string(n_trainable()) +
                " parameters");
        }
        size_t k = 0;
        for_each_tensor([&](const std::string &, Tensor &t) {
            auto v = t.mutable_values();
            std::copy_n(flat.begin() + k, v.size(), v.begin());
            k += v.size();
        });
    }

    void zero_grad() {
        for_each_tensor([](const std::string &, Tensor &t) { t.zero_grad(); });
    }

   private:
    static ModelParams shallow_copy(const ModelParams &other) {
        ModelParams p;
        p.input_dim = other.input_dim;
        p.gat1 = other.gat1;
        p.gat2 = other.gat2;
        p.norm1 = other.norm1;
        p.norm2 = other.norm2;
        p.graph_head = other.graph_head;
        p.edge_head = other.edge_head;
        p.static_edge_weights = other.static_edge_weights;
        return p;
    }

    template <typename F>
    static void visit(ModelParams &p, F &&f) {
        auto gat = [&](const std::string &prefix, GatLayer &layer) {
            for (size_t h = 0; h < layer.heads.size(); h++) {
                std::string n = prefix + ".head" + std::to_string(h);
                f(n + ".w_left", layer.heads[h].w_left);
                f(n + ".w_right", layer.heads[h].w_right);
                f(n + ".attn", layer.heads[h].attn);
                f(n + ".bias", layer.heads[h].bias);
            }
        };
        auto mlp = [&](const std::string &n, MlpParams &m) {
            f(n + ".w1", m.w1);
            f(n + ".b1", m.b1);
            f(n + ".w2", m.w2);
            f(n + ".b2", m.b2);
        };
        gat("gat1", p.gat1);
        f("norm1.gain", p.norm1.gain);
        f("norm1.bias", p.norm1.bias);
        gat("gat2", p.gat2);
        f("norm2.gain", p.norm2.gain);
        f("norm2.bias", p.norm2.bias);
        mlp("graph_head", p.graph_head);
        mlp("edge_head", p.edge_head);
    }
};

/// Glorot-uniform bound.
inline double glorot_bound(size_t fan_in, size_t fan_out) {
    return std::sqrt(6.0 / double(fan_in + fan_out));
}

namespace detail {

inline Tensor glorot(std::mt19937_64 &rng, size_t rows, size_t cols) {
    double s = glorot_bound(rows, cols);
    std::vector<double> v(rows * cols);
    for (auto &x : v) {
        x = uniform(rng, -s, s);
    }
    return Tensor::parameter(rows, cols, std::move(v));
}

inline GatLayer init_gat(std::mt19937_64 &rng, size_t d_in, const ModelConfig &c) {
    GatLayer layer;
    for (size_t h = 0; h < c.heads; h++) {
        GatHead head;
        head.w_left = glorot(rng, d_in, c.head_dim);
        head.w_right = glorot(rng, d_in, c.head_dim);
        head.attn = glorot(rng, c.head_dim, 1);
        head.bias = Tensor::zeros(1, c.head_dim, true);
        layer.heads.push_back(std::move(head));
    }
    return layer;
}

inline MlpParams init_mlp(std::mt19937_64 &rng, size_t d_in, size_t hidden) {
    MlpParams m;
    m.w1 = glorot(rng, d_in, hidden);
    m.b1 = Tensor::zeros(1, hidden, true);
    m.w2 = glorot(rng, hidden, 1);
    m.b2 = Tensor::zeros(1, 1, true);
    return m;
}

inline NormParams init_norm(size_t d) {
    return {Tensor::parameter(1, d, std::vector<double>(d, 1.0)), Tensor::zeros(1, d, true)};
}

}  // namespace detail

/// Deterministic in config.seed. Biases start at zero, LayerNorm at identity.
inline ModelParams init_params(const ModelConfig &config, size_t input_dim, size_t n_edges) {
    config.validate();
    if (input_dim == 0) {
        throw ConfigError("input dimension (rounds) must be positive");
    }
    std::mt19937_64 rng(config.seed);
    ModelParams p;
    p.input_dim = input_dim;
    size_t w = config.width();
    p.gat1 = detail::init_gat(rng, input_dim, config);
    p.norm1 = detail::init_norm(w);
    p.gat2 = detail::init_gat(rng, w, config);
    p.norm2 = detail::init_norm(w);
    p.graph_head = detail::init_mlp(rng, w, config.graph_hidden);
    p.edge_head = detail::init_mlp(rng, 2 * w, config.edge_hidden);
    p.static_edge_weights.resize(n_edges);
    for (auto &s : p.static_edge_weights) {
        s = uniform(rng, -config.static_weight_scale, config.static_weight_scale);
    }
    return p;
}

inline ModelParams init_params(const ModelConfig &config, const SpatialLayout &layout) {
    return init_params(config, layout.rounds(), layout.n_edges());
}

/// Message-passing structure: the complete graph in both directions plus
/// self loops, grouped by destination node with sources ascending.
struct DirectedEdges {
    std::vector<size_t> src;
    std::vector<size_t> dst;
    /// Undirected edge index, or npos for a self loop.
    std::vector<size_t> undirected;

    static constexpr size_t npos = std::numeric_limits<size_t>::max();

    size_t size() const {
        return src.size();
    }
};

inline DirectedEdges build_directed_edges(size_t n_nodes, std::span<const NodePair> edges) {
    std::vector<std::vector<size_t>> lookup(n_nodes, std::vector<size_t>(n_nodes, DirectedEdges::npos));
    for (size_t e = 0; e < edges.size(); e++) {
        auto [i, j] = edges[e];
        if (i >= n_nodes || j >= n_nodes || i == j) {
            throw DimensionError("edge (" + std::to_string(i) + ", " + std::to_string(j) + ") invalid for graph");
        }
        lookup[i][j] = e;
        lookup[j][i] = e;
    }
    DirectedEdges out;
    for (size_t i = 0; i < n_nodes; i++) {
        for (size_t j = 0; j < n_nodes; j++) {
            if (j == i || lookup[i][j] != DirectedEdges::npos) {
                out.dst.push_back(i);
                out.src.push_back(j);
                out.undirected.push_back(j == i ? DirectedEdges::npos : lookup[i][j]);
            }
        }
    }
    return out;
}

/// One GATv2 layer. For every directed edge j -> i and each head,
///   e_ij = attn . LeakyReLU(W_left h_i + W_right h_j) + static_ij
///   h'_i = sum_j softmax_i(e)_ij W_right h_j + bias
/// with head outputs concatenated. static_scores is per directed edge.
/// When `attention` is non-null the per-head coefficient columns are appended.
inline Tensor gatv2_layer(
    const Tensor &h,
    const DirectedEdges &edges,
    const GatLayer &layer,
    std::span<const double> static_scores,
    double leaky_slope,
    std::vector<Tensor> *attention = nullptr) {
    if (static_scores.size() != edges.size()) {
        throw DimensionError("static_scores length must equal the directed edge count");
    }
    if (layer.heads.empty()) {
        throw DimensionError("GATv2 layer without heads");
    }
    for (auto i : edges.dst) {
        if (i >= h.rows()) {
            throw DimensionError("edge destination outside the node feature matrix");
        }
    }
    size_t n = h.rows();
    Tensor offsets = Tensor::constant(edges.size(), 1, {static_scores.begin(), static_scores.end()});
    Tensor out;
    for (const auto &head : layer.heads) {
        if (head.w_left.rows() != h.cols() || head.w_right.rows() != h.cols()) {
            throw DimensionError(
                "GATv2 weights expect " + std::to_string(head.w_left.rows()) + " input features, got " +
                std::to_string(h.cols()));
        }
        Tensor xl = matmul(h, head.w_left);
        Tensor xr = matmul(h, head.w_right);
        Tensor xl_dst = gather_rows(xl, edges.dst);
        Tensor xr_src = gather_rows(xr, edges.src);
        Tensor score = add(matmul(leaky_relu(add(xl_dst, xr_src), leaky_slope), head.attn), offsets);
        Tensor alpha = segment_softmax(score, edges.dst, n);
        if (attention != nullptr) {
            attention->push_back(alpha);
        }
        Tensor head_out = add(segment_weighted_sum(xr_src, alpha, edges.dst, n), head.bias);
        out = out.defined() ? concat_cols(out, head_out) : head_out;
    }
    return out;
}

struct DecoderOutput {
    Tensor graph_logit;  // 1 x 1
    Tensor edge_logits;  // n_edges x 1, in FlatGraph edge order; 0 x 1 when skipped
    Tensor embeddings;   // n x width, after the second GAT block
};

inline Tensor mlp_forward(const Tensor &x, const MlpParams &m) {
    return add(matmul(relu(add(matmul(x, m.w1), m.b1)), m.w2), m.b2);
}

/// Set with_edge_head = false to skip the edge head (edge_logits is then 0 x 1).
inline DecoderOutput forward(
    const FlatGraph &g, const ModelParams &params, const ModelConfig &config, bool with_edge_head = true) {
    if (g.rounds != params.input_dim) {
        throw DimensionError(
            "graph has " + std::to_string(g.rounds) + " rounds but the model expects " +
            std::to_string(params.input_dim));
    }
    if (g.n_nodes == 0) {
        throw DimensionError("graph has no nodes");
    }
    std::span<const NodePair> edge_list;
    if (g.edges) {
        edge_list = *g.edges;
    }
    if (edge_list.size() != params.static_edge_weights.size()) {
        throw DimensionError(
            "graph has " + std::to_string(edge_list.size()) + " edges but the model has " +
            std::to_string(params.static_edge_weights.size()) + " static edge weights");
    }
    DirectedEdges directed = build_directed_edges(g.n_nodes, edge_list);
    std::vector<double> static_scores(directed.size(), 0.0);
    for (size_t k = 0; k < directed.size(); k++) {
        if (directed.undirected[k] != DirectedEdges::npos) {
            static_scores[k] = params.static_edge_weights[directed.undirected[k]];
        }
    }

    Tensor x = Tensor::constant(g.n_nodes, g.rounds, g.features);
    Tensor h = gatv2_layer(x, directed, params.gat1, static_scores, config.leaky_slope);
    h = relu(layer_norm(h, params.norm1.gain, params.norm1.bias, config.layer_norm_eps));
    h = gatv2_layer(h, directed, params.gat2, static_scores, config.leaky_slope);
    h = relu(layer_norm(h, params.norm2.gain, params.norm2.bias, config.layer_norm_eps));

    DecoderOutput out;
    out.embeddings = h;
    out.graph_logit = mlp_forward(mean_rows(h), params.graph_head);
    if (!with_edge_head) {
        out.edge_logits = Tensor::zeros(0, 1);
        return out;
    }
    std::vector<size_t> left, right;
    for (auto [i, j] : edge_list) {
        left.push_back(i);
        right.push_back(j);
    }
    Tensor pair = concat_cols(gather_rows(h, std::move(left)), gather_rows(h, std::move(right)));
    out.edge_logits = mlp_forward(pair, params.edge_head);
    return out;
}

// Checkpoint layout: one line of JSON describing config and tensor shapes,
// then the trainable values followed by the static edge weights as raw
// little-endian IEEE-754 doubles.

namespace detail {

inline void put_f64(std::string &out, double v) {
    uint64_t bits;
    std::memcpy(&bits, &v, 8);
    for (int k = 0; k < 8; k++) {
        out.push_back(char((bits >> (8 * k)) & 0xFF));
    }
}

inline double get_f64(const unsigned char *p) {
    uint64_t bits = 0;
    for (int k = 0; k < 8; k++) {
        bits |= uint64_t(p[k]) << (8 * k);
    }
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
}

}  // namespace detail

inline std::string serialize_checkpoint(const ModelParams &params, const ModelConfig &config) {
    nlohmann::json tensors = nlohmann::json::array();
    params.for_each_tensor([&](const std::string &name, const Tensor &t) {
        tensors.push_back({{"name", name}, {"shape", {t.rows(), t.cols()}}});
    });
    nlohmann::json header = {
        {"format", "gatdec-checkpoint"},
        {"version", 1},
        {"config", config},
        {"seed", config.seed},
        {"input_dim", params.input_dim},
        {"tensors", tensors},
        {"n_trainable", params.n_trainable()},
        {"n_static_edge_weights", params.static_edge_weights.size()}};
    std::string out = header.dump() + "\n";
    for (double v : params.flatten()) {
        detail::put_f64(out, v);
    }
    for (double v : params.static_edge_weights) {
        detail::put_f64(out, v);
    }
    return out;
}

inline std::pair<ModelParams, ModelConfig> parse_checkpoint(std::string_view data) {
    size_t nl = data.find('\n');
    if (nl == std::string_view::npos) {
        throw FormatError("checkpoint has no header line");
    }
    nlohmann::json header;
    try {
        header = nlohmann::json::parse(data.substr(0, nl));
    } catch (const nlohmann::json::exception &e) {
        throw FormatError(std::string("checkpoint header is not JSON: ") + e.what());
    }
    if (header.value("format", "") != "gatdec-checkpoint") {
        throw FormatError("not a gatdec checkpoint");
    }
    ModelConfig config = header.at("config").get<ModelConfig>();
    size_t input_dim = header.at("input_dim").get<size_t>();
    size_t n_static = header.at("n_static_edge_weights").get<size_t>();
    ModelParams params = init_params(config, input_dim, n_static);

    size_t k = 0;
    auto expected = header.at("tensors");
    bool shapes_ok = expected.size() == params.trainable().size();
    params.for_each_tensor([&](const std::string &name, const Tensor &t) {
        if (!shapes_ok || k >= expected.size()) {
            shapes_ok = false;
            return;
        }
        const auto &e = expected[k++];
        shapes_ok &= e.at("name").get<std::string>() == name &&
                     e.at("shape")[0].get<size_t>() == t.rows() && e.at("shape")[1].get<size_t>() == t.cols();
    });
    if (!shapes_ok) {
        throw FormatError("checkpoint tensor shapes do not match its config");
    }

    size_t n_values = params.n_trainable() + n_static;
    std::string_view body = data.substr(nl + 1);
    if (body.size() != n_values * 8) {
        throw FormatError(
            "checkpoint body has " + std::to_string(body.size()) + " bytes, expected " + std::to_string(n_values * 8));
    }
    auto *bytes = reinterpret_cast<const unsigned char *>(body.data());
    std::vector<double> flat(params.n_trainable());
    for (size_t i = 0; i < flat.size(); i++) {
        flat[i] = detail::get_f64(bytes + 8 * i);
    }
    params.unflatten(flat);
    for (size_t i = 0; i < n_static; i++) {
        params.static_edge_weights[i] = detail::get_f64(bytes + 8 * (flat.size() + i));
    }
    return {std::move(params), config};
}

}  // namespace gatdec

#endif
