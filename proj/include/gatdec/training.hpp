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


#ifndef GATDEC_TRAINING_HPP
#define GATDEC_TRAINING_HPP

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "gatdec/errors.hpp"
#include "gatdec/graph.hpp"
#include "gatdec/model.hpp"
#include "gatdec/random.hpp"
#include "gatdec/tensor.hpp"
#include "json.hpp"

namespace gatdec {

enum class TrainMode { Baseline, Distill };

inline std::string to_string(TrainMode m) {
    return m == TrainMode::Baseline ? "baseline" : "distill";
}

inline TrainMode parse_train_mode(const std::string &s) {
    if (s == "baseline") {
        return TrainMode::Baseline;
    }
    if (s == "distill") {
        return TrainMode::Distill;
    }
    throw ConfigError("unknown training mode '" + s + "' (expected baseline or distill)");
}

struct AdamOptions {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct TrainConfig {
    TrainMode mode = TrainMode::Baseline;
    double lambda = 0.5;
    AdamOptions adam;
    size_t batch_size = 64;
    size_t epochs = 50;
    double train_fraction = 0.8;
    uint64_t seed_params = 42;
    uint64_t seed_shuffle = 1;
    uint64_t seed_split = 2;
    ModelConfig model;
    /// Worker threads for test-set evaluation; 0 picks hardware concurrency.
    size_t eval_threads = 1;

    void validate() const {
        if (!(lambda >= 0)) {
            throw ConfigError("lambda must be non-negative");
        }
        if (!(train_fraction > 0 && train_fraction < 1)) {
            throw ConfigError("train fraction must lie strictly between 0 and 1");
        }
        if (batch_size == 0) {
            throw ConfigError("batch size must be at least 1");
        }
        if (!(adam.lr > 0) || !(adam.beta1 >= 0 && adam.beta1 < 1) || !(adam.beta2 >= 0 && adam.beta2 < 1) ||
            !(adam.eps > 0)) {
            throw ConfigError("invalid Adam hyperparameters");
        }
        model.validate();
    }
};

inline nlohmann::json to_json(const TrainConfig &c) {
    nlohmann::json model;
    to_json(model, c.model);
    model["seed"] = c.seed_params;
    return {
        {"mode", to_string(c.mode)},
        {"lambda", c.lambda},
        {"lr", c.adam.lr},
        {"beta1", c.adam.beta1},
        {"beta2", c.adam.beta2},
        {"adam_eps", c.adam.eps},
        {"batch", c.batch_size},
        {"epochs", c.epochs},
        {"train_fraction", c.train_fraction},
        {"seed_params", c.seed_params},
        {"seed_shuffle", c.seed_shuffle},
        {"seed_split", c.seed_split},
        {"model", model}};
}

struct EpochRecord {
    size_t epoch = 0;  // 1-based
    double train_loss = 0;
    double test_acc = 0;
    double seconds = 0;
};

struct RunHistory {
    std::vector<EpochRecord> epochs;
    double final_accuracy = 0;
    double total_seconds = 0;
};

/// w_p = N_neg / N_pos.
inline double compute_pos_weight(std::span<const uint8_t> labels) {
    size_t pos = 0;
    for (auto y : labels) {
        pos += y ? 1 : 0;
    }
    if (pos == 0) {
        throw ConfigError("positive-class weight undefined: no positive labels");
    }
    return double(labels.size() - pos) / double(pos);
}

/// -[w_p y log s(x) + (1 - y) log(1 - s(x))], written as
/// w_p y softplus(-x) + (1 - y) softplus(x).
inline Tensor weighted_bce_with_logits(const Tensor &logit, uint8_t y, double pos_weight) {
    if (logit.size() != 1) {
        throw DimensionError("weighted_bce_with_logits expects a scalar logit");
    }
    if (y) {
        return scale(softplus(scale(logit, -1.0)), pos_weight);
    }
    return softplus(logit);
}

/// Mean over edges of (sigmoid(logit_e) - p_e)^2. Zero for an edgeless graph.
inline Tensor distill_mse(const Tensor &edge_logits, std::span<const double> teacher) {
    if (edge_logits.size() != teacher.size()) {
        throw DimensionError(
            "distill_mse: " + std::to_string(edge_logits.size()) + " edge logits vs " +
            std::to_string(teacher.size()) + " teacher probabilities");
    }
    if (teacher.empty()) {
        return Tensor::scalar(0.0);
    }
    Tensor target = Tensor::constant(edge_logits.rows(), edge_logits.cols(), {teacher.begin(), teacher.end()});
    Tensor diff = sub(sigmoid(edge_logits), target);
    return mean(mul(diff, diff));
}

/// Baseline: L_data. Distill: L_data + lambda * L_distill.
inline Tensor total_loss(
    const Tensor &graph_logit,
    uint8_t y,
    double pos_weight,
    const Tensor &edge_logits,
    std::span<const double> teacher,
    const TrainConfig &config) {
    Tensor data = weighted_bce_with_logits(graph_logit, y, pos_weight);
    if (config.mode == TrainMode::Baseline) {
        return data;
    }
    return add(data, scale(distill_mse(edge_logits, teacher), config.lambda));
}

struct AdamState {
    std::vector<double> m;
    std::vector<double> v;
};

/// One bias-corrected Adam update at step t (1-based).
inline void adam_step(
    std::span<double> params,
    std::span<const double> grads,
    AdamState &state,
    const AdamOptions &opt,
    uint64_t t) {
    if (params.size() != grads.size()) {
        throw DimensionError("adam_step: parameter and gradient lengths differ");
    }
    if (t == 0) {
        throw ContractError("adam_step: step counter starts at 1");
    }
    if (state.m.size() != params.size()) {
        state.m.assign(params.size(), 0.0);
        state.v.assign(params.size(), 0.0);
    }
    double c1 = 1.0 - std::pow(opt.beta1, double(t));
    double c2 = 1.0 - std::pow(opt.beta2, double(t));
    for (size_t i = 0; i < params.size(); i++) {
        double g = grads[i];
        state.m[i] = opt.beta1 * state.m[i] + (1.0 - opt.beta1) * g;
        state.v[i] = opt.beta2 * state.v[i] + (1.0 - opt.beta2) * g * g;
        double m_hat = state.m[i] / c1;
        double v_hat = state.v[i] / c2;
        params[i] -= opt.lr * m_hat / (std::sqrt(v_hat) + opt.eps);
    }
}

/// Adam over a fixed list of parameter tensors, reading their accumulated grads.
class AdamOptimizer {
   public:
    AdamOptimizer(std::vector<Tensor> params, AdamOptions options)
        : params_(std::move(params)), options_(options), states_(params_.size()) {
    }

    /// Scales accumulated grads by grad_scale, then updates.
    void step(double grad_scale = 1.0) {
        t_++;
        std::vector<double> g;
        for (size_t k = 0; k < params_.size(); k++) {
            auto &p = params_[k];
            if (p.grad().size() != p.size()) {
                p.zero_grad();
            }
            g.assign(p.grad().begin(), p.grad().end());
            for (auto &x : g) {
                x *= grad_scale;
            }
            adam_step(p.mutable_values(), g, states_[k], options_, t_);
        }
    }

    void zero_grad() {
        for (auto &p : params_) {
            p.zero_grad();
        }
    }

    uint64_t steps() const {
        return t_;
    }

   private:
    std::vector<Tensor> params_;
    AdamOptions options_;
    std::vector<AdamState> states_;
    uint64_t t_ = 0;
};

/// Deterministic split of [0, n) into (train, test) index lists.
inline std::pair<std::vector<size_t>, std::vector<size_t>> split_indices(
    size_t n, double train_fraction, uint64_t seed) {
    std::vector<size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::mt19937_64 rng(seed);
    shuffle_in_place(idx, rng);
    size_t n_train = size_t(std::floor(train_fraction * double(n)));
    if (n_train == 0 || n_train == n) {
        throw ConfigError(
            "split of " + std::to_string(n) + " graphs at fraction " + std::to_string(train_fraction) +
            " leaves an empty train or test set");
    }
    std::vector<size_t> train(idx.begin(), idx.begin() + long(n_train));
    std::vector<size_t> test(idx.begin() + long(n_train), idx.end());
    return {std::move(train), std::move(test)};
}

inline bool predict_label(const FlatGraph &g, const ModelParams &params, const ModelConfig &config) {
    return forward(g, params, config, false).graph_logit.item() > 0;
}

/// Fraction of graphs (selected by index) whose graph logit sign matches the label.
inline double evaluate_accuracy(
    std::span<const FlatGraph> graphs,
    std::span<const size_t> indices,
    const ModelParams &params,
    const ModelConfig &config,
    size_t threads = 1) {
    if (indices.empty()) {
        throw ConfigError("accuracy over an empty set");
    }
    if (threads == 0) {
        threads = std::max<size_t>(1, std::thread::hardware_concurrency());
    }
    threads = std::min(threads, indices.size());
    std::vector<size_t> correct(threads, 0);
    auto work = [&](size_t w) {
        for (size_t k = w; k < indices.size(); k += threads) {
            const auto &g = graphs[indices[k]];
            correct[w] += predict_label(g, params, config) == bool(g.label);
        }
    };
    if (threads == 1) {
        work(0);
    } else {
        std::vector<std::jthread> pool;
        for (size_t w = 0; w < threads; w++) {
            pool.emplace_back(work, w);
        }
    }
    return double(std::accumulate(correct.begin(), correct.end(), size_t{0})) / double(indices.size());
}

struct TrainResult {
    RunHistory history;
    ModelParams params;
    double pos_weight = 0;
    std::vector<size_t> train_indices;
    std::vector<size_t> test_indices;
    /// Flattened parameters after every optimizer step, when requested.
    std::vector<std::vector<double>> trajectory;
};

struct TrainHooks {
    bool record_trajectory = false;
};

/// Mini-batch training: per-graph forward/backward with gradients accumulated
/// over the batch and averaged before each Adam step.
inline TrainResult train(std::span<const FlatGraph> dataset, const TrainConfig &config, TrainHooks hooks = {}) {
    config.validate();
    if (dataset.empty()) {
        throw ConfigError("training dataset is empty");
    }
    TrainResult result;
    std::tie(result.train_indices, result.test_indices) =
        split_indices(dataset.size(), config.train_fraction, config.seed_split);

    std::vector<uint8_t> train_labels;
    for (auto i : result.train_indices) {
        train_labels.push_back(dataset[i].label);
    }
    result.pos_weight = compute_pos_weight(train_labels);

    ModelConfig model_config = config.model;
    model_config.seed = config.seed_params;
    const FlatGraph &first = dataset.front();
    result.params = init_params(model_config, first.rounds, first.n_edges());
    ModelParams &params = result.params;
    AdamOptimizer optimizer(params.trainable(), config.adam);
    optimizer.zero_grad();

    std::mt19937_64 shuffle_rng(config.seed_shuffle);
    std::vector<size_t> order = result.train_indices;
    for (size_t epoch = 1; epoch <= config.epochs; epoch++) {
        auto start = std::chrono::steady_clock::now();
        shuffle_in_place(order, shuffle_rng);
        double loss_sum = 0;
        for (size_t b = 0; b < order.size(); b += config.batch_size) {
            size_t end = std::min(order.size(), b + config.batch_size);
            for (size_t k = b; k < end; k++) {
                const FlatGraph &g = dataset[order[k]];
                DecoderOutput out = forward(g, params, model_config, config.mode == TrainMode::Distill);
                Tensor loss =
                    total_loss(out.graph_logit, g.label, result.pos_weight, out.edge_logits, g.teacher_probs, config);
                loss_sum += loss.item();
                backward(loss);
            }
            optimizer.step(1.0 / double(end - b));
            optimizer.zero_grad();
            if (hooks.record_trajectory) {
                result.trajectory.push_back(params.flatten());
            }
        }
        double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        EpochRecord rec;
        rec.epoch = epoch;
        rec.train_loss = loss_sum / double(order.size());
        rec.seconds = seconds;
        rec.test_acc = evaluate_accuracy(dataset, result.test_indices, params, model_config, config.eval_threads);
        result.history.epochs.push_back(rec);
        result.history.total_seconds += seconds;
    }
    result.history.final_accuracy = result.history.epochs.empty()
                                        ? evaluate_accuracy(
                                              dataset, result.test_indices, params, model_config, config.eval_threads)
                                        : result.history.epochs.back().test_acc;
    return result;
}

inline nlohmann::json history_json(const RunHistory &h, const TrainConfig &config) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto &e : h.epochs) {
        rows.push_back({{"epoch", e.epoch}, {"train_loss", e.train_loss}, {"test_acc", e.test_acc}, {"seconds", e.seconds}});
    }
    return {
        {"config", to_json(config)},
        {"history", rows},
        {"final", {{"accuracy", h.final_accuracy}, {"total_seconds", h.total_seconds}}}};
}

inline std::string history_csv(const RunHistory &h) {
    std::ostringstream out;
    out.precision(17);
    out << "epoch,train_loss,test_acc,seconds\n";
    for (const auto &e : h.epochs) {
        out << e.epoch << "," << e.train_loss << "," << e.test_acc << "," << e.seconds << "\n";
    }
    return out.str();
}

}  // namespace gatdec

#endif
