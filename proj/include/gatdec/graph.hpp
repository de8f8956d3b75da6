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

#ifndef GATDEC_GRAPH_HPP
#define GATDEC_GRAPH_HPP

#include <algorithm>
#include <map>
#include <memory>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "gatdec/errors.hpp"
#include "gatdec/formats.hpp"
#include "json.hpp"

namespace gatdec {

/// Undirected node pair with first < second.
using NodePair = std::pair<size_t, size_t>;

/// All node pairs (i, j), i < j, in lexicographic order.
inline std::vector<NodePair> complete_graph_edges(size_t n_nodes) {
    std::vector<NodePair> edges;
    edges.reserve(n_nodes * (n_nodes > 0 ? n_nodes - 1 : 0) / 2);
    for (size_t i = 0; i < n_nodes; i++) {
        for (size_t j = i + 1; j < n_nodes; j++) {
            edges.emplace_back(i, j);
        }
    }
    return edges;
}

/// Index of (i, j) in complete_graph_edges(n_nodes) order.
inline size_t complete_graph_edge_index(size_t n_nodes, size_t i, size_t j) {
    if (i > j) {
        std::swap(i, j);
    }
    return i * n_nodes - i * (i + 1) / 2 + (j - i - 1);
}

struct DetectorSite {
    size_t node = 0;
    size_t round = 0;
};

/// Spatial nodes recovered from detector coordinates with the time axis
/// (last coordinate) dropped. Edges form the complete graph, no self loops.
struct SpatialLayout {
    std::vector<std::vector<double>> node_coords;  // first-appearance order
    std::vector<double> times;  // distinct, ascending; round index = position
    std::vector<DetectorSite> det_map;  // indexed by detector id
    std::shared_ptr<const std::vector<NodePair>> edges;

    size_t n_nodes() const {
        return node_coords.size();
    }
    size_t rounds() const {
        return times.size();
    }
    size_t n_edges() const {
        return edges ? edges->size() : 0;
    }
    size_t n_detectors() const {
        return det_map.size();
    }
};

inline SpatialLayout extract_layout(const DetectorModel &model) {
    SpatialLayout layout;
    std::vector<const DetectorInfo *> by_id(model.n_detectors, nullptr);
    for (const auto &d : model.detectors) {
        if (d.coords.size() < 2) {
            throw LayoutError(
                "detector D" + std::to_string(d.id) +
                " needs at least one spatial coordinate plus a time coordinate");
        }
        by_id[d.id] = &d;
    }
    for (size_t id = 0; id < by_id.size(); id++) {
        if (by_id[id] == nullptr) {
            throw LayoutError("detector D" + std::to_string(id) + " has no coordinates");
        }
    }

    std::map<std::vector<double>, size_t> node_index;
    std::set<double> time_set;
    std::set<std::vector<double>> seen_full;
    std::vector<size_t> det_node(model.n_detectors);
    for (const auto &d : model.detectors) {
        if (!seen_full.insert(d.coords).second) {
            throw LayoutError("detector D" + std::to_string(d.id) + " duplicates another detector's coordinates");
        }
        std::vector<double> spatial(d.coords.begin(), d.coords.end() - 1);
        auto [it, inserted] = node_index.emplace(spatial, layout.node_coords.size());
        if (inserted) {
            layout.node_coords.push_back(spatial);
        }
        det_node[d.id] = it->second;
        time_set.insert(d.coords.back());
    }
    layout.times.assign(time_set.begin(), time_set.end());
    layout.det_map.resize(model.n_detectors);
    for (size_t id = 0; id < by_id.size(); id++) {
        double t = by_id[id]->coords.back();
        size_t round = size_t(std::lower_bound(layout.times.begin(), layout.times.end(), t) - layout.times.begin());
        layout.det_map[id] = {det_node[id], round};
    }
    layout.edges = std::make_shared<const std::vector<NodePair>>(complete_graph_edges(layout.n_nodes()));
    return layout;
}

/// Teacher edge probabilities plus how each mechanism was assigned.
struct TeacherEdges {
    std::vector<double> probs;  // per edge, layout edge order
    std::vector<size_t> mechanisms_per_edge;
    size_t unassigned = 0;  // projected onto 0, 1 or >2 spatial nodes
};

/// Mechanisms whose detectors project onto exactly two spatial nodes {i, j}
/// are XOR-combined into p_ij. Everything else is counted as unassigned.
inline TeacherEdges teacher_edge_probs(const DetectorModel &model, const SpatialLayout &layout) {
    TeacherEdges out;
    out.probs.assign(layout.n_edges(), 0.0);
    out.mechanisms_per_edge.assign(layout.n_edges(), 0);
    for (const auto &m : model.mechanisms) {
        std::vector<size_t> nodes;
        for (auto d : m.detectors) {
            if (d >= layout.n_detectors()) {
                throw LayoutError("mechanism references D" + std::to_string(d) + " outside the layout");
            }
            nodes.push_back(layout.det_map[d].node);
        }
        std::sort(nodes.begin(), nodes.end());
        nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
        if (nodes.size() != 2) {
            out.unassigned++;
            continue;
        }
        size_t e = complete_graph_edge_index(layout.n_nodes(), nodes[0], nodes[1]);
        double p = out.probs[e];
        double q = m.probability;
        out.probs[e] = p * (1 - q) + q * (1 - p);
        out.mechanisms_per_edge[e]++;
    }
    return out;
}

/// One shot's time-flattened graph. features is row-major n_nodes x rounds.
struct FlatGraph {
    size_t n_nodes = 0;
    size_t rounds = 0;
    std::vector<double> features;
    std::shared_ptr<const std::vector<NodePair>> edges;
    std::vector<double> teacher_probs;
    uint8_t label = 0;

    double feature(size_t node, size_t round) const {
        return features[node * rounds + round];
    }
    size_t n_edges() const {
        return edges ? edges->size() : 0;
    }
};

inline FlatGraph build_flat_graph(
    std::span<const uint8_t> shot, const SpatialLayout &layout, std::span<const double> teacher, uint8_t label) {
    if (shot.size() != layout.n_detectors()) {
        throw DimensionError(
            "shot has " + std::to_string(shot.size()) + " bits but the layout has " +
            std::to_string(layout.n_detectors()) + " detectors");
    }
    if (teacher.size() != layout.n_edges()) {
        throw DimensionError(
            "teacher has " + std::to_string(teacher.size()) + " entries but the layout has " +
            std::to_string(layout.n_edges()) + " edges");
    }
    FlatGraph g;
    g.n_nodes = layout.n_nodes();
    g.rounds = layout.rounds();
    g.features.assign(g.n_nodes * g.rounds, 0.0);
    for (size_t d = 0; d < shot.size(); d++) {
        if (shot[d]) {
            const auto &site = layout.det_map[d];
            g.features[site.node * g.rounds + site.round] = 1.0;
        }
    }
    g.edges = layout.edges;
    g.teacher_probs.assign(teacher.begin(), teacher.end());
    g.label = label ? 1 : 0;
    return g;
}

/// Builds one graph per shot; the label is the last observable column.
inline std::vector<FlatGraph> build_dataset(
    const ShotTable &detections,
    const ShotTable &observables,
    const SpatialLayout &layout,
    std::span<const double> teacher) {
    if (detections.n_shots() != observables.n_shots()) {
        throw DimensionError(
            "detection table has " + std::to_string(detections.n_shots()) + " shots but observable table has " +
            std::to_string(observables.n_shots()));
    }
    if (observables.n_bits() == 0 && observables.n_shots() > 0) {
        throw DimensionError("observable table has no columns");
    }
    std::vector<FlatGraph> out;
    out.reserve(detections.n_shots());
    for (size_t s = 0; s < detections.n_shots(); s++) {
        out.push_back(build_flat_graph(
            detections.row(s), layout, teacher, observables.get(s, observables.n_bits() - 1)));
    }
    return out;
}

inline nlohmann::json to_json(const FlatGraph &g) {
    nlohmann::json features = nlohmann::json::array();
    for (size_t v = 0; v < g.n_nodes; v++) {
        nlohmann::json row = nlohmann::json::array();
        for (size_t t = 0; t < g.rounds; t++) {
            row.push_back(int(g.feature(v, t)));
        }
        features.push_back(row);
    }
    nlohmann::json edges = nlohmann::json::array();
    if (g.edges) {
        for (auto [i, j] : *g.edges) {
            edges.push_back({i, j});
        }
    }
    return {{"features", features}, {"edges", edges}, {"teacher_probs", g.teacher_probs}, {"label", int(g.label)}};
}

}  // namespace gatdec

#endif
