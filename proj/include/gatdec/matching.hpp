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


// Minimum-weight perfect matching reference decoder.
//
// Detectors are nodes, plus one virtual boundary node reached by
// single-detector mechanisms. Edge weights are ln((1 - p) / p). Defects are
// paired exactly with a bitmask dynamic program, so the decoder is limited
// to kMaxDefects fired detectors per shot.

#ifndef GATDEC_MATCHING_HPP
#define GATDEC_MATCHING_HPP

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <queue>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gatdec/errors.hpp"
#include "gatdec/formats.hpp"
#include "json.hpp"

namespace gatdec {

inline constexpr size_t kMaxDefects = 16;
inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

struct DecodingEdge {
    size_t u = 0;
    size_t v = 0;  // v == boundary for boundary edges; u < v otherwise
    double probability = 0;
    double weight = 0;
    uint64_t observables = 0;
    double dominant_probability = 0;
};

struct DecodingGraph {
    size_t n_detectors = 0;
    size_t n_observables = 0;
    std::vector<DecodingEdge> edges;
    /// (neighbor, edge index) per node, including the boundary node.
    std::vector<std::vector<std::pair<size_t, size_t>>> adjacency;

    size_t boundary() const {
        return n_detectors;
    }
    size_t n_nodes() const {
        return n_detectors + 1;
    }
};

inline double edge_weight(double p) {
    return std::log((1.0 - p) / p);
}

inline DecodingGraph build_decoding_graph(const DetectorModel &model) {
    if (model.n_observables > 64) {
        throw UnsupportedModelError(
            "matching decoder supports at most 64 observables, model has " + std::to_string(model.n_observables));
    }
    DecodingGraph g;
    g.n_detectors = model.n_detectors;
    g.n_observables = model.n_observables;
    std::map<std::pair<size_t, size_t>, size_t> index;
    std::vector<size_t> offending;
    for (size_t k = 0; k < model.mechanisms.size(); k++) {
        const auto &m = model.mechanisms[k];
        if (m.probability >= 0.5) {
            throw ValidationError(
                "mechanism " + std::to_string(k) + " has p=" + std::to_string(m.probability) +
                " >= 0.5; matching weights would be non-positive");
        }
        if (m.detectors.empty() || m.detectors.size() > 2) {
            offending.push_back(k);
            continue;
        }
        if (m.probability <= 0) {
            continue;
        }
        uint64_t mask = 0;
        for (auto o : m.observables) {
            mask ^= uint64_t(1) << o;
        }
        size_t u = m.detectors[0];
        size_t v = m.detectors.size() == 2 ? m.detectors[1] : g.boundary();
        auto [it, inserted] = index.emplace(std::make_pair(u, v), g.edges.size());
        if (inserted) {
            g.edges.push_back({u, v, m.probability, 0.0, mask, m.probability});
            continue;
        }
        auto &e = g.edges[it->second];
        e.probability = e.probability * (1 - m.probability) + m.probability * (1 - e.probability);
        if (m.probability > e.dominant_probability) {
            e.dominant_probability = m.probability;
            e.observables = mask;
        }
    }
    if (!offending.empty()) {
        std::string list;
        for (size_t k = 0; k < offending.size() && k < 10; k++) {
            list += (k ? ", " : "") + std::to_string(offending[k]);
        }
        if (offending.size() > 10) {
            list += ", ...";
        }
        throw UnsupportedModelError(
            std::to_string(offending.size()) +
            " mechanism(s) do not touch exactly 1 or 2 detectors (indices " + list + ")");
    }
    g.adjacency.resize(g.n_nodes());
    for (size_t k = 0; k < g.edges.size(); k++) {
        auto &e = g.edges[k];
        e.weight = edge_weight(e.probability);
        g.adjacency[e.u].emplace_back(e.v, k);
        g.adjacency[e.v].emplace_back(e.u, k);
    }
    return g;
}

/// Shortest-path data between the defects of one shot. kInfinity marks
/// unreachable pairs.
struct DefectDistances {
    std::vector<size_t> defects;
    std::vector<double> pair;  // k x k
    std::vector<uint64_t> pair_mask;
    std::vector<double> boundary;
    std::vector<uint64_t> boundary_mask;

    size_t size() const {
        return defects.size();
    }
    double between(size_t a, size_t b) const {
        return pair[a * defects.size() + b];
    }
};

struct ShortestPaths {
    std::vector<double> dist;
    std::vector<uint64_t> mask;
    std::vector<std::vector<size_t>> path;
};

/// Dijkstra from `source`. The boundary node is a sink: paths end there but
/// never pass through it. Equal-length paths resolve to the lexicographically
/// smallest node sequence.
inline ShortestPaths shortest_paths_from(const DecodingGraph &g, size_t source) {
    size_t n = g.n_nodes();
    ShortestPaths sp;
    sp.dist.assign(n, kInfinity);
    sp.mask.assign(n, 0);
    sp.path.assign(n, {});
    std::vector<bool> done(n, false);
    using Item = std::pair<double, size_t>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> queue;
    sp.dist[source] = 0;
    sp.path[source] = {source};
    queue.emplace(0.0, source);
    while (!queue.empty()) {
        auto [d, u] = queue.top();
        queue.pop();
        if (done[u] || d > sp.dist[u]) {
            continue;
        }
        done[u] = true;
        if (u == g.boundary()) {
            continue;
        }
        for (auto [v, k] : g.adjacency[u]) {
            if (done[v]) {
                continue;
            }
            double cand = d + g.edges[k].weight;
            bool better = cand < sp.dist[v];
            if (!better && cand == sp.dist[v]) {
                std::vector<size_t> p = sp.path[u];
                p.push_back(v);
                better = p < sp.path[v];
            }
            if (better) {
                sp.dist[v] = cand;
                sp.mask[v] = sp.mask[u] ^ g.edges[k].observables;
                sp.path[v] = sp.path[u];
                sp.path[v].push_back(v);
                queue.emplace(cand, v);
            }
        }
    }
    return sp;
}

inline DefectDistances all_pairs_defect_distances(const DecodingGraph &g, std::span<const size_t> defects) {
    DefectDistances out;
    out.defects.assign(defects.begin(), defects.end());
    size_t k = defects.size();
    out.pair.assign(k * k, kInfinity);
    out.pair_mask.assign(k * k, 0);
    out.boundary.assign(k, kInfinity);
    out.boundary_mask.assign(k, 0);
    for (size_t a = 0; a < k; a++) {
        if (defects[a] >= g.n_detectors) {
            throw DimensionError("defect D" + std::to_string(defects[a]) + " outside the decoding graph");
        }
        ShortestPaths sp = shortest_paths_from(g, defects[a]);
        for (size_t b = 0; b < k; b++) {
            out.pair[a * k + b] = a == b ? 0.0 : sp.dist[defects[b]];
            out.pair_mask[a * k + b] = a == b ? 0 : sp.mask[defects[b]];
        }
        out.boundary[a] = sp.dist[g.boundary()];
        out.boundary_mask[a] = sp.mask[g.boundary()];
    }
    return out;
}

inline constexpr size_t kBoundaryPartner = std::numeric_limits<size_t>::max();

/// Pairs of local defect indices; second == kBoundaryPartner for a boundary match.
struct Matching {
    std::vector<std::pair<size_t, size_t>> pairs;
    double weight = 0;
};

/// Total weight of a pairing, summed in ascending order of the first index.
inline double pairing_weight(const DefectDistances &d, std::vector<std::pair<size_t, size_t>> pairs) {
    std::sort(pairs.begin(), pairs.end());
    double w = 0;
    for (auto [a, b] : pairs) {
        w += b == kBoundaryPartner ? d.boundary[a] : d.between(a, b);
    }
    return w;
}

/// Exact minimum-weight perfect matching where each defect pairs with another
/// defect or with the boundary. Bitmask DP over defect subsets.
inline Matching min_weight_matching(const DefectDistances &d) {
    size_t k = d.size();
    if (k > kMaxDefects) {
        throw CapacityError(
            std::to_string(k) + " defects exceed the exact matcher's limit of " + std::to_string(kMaxDefects));
    }
    size_t full = (size_t(1) << k) - 1;
    std::vector<double> best(full + 1, kInfinity);
    std::vector<uint32_t> choice(full + 1, 0);  // partner of the lowest defect, k = boundary
    best[0] = 0;
    for (size_t mask = 1; mask <= full; mask++) {
        size_t i = size_t(std::countr_zero(mask));
        size_t rest = mask & ~(size_t(1) << i);
        double b = best[rest] + d.boundary[i];
        if (b < best[mask]) {
            best[mask] = b;
            choice[mask] = uint32_t(k);
        }
        for (size_t j = i + 1; j < k; j++) {
            if (!(rest >> j & 1)) {
                continue;
            }
            double c = best[rest & ~(size_t(1) << j)] + d.between(i, j);
            if (c < best[mask]) {
                best[mask] = c;
                choice[mask] = uint32_t(j);
            }
        }
    }
    if (!(best[full] < kInfinity)) {
        throw ValidationError("defects admit no perfect matching in the decoding graph");
    }
    Matching m;
    for (size_t mask = full; mask != 0;) {
        size_t i = size_t(std::countr_zero(mask));
        size_t j = choice[mask];
        mask &= ~(size_t(1) << i);
        if (j == k) {
            m.pairs.emplace_back(i, kBoundaryPartner);
        } else {
            m.pairs.emplace_back(i, j);
            mask &= ~(size_t(1) << j);
        }
    }
    m.weight = pairing_weight(d, m.pairs);
    return m;
}

/// Predicted observable flips as a bit mask (bit o = observable o).
inline uint64_t decode(const DecodingGraph &g, std::span<const uint8_t> syndrome) {
    if (syndrome.size() != g.n_detectors) {
        throw DimensionError(
            "syndrome has " + std::to_string(syndrome.size()) + " bits, graph has " + std::to_string(g.n_detectors) +
            " detectors");
    }
    std::vector<size_t> defects;
    for (size_t k = 0; k < syndrome.size(); k++) {
        if (syndrome[k]) {
            defects.push_back(k);
        }
    }
    if (defects.empty()) {
        return 0;
    }
    if (defects.size() > kMaxDefects) {
        throw CapacityError(
            std::to_string(defects.size()) + " defects exceed the exact matcher's limit of " +
            std::to_string(kMaxDefects));
    }
    DefectDistances d = all_pairs_defect_distances(g, defects);
    Matching m = min_weight_matching(d);
    uint64_t prediction = 0;
    for (auto [a, b] : m.pairs) {
        prediction ^= b == kBoundaryPartner ? d.boundary_mask[a] : d.pair_mask[a * d.size() + b];
    }
    return prediction;
}

struct EvalReport {
    size_t shots = 0;
    double accuracy = 0;
    double error_rate = 0;
    double mean_defects_per_shot = 0;
};

inline EvalReport evaluate(const DecodingGraph &g, const ShotTable &detections, const ShotTable &observables) {
    if (detections.n_shots() != observables.n_shots()) {
        throw DimensionError("detection and observable tables have different shot counts");
    }
    if (observables.n_bits() != g.n_observables) {
        throw DimensionError(
            "observable table has " + std::to_string(observables.n_bits()) + " columns, model has " +
            std::to_string(g.n_observables) + " observables");
    }
    EvalReport r;
    r.shots = detections.n_shots();
    size_t correct = 0;
    size_t defects = 0;
    for (size_t s = 0; s < r.shots; s++) {
        auto row = detections.row(s);
        for (auto b : row) {
            defects += b;
        }
        uint64_t actual = 0;
        for (size_t o = 0; o < observables.n_bits(); o++) {
            actual |= uint64_t(observables.get(s, o)) << o;
        }
        correct += decode(g, row) == actual;
    }
    if (r.shots > 0) {
        r.accuracy = double(correct) / double(r.shots);
        r.error_rate = 1.0 - r.accuracy;
        r.mean_defects_per_shot = double(defects) / double(r.shots);
    }
    return r;
}

inline nlohmann::json to_json(const EvalReport &r) {
    return {
        {"shots", r.shots},
        {"accuracy", r.accuracy},
        {"error_rate", r.error_rate},
        {"mean_defects_per_shot", r.mean_defects_per_shot}};
}

}  // namespace gatdec

#endif
