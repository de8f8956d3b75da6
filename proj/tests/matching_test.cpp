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


#include "gatdec/matching.hpp"

#include <cmath>
#include <random>

#include "gatdec/sampler.hpp"
#include "gtest/gtest.h"
#include "oracles.hpp"

using namespace gatdec;

namespace {

DecodingGraph graph_of(const std::string &dem) {
    return build_decoding_graph(parse_dem(dem));
}

struct RandomGraph {
    DetectorModel model;
    std::vector<oracle::WeightedEdge> edges;  // boundary = n_detectors
};

RandomGraph random_graph(std::mt19937_64 &rng, size_t n, double density) {
    RandomGraph r;
    r.model.n_detectors = n;
    r.model.n_observables = 3;
    std::uniform_real_distribution<double> up(0.01, 0.45), coin(0, 1);
    std::uniform_int_distribution<int> obs(0, 7);
    auto add = [&](size_t u, size_t v, bool boundary) {
        ErrorMechanism m;
        m.probability = up(rng);
        m.detectors = boundary ? std::vector<size_t>{u} : std::vector<size_t>{u, v};
        uint64_t mask = uint64_t(obs(rng));
        for (size_t o = 0; o < 3; o++) {
            if (mask >> o & 1) {
                m.observables.push_back(o);
            }
        }
        r.model.mechanisms.push_back(m);
        r.edges.push_back({u, boundary ? n : v, edge_weight(m.probability), mask});
    };
    for (size_t u = 0; u < n; u++) {
        for (size_t v = u + 1; v < n; v++) {
            if (coin(rng) < density) {
                add(u, v, false);
            }
        }
        if (coin(rng) < 0.3) {
            add(u, n, true);
        }
    }
    return r;
}

DefectDistances random_distances(std::mt19937_64 &rng, size_t k) {
    std::uniform_real_distribution<double> w(0.1, 10.0);
    DefectDistances d;
    d.defects.resize(k);
    d.pair.assign(k * k, 0.0);
    d.pair_mask.assign(k * k, 0);
    d.boundary.resize(k);
    d.boundary_mask.assign(k, 0);
    for (size_t a = 0; a < k; a++) {
        d.defects[a] = a;
        d.boundary[a] = w(rng);
        for (size_t b = a + 1; b < k; b++) {
            d.pair[a * k + b] = d.pair[b * k + a] = w(rng);
        }
    }
    return d;
}

}  // namespace

TEST(edge_weight, examples) {
    EXPECT_NEAR(edge_weight(0.1), std::log(9.0), 1e-15);
    EXPECT_NEAR(edge_weight(0.26), std::log(74.0 / 26.0), 1e-15);
    double near_half = edge_weight(0.5 - 1e-9);
    EXPECT_GT(near_half, 0.0);
    EXPECT_LT(near_half, 1e-8);
}

TEST(decoding_graph, merges_parallel_mechanisms) {
    DecodingGraph g = graph_of("error(0.1) D0 D1\nerror(0.2) D0 D1 L0\nerror(0.05) D1\n");
    ASSERT_EQ(g.edges.size(), 2u);
    EXPECT_NEAR(g.edges[0].probability, 0.26, 1e-15);
    EXPECT_NEAR(g.edges[0].weight, std::log(74.0 / 26.0), 1e-14);
    EXPECT_EQ(g.edges[0].observables, 1u);
    EXPECT_EQ(g.edges[1].v, g.boundary());
    EXPECT_EQ(g.n_nodes(), 3u);
}

TEST(decoding_graph, rejects_unsupported_models) {
    EXPECT_THROW(graph_of("error(0.5) D0 D1\n"), ValidationError);
    EXPECT_THROW(graph_of("error(0.1) D0 D1 D2\n"), UnsupportedModelError);
    EXPECT_THROW(graph_of("error(0.1) L0\n"), UnsupportedModelError);
    EXPECT_THROW(graph_of("error(0.1) D0 L64\n"), UnsupportedModelError);
    EXPECT_EQ(graph_of("error(0) D0 D1\nerror(0.1) D0\n").edges.size(), 1u);
}

TEST(shortest_paths, chain_distance_and_mask) {
    DecodingGraph g = graph_of("error(0.1) D0 D1 L0\nerror(0.1) D1 D2\nerror(0.1) D2 D3 L0\nerror(0.1) D0\n");
    std::vector<size_t> defects{0, 3};
    DefectDistances d = all_pairs_defect_distances(g, defects);
    EXPECT_NEAR(d.between(0, 1), 3 * std::log(9.0), 1e-14);
    EXPECT_EQ(d.pair_mask[1], 0u);
    EXPECT_NEAR(d.boundary[1], 4 * std::log(9.0), 1e-14);
    EXPECT_EQ(d.boundary_mask[1], 0u);
    EXPECT_EQ(d.boundary_mask[0], 0u);
}

TEST(shortest_paths, boundary_is_not_a_shortcut) {
    DecodingGraph g = graph_of("error(0.4) D0\nerror(0.4) D1\nerror(0.01) D0 D1\n");
    std::vector<size_t> defects{0, 1};
    DefectDistances d = all_pairs_defect_distances(g, defects);
    EXPECT_NEAR(d.between(0, 1), std::log(99.0), 1e-14);
    EXPECT_NEAR(d.boundary[0], std::log(1.5), 1e-15);
}

TEST(shortest_paths, unreachable_is_infinite) {
    DecodingGraph g = graph_of("error(0.1) D0 D1\nerror(0.1) D2 D3\n");
    std::vector<size_t> defects{0, 2};
    DefectDistances d = all_pairs_defect_distances(g, defects);
    EXPECT_EQ(d.between(0, 1), kInfinity);
    EXPECT_EQ(d.boundary[0], kInfinity);
    EXPECT_THROW(min_weight_matching(d), ValidationError);
}

TEST(shortest_paths, random_graphs_match_brute_force) {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 40; trial++) {
        size_t n = 10;
        RandomGraph r = random_graph(rng, n, 0.3);
        DecodingGraph g = build_decoding_graph(r.model);
        std::vector<size_t> defects(n);
        std::iota(defects.begin(), defects.end(), 0);
        DefectDistances d = all_pairs_defect_distances(g, defects);
        for (size_t a = 0; a < n; a++) {
            for (size_t b = 0; b <= n; b++) {
                if (a == b) {
                    continue;
                }
                auto [dist, mask] = oracle::brute_force_shortest(n + 1, r.edges, a, b, n);
                double got = b == n ? d.boundary[a] : d.between(a, b);
                uint64_t got_mask = b == n ? d.boundary_mask[a] : d.pair_mask[a * n + b];
                if (std::isinf(dist)) {
                    ASSERT_EQ(got, kInfinity);
                    continue;
                }
                ASSERT_NEAR(got, dist, 1e-12) << "trial " << trial << " " << a << "->" << b;
                ASSERT_EQ(got_mask, mask) << "trial " << trial << " " << a << "->" << b;
            }
        }
    }
}

TEST(matching, dp_matches_exhaustive_six_defects) {
    std::mt19937_64 rng(3);
    DefectDistances d = random_distances(rng, 6);
    Matching m = min_weight_matching(d);
    EXPECT_EQ(m.weight, oracle::exhaustive_min_matching(d.pair, d.boundary, 6));
    std::vector<bool> covered(6, false);
    for (auto [a, b] : m.pairs) {
        ASSERT_FALSE(covered[a]);
        covered[a] = true;
        if (b != kBoundaryPartner) {
            ASSERT_FALSE(covered[b]);
            covered[b] = true;
        }
    }
    EXPECT_EQ(std::count(covered.begin(), covered.end(), true), 6);
}

TEST(matching, dp_matches_exhaustive_random) {
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 100; trial++) {
        size_t k = size_t(trial % 9);
        DefectDistances d = random_distances(rng, k);
        ASSERT_EQ(min_weight_matching(d).weight, oracle::exhaustive_min_matching(d.pair, d.boundary, k))
            << "trial " << trial;
    }
}

TEST(matching, single_defect_goes_to_boundary) {
    DefectDistances d;
    d.defects = {5};
    d.pair = {0.0};
    d.pair_mask = {0};
    d.boundary = {2.5};
    d.boundary_mask = {1};
    Matching m = min_weight_matching(d);
    ASSERT_EQ(m.pairs.size(), 1u);
    EXPECT_EQ(m.pairs[0].second, kBoundaryPartner);
    EXPECT_EQ(m.weight, 2.5);
}

TEST(matching, close_defects_pair_together) {
    DefectDistances d;
    d.defects = {0, 1};
    d.pair = {0.0, 1.0, 1.0, 0.0};
    d.pair_mask.assign(4, 0);
    d.boundary = {3.0, 3.0};
    d.boundary_mask = {0, 0};
    Matching m = min_weight_matching(d);
    ASSERT_EQ(m.pairs.size(), 1u);
    EXPECT_EQ(m.pairs[0], std::make_pair(size_t(0), size_t(1)));
    EXPECT_EQ(m.weight, 1.0);
}

TEST(matching, capacity_limit) {
    std::mt19937_64 rng(5);
    EXPECT_THROW(min_weight_matching(random_distances(rng, kMaxDefects + 1)), CapacityError);
    std::string dem;
    for (size_t k = 0; k < 17; k++) {
        dem += "error(0.1) D" + std::to_string(k) + "\n";
    }
    DecodingGraph g = graph_of(dem);
    EXPECT_THROW(decode(g, std::vector<uint8_t>(17, 1)), CapacityError);
}

TEST(matching, invariant_under_weight_scaling) {
    std::mt19937_64 rng(6);
    for (int trial = 0; trial < 30; trial++) {
        DefectDistances d = random_distances(rng, 7);
        DefectDistances scaled = d;
        for (auto &w : scaled.pair) {
            w *= 3.0;
        }
        for (auto &w : scaled.boundary) {
            w *= 3.0;
        }
        auto a = min_weight_matching(d).pairs;
        auto b = min_weight_matching(scaled).pairs;
        std::sort(a.begin(), a.end());
        std::sort(b.begin(), b.end());
        ASSERT_EQ(a, b);
    }
}

TEST(decode, trivial_and_deterministic) {
    DecodingGraph g = graph_of(read_text_file(oracle::data_path("rep4x2.dem")));
    EXPECT_EQ(decode(g, std::vector<uint8_t>(8, 0)), 0u);
    EXPECT_THROW(decode(g, std::vector<uint8_t>(7, 0)), DimensionError);
    std::vector<uint8_t> s{1, 0, 0, 0, 0, 0, 0, 0};
    EXPECT_EQ(decode(g, s), 1u);
    EXPECT_EQ(decode(g, s), decode(g, s));
    std::vector<uint8_t> right{0, 0, 0, 1, 0, 0, 0, 0};
    EXPECT_EQ(decode(g, right), 0u);
}

TEST(decode, close_to_maximum_likelihood) {
    DetectorModel model = parse_dem(read_text_file(oracle::data_path("rep4x2.dem")));
    auto table = oracle::maximum_likelihood_table(model);
    DecodingGraph g = build_decoding_graph(model);
    SampledShots shots = sample(model, 500, 9);
    size_t mwpm_ok = 0, ml_ok = 0;
    for (size_t s = 0; s < 500; s++) {
        auto row = shots.detections.row(s);
        uint64_t actual = shots.observables.get(s, 0);
        mwpm_ok += decode(g, row) == actual;
        ml_ok += table.at(std::vector<uint8_t>(row.begin(), row.end())) == actual;
    }
    EXPECT_GE(double(mwpm_ok) / 500, double(ml_ok) / 500 - 0.05);
}

TEST(evaluate, perfect_and_always_wrong) {
    DecodingGraph g = graph_of("error(0.1) D0 L0\nerror(0.1) D0 D1\n");
    ShotTable dets(2, 2);
    dets.set(0, 0, 1);
    ShotTable right(2, 1);
    right.set(0, 0, 1);
    EvalReport r = evaluate(g, dets, right);
    EXPECT_EQ(r.accuracy, 1.0);
    EXPECT_EQ(r.error_rate, 0.0);
    EXPECT_EQ(r.mean_defects_per_shot, 0.5);
    ShotTable both_wrong(2, 1);
    both_wrong.set(1, 0, 1);
    EXPECT_EQ(evaluate(g, dets, both_wrong).accuracy, 0.0);
    EXPECT_THROW(evaluate(g, dets, ShotTable(2, 2)), DimensionError);
    EXPECT_THROW(evaluate(g, dets, ShotTable(3, 1)), DimensionError);
    auto j = to_json(r);
    EXPECT_EQ(j["shots"], 2);
    EXPECT_EQ(j["accuracy"], 1.0);
}

TEST(evaluate, low_noise_chain_is_accurate) {
    std::string dem = "error(0.001) D0 L0\n";
    for (size_t k = 0; k + 1 < 6; k++) {
        dem += "error(0.001) D" + std::to_string(k) + " D" + std::to_string(k + 1) + "\n";
    }
    dem += "error(0.001) D5\n";
    DetectorModel model = parse_dem(dem);
    SampledShots shots = sample(model, 2000, 10);
    EXPECT_GT(evaluate(build_decoding_graph(model), shots.detections, shots.observables).accuracy, 0.9);
}
