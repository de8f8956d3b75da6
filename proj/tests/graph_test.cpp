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


#include "gatdec/graph.hpp"

#include <random>

#include "gtest/gtest.h"
#include "oracles.hpp"

using namespace gatdec;

namespace {

DetectorModel grid_model(size_t n_spatial, size_t n_rounds) {
    DetectorModel m;
    for (size_t t = 0; t < n_rounds; t++) {
        for (size_t v = 0; v < n_spatial; v++) {
            m.detectors.push_back({t * n_spatial + v, {double(2 * v + 1), 0.0, double(t)}});
        }
    }
    m.n_detectors = n_spatial * n_rounds;
    return m;
}

}  // namespace

TEST(layout, four_nodes_two_rounds) {
    SpatialLayout layout = extract_layout(grid_model(4, 2));
    EXPECT_EQ(layout.n_nodes(), 4u);
    EXPECT_EQ(layout.rounds(), 2u);
    EXPECT_EQ(layout.n_edges(), 6u);
    EXPECT_EQ(layout.det_map[5].node, 1u);
    EXPECT_EQ(layout.det_map[5].round, 1u);
}

TEST(layout, single_detector) {
    SpatialLayout layout = extract_layout(grid_model(1, 1));
    EXPECT_EQ(layout.n_nodes(), 1u);
    EXPECT_EQ(layout.rounds(), 1u);
    EXPECT_EQ(layout.n_edges(), 0u);
}

TEST(layout, three_by_three_from_fixture) {
    SpatialLayout layout = extract_layout(parse_dem(read_text_file(oracle::data_path("rep3x3.dem"))));
    EXPECT_EQ(layout.n_nodes(), 3u);
    EXPECT_EQ(layout.rounds(), 3u);
    // 3 nodes, complete graph: (0,1), (0,2), (1,2)
    EXPECT_EQ(layout.n_edges(), 3u);
}

TEST(layout, rounds_ranked_by_distinct_time) {
    DetectorModel m;
    m.detectors = {{0, {0.0, 10.5}}, {1, {0.0, -3.0}}, {2, {1.0, 7.0}}};
    m.n_detectors = 3;
    SpatialLayout layout = extract_layout(m);
    EXPECT_EQ(layout.rounds(), 3u);
    EXPECT_EQ(layout.det_map[0].round, 2u);
    EXPECT_EQ(layout.det_map[1].round, 0u);
    EXPECT_EQ(layout.det_map[2].round, 1u);
}

TEST(layout, nodes_in_first_appearance_order) {
    DetectorModel m;
    m.detectors = {{0, {5.0, 0.0}}, {1, {1.0, 0.0}}, {2, {5.0, 1.0}}};
    m.n_detectors = 3;
    SpatialLayout layout = extract_layout(m);
    EXPECT_EQ(layout.node_coords[0], (std::vector<double>{5.0}));
    EXPECT_EQ(layout.node_coords[1], (std::vector<double>{1.0}));
    EXPECT_EQ(layout.det_map[2].node, 0u);
}

TEST(layout, errors) {
    DetectorModel no_coords = parse_dem("error(0.1) D0 D1\ndetector(0, 0) D0\n");
    EXPECT_THROW(extract_layout(no_coords), LayoutError);
    DetectorModel short_coords = parse_dem("detector(1) D0\n");
    EXPECT_THROW(extract_layout(short_coords), LayoutError);
    DetectorModel duplicate = parse_dem("detector(1, 0) D0\ndetector(1, 0) D1\n");
    EXPECT_THROW(extract_layout(duplicate), LayoutError);
}

TEST(layout, edge_index_matches_enumeration) {
    for (size_t n = 0; n < 9; n++) {
        auto edges = complete_graph_edges(n);
        ASSERT_EQ(edges.size(), n * (n ? n - 1 : 0) / 2);
        for (size_t e = 0; e < edges.size(); e++) {
            ASSERT_EQ(complete_graph_edge_index(n, edges[e].first, edges[e].second), e);
            ASSERT_EQ(complete_graph_edge_index(n, edges[e].second, edges[e].first), e);
        }
    }
}

TEST(flat_graph, all_zero_shot) {
    SpatialLayout layout = extract_layout(grid_model(4, 2));
    std::vector<uint8_t> shot(8, 0);
    std::vector<double> teacher(6, 0.0);
    FlatGraph g = build_flat_graph(shot, layout, teacher, 1);
    for (double f : g.features) {
        EXPECT_EQ(f, 0.0);
    }
    EXPECT_EQ(g.label, 1);
}

TEST(flat_graph, single_detector_fired) {
    SpatialLayout layout = extract_layout(grid_model(4, 2));
    std::vector<uint8_t> shot(8, 0);
    shot[1 * 4 + 2] = 1;  // node 2, round 1
    std::vector<double> teacher(6, 0.0);
    FlatGraph g = build_flat_graph(shot, layout, teacher, 0);
    for (size_t v = 0; v < 4; v++) {
        for (size_t t = 0; t < 2; t++) {
            EXPECT_EQ(g.feature(v, t), (v == 2 && t == 1) ? 1.0 : 0.0);
        }
    }
}

TEST(flat_graph, matches_hand_built_map) {
    // Detectors declared out of order so the map is not the identity.
    DetectorModel m = parse_dem(
        "detector(3, 0, 1) D0\n"
        "detector(1, 0, 0) D1\n"
        "detector(5, 0, 0) D2\n"
        "detector(7, 0, 0) D3\n"
        "detector(1, 0, 1) D4\n"
        "detector(3, 0, 0) D5\n"
        "detector(5, 0, 1) D6\n"
        "detector(7, 0, 1) D7\n");
    SpatialLayout layout = extract_layout(m);
    // first appearance: x=3 -> 0, x=1 -> 1, x=5 -> 2, x=7 -> 3
    std::vector<std::pair<size_t, size_t>> hand = {{0, 1}, {1, 0}, {2, 0}, {3, 0}, {1, 1}, {0, 0}, {2, 1}, {3, 1}};
    std::vector<uint8_t> shot{1, 0, 0, 1, 0, 1, 0, 0};
    FlatGraph g = build_flat_graph(shot, layout, std::vector<double>(6, 0.0), 0);
    std::vector<double> expected(8, 0.0);
    for (size_t d = 0; d < 8; d++) {
        if (shot[d]) {
            expected[hand[d].first * 2 + hand[d].second] = 1.0;
        }
    }
    EXPECT_EQ(g.features, expected);
}

TEST(flat_graph, dimension_errors) {
    SpatialLayout layout = extract_layout(grid_model(4, 2));
    std::vector<uint8_t> shot(7, 0);
    EXPECT_THROW(build_flat_graph(shot, layout, std::vector<double>(6, 0.0), 0), DimensionError);
    std::vector<uint8_t> ok(8, 0);
    EXPECT_THROW(build_flat_graph(ok, layout, std::vector<double>(5, 0.0), 0), DimensionError);
}

TEST(flat_graph, fired_count_preserved) {
    SpatialLayout layout = extract_layout(grid_model(5, 3));
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 100; trial++) {
        std::vector<uint8_t> shot(15);
        size_t fired = 0;
        for (auto &b : shot) {
            b = rng() & 1;
            fired += b;
        }
        FlatGraph g = build_flat_graph(shot, layout, std::vector<double>(10, 0.0), 0);
        double ones = 0;
        for (double f : g.features) {
            ones += f;
        }
        ASSERT_EQ(size_t(ones), fired);
    }
}

TEST(teacher, single_mechanism) {
    DetectorModel m = grid_model(4, 2);
    m.mechanisms.push_back({0.1, {0, 1}, {}});
    SpatialLayout layout = extract_layout(m);
    TeacherEdges t = teacher_edge_probs(m, layout);
    EXPECT_EQ(t.probs, (std::vector<double>{0.1, 0, 0, 0, 0, 0}));
}

TEST(teacher, xor_combination) {
    DetectorModel m = grid_model(4, 2);
    m.mechanisms.push_back({0.1, {0, 1}, {}});
    m.mechanisms.push_back({0.2, {4, 5}, {}});  // same spatial pair, round 1
    SpatialLayout layout = extract_layout(m);
    TeacherEdges t = teacher_edge_probs(m, layout);
    EXPECT_NEAR(t.probs[0], 0.26, 1e-15);
    EXPECT_EQ(t.mechanisms_per_edge[0], 2u);
}

TEST(teacher, time_like_mechanism_contributes_nothing) {
    DetectorModel m = grid_model(4, 2);
    m.mechanisms.push_back({0.3, {0, 4}, {}});      // node 0 at t=0 and t=1
    m.mechanisms.push_back({0.3, {0}, {0}});        // boundary
    m.mechanisms.push_back({0.3, {0, 1, 2}, {}});   // three nodes
    m.mechanisms.push_back({0.05, {1, 6}, {}});     // nodes 1 and 2 across rounds
    SpatialLayout layout = extract_layout(m);
    TeacherEdges t = teacher_edge_probs(m, layout);
    EXPECT_EQ(t.unassigned, 3u);
    EXPECT_EQ(t.probs[complete_graph_edge_index(4, 1, 2)], 0.05);
}

TEST(teacher, projection_totality_and_closure) {
    std::mt19937_64 rng(9);
    for (int trial = 0; trial < 50; trial++) {
        DetectorModel m = grid_model(4, 3);
        size_t n_mech = rng() % 20;
        for (size_t k = 0; k < n_mech; k++) {
            ErrorMechanism mech;
            mech.probability = double(rng() % 1001) / 1000.0 * 0.5;
            for (uint64_t d = 0; d < 12; d++) {
                if (rng() % 5 == 0) {
                    mech.detectors.push_back(d);
                }
            }
            m.mechanisms.push_back(mech);
        }
        SpatialLayout layout = extract_layout(m);
        TeacherEdges t = teacher_edge_probs(m, layout);
        size_t assigned = 0;
        for (auto c : t.mechanisms_per_edge) {
            assigned += c;
        }
        ASSERT_EQ(assigned + t.unassigned, m.mechanisms.size());
        for (double p : t.probs) {
            ASSERT_GE(p, 0.0);
            ASSERT_LE(p, 0.5);
        }
    }
}

TEST(flat_graph, json_dump) {
    SpatialLayout layout = extract_layout(grid_model(2, 2));
    std::vector<uint8_t> shot{1, 0, 0, 1};
    FlatGraph g = build_flat_graph(shot, layout, std::vector<double>{0.25}, 1);
    auto j = to_json(g);
    EXPECT_EQ(j.dump(), R"({"edges":[[0,1]],"features":[[1,0],[0,1]],"label":1,"teacher_probs":[0.25]})");
}

TEST(dataset, labels_from_last_observable_column) {
    SpatialLayout layout = extract_layout(grid_model(2, 1));
    ShotTable dets(2, 2, {1, 0, 0, 1});
    ShotTable obs(2, 2, {0, 1, 1, 0});
    auto graphs = build_dataset(dets, obs, layout, std::vector<double>{0.0});
    EXPECT_EQ(graphs[0].label, 1);
    EXPECT_EQ(graphs[1].label, 0);
    EXPECT_THROW(build_dataset(dets, ShotTable(3, 1), layout, std::vector<double>{0.0}), DimensionError);
}
