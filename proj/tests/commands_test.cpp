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


#include "gatdec/commands.hpp"

#include <filesystem>

#include "gtest/gtest.h"
#include "oracles.hpp"

using namespace gatdec;
namespace fs = std::filesystem;

namespace {

class TempDir : public ::testing::Test {
  protected:
    void SetUp() override {
        dir = fs::temp_directory_path() /
              ("gatdec_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir);
        fs::create_directories(dir);
    }
    void TearDown() override {
        fs::remove_all(dir);
    }
    std::string path(const std::string &name) const {
        return (dir / name).string();
    }
    fs::path dir;
};

TrainConfig quick_config() {
    TrainConfig c;
    c.epochs = 2;
    c.batch_size = 32;
    return c;
}

}  // namespace

TEST(inspect, rep4x2_layout_and_teacher) {
    InspectReport r = inspect_model(load_dem(oracle::data_path("rep4x2.dem")));
    EXPECT_EQ(r.n_nodes, 4u);
    EXPECT_EQ(r.rounds, 2u);
    ASSERT_EQ(r.edges.size(), 6u);
    std::vector<double> expected{0.0392, 0.0, 0.0, 0.043808, 0.0, 0.0392};
    for (size_t e = 0; e < 6; e++) {
        EXPECT_NEAR(r.teacher.probs[e], expected[e], 1e-12) << "edge " << e;
    }
    EXPECT_EQ(r.teacher.unassigned, 8u);
    std::string text = render_inspect(r);
    EXPECT_EQ(text.substr(0, text.find('\n')), "|V_s|=4, T=2, edges=6");
    auto j = to_json(r);
    EXPECT_EQ(j["n_edges"], 6);
    EXPECT_EQ(j["edges"][3]["i"], 1);
    EXPECT_EQ(j["edges"][3]["j"], 2);
}

TEST(inspect, rep3x3_fixture) {
    InspectReport r = inspect_model(load_dem(oracle::data_path("rep3x3.dem")));
    EXPECT_EQ(r.n_nodes, 3u);
    EXPECT_EQ(r.rounds, 3u);
    EXPECT_EQ(r.edges.size(), 3u);
}

TEST(inspect, model_without_mechanisms) {
    DetectorModel m = parse_dem("detector(0, 0) D0\ndetector(1, 0) D1\ndetector(0, 1) D2\n");
    InspectReport r = inspect_model(m);
    EXPECT_EQ(r.n_nodes, 2u);
    EXPECT_EQ(r.rounds, 2u);
    EXPECT_EQ(r.teacher.probs, std::vector<double>{0.0});
}

TEST(inspect, bad_dem_reports_line) {
    try {
        load_dem(oracle::data_path("bad.dem"));
        FAIL() << "expected FormatError";
    } catch (const FormatError &e) {
        EXPECT_NE(std::string(e.what()).find("frobnicate"), std::string::npos);
        EXPECT_NE(std::string(e.what()).find("line"), std::string::npos);
    }
    EXPECT_ANY_THROW(load_dem(oracle::data_path("missing.dem")));
}

TEST_F(TempDir, sample_then_reload) {
    SampleOptions opt{oracle::data_path("rep4x2.dem"), 200, 3, path("shots")};
    auto report = cmd_sample(opt);
    EXPECT_EQ(report["config"]["shots"], 200);
    EXPECT_EQ(report["n_detectors"], 8);
    ASSERT_TRUE(fs::exists(path("shots/sample.json")));
    LoadedData data = load_data(opt.dem, path("shots/detection_events.b8"), path("shots/obs_flips_actual.01"));
    EXPECT_EQ(data.detections.n_shots(), 200u);
    EXPECT_EQ(fs::file_size(path("shots/detection_events.b8")), 200u);
    SampledShots direct = sample(data.model, 200, 3);
    EXPECT_EQ(data.detections, direct.detections);
    EXPECT_EQ(data.observables, direct.observables);
    EXPECT_EQ(data.graphs.size(), 200u);
}

TEST_F(TempDir, train_eval_mwpm_compare) {
    std::string dem = oracle::data_path("rep4x2.dem");
    cmd_sample({dem, 300, 4, path("shots")});
    DataOptions data{dem, path("shots/detection_events.b8"), path("shots/obs_flips_actual.01")};

    TrainConfig cfg = quick_config();
    cfg.mode = TrainMode::Distill;
    auto trained = cmd_train(data, cfg, path("run"));
    EXPECT_EQ(trained["config"]["mode"], "distill");
    EXPECT_EQ(trained["config"]["lambda"], 0.5);
    EXPECT_EQ(trained["history"].size(), 2u);
    EXPECT_EQ(trained["train_shots"], 240);
    for (auto f : {"checkpoint.bin", "history.json", "history.csv"}) {
        EXPECT_TRUE(fs::exists(path(std::string("run/") + f))) << f;
    }

    auto evaluated = cmd_eval(data, path("run/checkpoint.bin"), path("eval"));
    EXPECT_EQ(evaluated["shots"], 300);
    double acc = evaluated["accuracy"];
    EXPECT_GE(acc, 0.0);
    EXPECT_LE(acc, 1.0);
    EXPECT_TRUE(fs::exists(path("eval/eval.json")));

    auto mwpm = cmd_mwpm(data, path("mwpm"));
    EXPECT_EQ(mwpm["shots"], 300);
    EXPECT_GT(double(mwpm["accuracy"]), 0.8);
    EXPECT_TRUE(fs::exists(path("mwpm/mwpm.json")));

    auto cmp = cmd_compare(data, quick_config(), path("cmp"));
    ASSERT_EQ(cmp["rows"].size(), 3u);
    EXPECT_EQ(cmp["rows"][0]["model"], "baseline");
    EXPECT_EQ(cmp["rows"][2]["model"], "mwpm");
    EXPECT_EQ(cmp["config"]["batch"], 32);
    std::string table = cmp["table"];
    EXPECT_NE(table.find("Reference: MWPM"), std::string::npos);
    for (auto f : {"compare.txt", "compare.json", "baseline_history.csv", "distill_history.json"}) {
        EXPECT_TRUE(fs::exists(path(std::string("cmp/") + f))) << f;
    }
}

TEST_F(TempDir, eval_reproduces_checkpoint_predictions) {
    std::string dem = oracle::data_path("rep4x2.dem");
    cmd_sample({dem, 150, 8, path("shots")});
    DataOptions data{dem, path("shots/detection_events.b8"), path("shots/obs_flips_actual.01")};
    LoadedData loaded = load_data(data.dem, data.dets, data.obs);
    TrainResult r = train(loaded.graphs, quick_config());
    ModelConfig mc = quick_config().model;
    write_file(path("ck.bin"), serialize_checkpoint(r.params, mc));
    std::vector<size_t> all(150);
    std::iota(all.begin(), all.end(), 0);
    double direct = evaluate_accuracy(loaded.graphs, all, r.params, mc);
    EXPECT_EQ(double(cmd_eval(data, path("ck.bin"), "")["accuracy"]), direct);
}

TEST_F(TempDir, mismatched_inputs_fail) {
    std::string dem = oracle::data_path("rep4x2.dem");
    cmd_sample({dem, 10, 1, path("a")});
    cmd_sample({dem, 12, 1, path("b")});
    EXPECT_THROW(load_data(dem, path("a/detection_events.b8"), path("b/obs_flips_actual.01")), DimensionError);
    write_file(path("bad.b8"), std::string("\x01\x02\x03", 3));
    EXPECT_THROW(parse_b8(read_binary_file(path("bad.b8")), 16), FormatError);
}
