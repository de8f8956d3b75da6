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


// Implementations of the gatdec command-line subcommands. Each command reads
// its inputs from files, writes its artifacts into an output directory and
// echoes every setting (seeds included) into the JSON it emits.

#ifndef GATDEC_COMMANDS_HPP
#define GATDEC_COMMANDS_HPP

#include <cstdio>
#include <filesystem>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "gatdec/errors.hpp"
#include "gatdec/formats.hpp"
#include "gatdec/graph.hpp"
#include "gatdec/matching.hpp"
#include "gatdec/model.hpp"
#include "gatdec/sampler.hpp"
#include "gatdec/training.hpp"
#include "json.hpp"

namespace gatdec {

inline constexpr const char *kDetectionsFile = "detection_events.b8";
inline constexpr const char *kObservablesFile = "obs_flips_actual.01";

inline DetectorModel load_dem(const std::string &path) {
    return parse_dem(read_text_file(path));
}

inline void ensure_dir(const std::string &dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) {
        throw ConfigError("cannot create output directory '" + dir + "': " + ec.message());
    }
}

inline std::string join_path(const std::string &dir, const std::string &name) {
    return (std::filesystem::path(dir) / name).string();
}

inline void write_json(const std::string &path, const nlohmann::json &j) {
    write_file(path, j.dump(2) + "\n");
}

struct SampleOptions {
    std::string dem;
    size_t shots = 0;
    uint64_t seed = 0;
    std::string out;
};

/// Writes detections (b8) and observable flips (01) sampled from the DEM.
inline nlohmann::json cmd_sample(const SampleOptions &opt) {
    DetectorModel model = load_dem(opt.dem);
    SampledShots shots = sample(model, opt.shots, opt.seed);
    ensure_dir(opt.out);
    write_file(join_path(opt.out, kDetectionsFile), write_b8(shots.detections));
    write_file(join_path(opt.out, kObservablesFile), write_01(shots.observables));
    size_t positives = 0;
    if (model.n_observables > 0) {
        for (size_t s = 0; s < shots.observables.n_shots(); s++) {
            positives += shots.observables.get(s, model.n_observables - 1);
        }
    }
    nlohmann::json report = {
        {"config", {{"dem", opt.dem}, {"shots", opt.shots}, {"seed", opt.seed}, {"out", opt.out}}},
        {"n_detectors", model.n_detectors},
        {"n_observables", model.n_observables},
        {"positive_labels", positives},
        {"detections", join_path(opt.out, kDetectionsFile)},
        {"observables", join_path(opt.out, kObservablesFile)}};
    write_json(join_path(opt.out, "sample.json"), report);
    return report;
}

struct InspectReport {
    size_t n_detectors = 0;
    size_t n_mechanisms = 0;
    size_t n_nodes = 0;
    size_t rounds = 0;
    std::vector<NodePair> edges;
    std::vector<std::vector<double>> node_coords;
    TeacherEdges teacher;
};

inline InspectReport inspect_model(const DetectorModel &model) {
    SpatialLayout layout = extract_layout(model);
    InspectReport r;
    r.n_detectors = model.n_detectors;
    r.n_mechanisms = model.mechanisms.size();
    r.n_nodes = layout.n_nodes();
    r.rounds = layout.rounds();
    r.edges = *layout.edges;
    r.node_coords = layout.node_coords;
    r.teacher = teacher_edge_probs(model, layout);
    return r;
}

inline std::string render_inspect(const InspectReport &r) {
    std::ostringstream out;
    out << "|V_s|=" << r.n_nodes << ", T=" << r.rounds << ", edges=" << r.edges.size() << "\n";
    out << "detectors=" << r.n_detectors << ", mechanisms=" << r.n_mechanisms
        << ", unassigned mechanisms=" << r.teacher.unassigned << "\n";
    out << "edge      p_ij                   mechanisms\n";
    for (size_t e = 0; e < r.edges.size(); e++) {
        std::ostringstream name;
        name << "(" << r.edges[e].first << "," << r.edges[e].second << ")";
        char p[32];
        std::snprintf(p, sizeof(p), "%.17g", r.teacher.probs[e]);
        out << std::left << std::setw(10) << name.str() << std::setw(23) << p << r.teacher.mechanisms_per_edge[e]
            << "\n";
    }
    return out.str();
}

inline nlohmann::json to_json(const InspectReport &r) {
    nlohmann::json edges = nlohmann::json::array();
    for (size_t e = 0; e < r.edges.size(); e++) {
        edges.push_back(
            {{"i", r.edges[e].first},
             {"j", r.edges[e].second},
             {"p", r.teacher.probs[e]},
             {"mechanisms", r.teacher.mechanisms_per_edge[e]}});
    }
    return {
        {"n_nodes", r.n_nodes},
        {"rounds", r.rounds},
        {"n_edges", r.edges.size()},
        {"n_detectors", r.n_detectors},
        {"n_mechanisms", r.n_mechanisms},
        {"unassigned_mechanisms", r.teacher.unassigned},
        {"node_coords", r.node_coords},
        {"edges", edges}};
}

/// Everything derived from a DEM plus a pair of shot files.
struct LoadedData {
    DetectorModel model;
    SpatialLayout layout;
    TeacherEdges teacher;
    ShotTable detections;
    ShotTable observables;
    std::vector<FlatGraph> graphs;
};

inline LoadedData load_data(const std::string &dem, const std::string &dets, const std::string &obs) {
    LoadedData d;
    d.model = load_dem(dem);
    d.layout = extract_layout(d.model);
    d.teacher = teacher_edge_probs(d.model, d.layout);
    d.detections = parse_b8(read_binary_file(dets), d.model.n_detectors);
    d.observables = parse_01(read_text_file(obs));
    d.graphs = build_dataset(d.detections, d.observables, d.layout, d.teacher.probs);
    return d;
}

struct DataOptions {
    std::string dem;
    std::string dets;
    std::string obs;
};

inline nlohmann::json to_json(const DataOptions &d) {
    return {{"dem", d.dem}, {"dets", d.dets}, {"obs", d.obs}};
}

/// Trains one arm; writes checkpoint.bin, history.json and history.csv.
inline nlohmann::json cmd_train(const DataOptions &data_opt, const TrainConfig &config, const std::string &out) {
    LoadedData data = load_data(data_opt.dem, data_opt.dets, data_opt.obs);
    TrainResult result = train(data.graphs, config);
    ensure_dir(out);
    ModelConfig model_config = config.model;
    model_config.seed = config.seed_params;
    write_file(join_path(out, "checkpoint.bin"), serialize_checkpoint(result.params, model_config));
    nlohmann::json j = history_json(result.history, config);
    j["config"]["data"] = to_json(data_opt);
    j["pos_weight"] = result.pos_weight;
    j["train_shots"] = result.train_indices.size();
    j["test_shots"] = result.test_indices.size();
    write_json(join_path(out, "history.json"), j);
    write_file(join_path(out, "history.csv"), history_csv(result.history));
    return j;
}

/// Accuracy of a checkpoint over every shot in the given files.
inline nlohmann::json cmd_eval(const DataOptions &data_opt, const std::string &checkpoint, const std::string &out) {
    LoadedData data = load_data(data_opt.dem, data_opt.dets, data_opt.obs);
    auto [params, model_config] = parse_checkpoint(read_text_file(checkpoint));
    std::vector<size_t> all(data.graphs.size());
    for (size_t k = 0; k < all.size(); k++) {
        all[k] = k;
    }
    double acc = evaluate_accuracy(data.graphs, all, params, model_config);
    nlohmann::json j = {
        {"config", {{"data", to_json(data_opt)}, {"checkpoint", checkpoint}}},
        {"shots", all.size()},
        {"accuracy", acc},
        {"error_rate", 1.0 - acc}};
    if (!out.empty()) {
        ensure_dir(out);
        write_json(join_path(out, "eval.json"), j);
    }
    return j;
}

inline nlohmann::json cmd_mwpm(const DataOptions &data_opt, const std::string &out) {
    DetectorModel model = load_dem(data_opt.dem);
    ShotTable dets = parse_b8(read_binary_file(data_opt.dets), model.n_detectors);
    ShotTable obs = parse_01(read_text_file(data_opt.obs));
    DecodingGraph graph = build_decoding_graph(model);
    nlohmann::json j = to_json(evaluate(graph, dets, obs));
    j["config"] = {{"data", to_json(data_opt)}};
    if (!out.empty()) {
        ensure_dir(out);
        write_json(join_path(out, "mwpm.json"), j);
    }
    return j;
}

struct Comparison {
    RunHistory baseline;
    RunHistory distill;
    EvalReport mwpm;
    double lambda = 0;
};

inline std::string render_comparison(const Comparison &c) {
    std::ostringstream out;
    out << std::fixed;
    char lam[32];
    std::snprintf(lam, sizeof(lam), "%g", c.lambda);
    std::string distill_name = std::string("Distillation (L_data + ") + lam + " * L_distill)";
    out << std::left << std::setw(44) << "Model" << std::setw(26) << "Final Test Accuracy (%)"
        << "Training Time (s)\n";
    out << std::setw(44) << "Baseline (L_data only)" << std::setw(26) << std::setprecision(2)
        << 100 * c.baseline.final_accuracy << std::setprecision(2) << c.baseline.total_seconds << "\n";
    out << std::setw(44) << distill_name << std::setw(26) << std::setprecision(2)
        << 100 * c.distill.final_accuracy << std::setprecision(2) << c.distill.total_seconds << "\n";
    out << std::setw(44) << "Reference: MWPM" << std::setprecision(2) << 100 * c.mwpm.accuracy
        << "% (error rate " << std::setprecision(4) << c.mwpm.error_rate << ")\n";
    return out.str();
}

inline Comparison run_comparison(const LoadedData &data, const TrainConfig &config) {
    Comparison c;
    c.lambda = config.lambda;
    TrainConfig base = config;
    base.mode = TrainMode::Baseline;
    TrainConfig dist = config;
    dist.mode = TrainMode::Distill;
    TrainResult rb = train(data.graphs, base);
    TrainResult rd = train(data.graphs, dist);
    c.baseline = rb.history;
    c.distill = rd.history;
    DecodingGraph graph = build_decoding_graph(data.model);
    c.mwpm = evaluate(graph, data.detections.select(rb.test_indices), data.observables.select(rb.test_indices));
    return c;
}

/// Trains both arms on the same split and seeds and scores MWPM on that test
/// split. Writes compare.json, compare.txt and per-arm history files.
inline nlohmann::json cmd_compare(const DataOptions &data_opt, const TrainConfig &config, const std::string &out) {
    LoadedData data = load_data(data_opt.dem, data_opt.dets, data_opt.obs);
    Comparison c = run_comparison(data, config);
    ensure_dir(out);
    TrainConfig base = config;
    base.mode = TrainMode::Baseline;
    TrainConfig dist = config;
    dist.mode = TrainMode::Distill;
    write_json(join_path(out, "baseline_history.json"), history_json(c.baseline, base));
    write_file(join_path(out, "baseline_history.csv"), history_csv(c.baseline));
    write_json(join_path(out, "distill_history.json"), history_json(c.distill, dist));
    write_file(join_path(out, "distill_history.csv"), history_csv(c.distill));
    std::string table = render_comparison(c);
    write_file(join_path(out, "compare.txt"), table);
    nlohmann::json cfg = to_json(config);
    cfg.erase("mode");
    cfg["data"] = to_json(data_opt);
    nlohmann::json j = {
        {"config", cfg},
        {"rows",
         {{{"model", "baseline"},
           {"accuracy", c.baseline.final_accuracy},
           {"total_seconds", c.baseline.total_seconds}},
          {{"model", "distill"},
           {"accuracy", c.distill.final_accuracy},
           {"total_seconds", c.distill.total_seconds}},
          {{"model", "mwpm"}, {"accuracy", c.mwpm.accuracy}, {"error_rate", c.mwpm.error_rate}}}},
        {"time_ratio", c.baseline.total_seconds > 0 ? c.distill.total_seconds / c.baseline.total_seconds : 0.0},
        {"table", table}};
    write_json(join_path(out, "compare.json"), j);
    return j;
}

}  // namespace gatdec

#endif
