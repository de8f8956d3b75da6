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


#include <iostream>

#include "CLI11.hpp"
#include "gatdec/commands.hpp"

namespace {

void add_data_flags(CLI::App *cmd, gatdec::DataOptions &data) {
    cmd->add_option("--dem", data.dem, "Detector error model (flat DEM text)")->required();
    cmd->add_option("--dets", data.dets, "Detection events, b8 format")->required();
    cmd->add_option("--obs", data.obs, "Observable flips, 01 format")->required();
}

void add_train_flags(CLI::App *cmd, gatdec::TrainConfig &cfg) {
    cmd->add_option("--lambda", cfg.lambda, "Distillation weight")->capture_default_str();
    cmd->add_option("--lr", cfg.adam.lr, "Adam learning rate")->capture_default_str();
    cmd->add_option("--batch", cfg.batch_size, "Graphs per optimizer step")->capture_default_str();
    cmd->add_option("--epochs", cfg.epochs, "Training epochs")->capture_default_str();
    cmd->add_option("--train-fraction", cfg.train_fraction, "Share of shots used for training")
        ->capture_default_str();
    cmd->add_option("--seed-params", cfg.seed_params, "Parameter and static edge weight seed")
        ->capture_default_str();
    cmd->add_option("--seed-shuffle", cfg.seed_shuffle, "Per-epoch shuffle seed")->capture_default_str();
    cmd->add_option("--seed-split", cfg.seed_split, "Train/test split seed")->capture_default_str();
    cmd->add_option("--eval-threads", cfg.eval_threads, "Threads for test evaluation (0 = all cores)")
        ->capture_default_str();
}

}  // namespace

int main(int argc, char **argv) {
    CLI::App app{"gatdec: GATv2 syndrome decoders with MWPM distillation, and an MWPM reference decoder"};
    app.require_subcommand(1);

    gatdec::SampleOptions sample_opt;
    auto *sample = app.add_subcommand("sample", "Sample detection events and observable flips from a DEM");
    sample->add_option("--dem", sample_opt.dem, "Detector error model")->required();
    sample->add_option("--n", sample_opt.shots, "Number of shots")->required();
    sample->add_option("--seed", sample_opt.seed, "Sampling seed")->capture_default_str();
    sample->add_option("--out", sample_opt.out, "Output directory")->required();

    std::string inspect_dem;
    std::string inspect_out;
    auto *inspect = app.add_subcommand("inspect", "Report the time-flattened layout and teacher edge probabilities");
    inspect->add_option("--dem", inspect_dem, "Detector error model")->required();
    inspect->add_option("--out", inspect_out, "Optional directory for inspect.json");

    gatdec::DataOptions train_data;
    gatdec::TrainConfig train_cfg;
    std::string train_mode = "baseline";
    std::string train_out;
    auto *train = app.add_subcommand("train", "Train one decoder arm");
    add_data_flags(train, train_data);
    add_train_flags(train, train_cfg);
    train->add_option("--mode", train_mode, "baseline or distill")
        ->check(CLI::IsMember({"baseline", "distill"}))
        ->capture_default_str();
    train->add_option("--out", train_out, "Output directory")->required();

    gatdec::DataOptions eval_data;
    std::string eval_checkpoint;
    std::string eval_out;
    auto *eval = app.add_subcommand("eval", "Score a trained checkpoint on a dataset");
    add_data_flags(eval, eval_data);
    eval->add_option("--checkpoint", eval_checkpoint, "Checkpoint written by train")->required();
    eval->add_option("--out", eval_out, "Optional directory for eval.json");

    gatdec::DataOptions mwpm_data;
    std::string mwpm_out;
    auto *mwpm = app.add_subcommand("mwpm", "Score the MWPM reference decoder on a dataset");
    add_data_flags(mwpm, mwpm_data);
    mwpm->add_option("--out", mwpm_out, "Optional directory for mwpm.json");

    gatdec::DataOptions cmp_data;
    gatdec::TrainConfig cmp_cfg;
    std::string cmp_out;
    auto *compare = app.add_subcommand("compare", "Train both arms and tabulate them against MWPM");
    add_data_flags(compare, cmp_data);
    add_train_flags(compare, cmp_cfg);
    compare->add_option("--out", cmp_out, "Output directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*sample) {
            gatdec::cmd_sample(sample_opt);
        } else if (*inspect) {
            auto report = gatdec::inspect_model(gatdec::load_dem(inspect_dem));
            std::cout << gatdec::render_inspect(report);
            if (!inspect_out.empty()) {
                gatdec::ensure_dir(inspect_out);
                gatdec::write_json(gatdec::join_path(inspect_out, "inspect.json"), gatdec::to_json(report));
            }
        } else if (*train) {
            train_cfg.mode = gatdec::parse_train_mode(train_mode);
            auto j = gatdec::cmd_train(train_data, train_cfg, train_out);
            std::cout << "final accuracy " << j["final"]["accuracy"].get<double>() << ", "
                      << j["final"]["total_seconds"].get<double>() << " s\n";
        } else if (*eval) {
            std::cout << gatdec::cmd_eval(eval_data, eval_checkpoint, eval_out).dump(2) << "\n";
        } else if (*mwpm) {
            std::cout << gatdec::cmd_mwpm(mwpm_data, mwpm_out).dump(2) << "\n";
        } else if (*compare) {
            std::cout << gatdec::cmd_compare(cmp_data, cmp_cfg, cmp_out)["table"].get<std::string>();
        }
    } catch (const std::exception &e) {
        std::cerr << "gatdec: error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
