// Copyright 2026 The mpc-audio Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mpc/commands.hpp"
#include "mpc/error.hpp"
#include "mpc/synth.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitCheckpoint = 4;

}  // namespace

int main(int argc, char** argv) {
  namespace fs = std::filesystem;
  CLI::App app{"Masked predictive coding for audio: pretraining, fine-tuning and evaluation"};
  app.require_subcommand(1);

  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string init;
  std::optional<std::size_t> beam;
  std::optional<std::size_t> max_len;

  auto* pretrain = app.add_subcommand("pretrain", "Pretrain the encoder by masked reconstruction");
  pretrain->add_option("--config", config, "Run configuration file")->required()->check(CLI::ExistingFile);
  pretrain->add_option("--seed", seed, "Override task.seed");
  pretrain->add_option("--out", out, "Override paths.out_dir");

  auto* finetune = app.add_subcommand("finetune", "Fine-tune a tagging or seq2seq model");
  finetune->add_option("--config", config, "Run configuration file")->required()->check(CLI::ExistingFile);
  finetune->add_option("--init", init, "Checkpoint supplying the encoder")->check(CLI::ExistingFile);
  finetune->add_option("--seed", seed, "Override task.seed");
  finetune->add_option("--out", out, "Override paths.out_dir");
  finetune->add_option("--beam", beam, "Override train.beam");
  finetune->add_option("--max-len", max_len, "Override train.max_len");

  std::string checkpoint;
  std::string manifest;
  std::string task = "tag";
  auto* evaluate = app.add_subcommand("evaluate", "Score a checkpoint on a manifest");
  evaluate->add_option("--checkpoint", checkpoint, "Checkpoint file")->required();
  evaluate->add_option("--manifest", manifest, "Manifest to score")->required();
  evaluate->add_option("--task", task, "tag or seq2seq")->check(CLI::IsMember({"tag", "seq2seq"}));
  evaluate->add_option("--beam", beam, "Beam width (seq2seq)");
  evaluate->add_option("--max-len", max_len, "Maximum decoded length (seq2seq)");
  evaluate->add_option("--out", out, "Report file to append to");

  mpc::synth::SynthOptions synth;
  std::string kind = "pretrain";
  auto* synth_cmd = app.add_subcommand("synth-data", "Generate a synthetic corpus");
  synth_cmd->add_option("--kind", kind, "pretrain, tag or seq2seq")
      ->check(CLI::IsMember({"pretrain", "tag", "seq2seq"}));
  synth_cmd->add_option("--size", synth.size, "Training clips")->required();
  synth_cmd->add_option("--dev-size", synth.dev_size, "Held-out clips");
  synth_cmd->add_option("--seed", seed, "Generator seed");
  synth_cmd->add_option("--out", out, "Output directory")->required();
  synth_cmd->add_option("--classes", synth.classes, "Number of classes (tag)");
  synth_cmd->add_option("--min-seconds", synth.min_seconds, "Shortest clip (pretrain, tag)");
  synth_cmd->add_option("--max-seconds", synth.max_seconds, "Longest clip (pretrain, tag)");

  std::vector<std::string> inputs;
  auto* avg = app.add_subcommand("avg-checkpoints", "Average checkpoint parameters");
  avg->add_option("checkpoints", inputs, "Input checkpoints")->required();
  avg->add_option("--out", out, "Output checkpoint")->required();

  auto* inspect = app.add_subcommand("inspect-checkpoint", "Describe a checkpoint");
  inspect->add_option("checkpoint", checkpoint, "Checkpoint file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    mpc::commands::CommandOptions opt;
    opt.seed = seed;
    opt.out = out;
    opt.init = init;
    opt.beam = beam;
    opt.max_len = max_len;
    opt.progress = &std::cout;
    if (*pretrain) {
      mpc::commands::Pretrain(mpc::RunConfig::FromIniFile(config), opt);
    } else if (*finetune) {
      mpc::commands::Finetune(mpc::RunConfig::FromIniFile(config), opt);
    } else if (*evaluate) {
      mpc::commands::Evaluate(checkpoint, manifest, mpc::ParseTask(task), opt);
    } else if (*synth_cmd) {
      synth.kind = mpc::ParseTask(kind);
      synth.seed = seed.value_or(1);
      synth.out_dir = out;
      const auto r = mpc::synth::GenerateCorpus(synth);
      std::cout << "wrote " << r.train_manifest.string();
      if (!r.dev_manifest.empty()) std::cout << " and " << r.dev_manifest.string();
      std::cout << "\n";
    } else if (*avg) {
      std::vector<fs::path> paths(inputs.begin(), inputs.end());
      mpc::commands::AverageCheckpoints(paths, out);
      std::cout << "wrote " << out << "\n";
    } else if (*inspect) {
      mpc::commands::InspectCheckpoint(checkpoint, std::cout);
    }
  } catch (const mpc::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const mpc::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const mpc::CheckpointError& e) {
    std::cerr << "checkpoint error: " << e.what() << "\n";
    return kExitCheckpoint;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitOk;
}
