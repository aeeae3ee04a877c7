// Copyright 2026 The codesearch Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef CODESEARCH_TOOLS_RUN_CONFIG_H_
#define CODESEARCH_TOOLS_RUN_CONFIG_H_

// JSON run configuration for the codesearch tool:
//
//   {"name": "shared-cnn", "seed": 7, "min_count": 1,
//    "paths": {"corpus": ..., "vocab": ..., "embeddings": ..., "model": ...,
//              "index": ..., "out": ...},
//    "encoder": {EncoderConfig keys},
//    "train": {"batch_size", "max_epochs", "patience", "train_loss_floor",
//              "optimizer", "learning_rate", "dev_distractors"},
//    "skipgram": {"window", "negatives", "epochs", "learning_rate"},
//    "eval": {"distractors", "iterations"}}
//
// Every key is optional; unknown keys are errors. The margin lives in
// "encoder" only and the seed drives every random stream of a run.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "codesearch/encoder.h"
#include "codesearch/eval.h"
#include "codesearch/skipgram.h"
#include "codesearch/trainer.h"

namespace codesearch::cli {

struct RunPaths {
  std::filesystem::path corpus;
  std::filesystem::path vocab;
  std::filesystem::path embeddings;
  std::filesystem::path model;
  std::filesystem::path index;
  std::filesystem::path out;
};

struct RunConfig {
  std::string name;
  std::uint64_t seed = 1;
  std::size_t min_count = 1;
  RunPaths paths;
  EncoderConfig encoder;
  TrainConfig train;
  SkipGramConfig skipgram;
  EvalOptions eval;

  // Copies seed, margin and embedding size into the sub-configs.
  void Sync();
};

// Throws DataError on malformed JSON, wrong types or unknown keys. Relative
// paths are resolved against `base_dir`.
RunConfig RunConfigFromJson(std::string_view text,
                            const std::filesystem::path& base_dir);
RunConfig LoadRunConfig(const std::filesystem::path& path);
std::string RunConfigToJson(const RunConfig& config);

}  // namespace codesearch::cli

#endif  // CODESEARCH_TOOLS_RUN_CONFIG_H_
