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

#include "run_config.h"

#include "codesearch/binary_io.h"
#include "codesearch/error.h"
#include "json.hpp"

namespace codesearch::cli {
namespace {

using nlohmann::json;

void RequireObject(const json& j, const std::string& what) {
  if (!j.is_object()) throw DataError(what + " must be a JSON object");
}

[[noreturn]] void UnknownKey(const std::string& section,
                             const std::string& key) {
  throw DataError("unknown key \"" + key + "\" in " + section);
}

std::filesystem::path ResolvePath(const json& value,
                                  const std::filesystem::path& base) {
  const std::filesystem::path p = value.get<std::string>();
  return p.is_relative() && !base.empty() ? base / p : p;
}

void ReadPaths(const json& j, const std::filesystem::path& base,
               RunPaths& paths) {
  RequireObject(j, "\"paths\"");
  for (const auto& [key, value] : j.items()) {
    if (key == "corpus") {
      paths.corpus = ResolvePath(value, base);
    } else if (key == "vocab") {
      paths.vocab = ResolvePath(value, base);
    } else if (key == "embeddings") {
      paths.embeddings = ResolvePath(value, base);
    } else if (key == "model") {
      paths.model = ResolvePath(value, base);
    } else if (key == "index") {
      paths.index = ResolvePath(value, base);
    } else if (key == "out") {
      paths.out = ResolvePath(value, base);
    } else {
      UnknownKey("\"paths\"", key);
    }
  }
}

void ReadTrain(const json& j, TrainConfig& t) {
  RequireObject(j, "\"train\"");
  for (const auto& [key, value] : j.items()) {
    if (key == "batch_size") {
      t.batch_size = value.get<std::size_t>();
    } else if (key == "max_epochs") {
      t.max_epochs = value.get<std::size_t>();
    } else if (key == "patience") {
      t.patience = value.get<std::size_t>();
    } else if (key == "train_loss_floor") {
      t.train_loss_floor = value.get<double>();
    } else if (key == "optimizer") {
      t.optimizer = ParseOptimizer(value.get<std::string>());
    } else if (key == "learning_rate") {
      t.learning_rate = value.get<double>();
    } else if (key == "dev_distractors") {
      t.dev_distractors = value.get<std::size_t>();
    } else {
      UnknownKey("\"train\"", key);
    }
  }
}

void ReadSkipGram(const json& j, SkipGramConfig& s) {
  RequireObject(j, "\"skipgram\"");
  for (const auto& [key, value] : j.items()) {
    if (key == "window") {
      s.window = value.get<std::size_t>();
    } else if (key == "negatives") {
      s.negatives = value.get<std::size_t>();
    } else if (key == "epochs") {
      s.epochs = value.get<std::size_t>();
    } else if (key == "learning_rate") {
      s.learning_rate = value.get<double>();
    } else {
      UnknownKey("\"skipgram\"", key);
    }
  }
}

void ReadEval(const json& j, EvalOptions& e) {
  RequireObject(j, "\"eval\"");
  for (const auto& [key, value] : j.items()) {
    if (key == "distractors") {
      e.distractors = value.get<std::size_t>();
    } else if (key == "iterations") {
      e.iterations = value.get<std::size_t>();
    } else {
      UnknownKey("\"eval\"", key);
    }
  }
}

}  // namespace

void RunConfig::Sync() {
  train.seed = seed;
  skipgram.seed = seed;
  eval.seed = seed;
  train.margin = encoder.margin;
  skipgram.dim = encoder.embed_dim;
}

RunConfig RunConfigFromJson(std::string_view text,
                            const std::filesystem::path& base_dir) {
  RunConfig c;
  try {
    const json j = json::parse(text);
    RequireObject(j, "run config");
    for (const auto& [key, value] : j.items()) {
      if (key == "name") {
        c.name = value.get<std::string>();
      } else if (key == "seed") {
        c.seed = value.get<std::uint64_t>();
      } else if (key == "min_count") {
        c.min_count = value.get<std::size_t>();
      } else if (key == "paths") {
        ReadPaths(value, base_dir, c.paths);
      } else if (key == "encoder") {
        RequireObject(value, "\"encoder\"");
        c.encoder = EncoderConfigFromJson(value.dump());
      } else if (key == "train") {
        ReadTrain(value, c.train);
      } else if (key == "skipgram") {
        ReadSkipGram(value, c.skipgram);
      } else if (key == "eval") {
        ReadEval(value, c.eval);
      } else {
        UnknownKey("run config", key);
      }
    }
  } catch (const json::exception& e) {
    throw DataError(std::string("bad run config: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw DataError(std::string("bad run config: ") + e.what());
  }
  c.Sync();
  return c;
}

RunConfig LoadRunConfig(const std::filesystem::path& path) {
  try {
    return RunConfigFromJson(ReadFileBytes(path), path.parent_path());
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

std::string RunConfigToJson(const RunConfig& c) {
  nlohmann::ordered_json j;
  j["name"] = c.name;
  j["seed"] = c.seed;
  j["min_count"] = c.min_count;
  nlohmann::ordered_json paths = nlohmann::ordered_json::object();
  const std::pair<const char*, const std::filesystem::path*> named[] = {
      {"corpus", &c.paths.corpus}, {"vocab", &c.paths.vocab},
      {"embeddings", &c.paths.embeddings}, {"model", &c.paths.model},
      {"index", &c.paths.index}, {"out", &c.paths.out}};
  for (const auto& [key, path] : named) {
    if (!path->empty()) paths[key] = path->generic_string();
  }
  j["paths"] = paths;
  j["encoder"] = nlohmann::ordered_json::parse(EncoderConfigToJson(c.encoder));
  j["train"] = {{"batch_size", c.train.batch_size},
                {"max_epochs", c.train.max_epochs},
                {"patience", c.train.patience},
                {"train_loss_floor", c.train.train_loss_floor},
                {"optimizer", OptimizerName(c.train.optimizer)},
                {"learning_rate", c.train.learning_rate},
                {"dev_distractors", c.train.dev_distractors}};
  j["skipgram"] = {{"window", c.skipgram.window},
                   {"negatives", c.skipgram.negatives},
                   {"epochs", c.skipgram.epochs},
                   {"learning_rate", c.skipgram.learning_rate}};
  j["eval"] = {{"distractors", c.eval.distractors},
               {"iterations", c.eval.iterations}};
  return j.dump(2) + "\n";
}

}  // namespace codesearch::cli
