// Copyright 2026 The priorshift Authors
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

#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "priorshift/denoiser.h"
#include "priorshift/harness.h"
#include "priorshift/latent.h"
#include "priorshift/schedule.h"
#include "priorshift/train.h"

namespace priorshift {

inline constexpr const char* kModelFormat = "PRIORSHIFT-MODEL v1";
inline constexpr const char* kWorldFormat = "priorshift-world v1";

// 17 significant digits; parses back bit-exactly.
std::string format_double(double v);
// Strict parse of the whole token; throws std::invalid_argument.
double parse_double(std::string_view token);
std::vector<double> parse_doubles(std::string_view text, char sep);
std::vector<int> parse_ints(std::string_view text, char sep);

// Dataset text: header `#dim=<d> labels=<K>`, then one sequence per line as
// id TAB labels TAB frames [TAB zc2 TAB h]. Frames are separated by '|',
// components by ','. An empty side-channel column means the channel is absent.
void write_dataset(std::ostream& os, const Dataset& ds);
Dataset read_dataset(std::istream& is);
std::string dataset_to_string(const Dataset& ds);
Dataset load_dataset(const std::filesystem::path& path);

// World files are JSON.
std::string world_to_string(const World& w);
World world_from_string(const std::string& text);
World load_world(const std::filesystem::path& path);

struct Model {
  Schedule schedule = Schedule::default_linear();
  DenoiserParams denoiser = DenoiserParams::zeros(DenoiserConfig{});
  ResidualParams residual = ResidualParams::zeros(ResidualConfig{});
  Standardizer standardizer;

  bool operator==(const Model&) const = default;
};

void write_model(std::ostream& os, const Model& m);
Model read_model(std::istream& is);
std::string model_to_string(const Model& m);
Model load_model(const std::filesystem::path& path);

// Training configuration JSON; absent keys keep their defaults.
TrainConfig train_config_from_string(const std::string& text);
std::string train_config_to_string(const TrainConfig& cfg);

// Two-column CSV files under `dir`: posterior_<t>.csv, likelihood_<t>.csv and
// prior.csv, each with header x,density.
std::vector<std::filesystem::path> write_fig1(const Fig1Data& data,
                                              const std::filesystem::path& dir, bool overwrite);

std::string read_file(const std::filesystem::path& path);
// Fails when the file exists and `overwrite` is false.
void write_file(const std::filesystem::path& path, const std::string& content, bool overwrite);

}  // namespace priorshift
