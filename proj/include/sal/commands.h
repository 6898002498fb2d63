/*
 * Copyright 2026 The SAL Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "sal/config.h"

namespace sal {

inline constexpr const char* kPipelineFile = "pipeline.salp";
inline constexpr const char* kConfigFile = "config.json";
inline constexpr const char* kResultsFile = "results.jsonl";
inline constexpr const char* kBoxesFile = "boxes.jsonl";
inline constexpr const char* kLocalizeBlobsFile = "localize.salp";

// Train or test split of cfg.data, cut to the configured images per class.
LabeledDataset load_split(const RunConfig& cfg, Split split);

// Class pairs whose stage-2 models the configured experiment needs.
// table2 and fig9 rank confusion sets from stage-1 test decisions.
std::vector<std::pair<int, int>> experiment_pairs(const RunConfig& cfg, const RowMatrixD* stage1_test);

// Fits the global localizer, the ten-class stage-1 classifier (table2, fig9)
// and every needed pair model; writes out/pipeline.salp and out/config.json.
// Returns the pipeline path.
std::filesystem::path cmd_fit(const RunConfig& cfg);

// One localized item (or the error that stopped it).
struct BoxRecord {
  std::string source;
  long index = -1;
  std::string error;  // empty on success
  AttentionWindow window;
  BBox raw_box;
  BBox box;
  bool used_fallback = false;

  bool ok() const { return error.empty(); }
  bool operator==(const BoxRecord&) const = default;
};

nlohmann::json box_record_json(const BoxRecord& r);
BoxRecord box_record_from_json(const nlohmann::json& j);
std::vector<BoxRecord> read_box_records(const std::filesystem::path& path);

// Localizes every image of every input (CIFAR batch file, CIFAR directory
// test split, or PNG). Writes boxes.jsonl, localize.salp (maps and crops),
// and four-panel PNGs under viz/ when `viz`. Returns 0 iff every item
// succeeded.
int cmd_localize(const std::filesystem::path& pipeline, const std::vector<std::filesystem::path>& inputs,
                 const std::filesystem::path& out_dir, bool viz);

// Runs cfg.experiment ("table1", "table2", "fig9" or "all") against the test
// split, writes results.jsonl (one record per experiment) and config.json
// under cfg.out, and returns the records.
std::vector<nlohmann::json> cmd_evaluate(const std::filesystem::path& pipeline, const RunConfig& cfg);

// Fixed-width text table for one cmd_evaluate record, accuracies in percent.
std::string format_results_table(const nlohmann::json& record);

}  // namespace sal
