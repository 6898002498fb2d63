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

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>

#include "doctest.h"
#include "sal/commands.h"
#include "sal/status.h"
#include "sal/synthetic.h"

namespace fs = std::filesystem;
using namespace sal;

namespace {

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::kIoError;
}

std::vector<char> slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

const fs::path& fixture_dir() {
  static const fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / "sal_cli_fixture";
    fs::remove_all(d);
    SyntheticConfig sc;
    sc.train_per_class = 10;
    sc.test_per_class = 4;
    write_synthetic_cifar(d, sc);
    return d;
  }();
  return dir;
}

// A pipeline small enough to fit in seconds.
RunConfig tiny(const std::string& out) {
  RunConfig cfg;
  cfg.data = fixture_dir().string();
  cfg.out = (fs::temp_directory_path() / out).string();
  for (Step1Config* s : {&cfg.sal.step1, &cfg.stage1.pixel, &cfg.branch.pixel}) {
    s->cascade.hop.max_channels = 4;
    s->cascade.fit_images = 20;
    s->gbdt.rounds = 5;
  }
  cfg.sal.step2.features.hop.max_channels = 4;
  cfg.sal.step2.features.fit_images = 20;
  cfg.sal.step2.gbdt.rounds = 5;
  cfg.sal.step2.subset_images = 20;
  cfg.holdout_fraction = 0.2;
  return cfg;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("fit is deterministic and loadable") {
  RunConfig a = tiny("sal_cli_fit_a");
  a.experiment = "none";
  RunConfig b = a;
  b.out = (fs::temp_directory_path() / "sal_cli_fit_b").string();
  const fs::path pa = cmd_fit(a);
  const fs::path pb = cmd_fit(b);
  CHECK(slurp(pa) == slurp(pb));
  const TrainedPipeline p = load_pipeline(pa);
  CHECK(p.has_prefix("localizer/"));
  CHECK(fs::exists(fs::path(a.out) / kConfigFile));
  const RunConfig echoed = read_config(fs::path(a.out) / kConfigFile);
  CHECK(to_json(echoed) == to_json(run_config_from_json(to_json(echoed))));
  CHECK(echoed.seed == a.seed);

  RunConfig missing = a;
  missing.data = "/nonexistent/cifar";
  CHECK(code_of([&] { cmd_fit(missing); }) == ErrorCode::kDatasetNotFound);
  RunConfig unknown = a;
  unknown.experiment = "table9";
  CHECK(code_of([&] { cmd_fit(unknown); }) == ErrorCode::kInvalidConfig);
}

TEST_CASE("localize emits windows, boxes and crops") {
  RunConfig cfg = tiny("sal_cli_loc");
  cfg.experiment = "none";
  const fs::path pipe = cmd_fit(cfg);
  const fs::path out = fs::path(cfg.out) / "loc";
  const int rc = cmd_localize(pipe, {fixture_dir() / "test_batch.bin", fixture_dir() / "missing.bin"}, out, true);
  CHECK(rc == 1);
  const auto records = read_box_records(out / kBoxesFile);
  REQUIRE(records.size() == 41);
  int errors = 0;
  for (const auto& r : records) {
    if (!r.ok()) {
      ++errors;
      continue;
    }
    CHECK(r.window.size == 19);
    CHECK(r.window.fits(32, 32));
    CHECK(r.box.within(32, 32));
    CHECK(box_record_from_json(box_record_json(r)) == r);
  }
  CHECK(errors == 1);
  const TrainedPipeline blobs = load_pipeline(out / kLocalizeBlobsFile);
  int crops = 0;
  for (const auto& [name, blob] : blobs.blobs) {
    if (name.ends_with("/crop")) {
      ++crops;
      CHECK(blob.shape == std::vector<std::uint64_t>{32, 32, 3});
    }
  }
  CHECK(crops == 40);
  CHECK(fs::exists(out / "viz" / "item_00000000.png"));
  CHECK(cmd_localize(pipe, {fixture_dir() / "test_batch.bin"}, out, false) == 0);
}

TEST_CASE("evaluate reports table shapes") {
  RunConfig cfg = tiny("sal_cli_eval");
  cfg.experiment = "all";
  cfg.resolved_sets = {1, 2};
  cfg.fig9_pairs = 3;
  const fs::path pipe = cmd_fit(cfg);

  const auto records = cmd_evaluate(pipe, cfg);
  REQUIRE(records.size() == 3);
  const auto& t1 = records[0];
  CHECK(t1["experiment"] == "table1");
  REQUIRE(t1["rows"].size() == 4);
  for (const auto& row : t1["rows"]) {
    for (const char* s : {"full", "attention", "ensemble"}) CHECK(row.contains(s));
  }
  const auto& t2 = records[1];
  CHECK(t2["experiment"] == "table2");
  REQUIRE(t2["rows"].size() == 7);
  CHECK(t2["rows"][0]["accuracy"] == t2["rows"][0]["zero_resolution_accuracy"]);
  CHECK(records[2]["experiment"] == "fig9");
  CHECK(records[2]["rows"].size() <= 3);

  std::ifstream results(fs::path(cfg.out) / kResultsFile);
  int lines = 0;
  for (std::string line; std::getline(results, line);) lines += !line.empty();
  CHECK(lines == 3);

  // Header, rule and one line per row.
  for (const auto& record : records) {
    const std::string table = format_results_table(record);
    CHECK(static_cast<std::size_t>(std::count(table.begin(), table.end(), '\n')) == 3 + record["rows"].size());
  }
  CHECK(format_results_table(t1).find(t1["rows"][0]["name"].get<std::string>()) != std::string::npos);

  RunConfig bad = cfg;
  bad.experiment = "table7";
  CHECK(code_of([&] { cmd_evaluate(pipe, bad); }) == ErrorCode::kInvalidConfig);
  bad.experiment = "table2";
  bad.resolved_sets = {46};
  CHECK(code_of([&] { cmd_evaluate(pipe, bad); }) == ErrorCode::kInvalidConfig);
}

}  // TEST_SUITE
