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

#include "sal/commands.h"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <set>

#include "sal/parallel.h"
#include "sal/png_writer.h"
#include "sal/status.h"

namespace sal {
namespace {

using Json = nlohmann::json;

void log(const std::string& msg) { std::cerr << "[sal] " << msg << std::endl; }

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string fmt_seconds(double s) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1fs", s);
  return buf;
}

bool wants(const std::string& experiment, const std::string& name) {
  return experiment == name || experiment == "all";
}

void check_experiment(const std::string& experiment) {
  static const std::set<std::string> known = {"table1", "table2", "fig9", "all", "none"};
  check(known.contains(experiment), ErrorCode::kInvalidConfig, "unknown experiment '" + experiment + "'");
}

std::vector<std::pair<int, int>> table1_pairs(const RunConfig& cfg) {
  auto pairs = cfg.pairs.empty() ? default_table1_pairs() : cfg.pairs;
  for (auto& [a, b] : pairs) {
    check(a != b && a >= 0 && b >= 0 && a < 10 && b < 10, ErrorCode::kInvalidClass,
          "bad pair " + std::to_string(a) + "," + std::to_string(b));
    if (a > b) std::swap(a, b);
  }
  return pairs;
}

int max_resolved(const RunConfig& cfg) {
  int m = 0;
  for (int n : cfg.resolved_sets) {
    check(n >= 0 && n <= 45, ErrorCode::kInvalidConfig, "resolved sets must lie in [0, 45]");
    m = std::max(m, n);
  }
  return m;
}

std::vector<std::pair<int, int>> fig9_pairs(const RunConfig& cfg, const std::vector<ConfusionSet>& sets) {
  const auto excluded = table1_pairs(cfg);
  std::vector<std::pair<int, int>> out;
  const int top = std::min<int>(cfg.fig9_pairs, static_cast<int>(sets.size()));
  for (int i = 0; i < top; ++i) {
    const std::pair<int, int> p{sets[i].class_a, sets[i].class_b};
    if (std::find(excluded.begin(), excluded.end(), p) == excluded.end()) out.push_back(p);
  }
  return out;
}

RunConfig pipeline_config(const TrainedPipeline& p) {
  return run_config_from_json(Json::parse(BlobReader(p, "run/").string("config")));
}

std::string pair_name(const LabeledDataset& ds, int a, int b) {
  return ds.class_names[a] + "/" + ds.class_names[b];
}

}  // namespace

LabeledDataset load_split(const RunConfig& cfg, Split split) {
  check(!cfg.data.empty(), ErrorCode::kDatasetNotFound, "no dataset path given");
  LabeledDataset ds = load_cifar10(cfg.data, split);
  const std::size_t per_class = split == Split::kTrain ? cfg.train_per_class : cfg.test_per_class;
  if (per_class > 0) ds = take_per_class(ds, per_class);
  return ds;
}

std::vector<std::pair<int, int>> experiment_pairs(const RunConfig& cfg, const RowMatrixD* stage1_test) {
  check_experiment(cfg.experiment);
  std::vector<std::pair<int, int>> out;
  auto add = [&](std::pair<int, int> p) {
    if (std::find(out.begin(), out.end(), p) == out.end()) out.push_back(p);
  };
  if (wants(cfg.experiment, "table1")) {
    for (auto p : table1_pairs(cfg)) add(p);
  }
  if (wants(cfg.experiment, "table2") || wants(cfg.experiment, "fig9")) {
    check(stage1_test != nullptr, ErrorCode::kNotFitted, "stage-1 decisions needed to rank confusion sets");
    const auto sets = build_confusion_sets(*stage1_test);
    if (wants(cfg.experiment, "table2")) {
      const int n = std::min<int>(max_resolved(cfg), static_cast<int>(sets.size()));
      for (int i = 0; i < n; ++i) add({sets[i].class_a, sets[i].class_b});
    }
    if (wants(cfg.experiment, "fig9")) {
      for (auto p : fig9_pairs(cfg, sets)) add(p);
    }
  }
  return out;
}

std::filesystem::path cmd_fit(const RunConfig& input) {
  RunConfig cfg = input;
  check_experiment(cfg.experiment);
  max_resolved(cfg);
  table1_pairs(cfg);
  derive_seeds(&cfg);
  cfg.sal.step3.validate();
  const LabeledDataset train = load_split(cfg, Split::kTrain);
  train.validate();
  log("loaded " + std::to_string(train.size()) + " training images");

  TrainedPipeline p;
  BlobWriter root(p, "");
  // The output directory is where the file goes, not part of the model.
  RunConfig stored = cfg;
  stored.out.clear();
  root.sub("run").put_string("config", to_json(stored).dump());

  Stopwatch sw;
  Localizer::fit(train, cfg.sal).save(root.sub("localizer"));
  log("global localizer fitted in " + fmt_seconds(sw.seconds()));

  std::optional<RowMatrixD> stage1_test;
  if (wants(cfg.experiment, "table2") || wants(cfg.experiment, "fig9")) {
    Stopwatch s1;
    ImageClassifier stage1 = ImageClassifier::fit(train, cfg.stage1);
    stage1.save(root.sub("stage1"));
    const LabeledDataset test = load_split(cfg, Split::kTest);
    stage1_test = stage1.predict(std::span<const ImageTensor>(test.images));
    log("stage-1 classifier fitted in " + fmt_seconds(s1.seconds()) +
        ", test accuracy " + std::to_string(accuracy(*stage1_test, test.labels)));
  }

  const auto pairs = experiment_pairs(cfg, stage1_test ? &*stage1_test : nullptr);
  const PairModelConfig pc = cfg.pair_config();
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    Stopwatch ps;
    const auto [a, b] = pairs[i];
    PairModel pm = PairModel::fit(train, a, b, pc);
    pm.save(root.sub("pairs").sub(pair_key(a, b)));
    log("pair " + std::to_string(i + 1) + "/" + std::to_string(pairs.size()) + " " +
        pair_name(train, a, b) + " fitted in " + fmt_seconds(ps.seconds()));
  }

  std::filesystem::create_directories(cfg.out);
  const auto path = std::filesystem::path(cfg.out) / kPipelineFile;
  save_pipeline(p, path);
  write_config(std::filesystem::path(cfg.out) / kConfigFile, cfg);
  log("wrote " + path.string() + " after " + fmt_seconds(sw.seconds()));
  return path;
}

Json box_record_json(const BoxRecord& r) {
  Json j;
  j["source"] = r.source;
  j["index"] = r.index;
  if (!r.ok()) {
    j["error"] = r.error;
    return j;
  }
  j["window"] = {{"center_row", r.window.center_row}, {"center_col", r.window.center_col}, {"size", r.window.size}};
  auto box = [](const BBox& b) {
    return Json{{"top", b.top}, {"left", b.left}, {"height", b.height}, {"width", b.width}};
  };
  j["raw_box"] = box(r.raw_box);
  j["box"] = box(r.box);
  j["used_fallback"] = r.used_fallback;
  return j;
}

BoxRecord box_record_from_json(const Json& j) {
  try {
    BoxRecord r;
    r.source = j.at("source").get<std::string>();
    r.index = j.at("index").get<long>();
    if (j.contains("error")) {
      r.error = j.at("error").get<std::string>();
      return r;
    }
    const auto& w = j.at("window");
    r.window.center_row = w.at("center_row").get<int>();
    r.window.center_col = w.at("center_col").get<int>();
    r.window.size = w.at("size").get<int>();
    auto box = [](const Json& b) {
      return BBox{b.at("top").get<int>(), b.at("left").get<int>(), b.at("height").get<int>(),
                  b.at("width").get<int>()};
    };
    r.raw_box = box(j.at("raw_box"));
    r.box = box(j.at("box"));
    r.used_fallback = j.at("used_fallback").get<bool>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kCorruptFormat, std::string("bad box record: ") + e.what());
  }
}

std::vector<BoxRecord> read_box_records(const std::filesystem::path& path) {
  std::ifstream in(path);
  check(static_cast<bool>(in), ErrorCode::kIoError, "cannot read " + path.string());
  std::vector<BoxRecord> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    Json j;
    try {
      j = Json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorCode::kCorruptFormat, std::string("bad box record line: ") + e.what());
    }
    out.push_back(box_record_from_json(j));
  }
  return out;
}

int cmd_localize(const std::filesystem::path& pipeline, const std::vector<std::filesystem::path>& inputs,
                 const std::filesystem::path& out_dir, bool viz) {
  const TrainedPipeline p = load_pipeline(pipeline);
  const Localizer loc = Localizer::load(BlobReader(p, "localizer/"));
  std::filesystem::create_directories(out_dir);
  if (viz) std::filesystem::create_directories(out_dir / "viz");

  std::ofstream boxes(out_dir / kBoxesFile);
  check(static_cast<bool>(boxes), ErrorCode::kIoError, "cannot write boxes file");
  TrainedPipeline blobs;
  BlobWriter items(blobs, "items/");
  std::size_t item = 0;
  std::size_t failures = 0;
  std::size_t fallbacks = 0;

  for (const auto& input : inputs) {
    std::vector<ImageTensor> images;
    try {
      if (input.extension() == ".png") {
        images.push_back(read_png(input));
      } else if (std::filesystem::is_directory(input)) {
        images = load_cifar10(input, Split::kTest).images;
      } else {
        images = read_cifar10_batch(input).images;
      }
    } catch (const Error& e) {
      BoxRecord r;
      r.source = input.string();
      r.error = e.what();
      boxes << box_record_json(r).dump() << "\n";
      ++failures;
      continue;
    }
    std::vector<std::optional<LocalizationResult>> results(images.size());
    std::vector<std::string> errors(images.size());
    parallel_for(images.size(), [&](std::size_t i) {
      try {
        check(images[i].channels() == 3, ErrorCode::kInvalidInput, "image is not RGB");
        results[i] = loc.localize(images[i]);
      } catch (const Error& e) {
        errors[i] = e.what();
      }
    });
    for (std::size_t i = 0; i < images.size(); ++i, ++item) {
      BoxRecord r;
      r.source = input.string();
      r.index = static_cast<long>(i);
      if (!results[i]) {
        r.error = errors[i];
        ++failures;
        boxes << box_record_json(r).dump() << "\n";
        continue;
      }
      const LocalizationResult& res = *results[i];
      r.window = res.window;
      r.raw_box = res.raw_box;
      r.box = res.box;
      r.used_fallback = res.used_fallback;
      fallbacks += res.used_fallback;
      boxes << box_record_json(r).dump() << "\n";

      char key[32];
      std::snprintf(key, sizeof key, "%08zu", item);
      const BlobWriter w = items.sub(key);
      w.put_f32("attention", res.attention.values,
                {static_cast<std::uint64_t>(res.attention.height), static_cast<std::uint64_t>(res.attention.width)});
      w.put_f32("crop", res.crop.data(),
                {static_cast<std::uint64_t>(res.crop.height()), static_cast<std::uint64_t>(res.crop.width()),
                 static_cast<std::uint64_t>(res.crop.channels())});
      const std::int32_t box[4] = {res.box.top, res.box.left, res.box.height, res.box.width};
      w.put_i32("box", box);
      if (viz) write_png(out_dir / "viz" / (std::string("item_") + key + ".png"), four_panel(images[i], res));
    }
  }
  save_pipeline(blobs, out_dir / kLocalizeBlobsFile);
  log("localized " + std::to_string(item) + " items, " + std::to_string(fallbacks) + " fallbacks, " +
      std::to_string(failures) + " failures");
  return failures == 0 ? 0 : 1;
}

namespace {

Json table1(const TrainedPipeline& p, const RunConfig& cfg, const LabeledDataset& test) {
  Json rows = Json::array();
  for (const auto& [a, b] : table1_pairs(cfg)) {
    const std::string key = "pairs/" + pair_key(a, b) + "/";
    check(p.has_prefix(key), ErrorCode::kNotFitted, "pipeline has no model for pair " + pair_key(a, b));
    const PairModel pm = PairModel::load(BlobReader(p, key));
    const LabeledDataset pair = subset_pairs(test, a, b);
    const PairDecisions d = pm.predict(std::span<const ImageTensor>(pair.images));
    const double full = accuracy(d.full, pair.labels);
    const double att = accuracy(d.attention, pair.labels);
    const double ens = accuracy(d.ensemble, pair.labels);
    rows.push_back({{"pair", {a, b}},
                    {"name", pair_name(test, a, b)},
                    {"test_images", pair.size()},
                    {"full", full},
                    {"attention", att},
                    {"ensemble", ens},
                    {"attention_minus_full", att - full},
                    {"ensemble_minus_full", ens - full},
                    {"holdout", {{"full", pm.validation().full},
                                 {"attention", pm.validation().attention},
                                 {"ensemble", pm.validation().ensemble}}}});
  }
  return {{"experiment", "table1"}, {"rows", rows}};
}

RowMatrixD stage1_decisions(const TrainedPipeline& p, const LabeledDataset& test) {
  check(p.has_prefix("stage1/"), ErrorCode::kNotFitted, "pipeline has no stage-1 classifier");
  const ImageClassifier stage1 = ImageClassifier::load(BlobReader(p, "stage1/"));
  return stage1.predict(std::span<const ImageTensor>(test.images));
}

Json table2(const TrainedPipeline& p, const RunConfig& cfg, const LabeledDataset& test,
            const RowMatrixD& s1) {
  const auto sets = build_confusion_sets(s1);
  const int needed = std::min<int>(max_resolved(cfg), static_cast<int>(sets.size()));
  std::map<std::string, PairDecisions> stage2;
  for (int i = 0; i < needed; ++i) {
    const auto& set = sets[i];
    const std::string key = "pairs/" + pair_key(set.class_a, set.class_b) + "/";
    check(p.has_prefix(key), ErrorCode::kNotFitted,
          "pipeline has no model for pair " + pair_key(set.class_a, set.class_b));
    const PairModel pm = PairModel::load(BlobReader(p, key));
    std::vector<ImageTensor> members;
    for (std::size_t m : set.members) members.push_back(test.images[m]);
    stage2.emplace(pair_key(set.class_a, set.class_b), pm.predict(std::span<const ImageTensor>(members)));
  }
  const double base = accuracy(s1, test.labels);
  Json rows = Json::array();
  rows.push_back({{"resolved_sets", 0}, {"strategy", "stage1"}, {"accuracy", base},
                  {"zero_resolution_accuracy",
                   two_stage_accuracy(s1, test.labels, sets, stage2, 0, Strategy::kFull)}});
  for (int n : cfg.resolved_sets) {
    const double full = two_stage_accuracy(s1, test.labels, sets, stage2, n, Strategy::kFull);
    for (Strategy s : {Strategy::kFull, Strategy::kAttention, Strategy::kEnsemble}) {
      const double acc = two_stage_accuracy(s1, test.labels, sets, stage2, n, s);
      rows.push_back({{"resolved_sets", n},
                      {"strategy", strategy_name(s)},
                      {"accuracy", acc},
                      {"delta_vs_stage1", acc - base},
                      {"delta_vs_full", acc - full}});
    }
  }
  Json set_sizes = Json::array();
  for (const auto& s : sets) set_sizes.push_back({{"pair", {s.class_a, s.class_b}}, {"size", s.size()}});
  return {{"experiment", "table2"}, {"rows", rows}, {"confusion_sets", set_sizes}};
}

Json fig9(const TrainedPipeline& p, const RunConfig& cfg, const LabeledDataset& test, const RowMatrixD& s1) {
  const auto sets = build_confusion_sets(s1);
  Json rows = Json::array();
  for (const auto& [a, b] : fig9_pairs(cfg, sets)) {
    const std::string key = "pairs/" + pair_key(a, b) + "/";
    check(p.has_prefix(key), ErrorCode::kNotFitted, "pipeline has no model for pair " + pair_key(a, b));
    const PairModel pm = PairModel::load(BlobReader(p, key));
    const LabeledDataset pair = subset_pairs(test, a, b);
    const PairDecisions d = pm.predict(std::span<const ImageTensor>(pair.images));
    rows.push_back({{"pair", {a, b}},
                    {"name", pair_name(test, a, b)},
                    {"full", accuracy(d.full, pair.labels)},
                    {"attention", accuracy(d.attention, pair.labels)},
                    {"ensemble", accuracy(d.ensemble, pair.labels)}});
  }
  return {{"experiment", "fig9"}, {"rows", rows}};
}

}  // namespace

std::vector<Json> cmd_evaluate(const std::filesystem::path& pipeline, const RunConfig& request) {
  check_experiment(request.experiment);
  check(request.experiment != "none", ErrorCode::kInvalidConfig, "nothing to evaluate for experiment 'none'");
  max_resolved(request);
  const TrainedPipeline p = load_pipeline(pipeline);
  RunConfig cfg = pipeline_config(p);
  cfg.experiment = request.experiment;
  cfg.out = request.out;
  if (!request.data.empty()) cfg.data = request.data;
  if (!request.pairs.empty()) cfg.pairs = request.pairs;
  cfg.resolved_sets = request.resolved_sets;
  cfg.viz = request.viz;

  const LabeledDataset test = load_split(cfg, Split::kTest);
  test.validate();
  std::vector<Json> records;
  if (wants(cfg.experiment, "table1")) records.push_back(table1(p, cfg, test));
  if (wants(cfg.experiment, "table2") || wants(cfg.experiment, "fig9")) {
    const RowMatrixD s1 = stage1_decisions(p, test);
    if (wants(cfg.experiment, "table2")) records.push_back(table2(p, cfg, test, s1));
    if (wants(cfg.experiment, "fig9")) records.push_back(fig9(p, cfg, test, s1));
  }

  std::filesystem::create_directories(cfg.out);
  std::ofstream out(std::filesystem::path(cfg.out) / kResultsFile);
  check(static_cast<bool>(out), ErrorCode::kIoError, "cannot write results file");
  for (const auto& r : records) out << r.dump() << "\n";
  write_config(std::filesystem::path(cfg.out) / kConfigFile, cfg);
  return records;
}

namespace {

std::string cell(const Json& v, int width) {
  char buf[64];
  if (v.is_number_float()) {
    std::snprintf(buf, sizeof buf, "%*.2f", width, 100.0 * v.get<double>());
  } else if (v.is_number()) {
    std::snprintf(buf, sizeof buf, "%*lld", width, v.get<long long>());
  } else {
    std::snprintf(buf, sizeof buf, "%*s", width, v.is_string() ? v.get<std::string>().c_str() : v.dump().c_str());
  }
  return buf;
}

std::string render(const std::string& title, const std::vector<std::string>& keys,
                   const std::vector<std::string>& heads, const Json& rows) {
  std::vector<std::size_t> widths;
  for (const auto& h : heads) widths.push_back(std::max<std::size_t>(h.size(), 8));
  for (const auto& row : rows)
    for (std::size_t i = 0; i < keys.size(); ++i)
      if (row.contains(keys[i]) && row[keys[i]].is_string())
        widths[i] = std::max(widths[i], row[keys[i]].get<std::string>().size());
  std::string out = title + "\n";
  std::string rule;
  for (std::size_t i = 0; i < heads.size(); ++i) {
    out += (i ? "  " : "") + std::string(widths[i] - heads[i].size(), ' ') + heads[i];
    rule += (i ? "  " : "") + std::string(widths[i], '-');
  }
  out += "\n" + rule + "\n";
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < keys.size(); ++i) {
      const int w = static_cast<int>(widths[i]);
      out += (i ? "  " : "") + (row.contains(keys[i]) ? cell(row[keys[i]], w) : std::string(widths[i], ' '));
    }
    out += "\n";
  }
  return out;
}

}  // namespace

std::string format_results_table(const Json& record) {
  const std::string experiment = record.at("experiment").get<std::string>();
  const Json& rows = record.at("rows");
  if (experiment == "table1") {
    return render("Pairwise accuracy (%)", {"name", "test_images", "full", "attention", "ensemble"},
                  {"pair", "images", "full", "attention", "ensemble"}, rows);
  }
  if (experiment == "table2") {
    return render("Ten-class accuracy (%) by resolved confusion sets",
                  {"resolved_sets", "strategy", "accuracy", "delta_vs_stage1", "delta_vs_full"},
                  {"sets", "strategy", "accuracy", "vs stage1", "vs full"}, rows);
  }
  return render("Additional pairs (%)", {"name", "full", "attention", "ensemble"},
                {"pair", "full", "attention", "ensemble"}, rows);
}

}  // namespace sal
