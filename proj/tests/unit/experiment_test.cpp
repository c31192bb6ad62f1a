// Copyright 2026 The camnorm Authors.
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

#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>

#include "camnorm/error.hpp"
#include "camnorm/experiment.hpp"

namespace camnorm {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

TEST(Fnv1a, ReferenceVectors) {
  EXPECT_EQ(fnv1a64_hex(""), "cbf29ce484222325");
  EXPECT_EQ(fnv1a64_hex("a"), "af63dc4c8601ec8c");
  EXPECT_EQ(fnv1a64_hex("foobar"), "85944171f73967e8");
}

TEST(ExperimentConfig, DefaultsAreDeskSchedule) {
  const ExperimentConfig c = ExperimentConfig::from_json(json::object());
  EXPECT_EQ(c.train.epochs, 20u);
  EXPECT_EQ(c.train.decay_epoch, 14u);
  EXPECT_EQ(c.estimation.n_batches, 10u);
  EXPECT_EQ(c.estimation.batch_size, 64u);
  EXPECT_EQ(c.adaptation, Adaptation::kCamera);
  EXPECT_EQ(c.sweep_n, (std::vector<std::size_t>{1, 5, 10, 20, 50}));
}

TEST(ExperimentConfig, RoundTripKeepsHash) {
  json j = {{"seed", 9},
            {"data", "direct-transfer"},
            {"train", {{"epochs", 12}, {"decay_epoch", 8}, {"supervision", "weak"}}},
            {"estimation", {{"n_batches", 3}, {"splits", {"gallery"}}}},
            {"eval", {{"adaptation", "adabn"}}},
            {"incremental", {{"sequence", {"incremental-a", "incremental-b"}}, {"mode", "data-free"}}},
            {"sweep", {{"repeats", 2}, {"n_batches", {1, 2}}}},
            {"output_dir", "runs/x"}};
  const ExperimentConfig c = ExperimentConfig::from_json(j);
  EXPECT_EQ(c.seed, 9u);
  EXPECT_EQ(c.train.seed, 9u);
  EXPECT_EQ(c.data.preset, "direct-transfer");
  EXPECT_EQ(c.train.supervision, Supervision::kWeak);
  EXPECT_EQ(c.estimation.splits, std::vector<Split>{Split::kGallery});
  EXPECT_EQ(c.adaptation, Adaptation::kDataset);
  EXPECT_EQ(c.sequence.size(), 2u);
  EXPECT_EQ(c.incremental_mode, IncrementalMode::kDataFree);
  const ExperimentConfig back = ExperimentConfig::from_json(c.to_json());
  EXPECT_EQ(back.to_json(), c.to_json());
  EXPECT_EQ(back.hash(), c.hash());
  EXPECT_EQ(c.hash().size(), 16u);
}

TEST(ExperimentConfig, HashTracksContent) {
  const ExperimentConfig a = ExperimentConfig::from_json({{"seed", 1}});
  const ExperimentConfig b = ExperimentConfig::from_json({{"seed", 2}});
  EXPECT_NE(a.hash(), b.hash());
  EXPECT_EQ(a.hash(), ExperimentConfig::from_json({{"seed", 1}}).hash());
  EXPECT_EQ(a.hash(), fnv1a64_hex(a.to_json().dump()));
}

TEST(ExperimentConfig, UnknownKeysRejectedAtEveryLevel) {
  EXPECT_THROW(ExperimentConfig::from_json({{"sede", 1}}), ConfigError);
  EXPECT_THROW(ExperimentConfig::from_json({{"train", {{"epoch", 3}}}}), ConfigError);
  EXPECT_THROW(ExperimentConfig::from_json({{"eval", {{"adapt", "cbn"}}}}), ConfigError);
  EXPECT_THROW(ExperimentConfig::from_json({{"arch", {{"depth", 3}}}}), ConfigError);
  EXPECT_THROW(ExperimentConfig::from_json({{"data", {{"synthetic", {{"dims", 3}}}}}}),
               ConfigError);
  EXPECT_THROW(ExperimentConfig::from_json({{"estimation", {{"splits", {"test"}}}}}),
               ConfigError);
}

TEST(ExperimentConfig, InvalidValuesRejected) {
  EXPECT_THROW(ExperimentConfig::from_json({{"seed", "one"}}), ConfigError);
  EXPECT_THROW(ExperimentConfig::from_json({{"eval", {{"adaptation", "bn"}}}}), ConfigError);
  EXPECT_THROW(ExperimentConfig::from_json({{"sweep", {{"repeats", 0}}}}), ConfigError);
  EXPECT_THROW(ExperimentConfig::from_json({{"estimation", {{"batch_size", 0}}}}), ConfigError);
  EXPECT_THROW(ExperimentConfig::from_json({{"train", {{"epochs", 10}, {"decay_epoch", 10}}}}),
               ConfigError);
  EXPECT_THROW(ExperimentConfig::from_json(json::array()), ConfigError);
}

TEST(ExperimentConfig, FileErrors) {
  const fs::path dir = fs::temp_directory_path() / "camnorm_experiment_test";
  fs::create_directories(dir);
  EXPECT_THROW(ExperimentConfig::from_file(dir / "missing.json"), IoError);
  std::ofstream(dir / "broken.json") << "{\"seed\": ";
  EXPECT_THROW(ExperimentConfig::from_file(dir / "broken.json"), ConfigError);
  std::ofstream(dir / "ok.json") << "{\"seed\": 3}";
  EXPECT_EQ(ExperimentConfig::from_file(dir / "ok.json").seed, 3u);
}

TEST(ExperimentConfig, ShippedConfigsParse) {
  std::size_t n = 0;
  for (const auto& entry : fs::directory_iterator(CAMNORM_CONFIG_DIR)) {
    if (entry.path().extension() != ".json") continue;
    SCOPED_TRACE(entry.path().string());
    EXPECT_NO_THROW(ExperimentConfig::from_file(entry.path()).validate());
    ++n;
  }
  EXPECT_GE(n, 1u);
}

TEST(DataSource, StringsAndObjects) {
  EXPECT_EQ(DataSource::from_json("default").preset, "default");
  EXPECT_EQ(DataSource::from_json("some/dir").path, "some/dir");
  SynthConfig s;
  s.train_identities = 7;
  const DataSource d = DataSource::from_json({{"synthetic", s.to_json()}});
  ASSERT_TRUE(d.synthetic);
  EXPECT_EQ(d.synthetic->train_identities, 7u);
  EXPECT_THROW(load_source(DataSource{}, 1), ConfigError);
  EXPECT_THROW(load_source(DataSource::from_json("no/such/dir"), 1), IoError);
}

TEST(TrainModel, WeakRelabelsAndBuildsPerCameraHead) {
  SynthConfig s;
  s.dim = 6;
  s.train_identities = 12;
  s.eval_identities = 6;
  s.train_images_per_camera = 2;
  s.gallery_images_per_camera = 2;
  const Dataset ds = generate_synthetic(s);
  ArchConfig arch = ArchConfig::uniform(6, NormKind::kCBN);
  TrainConfig cfg = TrainConfig::desk();
  cfg.epochs = 1;
  cfg.decay_epoch = 0;
  cfg.supervision = Supervision::kWeak;
  const TrainedModel t = train_model(ds, arch, cfg);
  ASSERT_EQ(t.model.heads().size(), 1u);
  EXPECT_EQ(t.model.heads()[0].kind, HeadKind::kPerCamera);
  EXPECT_EQ(t.model.heads()[0].classifiers.size(), 4u);
  arch.input_dim = 7;
  EXPECT_THROW(train_model(ds, arch, cfg), DimensionError);
}

TEST(Sweep, CsvLayoutAndPopulationVariance) {
  SweepRow r;
  r.n_batches = 5;
  r.maps = {80.0, 82.0};
  r.mean_map = 81.0;
  r.var_map = 1.0;
  const std::vector<SweepRow> rows{r};
  EXPECT_EQ(sweep_csv(rows), "N,mean_mAP,var_mAP\n5,81.0,1.0\n");
}

TEST(WriteText, CreatesParentsAndReportsFailure) {
  const fs::path dir = fs::temp_directory_path() / "camnorm_experiment_test" / "a" / "b";
  fs::remove_all(dir.parent_path());
  write_text(dir / "x.txt", "hello");
  std::ifstream in(dir / "x.txt");
  std::string s;
  in >> s;
  EXPECT_EQ(s, "hello");
  EXPECT_THROW(write_text(dir, "x"), IoError);
}

}  // namespace
}  // namespace camnorm
