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

#include "camnorm/experiment.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "camnorm/error.hpp"
#include "camnorm/evaluation.hpp"

namespace camnorm {
namespace {

using nlohmann::json;

void reject_unknown(const json& j, const std::set<std::string>& allowed,
                    const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (!allowed.contains(key)) {
      throw ConfigError("unknown key '" + key + "' in " + where);
    }
  }
}

template <typename T>
T get_or(const json& j, const char* key, T fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(where + "." + key + ": " + e.what());
  }
}

}  // namespace

json DataSource::to_json() const {
  json j = json::object();
  if (!path.empty()) j["path"] = path;
  if (!preset.empty()) j["preset"] = preset;
  if (synthetic) j["synthetic"] = synthetic->to_json();
  return j;
}

DataSource DataSource::from_json(const json& j) {
  if (j.is_string()) {
    // Bare strings name a preset when one matches, a directory otherwise.
    const auto s = j.get<std::string>();
    const auto names = synth_preset_names();
    DataSource d;
    if (std::find(names.begin(), names.end(), s) != names.end()) {
      d.preset = s;
    } else {
      d.path = s;
    }
    return d;
  }
  reject_unknown(j, {"path", "preset", "synthetic"}, "data");
  DataSource d;
  d.path = get_or<std::string>(j, "path", "", "data");
  d.preset = get_or<std::string>(j, "preset", "", "data");
  if (j.contains("synthetic")) d.synthetic = SynthConfig::from_json(j.at("synthetic"));
  return d;
}

ExperimentConfig ExperimentConfig::from_json(const json& j) {
  reject_unknown(j,
                 {"seed", "data", "arch", "train", "estimation", "eval", "incremental",
                  "sweep", "output_dir"},
                 "config");
  ExperimentConfig c;
  c.seed = get_or<std::uint64_t>(j, "seed", c.seed, "config");
  if (j.contains("data")) c.data = DataSource::from_json(j.at("data"));
  if (j.contains("arch")) c.arch = ArchConfig::from_json(j.at("arch"));
  TrainConfig base = TrainConfig::desk();
  base.seed = c.seed;
  c.train = j.contains("train") ? TrainConfig::from_json(j.at("train"), base) : base;
  if (j.contains("estimation")) {
    const json& e = j.at("estimation");
    reject_unknown(e, {"n_batches", "batch_size", "splits"}, "estimation");
    c.estimation.n_batches = get_or(e, "n_batches", c.estimation.n_batches, "estimation");
    c.estimation.batch_size = get_or(e, "batch_size", c.estimation.batch_size, "estimation");
    if (e.contains("splits")) {
      c.estimation.splits.clear();
      for (const auto& s : get_or<std::vector<std::string>>(e, "splits", {}, "estimation")) {
        try {
          c.estimation.splits.push_back(parse_split(s));
        } catch (const Error&) {
          throw ConfigError("estimation.splits: unknown split '" + s + "'");
        }
      }
    }
  }
  if (j.contains("eval")) {
    const json& e = j.at("eval");
    reject_unknown(e, {"adaptation"}, "eval");
    c.adaptation = parse_adaptation(get_or<std::string>(e, "adaptation", "cbn", "eval"));
  }
  if (j.contains("incremental")) {
    const json& e = j.at("incremental");
    reject_unknown(e, {"sequence", "mode", "warmup"}, "incremental");
    if (e.contains("sequence")) {
      if (!e.at("sequence").is_array()) {
        throw ConfigError("incremental.sequence must be an array");
      }
      for (const json& s : e.at("sequence")) c.sequence.push_back(DataSource::from_json(s));
    }
    c.incremental_mode =
        parse_incremental_mode(get_or<std::string>(e, "mode", "replay", "incremental"));
    c.warmup = get_or(e, "warmup", c.warmup, "incremental");
  }
  if (j.contains("sweep")) {
    const json& e = j.at("sweep");
    reject_unknown(e, {"repeats", "n_batches"}, "sweep");
    c.sweep_repeats = get_or(e, "repeats", c.sweep_repeats, "sweep");
    c.sweep_n = get_or(e, "n_batches", c.sweep_n, "sweep");
  }
  c.output_dir = get_or(j, "output_dir", c.output_dir, "config");
  c.validate();
  return c;
}

ExperimentConfig ExperimentConfig::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  }
  return from_json(j);
}

json ExperimentConfig::to_json() const {
  json splits = json::array();
  for (Split s : estimation.splits) splits.push_back(std::string(to_string(s)));
  json seq = json::array();
  for (const DataSource& d : sequence) seq.push_back(d.to_json());
  return {{"seed", seed},
          {"data", data.to_json()},
          {"arch", arch.to_json()},
          {"train", train.to_json()},
          {"estimation",
           {{"n_batches", estimation.n_batches},
            {"batch_size", estimation.batch_size},
            {"splits", splits}}},
          {"eval", {{"adaptation", std::string(to_string(adaptation))}}},
          {"incremental",
           {{"sequence", seq},
            {"mode", std::string(to_string(incremental_mode))},
            {"warmup", warmup}}},
          {"sweep", {{"repeats", sweep_repeats}, {"n_batches", sweep_n}}},
          {"output_dir", output_dir}};
}

void ExperimentConfig::validate() const {
  arch.validate();
  train.validate();
  estimation.validate();
  if (sweep_repeats == 0) throw ConfigError("sweep.repeats must be positive");
  for (std::size_t n : sweep_n) {
    if (n == 0) throw ConfigError("sweep.n_batches entries must be positive");
  }
  if (output_dir.empty()) throw ConfigError("output_dir must not be empty");
}

std::string ExperimentConfig::hash() const { return fnv1a64_hex(to_json().dump()); }

std::string fnv1a64_hex(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

Dataset load_source(const DataSource& source, std::uint64_t seed) {
  if (!source.path.empty()) return load_dataset(source.path);
  if (!source.preset.empty()) return generate_synthetic(synth_preset(source.preset, seed));
  if (source.synthetic) return generate_synthetic(*source.synthetic);
  throw ConfigError("no data source given (path, preset or synthetic)");
}

TrainedModel train_model(const Dataset& ds, const ArchConfig& arch, const TrainConfig& cfg) {
  cfg.validate();
  if (arch.input_dim != ds.dim) {
    throw DimensionError("arch input_dim " + std::to_string(arch.input_dim) +
                         " does not match dataset dim " + std::to_string(ds.dim));
  }
  const bool weak = cfg.supervision == Supervision::kWeak;
  const Dataset relabeled =
      weak && !ds.has_intra_labels() ? relabel_intra_camera(ds) : Dataset{};
  const Dataset& train_set = weak && !ds.has_intra_labels() ? relabeled : ds;

  const RngStream root(cfg.seed);
  RngStream init_rng = root.derive(1);
  RngStream head_rng = root.derive(2);
  RngStream train_rng = root.derive(3);
  TrainedModel out{model_build(arch, init_rng), {}};
  add_head_for(out.model, train_set, weak, head_rng);
  out.log = train(out.model, train_set, cfg, train_rng);
  return out;
}

IncrementalRun run_incremental_experiment(ExperimentConfig cfg) {
  if (cfg.sequence.empty()) {
    cfg.sequence = {DataSource::from_json("incremental-a"), DataSource::from_json("incremental-b")};
  }
  cfg.validate();
  IncrementalRun run;
  for (const DataSource& s : cfg.sequence) run.datasets.push_back(load_source(s, cfg.seed));
  cfg.arch.input_dim = run.datasets.front().dim;
  const RngStream root(cfg.seed);
  RngStream init_rng = root.derive(1);
  RngStream run_rng = root.derive(2);
  run.model = model_build(cfg.arch, init_rng);
  run.report = run_incremental(run.model, run.datasets, cfg.train,
                               {cfg.incremental_mode, cfg.warmup, cfg.estimation}, run_rng);
  return run;
}

std::vector<SweepRow> sweep_nbatches(const Model& model, const Dataset& ds,
                                     std::span<const std::size_t> n_values,
                                     std::size_t repeats, const EstimationOptions& base,
                                     std::uint64_t seed) {
  std::vector<SweepRow> rows;
  for (std::size_t n : n_values) {
    SweepRow row;
    row.n_batches = n;
    EstimationOptions opts = base;
    opts.n_batches = n;
    for (std::size_t r = 0; r < repeats; ++r) {
      RngStream rng = RngStream(seed).derive(r);
      row.maps.push_back(100.0 * evaluate_model(model, ds, Adaptation::kCamera, opts, rng).map);
    }
    for (double m : row.maps) row.mean_map += m;
    row.mean_map /= static_cast<double>(repeats);
    for (double m : row.maps) row.var_map += (m - row.mean_map) * (m - row.mean_map);
    row.var_map /= static_cast<double>(repeats);
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string sweep_csv(std::span<const SweepRow> rows) {
  std::ostringstream out;
  out << "N,mean_mAP,var_mAP\n";
  for (const SweepRow& r : rows) {
    out << r.n_batches << ',' << json(r.mean_map).dump() << ',' << json(r.var_map).dump()
        << '\n';
  }
  return out.str();
}

void write_text(const std::filesystem::path& path, std::string_view text) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  if (ec) throw IoError("cannot create " + path.parent_path().string() + ": " + ec.message());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace camnorm
