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

#include "camnorm/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "camnorm/error.hpp"

namespace camnorm {
using nlohmann::json;

static_assert(std::endian::native == std::endian::little,
              "checkpoint payload assumes a little-endian host");

namespace {

constexpr const char* kFormat = "camnorm-checkpoint";

struct Slot {
  std::string name;
  Shape shape;
  std::span<double> values;
};

// Every stored array of the model in payload order.
std::vector<Slot> payload_slots(Model& model) {
  std::vector<Slot> slots;
  for (std::size_t i = 0; i < model.layers().size(); ++i) {
    const std::string prefix = "layer" + std::to_string(i);
    if (auto* a = std::get_if<AffineLayer>(&model.layers()[i])) {
      slots.push_back({prefix + ".weight", a->weight.shape(), a->weight.values()});
      slots.push_back({prefix + ".bias", {a->bias.size()}, a->bias});
    } else if (auto* n = std::get_if<NormLayer>(&model.layers()[i])) {
      NormParams& p = n->params;
      slots.push_back({prefix + ".gamma", {p.gamma.size()}, p.gamma});
      slots.push_back({prefix + ".beta", {p.beta.size()}, p.beta});
      slots.push_back({prefix + ".running_mean", {p.running_mean.size()}, p.running_mean});
      slots.push_back({prefix + ".running_var", {p.running_var.size()}, p.running_var});
    }
  }
  for (Head& h : model.heads()) {
    for (auto& [key, c] : h.classifiers) {
      const std::string prefix = Model::head_param_prefix(h, key);
      slots.push_back({prefix + ".weight", c.weight.shape(), c.weight.values()});
      slots.push_back({prefix + ".bias", {c.bias.size()}, c.bias});
    }
  }
  return slots;
}

json heads_json(const Model& model) {
  json heads = json::array();
  for (const Head& h : model.heads()) {
    json classifiers = json::array();
    for (const auto& [key, c] : h.classifiers) {
      classifiers.push_back({{"camera", key}, {"classes", c.num_classes()}});
    }
    heads.push_back({{"source", h.source},
                     {"kind", h.kind == HeadKind::kSingle ? "single" : "per_camera"},
                     {"identities", h.identities},
                     {"classifiers", classifiers}});
  }
  return heads;
}

}  // namespace

void save_checkpoint(const Model& model, const CheckpointMeta& meta,
                     const std::filesystem::path& path) {
  Model copy = model;
  const auto slots = payload_slots(copy);
  json layout = json::array();
  std::size_t count = 0;
  for (const Slot& s : slots) {
    layout.push_back({{"name", s.name}, {"shape", s.shape}});
    count += s.values.size();
  }
  const json header = {{"format", kFormat},
                       {"version", 1},
                       {"arch", model.arch().to_json()},
                       {"heads", heads_json(model)},
                       {"seed", meta.seed},
                       {"epoch", meta.epoch},
                       {"config_hash", meta.config_hash},
                       {"payload", {{"dtype", "float64-le"},
                                    {"count", count},
                                    {"layout", layout}}}};
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << header.dump() << '\n';
  for (const Slot& s : slots) {
    out.write(reinterpret_cast<const char*>(s.values.data()),
              static_cast<std::streamsize>(s.values.size() * sizeof(double)));
  }
  if (!out) throw IoError("write failed for " + path.string());
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw ParseError(path.string(), 1, "missing header");

  LoadedCheckpoint loaded;
  json header;
  try {
    header = json::parse(line);
    if (header.at("format") != kFormat || header.at("version") != 1) {
      throw SchemaError(path.string() + ": not a version-1 camnorm checkpoint");
    }
    const ArchConfig arch = ArchConfig::from_json(header.at("arch"));
    RngStream unused(0);
    loaded.model = model_build(arch, unused);
    for (const json& h : header.at("heads")) {
      Head head;
      head.source = h.at("source").get<std::string>();
      head.kind = h.at("kind") == "single" ? HeadKind::kSingle : HeadKind::kPerCamera;
      head.identities = h.at("identities").get<std::vector<int>>();
      for (const json& c : h.at("classifiers")) {
        const auto classes = c.at("classes").get<std::size_t>();
        head.classifiers.emplace(
            c.at("camera").get<int>(),
            Classifier{Tensor({arch.widths.back(), classes}),
                       std::vector<double>(classes, 0.0)});
      }
      loaded.model.heads().push_back(std::move(head));
    }
    loaded.meta.seed = header.at("seed").get<std::uint64_t>();
    loaded.meta.epoch = header.at("epoch").get<std::size_t>();
    loaded.meta.config_hash = header.at("config_hash").get<std::string>();
  } catch (const json::exception& e) {
    throw SchemaError(path.string() + ": " + e.what());
  }

  auto slots = payload_slots(loaded.model);
  const json& layout = header.at("payload").at("layout");
  if (layout.size() != slots.size()) {
    throw SchemaError(path.string() + ": payload layout has " +
                      std::to_string(layout.size()) + " arrays, model expects " +
                      std::to_string(slots.size()));
  }
  for (std::size_t i = 0; i < slots.size(); ++i) {
    if (layout[i].at("name") != slots[i].name ||
        layout[i].at("shape").get<Shape>() != slots[i].shape) {
      throw SchemaError(path.string() + ": payload entry " + std::to_string(i) +
                        " does not match model layout");
    }
    in.read(reinterpret_cast<char*>(slots[i].values.data()),
            static_cast<std::streamsize>(slots[i].values.size() * sizeof(double)));
    if (!in) throw IoError(path.string() + ": truncated payload");
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw SchemaError(path.string() + ": trailing bytes after payload");
  }
  return loaded;
}

}  // namespace camnorm
