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

#include "camnorm/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

#include "camnorm/error.hpp"

namespace camnorm {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::string_view kFixedColumns[] = {"split", "identity", "camera",
                                              "intra_label"};

void append_double(std::string& out, double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, end);
}

std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      cells.push_back(line.substr(start));
      return cells;
    }
    cells.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

template <typename T>
T parse_number(std::string_view cell, const std::string& file,
               std::size_t line_no, std::string_view column) {
  T value{};
  auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
  if (ec != std::errc() || ptr != cell.data() + cell.size()) {
    throw ParseError(file, line_no,
                     "bad value '" + std::string(cell) + "' in column " +
                         std::string(column));
  }
  return value;
}

}  // namespace

std::string_view to_string(Split split) {
  switch (split) {
    case Split::kTrain:
      return "train";
    case Split::kQuery:
      return "query";
    case Split::kGallery:
      return "gallery";
  }
  return "?";
}

Split parse_split(std::string_view text) {
  if (text == "train") return Split::kTrain;
  if (text == "query") return Split::kQuery;
  if (text == "gallery") return Split::kGallery;
  throw ConfigError("unknown split '" + std::string(text) + "'");
}

std::vector<std::size_t> Dataset::indices(Split split) const {
  const Split one[] = {split};
  return indices(one);
}

std::vector<std::size_t> Dataset::indices(std::span<const Split> splits) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (std::find(splits.begin(), splits.end(), samples[i].split) !=
        splits.end()) {
      out.push_back(i);
    }
  }
  return out;
}

std::vector<int> Dataset::identities_in(Split split) const {
  std::set<int> ids;
  for (const Sample& s : samples) {
    if (s.split == split) ids.insert(s.identity);
  }
  return {ids.begin(), ids.end()};
}

std::set<int> Dataset::cameras_in(Split split) const {
  std::set<int> cams;
  for (const Sample& s : samples) {
    if (s.split == split) cams.insert(s.camera);
  }
  return cams;
}

bool Dataset::has_intra_labels() const {
  return std::any_of(samples.begin(), samples.end(),
                     [](const Sample& s) { return s.intra_label.has_value(); });
}

void Dataset::validate() const {
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const Sample& s = samples[i];
    const std::string where = name + " sample " + std::to_string(i);
    if (s.features.size() != dim) {
      throw DataIntegrityError(where + " has " +
                               std::to_string(s.features.size()) +
                               " features, expected " + std::to_string(dim));
    }
    if (!cameras.contains(s.camera)) {
      throw DataIntegrityError(where + " uses undeclared camera " +
                               std::to_string(s.camera));
    }
    if (!identities.contains(s.identity)) {
      throw DataIntegrityError(where + " uses undeclared identity " +
                               std::to_string(s.identity));
    }
  }
  // Eval identities are disjoint from train identities in this benchmark,
  // which also keeps query/gallery images out of train.
  std::set<int> train_ids;
  for (const Sample& s : samples) {
    if (s.split == Split::kTrain) train_ids.insert(s.identity);
  }
  for (const Sample& s : samples) {
    if (s.split != Split::kTrain && train_ids.contains(s.identity)) {
      throw DataIntegrityError(name + ": identity " +
                               std::to_string(s.identity) +
                               " appears in both train and eval splits");
    }
  }
}

Tensor feature_matrix(const Dataset& ds, std::span<const std::size_t> indices) {
  Tensor out({indices.size(), ds.dim});
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const auto& f = ds.samples.at(indices[i]).features;
    std::copy(f.begin(), f.end(), out.row(i).begin());
  }
  return out;
}

std::vector<int> camera_column(const Dataset& ds,
                               std::span<const std::size_t> indices) {
  std::vector<int> out;
  out.reserve(indices.size());
  for (std::size_t i : indices) out.push_back(ds.samples.at(i).camera);
  return out;
}

void save_dataset(const Dataset& ds, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());

  json meta;
  meta["name"] = ds.name;
  meta["dim"] = ds.dim;
  meta["cameras"] = std::vector<int>(ds.cameras.begin(), ds.cameras.end());
  meta["n_identities"] = ds.identities.size();
  meta["splits"] = {{"train", ds.indices(Split::kTrain).size()},
                    {"query", ds.indices(Split::kQuery).size()},
                    {"gallery", ds.indices(Split::kGallery).size()}};
  if (!ds.generator_params.is_null()) {
    meta["generator_params"] = ds.generator_params;
  }
  {
    std::ofstream out(dir / "meta.json", std::ios::binary);
    if (!out) throw IoError("cannot write " + (dir / "meta.json").string());
    out << meta.dump(2) << "\n";
  }

  std::ofstream out(dir / "samples.csv", std::ios::binary);
  if (!out) throw IoError("cannot write " + (dir / "samples.csv").string());
  std::string line = "split,identity,camera,intra_label";
  for (std::size_t d = 0; d < ds.dim; ++d) line += ",f" + std::to_string(d);
  out << line << "\n";
  for (const Sample& s : ds.samples) {
    line.clear();
    line += to_string(s.split);
    line += ",";
    line += std::to_string(s.identity);
    line += ",";
    line += std::to_string(s.camera);
    line += ",";
    if (s.intra_label) line += std::to_string(*s.intra_label);
    for (double v : s.features) {
      line += ",";
      append_double(line, v);
    }
    out << line << "\n";
  }
  if (!out) throw IoError("write failed for " + (dir / "samples.csv").string());
}

Dataset load_dataset(const fs::path& dir) {
  const fs::path meta_path = dir / "meta.json";
  const fs::path csv_path = dir / "samples.csv";
  std::ifstream meta_in(meta_path);
  if (!meta_in) throw IoError("cannot read " + meta_path.string());

  Dataset ds;
  std::size_t n_identities = 0;
  try {
    const json meta = json::parse(meta_in);
    ds.name = meta.at("name").get<std::string>();
    ds.dim = meta.at("dim").get<std::size_t>();
    for (int c : meta.at("cameras")) ds.cameras.insert(c);
    n_identities = meta.at("n_identities").get<std::size_t>();
    if (meta.contains("generator_params")) {
      ds.generator_params = meta.at("generator_params");
    }
  } catch (const json::exception& e) {
    throw SchemaError(meta_path.string() + ": " + e.what());
  }

  std::ifstream in(csv_path);
  if (!in) throw IoError("cannot read " + csv_path.string());
  const std::string file = csv_path.string();
  std::string line;
  if (!std::getline(in, line)) {
    // A zero-byte samples file is an empty dataset.
    if (n_identities != 0) {
      throw SchemaError(file + ": no samples but meta.json declares " +
                        std::to_string(n_identities) + " identities");
    }
    return ds;
  }
  const auto header = split_csv(line);
  const std::size_t n_fixed = std::size(kFixedColumns);
  for (std::size_t i = 0; i < n_fixed; ++i) {
    if (i >= header.size() || header[i] != kFixedColumns[i]) {
      throw ParseError(file, 1, "header must start with "
                                "split,identity,camera,intra_label");
    }
  }
  if (header.size() - n_fixed != ds.dim) {
    throw SchemaError(file + ": header declares " +
                      std::to_string(header.size() - n_fixed) +
                      " feature columns but meta.json dim is " +
                      std::to_string(ds.dim));
  }

  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto cells = split_csv(line);
    if (cells.size() != header.size()) {
      throw ParseError(file, line_no,
                       "expected " + std::to_string(header.size()) +
                           " columns, found " + std::to_string(cells.size()));
    }
    Sample s;
    try {
      s.split = parse_split(cells[0]);
    } catch (const ConfigError&) {
      throw ParseError(file, line_no, "bad split '" + std::string(cells[0]) + "'");
    }
    s.identity = parse_number<int>(cells[1], file, line_no, "identity");
    s.camera = parse_number<int>(cells[2], file, line_no, "camera");
    if (!cells[3].empty()) {
      s.intra_label = parse_number<int>(cells[3], file, line_no, "intra_label");
    }
    s.features.reserve(ds.dim);
    for (std::size_t d = 0; d < ds.dim; ++d) {
      s.features.push_back(
          parse_number<double>(cells[n_fixed + d], file, line_no, header[n_fixed + d]));
    }
    ds.identities.insert(s.identity);
    ds.samples.push_back(std::move(s));
  }
  if (ds.identities.size() != n_identities) {
    throw SchemaError(file + ": " + std::to_string(ds.identities.size()) +
                      " identities present but meta.json declares " +
                      std::to_string(n_identities));
  }
  ds.validate();
  return ds;
}

Dataset relabel_intra_camera(const Dataset& ds) {
  std::map<int, std::map<int, int>> labels;  // camera -> identity -> label
  for (const Sample& s : ds.samples) {
    if (s.split == Split::kTrain) labels[s.camera][s.identity] = 0;
  }
  for (auto& [camera, ids] : labels) {
    int next = 0;
    for (auto& [identity, label] : ids) label = next++;
  }
  Dataset out = ds;
  for (Sample& s : out.samples) {
    if (s.split == Split::kTrain) {
      s.intra_label = labels.at(s.camera).at(s.identity);
    } else {
      s.intra_label.reset();
    }
  }
  return out;
}

}  // namespace camnorm
