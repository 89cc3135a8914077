#ifndef PAMNET_DATASET_HPP_
#define PAMNET_DATASET_HPP_

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "pamnet/common.hpp"
#include "pamnet/sdf.hpp"
#include "pamnet/structure.hpp"
#include "pamnet/xyz.hpp"

namespace pamnet {

struct DatasetSplit {
  std::vector<std::string> train, valid, test;
  std::uint64_t seed = 0;
};

/// Shuffle-then-slice split. Sizes are floor(n * ratio) for valid and test
/// with the remainder going to train; deterministic for a fixed seed.
inline DatasetSplit split_dataset(std::vector<std::string> ids,
                                  double train_ratio, double valid_ratio, double test_ratio,
                                  std::uint64_t seed) {
  if (train_ratio <= 0 || valid_ratio < 0 || test_ratio < 0)
    throw ConfigError("split: ratios must be positive");
  if (std::abs(train_ratio + valid_ratio + test_ratio - 1.0) > 1e-9)
    throw ConfigError("split: ratios must sum to 1");
  const std::size_t n = ids.size();
  if (n < 3 && valid_ratio > 0 && test_ratio > 0)
    throw ConfigError("split: need at least 3 ids for a three-way split");

  Rng rng(seed);
  rng.shuffle(ids);

  const auto nd = static_cast<double>(n);
  const std::size_t n_valid = static_cast<std::size_t>(std::floor(nd * valid_ratio + 1e-9));
  const std::size_t n_test = static_cast<std::size_t>(std::floor(nd * test_ratio + 1e-9));
  const std::size_t n_train = n - n_valid - n_test;

  DatasetSplit split;
  split.seed = seed;
  split.train.assign(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(n_train));
  split.valid.assign(ids.begin() + static_cast<std::ptrdiff_t>(n_train),
                     ids.begin() + static_cast<std::ptrdiff_t>(n_train + n_valid));
  split.test.assign(ids.begin() + static_cast<std::ptrdiff_t>(n_train + n_valid), ids.end());
  return split;
}

/// Reads the sidecar labels CSV: header `id,value[,vy,vz]`, one row per id.
inline std::map<std::string, std::vector<double>> read_labels_csv(const std::string& text) {
  std::map<std::string, std::vector<double>> labels;
  auto lines = detail::split_lines(text);
  if (lines.empty()) throw ParseError("labels: empty csv");
  for (std::size_t ln = 1; ln < lines.size(); ++ln) {
    if (lines[ln].empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(lines[ln]);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 2 && cells.size() != 4)
      throw ParseError("labels: row at line " + std::to_string(ln + 1) + " needs 2 or 4 columns");
    std::vector<double> v;
    for (std::size_t c = 1; c < cells.size(); ++c) {
      double x;
      if (!detail::parse_double(cells[c], x))
        throw ParseError("labels: non-numeric value at line " + std::to_string(ln + 1));
      v.push_back(x);
    }
    labels[cells[0]] = v;
  }
  return labels;
}

/// Loads every .xyz/.sdf under `dir` (multi-record SDF supported), attaches
/// labels from labels.csv when present, and returns structures sorted by id
/// so the result does not depend on directory iteration order.
inline std::vector<Structure> load_directory(const std::string& dir) {
  namespace fs = std::filesystem;
  std::vector<Structure> out;
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file()) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());

  std::map<std::string, std::vector<double>> labels;
  for (const auto& f : files) {
    if (f.filename() == "labels.csv") {
      std::ifstream in(f);
      std::stringstream ss;
      ss << in.rdbuf();
      labels = read_labels_csv(ss.str());
    }
  }

  for (const auto& f : files) {
    const std::string ext = f.extension().string();
    if (ext != ".xyz" && ext != ".sdf") continue;
    std::ifstream in(f);
    if (!in) throw ParseError("cannot open " + f.string());
    std::stringstream ss;
    ss << in.rdbuf();
    const std::string stem = f.stem().string();
    try {
      if (ext == ".xyz") {
        out.push_back(parse_xyz(ss.str(), stem));
      } else {
        auto records = parse_sdf_multi(ss.str(), stem);
        if (records.size() == 1 && records[0].id.rfind(stem + "#", 0) == 0) records[0].id = stem;
        out.insert(out.end(), records.begin(), records.end());
      }
    } catch (const ParseError& e) {
      throw ParseError(f.string() + ": " + e.what());
    }
  }

  for (auto& s : out) {
    auto it = labels.find(s.id);
    if (it != labels.end()) s.label = it->second;
  }
  std::sort(out.begin(), out.end(), [](const Structure& a, const Structure& b) { return a.id < b.id; });
  return out;
}

}  // namespace pamnet

#endif  // PAMNET_DATASET_HPP_
