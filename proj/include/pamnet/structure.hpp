#ifndef PAMNET_STRUCTURE_HPP_
#define PAMNET_STRUCTURE_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "pamnet/common.hpp"
#include "pamnet/elements.hpp"

namespace pamnet {

using Vec3 = std::array<double, 3>;

struct Atom {
  int atomic_number = 0;
  std::vector<double> features;  // optional per-atom feature vector
};

/// One molecule (or molecular system): atomic numbers, 3D positions in
/// Angstrom, optional bond connectivity and optional scalar/3-vector label.
struct Structure {
  std::vector<Atom> atoms;
  std::vector<Vec3> positions;
  std::vector<std::pair<int, int>> bonds;  // unordered pairs, stored i<j
  std::optional<std::vector<double>> label;  // size 1 or 3
  std::string id;

  int n_atoms() const { return static_cast<int>(atoms.size()); }

  /// Enforces the type invariants; throws on violation.
  void validate() const {
    if (atoms.empty()) throw GeometryError("structure '" + id + "': needs at least one atom");
    if (positions.size() != atoms.size())
      throw GeometryError("structure '" + id + "': positions/atoms length mismatch");
    for (const auto& a : atoms) {
      if (a.atomic_number < 1)
        throw GeometryError("structure '" + id + "': non-positive atomic number");
    }
    for (const auto& p : positions) {
      for (double c : p) {
        if (!std::isfinite(c)) throw GeometryError("structure '" + id + "': non-finite coordinate");
      }
    }
    const int n = n_atoms();
    std::set<std::pair<int, int>> seen;
    for (const auto& [i, j] : bonds) {
      if (i < 0 || j < 0 || i >= n || j >= n)
        throw GeometryError("structure '" + id + "': bond index out of range");
      if (i == j) throw GeometryError("structure '" + id + "': self-bond");
      auto key = std::minmax(i, j);
      if (!seen.insert(key).second) throw GeometryError("structure '" + id + "': duplicate bond");
    }
    if (label && label->size() != 1 && label->size() != 3)
      throw GeometryError("structure '" + id + "': label must be scalar or 3-vector");
  }

  /// Keeps only atoms whose atomic number passes `keep`; bonds are
  /// reindexed and bonds touching removed atoms are dropped.
  Structure filtered(const std::vector<int>& keep_z) const {
    Structure out;
    out.id = id;
    out.label = label;
    std::vector<int> remap(atoms.size(), -1);
    for (std::size_t i = 0; i < atoms.size(); ++i) {
      if (std::find(keep_z.begin(), keep_z.end(), atoms[i].atomic_number) != keep_z.end()) {
        remap[i] = static_cast<int>(out.atoms.size());
        out.atoms.push_back(atoms[i]);
        out.positions.push_back(positions[i]);
      }
    }
    for (const auto& [i, j] : bonds) {
      if (remap[static_cast<std::size_t>(i)] >= 0 && remap[static_cast<std::size_t>(j)] >= 0) {
        int a = remap[static_cast<std::size_t>(i)], b = remap[static_cast<std::size_t>(j)];
        out.bonds.emplace_back(std::min(a, b), std::max(a, b));
      }
    }
    return out;
  }

  Structure without_hydrogens() const {
    std::vector<int> keep;
    for (int z = 2; z <= 118; ++z) keep.push_back(z);
    return filtered(keep);
  }
};

/// Canonical JSON form used by --dump-json. Doubles go through
/// nlohmann::json which serializes shortest-round-trip, so a dump/parse
/// cycle is bit-exact.
inline nlohmann::json structure_to_json(const Structure& s) {
  nlohmann::json j;
  j["id"] = s.id;
  j["atomic_numbers"] = nlohmann::json::array();
  for (const auto& a : s.atoms) j["atomic_numbers"].push_back(a.atomic_number);
  j["positions"] = nlohmann::json::array();
  for (const auto& p : s.positions) j["positions"].push_back({p[0], p[1], p[2]});
  if (!s.bonds.empty()) {
    j["bonds"] = nlohmann::json::array();
    for (const auto& [a, b] : s.bonds) j["bonds"].push_back({a, b});
  }
  if (s.label) j["label"] = *s.label;
  bool any_features = false;
  for (const auto& a : s.atoms) any_features |= !a.features.empty();
  if (any_features) {
    j["features"] = nlohmann::json::array();
    for (const auto& a : s.atoms) j["features"].push_back(a.features);
  }
  return j;
}

inline Structure structure_from_json(const nlohmann::json& j) {
  Structure s;
  s.id = j.value("id", "");
  for (const auto& z : j.at("atomic_numbers")) s.atoms.push_back({z.get<int>(), {}});
  for (const auto& p : j.at("positions"))
    s.positions.push_back({p.at(0).get<double>(), p.at(1).get<double>(), p.at(2).get<double>()});
  if (j.contains("bonds")) {
    for (const auto& b : j["bonds"]) s.bonds.emplace_back(b.at(0).get<int>(), b.at(1).get<int>());
  }
  if (j.contains("label")) s.label = j["label"].get<std::vector<double>>();
  if (j.contains("features")) {
    std::size_t i = 0;
    for (const auto& f : j["features"]) s.atoms[i++].features = f.get<std::vector<double>>();
  }
  s.validate();
  return s;
}

}  // namespace pamnet

#endif  // PAMNET_STRUCTURE_HPP_
