#ifndef PAMNET_MODEL_CONFIG_HPP_
#define PAMNET_MODEL_CONFIG_HPP_

#include <string>

#include <json.hpp>

#include "pamnet/basis.hpp"
#include "pamnet/multiplex_graph.hpp"

namespace pamnet {

enum class Readout { kSum, kMean };
enum class Head { kScalar, kVectorMagnitude, kVector };

struct ModelConfig {
  int hidden_dim = 128;  // F
  int n_layers = 6;      // T
  int output_dim = 128;  // D, width of the combined per-layer embedding z
  Readout readout = Readout::kSum;
  Head head = Head::kScalar;
  double leaky_slope = 0.2;
  int max_atomic_number = 118;  // embedding table size

  GraphConfig graph;
  BasisConfig basis_global{16, 7, 5, 5.0};
  BasisConfig basis_local{6, 7, 5, 2.0};

  // Eq-level wiring switches.
  bool per_plex_vectors = false;  // distinct v per plex vs shared global-plex v
  bool use_global = true;         // ablation: Global Message Passing
  bool use_local = true;          // ablation: Local Message Passing
  bool use_attention = true;      // ablation: attention pooling vs plain mean

  void validate() const {
    if (hidden_dim < 1) throw ConfigError("model: hidden_dim must be >= 1");
    if (n_layers < 1) throw ConfigError("model: n_layers must be >= 1");
    if (output_dim < 1) throw ConfigError("model: output_dim must be >= 1");
    if (max_atomic_number < 1 || max_atomic_number > 118)
      throw ConfigError("model: max_atomic_number out of range");
    if (!use_global && !use_local) throw ConfigError("model: at least one plex must be enabled");
    graph.validate();
    basis_global.validate();
    basis_local.validate();
  }
};

inline void to_json(nlohmann::json& j, const BasisConfig& b) {
  j = nlohmann::json{{"n_radial", b.n_radial},
                     {"n_spherical", b.n_spherical},
                     {"envelope_exponent", b.envelope_exponent},
                     {"cutoff", b.cutoff}};
}

inline void from_json(const nlohmann::json& j, BasisConfig& b) {
  b.n_radial = j.value("n_radial", b.n_radial);
  b.n_spherical = j.value("n_spherical", b.n_spherical);
  b.envelope_exponent = j.value("envelope_exponent", b.envelope_exponent);
  b.cutoff = j.value("cutoff", b.cutoff);
}

inline void to_json(nlohmann::json& j, const GraphConfig& g) {
  j = nlohmann::json{{"local_mode", g.local_mode == LocalMode::kBonds ? "bonds" : "cutoff"},
                     {"d_local", g.d_local},
                     {"d_global", g.d_global},
                     {"neighbor_algorithm",
                      g.neighbor_algorithm == NeighborAlgorithm::kBrute ? "brute" : "cell_list"}};
}

inline void from_json(const nlohmann::json& j, GraphConfig& g) {
  const std::string mode = j.value("local_mode", std::string("bonds"));
  if (mode == "bonds")
    g.local_mode = LocalMode::kBonds;
  else if (mode == "cutoff")
    g.local_mode = LocalMode::kCutoff;
  else
    throw ConfigError("graph: unknown local_mode '" + mode + "'");
  g.d_local = j.value("d_local", g.d_local);
  g.d_global = j.value("d_global", g.d_global);
  const std::string algo = j.value("neighbor_algorithm", std::string("cell_list"));
  if (algo == "brute")
    g.neighbor_algorithm = NeighborAlgorithm::kBrute;
  else if (algo == "cell_list")
    g.neighbor_algorithm = NeighborAlgorithm::kCellList;
  else
    throw ConfigError("graph: unknown neighbor_algorithm '" + algo + "'");
}

inline void to_json(nlohmann::json& j, const ModelConfig& m) {
  j = nlohmann::json{
      {"hidden_dim", m.hidden_dim},
      {"n_layers", m.n_layers},
      {"output_dim", m.output_dim},
      {"readout", m.readout == Readout::kSum ? "sum" : "mean"},
      {"head", m.head == Head::kScalar ? "scalar"
                                       : (m.head == Head::kVectorMagnitude ? "vector_magnitude" : "vector")},
      {"leaky_slope", m.leaky_slope},
      {"max_atomic_number", m.max_atomic_number},
      {"graph", m.graph},
      {"basis_global", m.basis_global},
      {"basis_local", m.basis_local},
      {"per_plex_vectors", m.per_plex_vectors},
      {"use_global", m.use_global},
      {"use_local", m.use_local},
      {"use_attention", m.use_attention}};
}

inline void from_json(const nlohmann::json& j, ModelConfig& m) {
  m.hidden_dim = j.value("hidden_dim", m.hidden_dim);
  m.n_layers = j.value("n_layers", m.n_layers);
  m.output_dim = j.value("output_dim", m.output_dim);
  const std::string readout = j.value("readout", std::string("sum"));
  if (readout == "sum")
    m.readout = Readout::kSum;
  else if (readout == "mean")
    m.readout = Readout::kMean;
  else
    throw ConfigError("model: unknown readout '" + readout + "'");
  const std::string head = j.value("head", std::string("scalar"));
  if (head == "scalar")
    m.head = Head::kScalar;
  else if (head == "vector_magnitude")
    m.head = Head::kVectorMagnitude;
  else if (head == "vector")
    m.head = Head::kVector;
  else
    throw ConfigError("model: unknown head '" + head + "'");
  m.leaky_slope = j.value("leaky_slope", m.leaky_slope);
  m.max_atomic_number = j.value("max_atomic_number", m.max_atomic_number);
  if (j.contains("graph")) j.at("graph").get_to(m.graph);
  if (j.contains("basis_global")) j.at("basis_global").get_to(m.basis_global);
  if (j.contains("basis_local")) j.at("basis_local").get_to(m.basis_local);
  m.per_plex_vectors = j.value("per_plex_vectors", m.per_plex_vectors);
  m.use_global = j.value("use_global", m.use_global);
  m.use_local = j.value("use_local", m.use_local);
  m.use_attention = j.value("use_attention", m.use_attention);
}

}  // namespace pamnet

#endif  // PAMNET_MODEL_CONFIG_HPP_
