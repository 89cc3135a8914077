#ifndef PAMNET_SYMMETRY_HPP_
#define PAMNET_SYMMETRY_HPP_

#include <array>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "pamnet/geometry.hpp"
#include "pamnet/model.hpp"

namespace pamnet {

struct SymmetryRow {
  std::string id;
  double max_scalar_dev = 0;  // relative
  double max_vector_dev = 0;  // norm of u(T r) - R u(r)
  double max_magnitude_dev = 0;
  bool passed = true;
};

struct SymmetryReport {
  std::vector<SymmetryRow> rows;
  double worst_scalar = 0;
  double worst_vector = 0;
  bool passed = true;
  int n_transforms = 0;
};

/// Sweeps random E(3) transforms (rotations, translations, reflections)
/// over each structure and compares predictions. Any predictor with the
/// Prediction interface can be checked, which lets tests plug in corrupted
/// fixtures as negative controls.
inline SymmetryReport check_symmetry(const std::function<Prediction(const Structure&)>& predict,
                                     const std::vector<Structure>& structures, int n_transforms,
                                     std::uint64_t seed, double tol = 1e-9) {
  SymmetryReport report;
  report.n_transforms = n_transforms;
  for (const auto& s : structures) {
    SymmetryRow row;
    row.id = s.id;
    const Prediction base = predict(s);
    const double scalar_scale = std::max(std::abs(base.value), 1e-6);
    for (int k = 0; k < n_transforms; ++k) {
      const bool reflect = k % 2 == 1;  // alternate parity across the sweep
      const E3Transform T = random_e3(seed * 7919 + static_cast<std::uint64_t>(k), reflect);
      const Prediction moved = predict(apply_transform(s, T));

      row.max_scalar_dev = std::max(row.max_scalar_dev, std::abs(moved.value - base.value) / scalar_scale);
      if (base.has_vector) {
        const Vec3 expected = T.apply_linear({base.u[0], base.u[1], base.u[2]});
        double d2 = 0;
        for (int c = 0; c < 3; ++c) {
          const double d = moved.u[static_cast<std::size_t>(c)] - expected[static_cast<std::size_t>(c)];
          d2 += d * d;
        }
        row.max_vector_dev = std::max(row.max_vector_dev, std::sqrt(d2));
        row.max_magnitude_dev =
            std::max(row.max_magnitude_dev, std::abs(moved.value - base.value) / scalar_scale);
      }
    }
    row.passed = row.max_scalar_dev < tol && row.max_vector_dev < tol;
    report.worst_scalar = std::max(report.worst_scalar, row.max_scalar_dev);
    report.worst_vector = std::max(report.worst_vector, row.max_vector_dev);
    report.passed &= row.passed;
    report.rows.push_back(row);
  }
  return report;
}

inline SymmetryReport check_symmetry(const PamNet& model, const std::vector<Structure>& structures,
                                     int n_transforms, std::uint64_t seed, double tol = 1e-9) {
  return check_symmetry([&model](const Structure& s) { return model.predict(s); }, structures,
                        n_transforms, seed, tol);
}

struct AttentionAverages {
  double alpha_g = 0;
  double alpha_l = 0;
  std::int64_t samples = 0;  // node-layer pairs
};

/// Mean attention weight over all nodes, layers, and molecules.
inline AttentionAverages report_attention(const PamNet& model, const std::vector<Structure>& structures) {
  AttentionAverages avg;
  for (const auto& s : structures) {
    ForwardStats stats;
    model.predict(s, &stats);
    for (std::size_t t = 0; t < stats.alpha_g.size(); ++t) {
      for (std::size_t i = 0; i < stats.alpha_g[t].size(); ++i) {
        avg.alpha_g += stats.alpha_g[t][i];
        avg.alpha_l += stats.alpha_l[t][i];
        ++avg.samples;
      }
    }
  }
  if (avg.samples > 0) {
    avg.alpha_g /= static_cast<double>(avg.samples);
    avg.alpha_l /= static_cast<double>(avg.samples);
  }
  return avg;
}

inline nlohmann::json symmetry_to_json(const SymmetryReport& r) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : r.rows) {
    rows.push_back({{"id", row.id},
                    {"max_scalar_dev", row.max_scalar_dev},
                    {"max_vector_dev", row.max_vector_dev},
                    {"passed", row.passed}});
  }
  return nlohmann::json{{"passed", r.passed},
                        {"worst_scalar", r.worst_scalar},
                        {"worst_vector", r.worst_vector},
                        {"n_transforms", r.n_transforms},
                        {"rows", rows}};
}

}  // namespace pamnet

#endif  // PAMNET_SYMMETRY_HPP_
