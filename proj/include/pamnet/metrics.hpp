#ifndef PAMNET_METRICS_HPP_
#define PAMNET_METRICS_HPP_

#include <cmath>
#include <string>
#include <vector>

#include <json.hpp>

#include "pamnet/common.hpp"

namespace pamnet {

struct MetricsReport {
  double mae = 0;
  double rmse = 0;
  double sd = 0;        // residual std of true about the LS line on predictions
  double pearson_r = 0;
  double std_mae = 0;   // percent; multi-target mean of mae/std
  std::vector<double> per_target_mae;
  int n = 0;
};

/// MAE / RMSE / Pearson R / SD for one target. SD is the n-1 residual
/// standard deviation of the true values about the least-squares line of
/// true on predicted.
inline MetricsReport compute_metrics(const std::vector<double>& pred, const std::vector<double>& truth) {
  if (pred.size() != truth.size() || pred.empty())
    throw ConfigError("metrics: prediction/target size mismatch or empty");
  const std::size_t n = pred.size();
  MetricsReport r;
  r.n = static_cast<int>(n);

  double sum_abs = 0, sum_sq = 0;
  double mp = 0, mt = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = pred[i] - truth[i];
    sum_abs += std::abs(d);
    sum_sq += d * d;
    mp += pred[i];
    mt += truth[i];
  }
  r.mae = sum_abs / static_cast<double>(n);
  r.rmse = std::sqrt(sum_sq / static_cast<double>(n));
  mp /= static_cast<double>(n);
  mt /= static_cast<double>(n);

  double spp = 0, stt = 0, spt = 0;
  for (std::size_t i = 0; i < n; ++i) {
    spp += (pred[i] - mp) * (pred[i] - mp);
    stt += (truth[i] - mt) * (truth[i] - mt);
    spt += (pred[i] - mp) * (truth[i] - mt);
  }
  r.pearson_r = (spp > 0 && stt > 0) ? spt / std::sqrt(spp * stt) : 0.0;

  if (n >= 2) {
    // Regression truth ~ a + b * pred; SD with n-1 denominator.
    const double b = spp > 0 ? spt / spp : 0.0;
    const double a = mt - b * mp;
    double ss = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const double resid = truth[i] - (a + b * pred[i]);
      ss += resid * resid;
    }
    r.sd = std::sqrt(ss / static_cast<double>(n - 1));
  }
  r.per_target_mae = {r.mae};
  return r;
}

/// Mean over targets of mae_t / std_t, in percent.
inline double std_mae(const std::vector<double>& per_target_mae, const std::vector<double>& per_target_std) {
  if (per_target_mae.size() != per_target_std.size() || per_target_mae.empty())
    throw ConfigError("std_mae: need matching nonempty target lists");
  double acc = 0;
  for (std::size_t t = 0; t < per_target_mae.size(); ++t) {
    if (per_target_std[t] <= 0) throw ConfigError("std_mae: target std must be positive");
    acc += per_target_mae[t] / per_target_std[t];
  }
  return 100.0 * acc / static_cast<double>(per_target_mae.size());
}

/// Weight-sharing replica difference: dG = G_complex - G_pocket - G_ligand.
inline double replica_delta(double g_complex, double g_pocket, double g_ligand) {
  return g_complex - g_pocket - g_ligand;
}

inline nlohmann::json metrics_to_json(const MetricsReport& m) {
  return nlohmann::json{{"mae", m.mae},         {"rmse", m.rmse}, {"sd", m.sd},
                        {"pearson_r", m.pearson_r}, {"std_mae", m.std_mae}, {"n", m.n}};
}

}  // namespace pamnet

#endif  // PAMNET_METRICS_HPP_
