#ifndef PAMNET_PROFILER_HPP_
#define PAMNET_PROFILER_HPP_

#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "pamnet/multiplex_graph.hpp"
#include "pamnet/structure.hpp"

namespace pamnet {

struct ProfileRow {
  std::string id;
  int n_atoms = 0;
  double k_g = 0, k_l = 0;
  std::int64_t global_msgs = 0, local_base_msgs = 0, local_angle_msgs = 0;
  std::int64_t dimenet_style_msgs = 0;
  std::int64_t pamnet_msgs() const { return global_msgs + local_base_msgs + local_angle_msgs; }
};

struct ProfileReport {
  std::vector<ProfileRow> rows;
  std::vector<std::string> skipped;  // degenerate molecules with reasons
  double mean_pamnet_msgs = 0;
  double mean_comparator_msgs = 0;
  double mean_k_g = 0, mean_k_l = 0;

  void finalize() {
    if (rows.empty()) return;
    double sp = 0, sc = 0, kg = 0, kl = 0;
    for (const auto& r : rows) {
      sp += static_cast<double>(r.pamnet_msgs());
      sc += static_cast<double>(r.dimenet_style_msgs);
      kg += r.k_g;
      kl += r.k_l;
    }
    const double n = static_cast<double>(rows.size());
    mean_pamnet_msgs = sp / n;
    mean_comparator_msgs = sc / n;
    mean_k_g = kg / n;
    mean_k_l = kl / n;
  }
};

inline ProfileRow profile_structure(const Structure& s, const GraphConfig& cfg) {
  const MultiplexGraph g = build_multiplex(s, cfg);
  const MessageCounts c = g.count_messages();
  const auto [kg, kl] = g.average_degree();
  return {s.id, g.n_nodes, kg, kl, c.global_msgs, c.local_base_msgs, c.local_angle_msgs,
          g.dimenet_style_msgs()};
}

/// Message-count accounting over a dataset. Degenerate molecules are
/// skipped and logged rather than failing the whole run.
inline ProfileReport profile_dataset(const std::vector<Structure>& structures, const GraphConfig& cfg) {
  if (structures.empty()) throw ConfigError("profile: need at least one structure");
  ProfileReport report;
  for (const auto& s : structures) {
    try {
      report.rows.push_back(profile_structure(s, cfg));
    } catch (const std::exception& e) {
      report.skipped.push_back(s.id + ": " + e.what());
    }
  }
  report.finalize();
  return report;
}

struct SweepPoint {
  double d = 0;
  double mean_global_msgs = 0;
  double mean_local_base_msgs = 0;
  double mean_local_angle_msgs = 0;
  double mean_comparator_msgs = 0;
  double mean_k_g = 0;
};

struct SweepReport {
  std::vector<SweepPoint> points;
  double slope_global = 0;      // log-log slope of the PAMNet global term vs d
  double slope_comparator = 0;  // log-log slope of the single-plex comparator
  double slope_ratio = 0;
};

namespace detail {

inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  // Least squares on (log x, log y); points with y <= 0 are dropped.
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (y[i] > 0) {
      lx.push_back(std::log(x[i]));
      ly.push_back(std::log(y[i]));
    }
  }
  if (lx.size() < 2) return 0;
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= static_cast<double>(lx.size());
  my /= static_cast<double>(lx.size());
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  return sxx > 0 ? sxy / sxx : 0;
}

}  // namespace detail

/// Sweeps the global cutoff over increasing d values and fits log-log
/// slopes of the PAMNet global term vs the single-plex comparator.
inline SweepReport sweep_cutoff(const std::vector<Structure>& structures, const GraphConfig& base_cfg,
                                const std::vector<double>& d_values) {
  for (std::size_t i = 1; i < d_values.size(); ++i)
    if (d_values[i] <= d_values[i - 1]) throw ConfigError("sweep: d values must be increasing");
  SweepReport report;
  for (double d : d_values) {
    GraphConfig cfg = base_cfg;
    cfg.d_global = d;
    if (cfg.local_mode == LocalMode::kCutoff) cfg.d_local = std::min(cfg.d_local, d);
    const ProfileReport p = profile_dataset(structures, cfg);
    SweepPoint point;
    point.d = d;
    double sg = 0, sl = 0, sa = 0, sc = 0, kg = 0;
    for (const auto& r : p.rows) {
      sg += static_cast<double>(r.global_msgs);
      sl += static_cast<double>(r.local_base_msgs);
      sa += static_cast<double>(r.local_angle_msgs);
      sc += static_cast<double>(r.dimenet_style_msgs);
      kg += r.k_g;
    }
    const double n = static_cast<double>(p.rows.size());
    point.mean_global_msgs = sg / n;
    point.mean_local_base_msgs = sl / n;
    point.mean_local_angle_msgs = sa / n;
    point.mean_comparator_msgs = sc / n;
    point.mean_k_g = kg / n;
    report.points.push_back(point);
  }
  std::vector<double> ds, gs, cs;
  for (const auto& p : report.points) {
    ds.push_back(p.d);
    gs.push_back(p.mean_global_msgs);
    cs.push_back(p.mean_comparator_msgs);
  }
  report.slope_global = detail::loglog_slope(ds, gs);
  report.slope_comparator = detail::loglog_slope(ds, cs);
  report.slope_ratio = report.slope_global != 0 ? report.slope_comparator / report.slope_global : 0;
  return report;
}

/// Peak resident set size in kB from /proc/self/status (0 if unavailable).
/// Reported for context only; message counts are the portable measure.
inline long peak_rss_kb() {
  std::ifstream status("/proc/self/status");
  std::string line;
  while (std::getline(status, line)) {
    if (line.rfind("VmHWM:", 0) == 0) {
      std::istringstream ss(line.substr(6));
      long kb = 0;
      ss >> kb;
      return kb;
    }
  }
  return 0;
}

inline std::string profile_csv(const ProfileReport& r) {
  std::string out = "id,n_atoms,k_g,k_l,global_msgs,local_base_msgs,local_angle_msgs,dimenet_style_msgs\n";
  for (const auto& row : r.rows) {
    std::ostringstream ss;
    ss << row.id << ',' << row.n_atoms << ',' << row.k_g << ',' << row.k_l << ',' << row.global_msgs
       << ',' << row.local_base_msgs << ',' << row.local_angle_msgs << ',' << row.dimenet_style_msgs
       << '\n';
    out += ss.str();
  }
  return out;
}

inline nlohmann::json profile_summary_json(const ProfileReport& r) {
  return nlohmann::json{{"n_molecules", r.rows.size()},
                        {"n_skipped", r.skipped.size()},
                        {"mean_pamnet_msgs", r.mean_pamnet_msgs},
                        {"mean_comparator_msgs", r.mean_comparator_msgs},
                        {"mean_k_g", r.mean_k_g},
                        {"mean_k_l", r.mean_k_l},
                        {"peak_rss_kb", peak_rss_kb()}};
}

inline nlohmann::json sweep_json(const SweepReport& r) {
  nlohmann::json pts = nlohmann::json::array();
  for (const auto& p : r.points) {
    pts.push_back({{"d", p.d},
                   {"mean_global_msgs", p.mean_global_msgs},
                   {"mean_local_base_msgs", p.mean_local_base_msgs},
                   {"mean_local_angle_msgs", p.mean_local_angle_msgs},
                   {"mean_comparator_msgs", p.mean_comparator_msgs},
                   {"mean_k_g", p.mean_k_g}});
  }
  return nlohmann::json{{"points", pts},
                        {"slope_global", r.slope_global},
                        {"slope_comparator", r.slope_comparator},
                        {"slope_ratio", r.slope_ratio},
                        {"peak_rss_kb", peak_rss_kb()}};
}

}  // namespace pamnet

#endif  // PAMNET_PROFILER_HPP_
