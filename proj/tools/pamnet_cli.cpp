// pamnet: featurize, train, evaluate, and profile PAMNet models from the
// command line. JSON configs select the model/graph/basis/training setup;
// see README.md for examples.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "pamnet/pamnet.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CommonOpts {
  std::string config_path;
  std::string out_dir = ".";
  std::uint64_t seed = 0;
};

json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw pamnet::ConfigError("cannot open config '" + path + "'");
  json j;
  in >> j;
  return j;
}

void write_text(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path().empty() ? "." : path.parent_path());
  std::ofstream out(path);
  if (!out) throw pamnet::ConfigError("cannot write '" + path.string() + "'");
  out << text;
}

pamnet::ModelConfig model_config_from(const CommonOpts& opts) {
  pamnet::ModelConfig cfg;
  if (!opts.config_path.empty()) {
    const json j = load_json(opts.config_path);
    if (j.contains("model")) j.at("model").get_to(cfg);
  }
  return cfg;
}

pamnet::TrainConfig train_config_from(const CommonOpts& opts) {
  pamnet::TrainConfig cfg;
  if (!opts.config_path.empty()) {
    const json j = load_json(opts.config_path);
    if (j.contains("train")) j.at("train").get_to(cfg);
  }
  if (opts.seed != 0) cfg.seed = opts.seed;
  return cfg;
}

struct FilterOpts {
  bool strip_hydrogens = false;
  std::string keep_elements;  // comma-separated symbols or atomic numbers
};

std::vector<pamnet::Structure> load_structures(const std::string& data, int synthetic_count,
                                               std::uint64_t seed, double smoke_cutoff,
                                               const FilterOpts& filter = {}) {
  std::vector<pamnet::Structure> mols;
  if (synthetic_count > 0) {
    mols = pamnet::smoke_dataset(seed, smoke_cutoff, synthetic_count);
  } else {
    if (data.empty()) throw pamnet::ConfigError("need --data DIR|FILE or --synthetic N");
    if (fs::is_directory(data)) {
      mols = pamnet::load_directory(data);
    } else {
      std::ifstream in(data);
      if (!in) throw pamnet::ConfigError("cannot open '" + data + "'");
      std::stringstream ss;
      ss << in.rdbuf();
      const std::string stem = fs::path(data).stem().string();
      if (fs::path(data).extension() == ".sdf")
        mols = pamnet::parse_sdf_multi(ss.str(), stem);
      else
        mols = {pamnet::parse_xyz(ss.str(), stem)};
    }
  }
  if (!filter.keep_elements.empty()) {
    std::vector<int> keep;
    std::stringstream ss(filter.keep_elements);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      int z = pamnet::atomic_number(tok);
      if (z == 0) z = std::atoi(tok.c_str());
      if (z < 1 || z > 118) throw pamnet::ConfigError("--keep-elements: unknown element '" + tok + "'");
      keep.push_back(z);
    }
    for (auto& s : mols) s = s.filtered(keep);
  } else if (filter.strip_hydrogens) {
    for (auto& s : mols) s = s.without_hydrogens();
  }
  return mols;
}

/// Loads a checkpoint plus its JSON sidecar (config + target statistics).
struct LoadedModel {
  pamnet::ModelConfig cfg;
  pamnet::PamNet model;
  double target_mean = 0;
  double target_std = 1;
};

LoadedModel load_model(const std::string& checkpoint, const CommonOpts& opts) {
  pamnet::ModelConfig cfg;
  double mean = 0, stdev = 1;
  const fs::path sidecar = fs::path(checkpoint).replace_extension(".json");
  if (!opts.config_path.empty()) {
    const json j = load_json(opts.config_path);
    if (j.contains("model")) j.at("model").get_to(cfg);
  } else if (fs::exists(sidecar)) {
    const json j = load_json(sidecar.string());
    if (j.contains("model")) j.at("model").get_to(cfg);
    mean = j.value("target_mean", 0.0);
    stdev = j.value("target_std", 1.0);
  } else {
    throw pamnet::ConfigError("no config: pass --config or keep the .json sidecar next to '" +
                              checkpoint + "'");
  }
  pamnet::PamNet model(cfg, pamnet::ParameterStore::load(checkpoint));
  return {cfg, std::move(model), mean, stdev};
}

std::string format_prediction_row(const std::string& id, const pamnet::Prediction& p) {
  std::ostringstream ss;
  ss.precision(12);
  ss << id << ',' << p.value;
  if (p.has_vector) ss << ',' << p.u[0] << ',' << p.u[1] << ',' << p.u[2];
  ss << '\n';
  return ss.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"PAMNet multiplex molecular graph network"};
  app.require_subcommand(1);
  app.fallthrough();  // global flags may follow the subcommand

  CommonOpts opts;
  app.add_option("--config", opts.config_path, "JSON config file ({\"model\": ..., \"train\": ...})");
  app.add_option("--seed", opts.seed, "run seed (overrides config)");
  app.add_option("--out-dir", opts.out_dir, "output directory");

  std::string data, checkpoint, d_values = "2,3,4,5,6";
  int synthetic = 0, transforms = 100;
  bool dump_json = false;
  bool no_attention = false, no_local = false, no_global = false;
  FilterOpts filter;
  app.add_flag("--strip-hydrogens", filter.strip_hydrogens, "drop hydrogen atoms after parsing");
  app.add_option("--keep-elements", filter.keep_elements,
                 "keep only these elements (comma-separated symbols, e.g. C,N,O)");

  auto* featurize = app.add_subcommand("featurize", "build multiplex graphs and report sizes");
  featurize->add_option("--data", data, "directory or file of .xyz/.sdf structures");
  featurize->add_option("--synthetic", synthetic, "use N synthetic molecules instead of --data");
  featurize->add_flag("--dump-json", dump_json, "write canonical Structure JSON per molecule");

  auto* train_cmd = app.add_subcommand("train", "train a scalar-head model");
  train_cmd->add_option("--data", data, "directory with structures and labels.csv");
  train_cmd->add_option("--synthetic", synthetic, "train on N synthetic smoke molecules");
  train_cmd->add_flag("--no-attention-pool", no_attention, "ablation: plain mean instead of attention");
  train_cmd->add_flag("--no-local-mp", no_local, "ablation: drop Local Message Passing");
  train_cmd->add_flag("--no-global-mp", no_global, "ablation: drop Global Message Passing");

  auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint against labels");
  eval_cmd->add_option("--data", data);
  eval_cmd->add_option("--checkpoint", checkpoint)->required();

  auto* predict_cmd = app.add_subcommand("predict", "emit per-molecule predictions as CSV");
  predict_cmd->add_option("--data", data);
  predict_cmd->add_option("--synthetic", synthetic);
  predict_cmd->add_option("--checkpoint", checkpoint)->required();

  auto* profile_cmd = app.add_subcommand("profile", "per-molecule message-count accounting");
  profile_cmd->add_option("--data", data);
  profile_cmd->add_option("--synthetic", synthetic);

  auto* sweep_cmd = app.add_subcommand("sweep", "message counts across global cutoffs");
  sweep_cmd->add_option("--data", data);
  sweep_cmd->add_option("--synthetic", synthetic);
  sweep_cmd->add_option("--d-values", d_values, "comma-separated increasing cutoffs (A)");

  auto* sym_cmd = app.add_subcommand("check-symmetry", "E(3) invariance/equivariance sweep");
  sym_cmd->add_option("--data", data);
  sym_cmd->add_option("--synthetic", synthetic);
  sym_cmd->add_option("--checkpoint", checkpoint, "optional; random init when absent");
  sym_cmd->add_option("--transforms", transforms, "transforms per structure");

  auto* att_cmd = app.add_subcommand("report-attention", "average attention weights per plex");
  att_cmd->add_option("--data", data);
  att_cmd->add_option("--synthetic", synthetic);
  att_cmd->add_option("--checkpoint", checkpoint, "optional; random init when absent");

  CLI11_PARSE(app, argc, argv);

  try {
    const fs::path out_dir(opts.out_dir);
    fs::create_directories(out_dir);

    if (*featurize) {
      pamnet::ModelConfig cfg = model_config_from(opts);
      const auto mols = load_structures(data, synthetic, opts.seed, cfg.graph.d_global, filter);
      pamnet::PamNet model(cfg, opts.seed);
      std::string csv = "id,n_atoms,local_edges,global_edges,onehop_angles,twohop_angles\n";
      for (const auto& s : mols) {
        const pamnet::Featurized f = model.featurize(s);
        csv += s.id + ',' + std::to_string(s.n_atoms()) + ',' +
               std::to_string(f.graph.local_edges.size()) + ',' +
               std::to_string(f.graph.global_edges.size()) + ',' +
               std::to_string(f.graph.onehop_angles.size()) + ',' +
               std::to_string(f.graph.twohop_angles.size()) + '\n';
        if (dump_json)
          write_text(out_dir / (s.id + ".json"), pamnet::structure_to_json(s).dump(2) + "\n");
      }
      write_text(out_dir / "featurize.csv", csv);
      std::cout << csv;
      return 0;
    }

    if (*train_cmd) {
      pamnet::ModelConfig cfg = model_config_from(opts);
      cfg.use_attention = !no_attention;
      cfg.use_local = !no_local;
      cfg.use_global = !no_global;
      pamnet::TrainConfig tcfg = train_config_from(opts);
      auto mols = load_structures(data, synthetic, tcfg.seed, cfg.graph.d_global, filter);
      for (const auto& s : mols) {
        if (!s.label) throw pamnet::ConfigError("structure '" + s.id + "' has no label");
      }

      // Synthetic smoke runs train on everything; file datasets get a split.
      std::vector<pamnet::Structure> train_set = mols, valid_set = mols;
      if (synthetic == 0) {
        std::vector<std::string> ids;
        for (const auto& s : mols) ids.push_back(s.id);
        const auto split = pamnet::split_dataset(ids, 0.8, 0.1, 0.1, tcfg.seed);
        auto pick = [&](const std::vector<std::string>& want) {
          std::vector<pamnet::Structure> out;
          for (const auto& s : mols)
            if (std::find(want.begin(), want.end(), s.id) != want.end()) out.push_back(s);
          return out;
        };
        train_set = pick(split.train);
        valid_set = pick(split.valid);
      }

      pamnet::PamNet model(cfg, tcfg.seed);
      const pamnet::TrainResult result = pamnet::train(model, train_set, valid_set, tcfg);

      std::string history = "epoch,train_loss,valid_mae,lr\n";
      for (const auto& rec : result.history) {
        std::ostringstream ss;
        ss.precision(12);
        ss << rec.epoch << ',' << rec.train_loss << ',' << rec.valid_metric << ',' << rec.lr << '\n';
        history += ss.str();
      }
      write_text(out_dir / "history.csv", history);

      const std::string ckpt = (out_dir / "checkpoint.bin").string();
      result.best.save(ckpt);
      json sidecar;
      sidecar["model"] = cfg;
      sidecar["train"] = tcfg;
      sidecar["target_mean"] = result.target_mean;
      sidecar["target_std"] = result.target_std;
      sidecar["best_epoch"] = result.best_epoch;
      write_text(out_dir / "checkpoint.json", sidecar.dump(2) + "\n");

      pamnet::PamNet best(cfg, result.best.clone());
      const pamnet::MetricsReport train_metrics =
          pamnet::evaluate(best, train_set, result.target_mean, result.target_std);
      std::cout << "best_epoch=" << result.best_epoch << " train_mae=" << train_metrics.mae
                << " valid_mae=" << result.history[static_cast<std::size_t>(result.best_epoch)].valid_metric
                << "\n";
      return 0;
    }

    if (*eval_cmd) {
      LoadedModel lm = load_model(checkpoint, opts);
      const auto mols = load_structures(data, 0, opts.seed, lm.cfg.graph.d_global, filter);
      const pamnet::MetricsReport r = pamnet::evaluate(lm.model, mols, lm.target_mean, lm.target_std);
      const json j = pamnet::metrics_to_json(r);
      write_text(out_dir / "metrics.json", j.dump(2) + "\n");
      std::cout << j.dump(2) << "\n";
      return 0;
    }

    if (*predict_cmd) {
      LoadedModel lm = load_model(checkpoint, opts);
      const auto mols = load_structures(data, synthetic, opts.seed, lm.cfg.graph.d_global, filter);
      std::string csv = lm.cfg.head == pamnet::Head::kScalar ? "id,prediction\n"
                                                             : "id,prediction,ux,uy,uz\n";
      for (const auto& s : mols) {
        pamnet::Prediction p = lm.model.predict(s);
        p.value = p.value * lm.target_std + lm.target_mean;
        csv += format_prediction_row(s.id, p);
      }
      write_text(out_dir / "predictions.csv", csv);
      std::cout << csv;
      return 0;
    }

    if (*profile_cmd) {
      pamnet::ModelConfig cfg = model_config_from(opts);
      const auto mols = load_structures(data, synthetic, opts.seed, cfg.graph.d_global, filter);
      const pamnet::ProfileReport r = pamnet::profile_dataset(mols, cfg.graph);
      write_text(out_dir / "profile.csv", pamnet::profile_csv(r));
      const json summary = pamnet::profile_summary_json(r);
      write_text(out_dir / "profile_summary.json", summary.dump(2) + "\n");
      std::cout << summary.dump(2) << "\n";
      for (const auto& skip : r.skipped) std::cerr << "skipped: " << skip << "\n";
      return r.skipped.empty() ? 0 : 1;
    }

    if (*sweep_cmd) {
      pamnet::ModelConfig cfg = model_config_from(opts);
      const auto mols = load_structures(data, synthetic, opts.seed, cfg.graph.d_global, filter);
      std::vector<double> ds;
      std::stringstream ss(d_values);
      std::string tok;
      while (std::getline(ss, tok, ',')) ds.push_back(std::stod(tok));
      const pamnet::SweepReport r = pamnet::sweep_cutoff(mols, cfg.graph, ds);
      std::string csv = "d,mean_global_msgs,mean_local_base_msgs,mean_local_angle_msgs,mean_comparator_msgs,mean_k_g\n";
      for (const auto& p : r.points) {
        std::ostringstream row;
        row.precision(12);
        row << p.d << ',' << p.mean_global_msgs << ',' << p.mean_local_base_msgs << ','
            << p.mean_local_angle_msgs << ',' << p.mean_comparator_msgs << ',' << p.mean_k_g << '\n';
        csv += row.str();
      }
      write_text(out_dir / "sweep.csv", csv);
      const json j = pamnet::sweep_json(r);
      write_text(out_dir / "sweep.json", j.dump(2) + "\n");
      std::cout << j.dump(2) << "\n";
      return 0;
    }

    if (*sym_cmd) {
      pamnet::SymmetryReport report;
      if (!checkpoint.empty()) {
        LoadedModel lm = load_model(checkpoint, opts);
        const auto mols = load_structures(data, synthetic, opts.seed, lm.cfg.graph.d_global, filter);
        report = pamnet::check_symmetry(lm.model, mols, transforms, opts.seed);
      } else {
        pamnet::ModelConfig cfg = model_config_from(opts);
        pamnet::PamNet model(cfg, opts.seed);
        const auto mols = load_structures(data, synthetic, opts.seed, cfg.graph.d_global, filter);
        report = pamnet::check_symmetry(model, mols, transforms, opts.seed);
      }
      const json j = pamnet::symmetry_to_json(report);
      write_text(out_dir / "symmetry.json", j.dump(2) + "\n");
      std::cout << j.dump(2) << "\n";
      return report.passed ? 0 : 1;
    }

    if (*att_cmd) {
      pamnet::AttentionAverages avg;
      if (!checkpoint.empty()) {
        LoadedModel lm = load_model(checkpoint, opts);
        const auto mols = load_structures(data, synthetic, opts.seed, lm.cfg.graph.d_global, filter);
        avg = pamnet::report_attention(lm.model, mols);
      } else {
        pamnet::ModelConfig cfg = model_config_from(opts);
        pamnet::PamNet model(cfg, opts.seed);
        const auto mols = load_structures(data, synthetic, opts.seed, cfg.graph.d_global, filter);
        avg = pamnet::report_attention(model, mols);
      }
      const json j{{"alpha_g", avg.alpha_g}, {"alpha_l", avg.alpha_l}, {"samples", avg.samples}};
      write_text(out_dir / "attention.json", j.dump(2) + "\n");
      std::cout << j.dump(2) << "\n";
      const bool ok = std::abs(avg.alpha_g + avg.alpha_l - 1.0) < 1e-9 || avg.samples == 0;
      return ok ? 0 : 1;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
