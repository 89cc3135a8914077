#ifndef PAMNET_MODEL_HPP_
#define PAMNET_MODEL_HPP_

#include <array>
#include <cmath>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "pamnet/autodiff.hpp"
#include "pamnet/basis.hpp"
#include "pamnet/model_config.hpp"
#include "pamnet/multiplex_graph.hpp"
#include "pamnet/params.hpp"
#include "pamnet/structure.hpp"

namespace pamnet {

/// Per-molecule constants: the multiplex graph, basis features for every
/// edge and angle tuple, and index arrays for gather/scatter. Geometry never
/// changes during training, so this is computed once per molecule.
struct Featurized {
  MultiplexGraph graph;
  std::vector<int> z_index;  // embedding row per atom

  std::vector<int> src_g, dst_g, src_l, dst_l;
  ad::Tensor e_global;  // [Eg, n_radial_g]
  ad::Tensor e_local;   // [El, n_radial_l]

  std::vector<int> onehop_msg, onehop_center;  // indices into local edges
  std::vector<int> twohop_msg, twohop_center;
  ad::Tensor a_onehop;  // [A1, n_spherical * n_radial_l]
  ad::Tensor a_twohop;  // [A2, ...]

  ad::Tensor disp_global;  // [Eg, 3], row = r_dst - r_src
  ad::Tensor disp_local;   // [El, 3]

  int n_nodes() const { return graph.n_nodes; }
};

struct Prediction {
  double value = 0.0;                // scalar output, or |u| for vector heads
  std::array<double, 3> u{0, 0, 0};  // vector output (vector heads only)
  bool has_vector = false;
};

/// Per-forward diagnostics: materialized message counts for one message
/// passing layer, and the attention weights per node per layer.
struct ForwardStats {
  MessageCounts per_layer_messages;
  std::vector<std::vector<double>> alpha_g;  // [T][N]
  std::vector<std::vector<double>> alpha_l;
};

namespace detail_nn {

enum class Act { kNone, kSwish, kLeakyRelu };

/// Dense MLP over registered parameters: per-layer widths with a per-layer
/// activation choice.
struct Mlp {
  std::vector<ad::ValuePtr> W, b;
  std::vector<Act> act;
  double leaky_slope = 0.2;

  ad::ValuePtr operator()(const ad::ValuePtr& x) const {
    ad::ValuePtr h = x;
    for (std::size_t i = 0; i < W.size(); ++i) {
      h = ad::linear(h, W[i], b[i]);
      if (act[i] == Act::kSwish)
        h = ad::swish(h);
      else if (act[i] == Act::kLeakyRelu)
        h = ad::leaky_relu(h, leaky_slope);
    }
    return h;
  }
};

inline Mlp make_mlp(ParameterStore& store, const std::string& prefix, const std::vector<int>& widths,
                    const std::vector<Act>& acts) {
  if (widths.size() < 2) throw ConfigError("mlp '" + prefix + "': needs at least one layer");
  for (int w : widths)
    if (w < 1) throw ConfigError("mlp '" + prefix + "': widths must be >= 1");
  Mlp mlp;
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
    mlp.W.push_back(store.add_linear_weight(prefix + "." + std::to_string(i) + ".W",
                                            widths[i + 1], widths[i]));
    mlp.b.push_back(store.add_bias(prefix + "." + std::to_string(i) + ".b", widths[i + 1], widths[i]));
    mlp.act.push_back(acts[i]);
  }
  return mlp;
}

inline Mlp fetch_mlp(const ParameterStore& store, const std::string& prefix, int n_layers,
                     const std::vector<Act>& acts) {
  Mlp mlp;
  for (int i = 0; i < n_layers; ++i) {
    mlp.W.push_back(store.get(prefix + "." + std::to_string(i) + ".W"));
    mlp.b.push_back(store.get(prefix + "." + std::to_string(i) + ".b"));
    mlp.act.push_back(acts[static_cast<std::size_t>(i)]);
  }
  return mlp;
}

}  // namespace detail_nn

/// PAMNet: multiplex message passing with attention fusion.
///
/// Per hidden layer and per plex, a message block computes
///   m_ji = MLP_m([h_j | h_i | W_emb e_ji])
/// and aggregates h_i <- h_i + sum_j m_ji * phi_d(e_ji); the local plex
/// first augments m_ji with the two angular sums (one-hop and two-hop,
/// each term m * phi_d(e) * phi_theta(a)). An update block (three
/// residual blocks, plus a skip from the message-block input to the first
/// residual output) produces the next h and a per-layer output z via a
/// three-layer MLP. Per-layer z_g, z_l are fused by attention pooling;
/// layer outputs are summed, then read out over nodes. Vector heads build
/// per-node geometric vectors from message norms and position differences.
class PamNet {
 public:
  PamNet(const ModelConfig& cfg, std::uint64_t seed)
      : cfg_(cfg), tables_g_(cfg.basis_global), tables_l_(cfg.basis_local), store_(seed) {
    cfg_.validate();
    build_parameters();
  }

  PamNet(const ModelConfig& cfg, ParameterStore store)
      : cfg_(cfg), tables_g_(cfg.basis_global), tables_l_(cfg.basis_local), store_(std::move(store)) {
    cfg_.validate();
    bind_parameters();
  }

  const ModelConfig& config() const { return cfg_; }
  ParameterStore& store() { return store_; }
  const ParameterStore& store() const { return store_; }

  Featurized featurize(const Structure& s) const {
    Featurized f;
    f.graph = build_multiplex(s, cfg_.graph);
    f.z_index.reserve(static_cast<std::size_t>(s.n_atoms()));
    for (const auto& a : s.atoms) {
      if (a.atomic_number > cfg_.max_atomic_number)
        throw ConfigError("featurize: atomic number " + std::to_string(a.atomic_number) +
                          " exceeds max_atomic_number");
      f.z_index.push_back(a.atomic_number);
    }

    const auto& ge = f.graph.global_edges;
    f.e_global = ad::Tensor(static_cast<int>(ge.size()), tables_g_.radial_width());
    f.disp_global = ad::Tensor(static_cast<int>(ge.size()), 3);
    for (int e = 0; e < static_cast<int>(ge.size()); ++e) {
      f.src_g.push_back(ge[static_cast<std::size_t>(e)].src);
      f.dst_g.push_back(ge[static_cast<std::size_t>(e)].dst);
      const auto feat = tables_g_.radial(ge[static_cast<std::size_t>(e)].d);
      std::copy(feat.begin(), feat.end(), f.e_global.row(e));
      const Vec3 d = s.positions[static_cast<std::size_t>(ge[static_cast<std::size_t>(e)].dst)] -
                     s.positions[static_cast<std::size_t>(ge[static_cast<std::size_t>(e)].src)];
      for (int c = 0; c < 3; ++c) f.disp_global.at(e, c) = d[static_cast<std::size_t>(c)];
    }

    const auto& le = f.graph.local_edges;
    f.e_local = ad::Tensor(static_cast<int>(le.size()), tables_l_.radial_width());
    f.disp_local = ad::Tensor(static_cast<int>(le.size()), 3);
    for (int e = 0; e < static_cast<int>(le.size()); ++e) {
      f.src_l.push_back(le[static_cast<std::size_t>(e)].src);
      f.dst_l.push_back(le[static_cast<std::size_t>(e)].dst);
      const auto feat = tables_l_.radial(le[static_cast<std::size_t>(e)].d);
      std::copy(feat.begin(), feat.end(), f.e_local.row(e));
      const Vec3 d = s.positions[static_cast<std::size_t>(le[static_cast<std::size_t>(e)].dst)] -
                     s.positions[static_cast<std::size_t>(le[static_cast<std::size_t>(e)].src)];
      for (int c = 0; c < 3; ++c) f.disp_local.at(e, c) = d[static_cast<std::size_t>(c)];
    }

    f.a_onehop = ad::Tensor(static_cast<int>(f.graph.onehop_angles.size()), tables_l_.angular_width());
    for (int a = 0; a < static_cast<int>(f.graph.onehop_angles.size()); ++a) {
      const auto& t = f.graph.onehop_angles[static_cast<std::size_t>(a)];
      f.onehop_msg.push_back(t.msg_edge);
      f.onehop_center.push_back(t.center_edge);
      const auto feat = tables_l_.angular(t.d_outer, t.theta);
      std::copy(feat.begin(), feat.end(), f.a_onehop.row(a));
    }
    f.a_twohop = ad::Tensor(static_cast<int>(f.graph.twohop_angles.size()), tables_l_.angular_width());
    for (int a = 0; a < static_cast<int>(f.graph.twohop_angles.size()); ++a) {
      const auto& t = f.graph.twohop_angles[static_cast<std::size_t>(a)];
      f.twohop_msg.push_back(t.msg_edge);
      f.twohop_center.push_back(t.center_edge);
      const auto feat = tables_l_.angular(t.d_outer, t.theta);
      std::copy(feat.begin(), feat.end(), f.a_twohop.row(a));
    }
    return f;
  }

  /// Message embedding m_ji = MLP_m([h_j | h_i | W_emb e_ji]), two Swish layers.
  ad::ValuePtr message_embed(const std::string& prefix, const ad::ValuePtr& h, const ad::ValuePtr& e,
                             const std::vector<int>& src, const std::vector<int>& dst) const {
    auto h_j = ad::gather_rows(h, src);
    auto h_i = ad::gather_rows(h, dst);
    auto e_proj = ad::linear(e, store_.get(prefix + ".edge_proj.W"));
    const auto mlp = detail_nn::fetch_mlp(store_, prefix + ".msg_mlp", 2, {detail_nn::Act::kSwish, detail_nn::Act::kSwish});
    return mlp(ad::concat_cols({h_j, h_i, e_proj}));
  }

  struct MessageBlockOut {
    ad::ValuePtr x;  // aggregated node embeddings (message block output)
    ad::ValuePtr m;  // per-edge message embeddings
  };

  /// Global-plex message block: h_i <- h_i + sum_j m_ji * phi_d(e_ji).
  MessageBlockOut global_message_block(int t, const ad::ValuePtr& h, const Featurized& f,
                                       const ad::ValuePtr& e) const {
    const std::string prefix = "L" + std::to_string(t) + ".g";
    auto m = message_embed(prefix, h, e, f.src_g, f.dst_g);
    auto phi = ad::linear(e, store_.get(prefix + ".phi_d.W"));
    auto agg = ad::scatter_add_rows(ad::mul(m, phi), f.dst_g, f.n_nodes());
    return {ad::add(h, agg), m};
  }

  /// Local-plex message block: base messages plus the
  /// one-hop and two-hop angular sums, then aggregation.
  MessageBlockOut local_message_block(int t, const ad::ValuePtr& h, const Featurized& f,
                                      const ad::ValuePtr& e, const ad::ValuePtr& a1,
                                      const ad::ValuePtr& a2) const {
    const std::string prefix = "L" + std::to_string(t) + ".l";
    auto m = message_embed(prefix, h, e, f.src_l, f.dst_l);
    auto phi = ad::linear(e, store_.get(prefix + ".phi_d.W"));
    const auto phi_theta = detail_nn::fetch_mlp(store_, prefix + ".phi_theta", 2, {detail_nn::Act::kSwish, detail_nn::Act::kSwish});
    auto m_prime = m;
    if (!f.onehop_msg.empty()) {
      auto mm = ad::gather_rows(m, f.onehop_msg);
      auto pp = ad::gather_rows(phi, f.onehop_msg);
      auto term = ad::scatter_add_rows(ad::mul(ad::mul(mm, pp), phi_theta(a1)), f.onehop_center,
                                       static_cast<int>(f.src_l.size()));
      m_prime = ad::add(m_prime, term);
    }
    if (!f.twohop_msg.empty()) {
      auto mm = ad::gather_rows(m, f.twohop_msg);
      auto pp = ad::gather_rows(phi, f.twohop_msg);
      auto term = ad::scatter_add_rows(ad::mul(ad::mul(mm, pp), phi_theta(a2)), f.twohop_center,
                                       static_cast<int>(f.src_l.size()));
      m_prime = ad::add(m_prime, term);
    }
    auto agg = ad::scatter_add_rows(ad::mul(m_prime, phi), f.dst_l, f.n_nodes());
    return {ad::add(h, agg), m};
  }

  /// Three residual blocks (two-layer Swish MLP each, skip across the MLP),
  /// a skip from the message-block input after the first residual block,
  /// and a three-layer MLP producing the per-layer output z.
  std::pair<ad::ValuePtr, ad::ValuePtr> update_block(const std::string& prefix, const ad::ValuePtr& x,
                                                     const ad::ValuePtr& h_in) const {
    auto res = [&](const std::string& name, const ad::ValuePtr& in) {
      const auto mlp = detail_nn::fetch_mlp(store_, prefix + "." + name, 2, {detail_nn::Act::kSwish, detail_nn::Act::kSwish});
      return ad::add(in, mlp(in));
    };
    auto y = res("res0", x);
    y = ad::add(y, h_in);
    y = res("res1", y);
    y = res("res2", y);
    const auto zmlp = detail_nn::fetch_mlp(store_, prefix + ".zmlp", 3, {detail_nn::Act::kSwish, detail_nn::Act::kSwish, detail_nn::Act::kNone});
    return {y, zmlp(y)};
  }

  /// Attention weights: 2-way softmax of LeakyReLU(W_p z_p) per node.
  std::pair<ad::ValuePtr, ad::ValuePtr> attention_weights(int t, const ad::ValuePtr& z_g,
                                                           const ad::ValuePtr& z_l) const {
    const std::string lt = "L" + std::to_string(t);
    auto logit_g = ad::leaky_relu(ad::linear(z_g, store_.get(lt + ".att.Wg")), cfg_.leaky_slope);
    auto logit_l = ad::leaky_relu(ad::linear(z_l, store_.get(lt + ".att.Wl")), cfg_.leaky_slope);
    return {ad::sigmoid(ad::sub(logit_g, logit_l)), ad::sigmoid(ad::sub(logit_l, logit_g))};
  }

  struct FusionOut {
    ad::ValuePtr z;  // [N, D]
    ad::ValuePtr alpha_g, alpha_l;
  };

  /// Scalar-path combination z_i = sum_p alpha_p,i W'_p z_p,i.
  FusionOut attention_pool(int t, const ad::ValuePtr& z_g, const ad::ValuePtr& z_l) const {
    const std::string lt = "L" + std::to_string(t);
    auto [alpha_g, alpha_l] = attention_weights(t, z_g, z_l);
    auto zg = ad::scale_rows(ad::linear(z_g, store_.get(lt + ".att.Wpg")), alpha_g);
    auto zl = ad::scale_rows(ad::linear(z_l, store_.get(lt + ".att.Wpl")), alpha_l);
    return {ad::add(zg, zl), alpha_g, alpha_l};
  }

  /// Geometric vectors v_i = sum_{j in N(i)} (r_i - r_j) ||m_ji||. Pure position
  /// differences, so v is translation-invariant and rotation-equivariant.
  static ad::ValuePtr geometric_vectors(const ad::ValuePtr& m, const ad::Tensor& disp,
                                        const std::vector<int>& dst, int n) {
    auto norms = ad::row_l2norm(m);
    auto weighted = ad::scale_rows(ad::constant(disp, "disp"), norms);
    return ad::scatter_add_rows(weighted, dst, n);
  }

  /// Builds the computation graph for one molecule and returns the output
  /// node ([1,1] scalar head, [1,3] vector heads). `stats`, when given,
  /// receives attention weights and instrumented message counts.
  ad::ValuePtr forward(const Featurized& f, ForwardStats* stats = nullptr) const {
    const int n = f.n_nodes();
    auto embedding = store_.get("embedding");
    ad::ValuePtr h_g, h_l;
    if (cfg_.use_global) h_g = ad::gather_rows(embedding, f.z_index);
    if (cfg_.use_local) h_l = ad::gather_rows(embedding, f.z_index);

    if (stats) {
      stats->per_layer_messages = MessageCounts{
          cfg_.use_global ? static_cast<std::int64_t>(f.src_g.size()) : 0,
          cfg_.use_local ? static_cast<std::int64_t>(f.src_l.size()) : 0,
          cfg_.use_local ? static_cast<std::int64_t>(f.onehop_msg.size() + f.twohop_msg.size()) : 0};
      stats->alpha_g.clear();
      stats->alpha_l.clear();
    }

    auto e_g = ad::constant(f.e_global, "e_global");
    auto e_l = ad::constant(f.e_local, "e_local");
    auto a_1 = ad::constant(f.a_onehop, "a_onehop");
    auto a_2 = ad::constant(f.a_twohop, "a_twohop");

    ad::ValuePtr z_total;  // [N, D] accumulated over layers (scalar head)
    ad::ValuePtr u_total;  // [1, 3] accumulated over layers (vector heads)
    for (int t = 0; t < cfg_.n_layers; ++t) {
      const std::string lt = "L" + std::to_string(t);
      ad::ValuePtr z_g, z_l, m_g, m_l;

      if (cfg_.use_global) {
        auto mb = global_message_block(t, h_g, f, e_g);
        auto [h_next, z] = update_block(lt + ".g.update", mb.x, h_g);
        h_g = h_next;
        z_g = z;
        m_g = mb.m;
      }
      if (cfg_.use_local) {
        auto mb = local_message_block(t, h_l, f, e_l, a_1, a_2);
        auto [h_next, z] = update_block(lt + ".l.update", mb.x, h_l);
        h_l = h_next;
        z_l = z;
        m_l = mb.m;
      }

      ad::ValuePtr alpha_g, alpha_l;
      if (cfg_.use_global && cfg_.use_local) {
        if (cfg_.use_attention) {
          auto [ag, al] = attention_weights(t, z_g, z_l);
          alpha_g = ag;
          alpha_l = al;
        } else {
          ad::Tensor half(n, 1);
          half.fill(0.5);
          alpha_g = ad::constant(half, "alpha_half");
          alpha_l = ad::constant(half, "alpha_half");
        }
      } else {
        ad::Tensor one(n, 1);
        one.fill(1.0);
        (cfg_.use_global ? alpha_g : alpha_l) = ad::constant(one, "alpha_one");
      }
      if (stats) {
        auto col = [n](const ad::ValuePtr& a) {
          return a ? a->val.v : std::vector<double>(static_cast<std::size_t>(n), 0.0);
        };
        stats->alpha_g.push_back(col(alpha_g));
        stats->alpha_l.push_back(col(alpha_l));
      }

      if (cfg_.head == Head::kScalar) {
        ad::ValuePtr z_t;
        if (cfg_.use_global)
          z_t = ad::scale_rows(ad::linear(z_g, store_.get(lt + ".att.Wpg")), alpha_g);
        if (cfg_.use_local) {
          auto zl = ad::scale_rows(ad::linear(z_l, store_.get(lt + ".att.Wpl")), alpha_l);
          z_t = z_t ? ad::add(z_t, zl) : zl;
        }
        z_total = z_total ? ad::add(z_total, z_t) : z_t;
      } else {
        // Geometric vectors weighed by the learned invariant node
        // contributions, then summed over nodes and layers.
        ad::ValuePtr v_g, v_l;
        if (cfg_.per_plex_vectors) {
          if (cfg_.use_global) v_g = geometric_vectors(m_g, f.disp_global, f.dst_g, n);
          if (cfg_.use_local) v_l = geometric_vectors(m_l, f.disp_local, f.dst_l, n);
        } else {
          auto shared = cfg_.use_global ? geometric_vectors(m_g, f.disp_global, f.dst_g, n)
                                        : geometric_vectors(m_l, f.disp_local, f.dst_l, n);
          v_g = shared;
          v_l = shared;
        }
        ad::ValuePtr u_t;
        if (cfg_.use_global) {
          auto coef = ad::mul(alpha_g, ad::linear(z_g, store_.get(lt + ".vec.Wpg")));
          u_t = ad::scale_rows(v_g, coef);
        }
        if (cfg_.use_local) {
          auto coef = ad::mul(alpha_l, ad::linear(z_l, store_.get(lt + ".vec.Wpl")));
          auto ul = ad::scale_rows(v_l, coef);
          u_t = u_t ? ad::add(u_t, ul) : ul;
        }
        auto u_sum = ad::sum_rows(u_t);
        u_total = u_total ? ad::add(u_total, u_sum) : u_sum;
      }
    }

    if (cfg_.head == Head::kScalar) {
      auto y = cfg_.readout == Readout::kSum ? ad::sum_rows(z_total) : ad::mean_rows(z_total);
      return ad::linear(y, store_.get("out.W"), store_.get("out.b"));
    }
    if (cfg_.head == Head::kVectorMagnitude) return ad::row_l2norm(u_total);
    return u_total;
  }

  Prediction predict(const Structure& s, ForwardStats* stats = nullptr) const {
    const Featurized f = featurize(s);
    return predict(f, stats);
  }

  Prediction predict(const Featurized& f, ForwardStats* stats = nullptr) const {
    auto out = forward(f, stats);
    Prediction p;
    if (cfg_.head == Head::kScalar) {
      p.value = out->val.v[0];
    } else if (cfg_.head == Head::kVectorMagnitude) {
      p.value = out->val.v[0];
    } else {
      p.u = {out->val.v[0], out->val.v[1], out->val.v[2]};
      p.value = std::sqrt(p.u[0] * p.u[0] + p.u[1] * p.u[1] + p.u[2] * p.u[2]);
      p.has_vector = true;
    }
    return p;
  }

 private:
  void build_parameters() {
    const int F = cfg_.hidden_dim;
    const int D = cfg_.output_dim;
    const double s3 = std::sqrt(3.0);
    store_.add_uniform("embedding", cfg_.max_atomic_number + 1, F, -s3, s3);
    for (int t = 0; t < cfg_.n_layers; ++t) {
      const std::string lt = "L" + std::to_string(t);
      if (cfg_.use_global) build_plex(lt + ".g", tables_g_.radial_width(), F);
      if (cfg_.use_local) {
        build_plex(lt + ".l", tables_l_.radial_width(), F);
        detail_nn::make_mlp(store_, lt + ".l.phi_theta", {tables_l_.angular_width(), F, F},
                            {detail_nn::Act::kSwish, detail_nn::Act::kSwish});
      }
      if (cfg_.use_global && cfg_.use_local && cfg_.use_attention) {
        store_.add_linear_weight(lt + ".att.Wg", 1, F);
        store_.add_linear_weight(lt + ".att.Wl", 1, F);
      }
      if (cfg_.head == Head::kScalar) {
        if (cfg_.use_global) store_.add_linear_weight(lt + ".att.Wpg", D, F);
        if (cfg_.use_local) store_.add_linear_weight(lt + ".att.Wpl", D, F);
      } else {
        if (cfg_.use_global) store_.add_linear_weight(lt + ".vec.Wpg", 1, F);
        if (cfg_.use_local) store_.add_linear_weight(lt + ".vec.Wpl", 1, F);
      }
    }
    if (cfg_.head == Head::kScalar) {
      store_.add_linear_weight("out.W", 1, D);
      store_.add_bias("out.b", 1, D);
    }
  }

  void build_plex(const std::string& prefix, int n_radial, int F) {
    store_.add_linear_weight(prefix + ".edge_proj.W", F, n_radial);
    detail_nn::make_mlp(store_, prefix + ".msg_mlp", {3 * F, F, F}, {detail_nn::Act::kSwish, detail_nn::Act::kSwish});
    store_.add_linear_weight(prefix + ".phi_d.W", F, n_radial);
    for (const char* rb : {"res0", "res1", "res2"})
      detail_nn::make_mlp(store_, prefix + ".update." + std::string(rb), {F, F, F}, {detail_nn::Act::kSwish, detail_nn::Act::kSwish});
    detail_nn::make_mlp(store_, prefix + ".update.zmlp", {F, F, F, F}, {detail_nn::Act::kSwish, detail_nn::Act::kSwish, detail_nn::Act::kNone});
  }

  /// Checks a loaded store exposes every parameter the config needs.
  void bind_parameters() {
    PamNet reference(cfg_, store_.seed());
    for (const auto& name : reference.store_.names()) {
      if (!store_.has(name))
        throw ConfigError("checkpoint missing parameter '" + name + "' required by config");
      const auto& a = reference.store_.entry(name).param->val;
      const auto& b = store_.entry(name).param->val;
      if (a.rows != b.rows || a.cols != b.cols)
        throw ConfigError("checkpoint parameter '" + name + "' has shape " + b.shape_str() +
                          ", config needs " + a.shape_str());
    }
  }

  ModelConfig cfg_;
  BasisTables tables_g_;
  BasisTables tables_l_;
  ParameterStore store_;
};

}  // namespace pamnet

#endif  // PAMNET_MODEL_HPP_
