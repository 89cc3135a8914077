#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <memory>

#include "helpers.hpp"
#include "pamnet/model.hpp"
#include "pamnet/symmetry.hpp"
#include "pamnet/synthetic.hpp"

using namespace pamnet;

namespace {

ModelConfig tiny_config() {
  ModelConfig cfg;
  cfg.hidden_dim = 8;
  cfg.n_layers = 2;
  cfg.output_dim = 4;
  cfg.max_atomic_number = 9;
  cfg.graph.local_mode = LocalMode::kCutoff;
  cfg.graph.d_local = 2.0;
  cfg.graph.d_global = 4.0;
  cfg.basis_global = {4, 3, 5, 4.0};
  cfg.basis_local = {4, 3, 5, 2.0};
  return cfg;
}

void zero_param(PamNet& model, const std::string& name) {
  model.store().get(name)->val.fill(0.0);
}

ad::Tensor random_tensor(Rng& rng, int r, int c) {
  ad::Tensor t(r, c);
  for (double& x : t.v) x = rng.uniform(-1.5, 1.5);
  return t;
}

}  // namespace

TEST_CASE("message_embed: zero-initialized MLP gives zero messages") {
  PamNet model(tiny_config(), 1);
  for (const char* n : {"L0.g.edge_proj.W", "L0.g.msg_mlp.0.W", "L0.g.msg_mlp.0.b",
                        "L0.g.msg_mlp.1.W", "L0.g.msg_mlp.1.b"})
    zero_param(model, n);
  const Structure s = random_structure(3, 4);
  const Featurized f = model.featurize(s);
  Rng rng(2);
  auto h = ad::constant(random_tensor(rng, f.n_nodes(), 8));
  auto m = model.message_embed("L0.g", h, ad::constant(f.e_global), f.src_g, f.dst_g);
  for (double v : m->val.v) CHECK(v == 0.0);
}

TEST_CASE("message_embed is asymmetric in (h_j, h_i)") {
  PamNet model(tiny_config(), 3);
  const Structure s = random_structure(5, 3);
  const Featurized f = model.featurize(s);
  Rng rng(4);
  auto h = ad::constant(random_tensor(rng, f.n_nodes(), 8));
  auto e = ad::constant(f.e_global);
  auto fwd = model.message_embed("L0.g", h, e, f.src_g, f.dst_g);
  auto rev = model.message_embed("L0.g", h, e, f.dst_g, f.src_g);
  double max_diff = 0;
  for (std::size_t i = 0; i < fwd->val.numel(); ++i)
    max_diff = std::max(max_diff, std::abs(fwd->val.v[i] - rev->val.v[i]));
  CHECK(max_diff > 1e-6);
}

TEST_CASE("message aggregation semantics: unit message adds one per channel") {
  // One directed edge 0 -> 1 with m = phi = ones: receiver row gains +1.
  const int F = 4;
  ad::Tensor ones(1, F);
  ones.fill(1.0);
  ad::Tensor h0(2, F);
  auto h = ad::constant(h0);
  auto agg = ad::scatter_add_rows(ad::mul(ad::constant(ones), ad::constant(ones)), {1}, 2);
  auto x = ad::add(h, agg);
  for (int c = 0; c < F; ++c) {
    CHECK(x->val.at(0, c) == 0.0);
    CHECK(x->val.at(1, c) == 1.0);
  }
}

TEST_CASE("global message block leaves h unchanged when the plex is empty") {
  ModelConfig cfg = tiny_config();
  PamNet model(cfg, 5);
  Structure s;
  s.id = "lonely";
  s.atoms = {{6, {}}, {8, {}}};
  s.positions = {{0, 0, 0}, {50, 0, 0}};  // far beyond both cutoffs
  const Featurized f = model.featurize(s);
  REQUIRE(f.src_g.empty());
  Rng rng(6);
  auto h = ad::constant(random_tensor(rng, 2, 8));
  auto out = model.global_message_block(0, h, f, ad::constant(f.e_global));
  CHECK(out.x->val.v == h->val.v);
}

TEST_CASE("global message block is permutation equivariant") {
  ModelConfig cfg = tiny_config();
  PamNet model(cfg, 7);
  const Structure s = random_structure(8, 6, 3.0);
  const Featurized f = model.featurize(s);

  std::vector<int> perm(static_cast<std::size_t>(s.n_atoms()));
  for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = static_cast<int>(i);
  Rng prng(8);
  prng.shuffle(perm);
  Structure sp;
  sp.id = "perm";
  sp.atoms.resize(s.atoms.size());
  sp.positions.resize(s.positions.size());
  for (std::size_t i = 0; i < perm.size(); ++i) {
    sp.atoms[static_cast<std::size_t>(perm[i])] = s.atoms[i];
    sp.positions[static_cast<std::size_t>(perm[i])] = s.positions[i];
  }
  const Featurized fp = model.featurize(sp);

  Rng rng(9);
  ad::Tensor hv = random_tensor(rng, s.n_atoms(), 8);
  ad::Tensor hp(s.n_atoms(), 8);
  for (int i = 0; i < s.n_atoms(); ++i)
    for (int c = 0; c < 8; ++c) hp.at(perm[static_cast<std::size_t>(i)], c) = hv.at(i, c);

  auto out = model.global_message_block(0, ad::constant(hv), f, ad::constant(f.e_global));
  auto outp = model.global_message_block(0, ad::constant(hp), fp, ad::constant(fp.e_global));
  for (int i = 0; i < s.n_atoms(); ++i)
    for (int c = 0; c < 8; ++c)
      CHECK(outp.x->val.at(perm[static_cast<std::size_t>(i)], c) ==
            Catch::Approx(out.x->val.at(i, c)).margin(1e-12));
}

TEST_CASE("local message block term structure on the path a-b-c") {
  ModelConfig cfg = tiny_config();
  cfg.graph.local_mode = LocalMode::kBonds;
  PamNet model(cfg, 10);
  Structure s;
  s.id = "abc";
  s.atoms = {{6, {}}, {6, {}}, {6, {}}};
  s.positions = {{0, 0, 0}, {1, 0, 0}, {2, 0, 0}};
  s.bonds = {{0, 1}, {1, 2}};
  const Featurized f = model.featurize(s);

  // Edge (a=0 -> b=1): exactly one one-hop term (j' = c) and zero two-hop
  // terms, per the angular index sets.
  int edge_ab = -1;
  for (std::size_t e = 0; e < f.src_l.size(); ++e)
    if (f.src_l[e] == 0 && f.dst_l[e] == 1) edge_ab = static_cast<int>(e);
  REQUIRE(edge_ab >= 0);
  int onehop_terms = 0, twohop_terms = 0;
  for (int c : f.onehop_center)
    if (c == edge_ab) ++onehop_terms;
  for (int c : f.twohop_center)
    if (c == edge_ab) ++twohop_terms;
  CHECK(onehop_terms == 1);
  CHECK(twohop_terms == 0);
  for (const auto& t : f.graph.onehop_angles)
    if (t.center_edge == edge_ab) CHECK(t.outer == 2);

  // Isolated nodes keep their embeddings: empty local plex.
  Structure iso;
  iso.id = "iso";
  iso.atoms = {{6, {}}, {8, {}}};
  iso.positions = {{0, 0, 0}, {60, 0, 0}};
  ModelConfig cut = tiny_config();
  PamNet mcut(cut, 11);
  const Featurized fi = mcut.featurize(iso);
  REQUIRE(fi.src_l.empty());
  Rng rng(12);
  auto h = ad::constant(random_tensor(rng, 2, 8));
  auto out = mcut.local_message_block(0, h, fi, ad::constant(fi.e_local), ad::constant(fi.a_onehop),
                                      ad::constant(fi.a_twohop));
  CHECK(out.x->val.v == h->val.v);
}

TEST_CASE("update block: zeroed MLPs reduce to the skip-combined input") {
  ModelConfig cfg = tiny_config();
  PamNet model(cfg, 13);
  for (const char* rb : {"res0", "res1", "res2"}) {
    for (int l = 0; l < 2; ++l) {
      zero_param(model, std::string("L0.g.update.") + rb + "." + std::to_string(l) + ".W");
      zero_param(model, std::string("L0.g.update.") + rb + "." + std::to_string(l) + ".b");
    }
  }
  for (int l = 0; l < 3; ++l) {
    zero_param(model, "L0.g.update.zmlp." + std::to_string(l) + ".W");
    zero_param(model, "L0.g.update.zmlp." + std::to_string(l) + ".b");
  }
  Rng rng(14);
  auto x = ad::constant(random_tensor(rng, 5, 8));
  auto h_in = ad::constant(random_tensor(rng, 5, 8));
  auto [h_next, z] = model.update_block("L0.g.update", x, h_in);
  for (std::size_t i = 0; i < x->val.numel(); ++i)
    CHECK(h_next->val.v[i] == Catch::Approx(x->val.v[i] + h_in->val.v[i]).margin(1e-15));
  for (double v : z->val.v) CHECK(v == 0.0);
}

TEST_CASE("update block shape contract and gradient flow through residuals") {
  ModelConfig cfg = tiny_config();
  PamNet model(cfg, 15);
  for (int n : {1, 3, 7}) {
    Rng rng(16);
    auto x = ad::constant(random_tensor(rng, n, 8));
    auto [h_next, z] = model.update_block("L1.g.update", x, x);
    CHECK(h_next->val.rows == n);
    CHECK(h_next->val.cols == 8);
    CHECK(z->val.rows == n);
    CHECK(z->val.cols == 8);
  }
  // Gradients reach every residual block's weights.
  Rng rng(17);
  auto x = ad::constant(random_tensor(rng, 4, 8));
  auto [h_next, z] = model.update_block("L1.g.update", x, x);
  model.store().zero_grad();
  ad::backward(ad::sum_all(ad::add(h_next, z)));
  for (const char* rb : {"res0", "res1", "res2"}) {
    const auto& g = model.store().get("L1.g.update." + std::string(rb) + ".0.W")->grad;
    double norm = 0;
    for (double v : g.v) norm += v * v;
    CHECK(norm > 0);
  }
}

TEST_CASE("attention pooling: symmetric weights and inputs give 0.5/0.5") {
  ModelConfig cfg = tiny_config();
  PamNet model(cfg, 18);
  model.store().get("L0.att.Wl")->val = model.store().get("L0.att.Wg")->val;
  Rng rng(19);
  ad::Tensor zv = random_tensor(rng, 6, 8);
  auto z = ad::constant(zv);
  auto out = model.attention_pool(0, z, z);
  for (double a : out.alpha_g->val.v) CHECK(a == 0.5);
  for (std::size_t i = 0; i < out.alpha_g->val.numel(); ++i)
    CHECK(out.alpha_g->val.v[i] + out.alpha_l->val.v[i] == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("attention saturates when one logit dominates") {
  ModelConfig cfg = tiny_config();
  PamNet model(cfg, 20);
  model.store().get("L0.att.Wg")->val.fill(50.0 / 8.0);
  zero_param(model, "L0.att.Wl");
  ad::Tensor ones(1, 8);
  ones.fill(1.0);
  auto z = ad::constant(ones);
  auto out = model.attention_pool(0, z, z);  // logit gap = 50
  CHECK(out.alpha_g->val.v[0] > 1.0 - 1e-9);
}

TEST_CASE("zeroed z removes a branch from the fusion") {
  ModelConfig cfg = tiny_config();
  PamNet model(cfg, 21);
  Rng rng(22);
  ad::Tensor zl = random_tensor(rng, 4, 8);
  ad::Tensor zeros(4, 8);
  auto out = model.attention_pool(0, ad::constant(zeros), ad::constant(zl));
  // Manual local-only combination with the same attention weights.
  auto manual = ad::scale_rows(ad::linear(ad::constant(zl), model.store().get("L0.att.Wpl")),
                               out.alpha_l);
  CHECK(out.z->val.v == manual->val.v);
}

TEST_CASE("fuse: duplicated disjoint copies double the sum readout") {
  ModelConfig cfg = tiny_config();
  PamNet model(cfg, 23);
  zero_param(model, "out.b");
  const Structure s = random_structure(24, 5, 3.0);
  Structure twin = s;
  twin.id = "twin";
  for (const auto& a : s.atoms) twin.atoms.push_back(a);
  for (const auto& p : s.positions) twin.positions.push_back({p[0] + 100.0, p[1], p[2]});
  const double one = model.predict(s).value;
  const double two = model.predict(twin).value;
  CHECK(two == Catch::Approx(2.0 * one).epsilon(1e-10));
}

TEST_CASE("mean readout keeps duplicated copies unchanged") {
  ModelConfig cfg = tiny_config();
  cfg.readout = Readout::kMean;
  PamNet model(cfg, 25);
  zero_param(model, "out.b");
  const Structure s = random_structure(26, 4, 3.0);
  Structure twin = s;
  twin.id = "twin";
  for (const auto& a : s.atoms) twin.atoms.push_back(a);
  for (const auto& p : s.positions) twin.positions.push_back({p[0] + 100.0, p[1], p[2]});
  CHECK(model.predict(twin).value == Catch::Approx(model.predict(s).value).epsilon(1e-10));
}

TEST_CASE("geometric vectors: hand case and symmetric cancellation") {
  // Single neighbor: j at (1,0,0), receiver i at origin, ||m_ji|| = 2:
  // v_i = (r_i - r_j) * 2 = (-2, 0, 0).
  ad::Tensor m(1, 1);
  m.v = {2.0};
  ad::Tensor disp(1, 3);
  disp.v = {-1.0, 0.0, 0.0};  // r_i - r_j
  auto v = PamNet::geometric_vectors(ad::constant(m), disp, {1}, 2);
  CHECK(v->val.at(1, 0) == -2.0);
  CHECK(v->val.at(1, 1) == 0.0);
  CHECK(v->val.at(0, 0) == 0.0);

  // Centered atom with two mirror neighbors of equal message norm: v = 0.
  ad::Tensor m2(2, 1);
  m2.v = {1.5, 1.5};
  ad::Tensor disp2(2, 3);
  disp2.v = {1, 0, 0, -1, 0, 0};
  auto v2 = PamNet::geometric_vectors(ad::constant(m2), disp2, {0, 0}, 1);
  for (double c : v2->val.v) CHECK(c == 0.0);
}

TEST_CASE("scalar predictions are E(3) invariant") {
  ModelConfig cfg = tiny_config();
  PamNet model(cfg, 27);
  for (std::uint64_t k = 0; k < 4; ++k) {
    const Structure s = random_structure(100 + k, 4 + static_cast<int>(k), 3.5);
    const double base = model.predict(s).value;
    for (std::uint64_t t = 0; t < 25; ++t) {
      const Structure moved = apply_transform(s, random_e3(k * 40 + t, t % 2 == 0));
      const double got = model.predict(moved).value;
      REQUIRE(std::abs(got - base) / std::max(1e-6, std::abs(base)) < 1e-9);
    }
  }
}

TEST_CASE("vector head is E(3) equivariant, magnitude reflection invariant") {
  ModelConfig cfg = tiny_config();
  cfg.head = Head::kVector;
  PamNet model(cfg, 28);
  const Structure s = random_structure(29, 5, 3.0);
  const Prediction base = model.predict(s);
  REQUIRE(base.has_vector);
  REQUIRE(base.value > 1e-8);  // nondegenerate fixture
  for (std::uint64_t t = 0; t < 40; ++t) {
    const E3Transform T = random_e3(t + 1, t % 2 == 1);
    const Prediction moved = model.predict(apply_transform(s, T));
    const Vec3 expect = T.apply_linear({base.u[0], base.u[1], base.u[2]});
    double dev = 0;
    for (int c = 0; c < 3; ++c) {
      const double d = moved.u[static_cast<std::size_t>(c)] - expect[static_cast<std::size_t>(c)];
      dev += d * d;
    }
    REQUIRE(std::sqrt(dev) < 1e-9);
    REQUIRE(std::abs(moved.value - base.value) < 1e-9);  // magnitude invariant
  }
}

TEST_CASE("per-plex geometric vectors stay equivariant") {
  ModelConfig cfg = tiny_config();
  cfg.head = Head::kVector;
  cfg.per_plex_vectors = true;
  PamNet model(cfg, 30);
  const Structure s = random_structure(31, 5, 3.0);
  const Prediction base = model.predict(s);
  for (std::uint64_t t = 0; t < 10; ++t) {
    const E3Transform T = random_e3(t + 100, t % 2 == 1);
    const Prediction moved = model.predict(apply_transform(s, T));
    const Vec3 expect = T.apply_linear({base.u[0], base.u[1], base.u[2]});
    for (int c = 0; c < 3; ++c)
      REQUIRE(moved.u[static_cast<std::size_t>(c)] ==
              Catch::Approx(expect[static_cast<std::size_t>(c)]).margin(1e-9));
  }
}

TEST_CASE("predictions are invariant under node permutation") {
  ModelConfig cfg = tiny_config();
  PamNet model(cfg, 32);
  const Structure s = random_structure(33, 7, 3.5);
  const double base = model.predict(s).value;
  Rng rng(34);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<int> perm(static_cast<std::size_t>(s.n_atoms()));
    for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = static_cast<int>(i);
    rng.shuffle(perm);
    Structure sp;
    sp.id = "perm";
    sp.atoms.resize(s.atoms.size());
    sp.positions.resize(s.positions.size());
    for (std::size_t i = 0; i < perm.size(); ++i) {
      sp.atoms[static_cast<std::size_t>(perm[i])] = s.atoms[i];
      sp.positions[static_cast<std::size_t>(perm[i])] = s.positions[i];
    }
    REQUIRE(std::abs(model.predict(sp).value - base) < 1e-10);
  }
}

TEST_CASE("instrumented message counts equal count_messages") {
  ModelConfig cfg = tiny_config();
  PamNet model(cfg, 35);
  for (std::uint64_t k = 0; k < 5; ++k) {
    const Structure s = random_structure(200 + k, 3 + static_cast<int>(k), 3.0);
    const Featurized f = model.featurize(s);
    ForwardStats stats;
    model.predict(f, &stats);
    CHECK(stats.per_layer_messages == f.graph.count_messages());
  }
}

TEST_CASE("attention weights sum to one on every evaluation") {
  ModelConfig cfg = tiny_config();
  PamNet model(cfg, 36);
  const Structure s = random_structure(37, 6, 3.0);
  ForwardStats stats;
  model.predict(s, &stats);
  REQUIRE(stats.alpha_g.size() == 2);
  for (std::size_t t = 0; t < stats.alpha_g.size(); ++t) {
    for (std::size_t i = 0; i < stats.alpha_g[t].size(); ++i) {
      CHECK(std::abs(stats.alpha_g[t][i] + stats.alpha_l[t][i] - 1.0) < 1e-9);
      CHECK(stats.alpha_g[t][i] >= 0.0);
    }
  }
}

TEST_CASE("repeated evaluation is bit-for-bit deterministic") {
  ModelConfig cfg = tiny_config();
  PamNet model(cfg, 38);
  const Structure s = random_structure(39, 5, 3.0);
  const Featurized f = model.featurize(s);
  CHECK(model.predict(f).value == model.predict(f).value);
}

TEST_CASE("ablated configs run and drop the matching branch") {
  ModelConfig cfg = tiny_config();
  const Structure s = random_structure(40, 5, 3.0);

  cfg.use_local = false;
  PamNet no_local(cfg, 41);
  ForwardStats stats;
  no_local.predict(s, &stats);
  CHECK(stats.per_layer_messages.local_base_msgs == 0);
  for (double a : stats.alpha_g[0]) CHECK(a == 1.0);

  cfg.use_local = true;
  cfg.use_global = false;
  PamNet no_global(cfg, 42);
  no_global.predict(s, &stats);
  CHECK(stats.per_layer_messages.global_msgs == 0);
  for (double a : stats.alpha_l[0]) CHECK(a == 1.0);

  cfg.use_global = true;
  cfg.use_attention = false;
  PamNet no_att(cfg, 43);
  no_att.predict(s, &stats);
  for (double a : stats.alpha_g[0]) CHECK(a == 0.5);
}

TEST_CASE("end-to-end parameter gradients match finite differences") {
  ModelConfig cfg = tiny_config();
  cfg.n_layers = 1;
  PamNet model(cfg, 44);
  const Structure s = random_structure(45, 4, 3.0);
  const Featurized f = model.featurize(s);

  const double base = model.forward(f)->val.v[0];
  const ad::Tensor target = ad::Tensor::scalar(base + 0.4);  // smooth branch of the loss
  auto eval = [&] { return ad::smooth_l1_loss(model.forward(f), target)->val.v[0]; };

  model.store().zero_grad();
  ad::backward(ad::smooth_l1_loss(model.forward(f), target));

  double worst = 0;
  std::string worst_name;
  for (const auto& name : model.store().names()) {
    auto param = model.store().get(name);
    for (std::size_t i = 0; i < param->val.numel(); ++i) {
      const double fd = testutil::fd_grad(*param, i, eval, 1e-5);
      const double ad_g = param->grad.v[i];
      const double err = std::abs(fd - ad_g) / std::max({std::abs(fd), std::abs(ad_g), 1e-3});
      if (err > worst) {
        worst = err;
        worst_name = name;
      }
    }
  }
  INFO("worst parameter: " << worst_name);
  CHECK(worst < 1e-4);
}

TEST_CASE("vector-head gradients also match finite differences") {
  ModelConfig cfg = tiny_config();
  cfg.n_layers = 1;
  cfg.head = Head::kVectorMagnitude;
  PamNet model(cfg, 46);
  const Structure s = random_structure(47, 4, 3.0);
  const Featurized f = model.featurize(s);
  const double base = model.forward(f)->val.v[0];
  const ad::Tensor target = ad::Tensor::scalar(base + 0.3);
  auto eval = [&] { return ad::smooth_l1_loss(model.forward(f), target)->val.v[0]; };
  model.store().zero_grad();
  ad::backward(ad::smooth_l1_loss(model.forward(f), target));
  double worst = 0;
  for (const auto& name : model.store().names()) {
    auto param = model.store().get(name);
    for (std::size_t i = 0; i < param->val.numel(); ++i) {
      const double fd = testutil::fd_grad(*param, i, eval, 1e-5);
      const double err =
          std::abs(fd - param->grad.v[i]) / std::max({std::abs(fd), std::abs(param->grad.v[i]), 1e-3});
      worst = std::max(worst, err);
    }
  }
  CHECK(worst < 1e-4);
}

TEST_CASE("checkpointed model reproduces predictions exactly") {
  namespace fs = std::filesystem;
  ModelConfig cfg = tiny_config();
  PamNet model(cfg, 48);
  const Structure s = random_structure(49, 5, 3.0);
  const double before = model.predict(s).value;

  const std::string path = (fs::temp_directory_path() / "pamnet_model_ckpt.bin").string();
  model.store().save(path);
  PamNet back(cfg, ParameterStore::load(path));
  CHECK(back.predict(s).value == before);
  fs::remove(path);

  // Mismatched config is rejected.
  ModelConfig other = cfg;
  other.hidden_dim = 16;
  model.store().save(path);
  CHECK_THROWS_AS(PamNet(other, ParameterStore::load(path)), ConfigError);
  fs::remove(path);
}

TEST_CASE("model config json round trip") {
  ModelConfig cfg = tiny_config();
  cfg.head = Head::kVectorMagnitude;
  cfg.readout = Readout::kMean;
  cfg.per_plex_vectors = true;
  nlohmann::json j = cfg;
  ModelConfig back = j.get<ModelConfig>();
  nlohmann::json j2 = back;
  CHECK(j == j2);
}
