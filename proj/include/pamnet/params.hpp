#ifndef PAMNET_PARAMS_HPP_
#define PAMNET_PARAMS_HPP_

#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "pamnet/autodiff.hpp"
#include "pamnet/common.hpp"

namespace pamnet {

/// Named trainable tensors plus their Adam moments and EMA shadows. Creation
/// order is preserved so a fixed seed gives a bit-identical store.
class ParameterStore {
 public:
  struct Entry {
    ad::ValuePtr param;
    ad::Tensor adam_m, adam_v, ema;
  };

  explicit ParameterStore(std::uint64_t seed = 0) : rng_(seed), seed_(seed) {}

  std::uint64_t seed() const { return seed_; }

  /// Registers a parameter initialized uniformly in [lo, hi].
  ad::ValuePtr add_uniform(const std::string& name, int rows, int cols, double lo, double hi) {
    ad::Tensor t(rows, cols);
    for (double& x : t.v) x = rng_.uniform(lo, hi);
    return add_tensor(name, std::move(t));
  }

  /// Linear-layer weight: Kaiming-uniform with fan-in, i.e. U(-1/sqrt(fan_in),
  /// 1/sqrt(fan_in)). W stored [out, in]; fan_in = cols.
  ad::ValuePtr add_linear_weight(const std::string& name, int out, int in) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    return add_uniform(name, out, in, -bound, bound);
  }

  /// Bias paired with a weight of the given fan-in: U(-1/sqrt(fan_in), ...).
  ad::ValuePtr add_bias(const std::string& name, int out, int fan_in) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    return add_uniform(name, 1, out, -bound, bound);
  }

  ad::ValuePtr add_tensor(const std::string& name, ad::Tensor t) {
    if (index_.count(name)) throw ConfigError("parameter '" + name + "' registered twice");
    Entry e;
    e.param = ad::parameter(std::move(t), name);
    e.adam_m = ad::Tensor(e.param->val.rows, e.param->val.cols);
    e.adam_v = ad::Tensor(e.param->val.rows, e.param->val.cols);
    e.ema = e.param->val;  // EMA starts at the parameter values
    index_[name] = entries_.size();
    order_.push_back(name);
    entries_.push_back(std::move(e));
    return entries_.back().param;
  }

  ad::ValuePtr get(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw ConfigError("unknown parameter '" + name + "'");
    return entries_[it->second].param;
  }

  bool has(const std::string& name) const { return index_.count(name) > 0; }

  const std::vector<std::string>& names() const { return order_; }
  std::size_t size() const { return entries_.size(); }
  Entry& entry(const std::string& name) { return entries_[index_.at(name)]; }
  const Entry& entry(const std::string& name) const { return entries_[index_.at(name)]; }

  std::uint64_t step() const { return step_; }

  void zero_grad() {
    for (auto& e : entries_) e.param->zero_grad();
  }

  /// Bias-corrected Adam update from the gradients accumulated in each
  /// parameter node. A non-finite gradient aborts, naming the parameter.
  void adam_step(double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8) {
    ++step_;
    const double b1t = 1.0 - std::pow(beta1, static_cast<double>(step_));
    const double b2t = 1.0 - std::pow(beta2, static_cast<double>(step_));
    for (std::size_t k = 0; k < entries_.size(); ++k) {
      auto& e = entries_[k];
      e.param->ensure_grad();
      auto& g = e.param->grad;
      for (std::size_t i = 0; i < g.numel(); ++i) {
        if (!std::isfinite(g.v[i]))
          throw NumericError("adam_step: non-finite gradient in parameter '" + order_[k] + "'");
        e.adam_m.v[i] = beta1 * e.adam_m.v[i] + (1.0 - beta1) * g.v[i];
        e.adam_v.v[i] = beta2 * e.adam_v.v[i] + (1.0 - beta2) * g.v[i] * g.v[i];
        const double mhat = e.adam_m.v[i] / b1t;
        const double vhat = e.adam_v.v[i] / b2t;
        e.param->val.v[i] -= lr * mhat / (std::sqrt(vhat) + eps);
      }
    }
  }

  /// shadow <- decay * shadow + (1 - decay) * param.
  void ema_update(double decay) {
    for (auto& e : entries_) {
      for (std::size_t i = 0; i < e.ema.numel(); ++i)
        e.ema.v[i] = decay * e.ema.v[i] + (1.0 - decay) * e.param->val.v[i];
    }
  }

  /// Copies the EMA shadows over the live values (used on a cloned store).
  void load_ema_into_params() {
    for (auto& e : entries_) e.param->val = e.ema;
  }

  /// Overwrites this store's live values with `other`'s live values (or its
  /// EMA shadows). Both stores must share the same layout.
  void copy_values_from(const ParameterStore& other, bool from_ema = false) {
    if (other.entries_.size() != entries_.size())
      throw ConfigError("copy_values_from: store layouts differ");
    for (std::size_t k = 0; k < entries_.size(); ++k) {
      if (order_[k] != other.order_[k])
        throw ConfigError("copy_values_from: parameter order differs at '" + order_[k] + "'");
      entries_[k].param->val = from_ema ? other.entries_[k].ema : other.entries_[k].param->val;
    }
  }

  ParameterStore clone() const {
    ParameterStore out(seed_);
    out.step_ = step_;
    for (std::size_t k = 0; k < entries_.size(); ++k) {
      out.add_tensor(order_[k], entries_[k].param->val);
      auto& e = out.entries_.back();
      e.adam_m = entries_[k].adam_m;
      e.adam_v = entries_[k].adam_v;
      e.ema = entries_[k].ema;
    }
    return out;
  }

  /// FNV-1a over the live parameter bytes; used to assert that evaluation
  /// paths do not mutate the model.
  std::uint64_t checksum() const {
    std::uint64_t h = 1469598103934665603ULL;
    auto mix = [&h](const void* data, std::size_t len) {
      const auto* p = static_cast<const unsigned char*>(data);
      for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 1099511628211ULL;
      }
    };
    for (const auto& e : entries_) mix(e.param->val.v.data(), e.param->val.v.size() * sizeof(double));
    return h;
  }

  // --- checkpoint I/O (format documented in docs/checkpoint.md) ---

  void save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("checkpoint: cannot open '" + path + "' for writing");
    out.write("PAMN1", 5);
    write_u64(out, step_);
    write_u32(out, static_cast<std::uint32_t>(entries_.size()));
    for (std::size_t k = 0; k < entries_.size(); ++k) {
      const auto& e = entries_[k];
      write_u32(out, static_cast<std::uint32_t>(order_[k].size()));
      out.write(order_[k].data(), static_cast<std::streamsize>(order_[k].size()));
      write_u32(out, 2);
      write_u64(out, static_cast<std::uint64_t>(e.param->val.rows));
      write_u64(out, static_cast<std::uint64_t>(e.param->val.cols));
      write_doubles(out, e.param->val.v);
      write_doubles(out, e.adam_m.v);
      write_doubles(out, e.adam_v.v);
      write_doubles(out, e.ema.v);
    }
    if (!out) throw ConfigError("checkpoint: write failure on '" + path + "'");
  }

  static ParameterStore load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("checkpoint: cannot open '" + path + "'");
    char magic[5];
    in.read(magic, 5);
    if (!in || std::memcmp(magic, "PAMN1", 5) != 0)
      throw ParseError("checkpoint: bad magic in '" + path + "'");
    ParameterStore store(0);
    store.step_ = read_u64(in);
    const std::uint32_t count = read_u32(in);
    for (std::uint32_t k = 0; k < count; ++k) {
      const std::uint32_t name_len = read_u32(in);
      std::string name(name_len, '\0');
      in.read(name.data(), name_len);
      const std::uint32_t ndim = read_u32(in);
      if (ndim != 2) throw ParseError("checkpoint: unsupported rank " + std::to_string(ndim));
      const auto rows = static_cast<int>(read_u64(in));
      const auto cols = static_cast<int>(read_u64(in));
      ad::Tensor t(rows, cols);
      read_doubles(in, t.v);
      store.add_tensor(name, std::move(t));
      auto& e = store.entries_.back();
      read_doubles(in, e.adam_m.v);
      read_doubles(in, e.adam_v.v);
      read_doubles(in, e.ema.v);
    }
    if (!in) throw ParseError("checkpoint: truncated file '" + path + "'");
    return store;
  }

 private:
  static void write_u32(std::ofstream& out, std::uint32_t x) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((x >> (8 * i)) & 0xff);
    out.write(reinterpret_cast<const char*>(b), 4);
  }
  static void write_u64(std::ofstream& out, std::uint64_t x) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((x >> (8 * i)) & 0xff);
    out.write(reinterpret_cast<const char*>(b), 8);
  }
  static void write_doubles(std::ofstream& out, const std::vector<double>& v) {
    for (double x : v) {
      std::uint64_t bits;
      std::memcpy(&bits, &x, 8);
      write_u64(out, bits);
    }
  }
  static std::uint32_t read_u32(std::ifstream& in) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    std::uint32_t x = 0;
    for (int i = 0; i < 4; ++i) x |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return x;
  }
  static std::uint64_t read_u64(std::ifstream& in) {
    unsigned char b[8];
    in.read(reinterpret_cast<char*>(b), 8);
    std::uint64_t x = 0;
    for (int i = 0; i < 8; ++i) x |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return x;
  }
  static void read_doubles(std::ifstream& in, std::vector<double>& v) {
    for (double& x : v) {
      const std::uint64_t bits = read_u64(in);
      std::memcpy(&x, &bits, 8);
    }
  }

  Rng rng_;
  std::uint64_t seed_ = 0;
  std::uint64_t step_ = 0;
  std::vector<Entry> entries_;
  std::vector<std::string> order_;
  std::map<std::string, std::size_t> index_;
};

}  // namespace pamnet

#endif  // PAMNET_PARAMS_HPP_
