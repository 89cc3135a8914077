#ifndef PAMNET_AUTODIFF_HPP_
#define PAMNET_AUTODIFF_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "pamnet/common.hpp"

namespace pamnet::ad {

/// Dense row-major 2-D tensor of 64-bit floats. Scalars are [1,1],
/// per-node matrices [N,F], per-edge matrices [E,F].
struct Tensor {
  int rows = 0;
  int cols = 0;
  std::vector<double> v;

  Tensor() = default;
  Tensor(int r, int c) : rows(r), cols(c), v(static_cast<std::size_t>(r) * static_cast<std::size_t>(c), 0.0) {}

  static Tensor scalar(double x) {
    Tensor t(1, 1);
    t.v[0] = x;
    return t;
  }

  double& at(int r, int c) { return v[static_cast<std::size_t>(r) * static_cast<std::size_t>(cols) + static_cast<std::size_t>(c)]; }
  double at(int r, int c) const { return v[static_cast<std::size_t>(r) * static_cast<std::size_t>(cols) + static_cast<std::size_t>(c)]; }
  double* row(int r) { return v.data() + static_cast<std::size_t>(r) * static_cast<std::size_t>(cols); }
  const double* row(int r) const { return v.data() + static_cast<std::size_t>(r) * static_cast<std::size_t>(cols); }

  std::size_t numel() const { return v.size(); }
  bool same_shape(const Tensor& o) const { return rows == o.rows && cols == o.cols; }
  std::string shape_str() const { return "[" + std::to_string(rows) + "," + std::to_string(cols) + "]"; }

  void fill(double x) { std::fill(v.begin(), v.end(), x); }
  bool all_finite() const {
    for (double x : v)
      if (!std::isfinite(x)) return false;
    return true;
  }
};

/// One node of the dynamically built computation graph.
class Node {
 public:
  Tensor val;
  Tensor grad;
  bool requires_grad = false;
  bool backward_done = false;  // set on the loss node after backward()
  std::string name;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void()> backprop;  // pushes this->grad into parents' grads

  void ensure_grad() {
    if (grad.rows != val.rows || grad.cols != val.cols) grad = Tensor(val.rows, val.cols);
  }
  void zero_grad() {
    ensure_grad();
    grad.fill(0.0);
  }
};

using ValuePtr = std::shared_ptr<Node>;

inline ValuePtr make_node(Tensor val, const char* op, std::vector<ValuePtr> parents = {}) {
  if (!val.all_finite()) throw NumericError(std::string("non-finite value produced by op '") + op + "'");
  auto n = std::make_shared<Node>();
  n->val = std::move(val);
  n->parents = std::move(parents);
  for (const auto& p : n->parents) n->requires_grad |= p->requires_grad;
  return n;
}

inline ValuePtr constant(Tensor t, const std::string& name = "") {
  auto n = make_node(std::move(t), "constant");
  n->name = name;
  return n;
}

inline ValuePtr parameter(Tensor t, const std::string& name) {
  auto n = make_node(std::move(t), "parameter");
  n->name = name;
  n->requires_grad = true;
  n->zero_grad();
  return n;
}

namespace detail {

inline void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (!a.same_shape(b))
    throw ShapeError(std::string(op) + ": shape mismatch " + a.shape_str() + " vs " + b.shape_str());
}

}  // namespace detail

// ---- elementwise ----------------------------------------------------------

inline ValuePtr add(const ValuePtr& a, const ValuePtr& b) {
  detail::require_same_shape(a->val, b->val, "add");
  Tensor out = a->val;
  for (std::size_t i = 0; i < out.numel(); ++i) out.v[i] += b->val.v[i];
  auto n = make_node(std::move(out), "add", {a, b});
  if (n->requires_grad) {
    Node* np = n.get();
    n->backprop = [np, a, b] {
      if (a->requires_grad) {
        a->ensure_grad();
        for (std::size_t i = 0; i < np->grad.numel(); ++i) a->grad.v[i] += np->grad.v[i];
      }
      if (b->requires_grad) {
        b->ensure_grad();
        for (std::size_t i = 0; i < np->grad.numel(); ++i) b->grad.v[i] += np->grad.v[i];
      }
    };
  }
  return n;
}

inline ValuePtr sub(const ValuePtr& a, const ValuePtr& b) {
  detail::require_same_shape(a->val, b->val, "sub");
  Tensor out = a->val;
  for (std::size_t i = 0; i < out.numel(); ++i) out.v[i] -= b->val.v[i];
  auto n = make_node(std::move(out), "sub", {a, b});
  if (n->requires_grad) {
    Node* np = n.get();
    n->backprop = [np, a, b] {
      if (a->requires_grad) {
        a->ensure_grad();
        for (std::size_t i = 0; i < np->grad.numel(); ++i) a->grad.v[i] += np->grad.v[i];
      }
      if (b->requires_grad) {
        b->ensure_grad();
        for (std::size_t i = 0; i < np->grad.numel(); ++i) b->grad.v[i] -= np->grad.v[i];
      }
    };
  }
  return n;
}

inline ValuePtr mul(const ValuePtr& a, const ValuePtr& b) {
  detail::require_same_shape(a->val, b->val, "mul");
  Tensor out = a->val;
  for (std::size_t i = 0; i < out.numel(); ++i) out.v[i] *= b->val.v[i];
  auto n = make_node(std::move(out), "mul", {a, b});
  if (n->requires_grad) {
    Node* np = n.get();
    n->backprop = [np, a, b] {
      if (a->requires_grad) {
        a->ensure_grad();
        for (std::size_t i = 0; i < np->grad.numel(); ++i) a->grad.v[i] += np->grad.v[i] * b->val.v[i];
      }
      if (b->requires_grad) {
        b->ensure_grad();
        for (std::size_t i = 0; i < np->grad.numel(); ++i) b->grad.v[i] += np->grad.v[i] * a->val.v[i];
      }
    };
  }
  return n;
}

inline ValuePtr scale(const ValuePtr& a, double c) {
  Tensor out = a->val;
  for (double& x : out.v) x *= c;
  auto n = make_node(std::move(out), "scale", {a});
  if (n->requires_grad) {
    Node* np = n.get();
    n->backprop = [np, a, c] {
      a->ensure_grad();
      for (std::size_t i = 0; i < np->grad.numel(); ++i) a->grad.v[i] += np->grad.v[i] * c;
    };
  }
  return n;
}

// ---- activations ----------------------------------------------------------

inline double sigmoid_scalar(double x) {
  if (x >= 0) {
    const double e = std::exp(-x);
    return 1.0 / (1.0 + e);
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline ValuePtr sigmoid(const ValuePtr& a) {
  Tensor out = a->val;
  for (double& x : out.v) x = sigmoid_scalar(x);
  auto n = make_node(std::move(out), "sigmoid", {a});
  if (n->requires_grad) {
    Node* np = n.get();
    n->backprop = [np, a] {
      a->ensure_grad();
      for (std::size_t i = 0; i < np->grad.numel(); ++i) {
        const double s = np->val.v[i];
        a->grad.v[i] += np->grad.v[i] * s * (1.0 - s);
      }
    };
  }
  return n;
}

/// Self-gated Swish: s(x) = x * sigmoid(x), s'(x) = sig(x) * (1 + x(1 - sig(x))).
inline ValuePtr swish(const ValuePtr& a) {
  Tensor out = a->val;
  for (double& x : out.v) x = x * sigmoid_scalar(x);
  auto n = make_node(std::move(out), "swish", {a});
  if (n->requires_grad) {
    Node* np = n.get();
    n->backprop = [np, a] {
      a->ensure_grad();
      for (std::size_t i = 0; i < np->grad.numel(); ++i) {
        const double x = a->val.v[i];
        const double s = sigmoid_scalar(x);
        a->grad.v[i] += np->grad.v[i] * s * (1.0 + x * (1.0 - s));
      }
    };
  }
  return n;
}

inline ValuePtr leaky_relu(const ValuePtr& a, double slope) {
  Tensor out = a->val;
  for (double& x : out.v) x = x >= 0 ? x : slope * x;
  auto n = make_node(std::move(out), "leaky_relu", {a});
  if (n->requires_grad) {
    Node* np = n.get();
    n->backprop = [np, a, slope] {
      a->ensure_grad();
      for (std::size_t i = 0; i < np->grad.numel(); ++i)
        a->grad.v[i] += np->grad.v[i] * (a->val.v[i] >= 0 ? 1.0 : slope);
    };
  }
  return n;
}

// ---- linear algebra --------------------------------------------------------

/// Affine map y = x W^T + b with x [n,in], W [out,in], b [out] (optional).
inline ValuePtr linear(const ValuePtr& x, const ValuePtr& W, const ValuePtr& b = nullptr) {
  const int n = x->val.rows, in = x->val.cols, out = W->val.rows;
  if (W->val.cols != in)
    throw ShapeError("linear: shape mismatch x" + x->val.shape_str() + " vs W" + W->val.shape_str());
  if (b && (b->val.rows != 1 || b->val.cols != out))
    throw ShapeError("linear: bias shape " + b->val.shape_str() + " does not match W" + W->val.shape_str());

  Tensor y(n, out);
  for (int r = 0; r < n; ++r) {
    const double* xr = x->val.row(r);
    double* yr = y.row(r);
    for (int o = 0; o < out; ++o) {
      const double* wr = W->val.row(o);
      double acc = b ? b->val.v[static_cast<std::size_t>(o)] : 0.0;
      for (int k = 0; k < in; ++k) acc += xr[k] * wr[k];
      yr[o] = acc;
    }
  }
  std::vector<ValuePtr> parents{x, W};
  if (b) parents.push_back(b);
  auto node = make_node(std::move(y), "linear", std::move(parents));
  if (node->requires_grad) {
    Node* np = node.get();
    ValuePtr bb = b;
    node->backprop = [np, x, W, bb, n, in, out] {
      if (x->requires_grad) {
        x->ensure_grad();
        for (int r = 0; r < n; ++r) {
          const double* gr = np->grad.row(r);
          double* xg = x->grad.row(r);
          for (int o = 0; o < out; ++o) {
            const double g = gr[o];
            if (g == 0.0) continue;
            const double* wr = W->val.row(o);
            for (int k = 0; k < in; ++k) xg[k] += g * wr[k];
          }
        }
      }
      if (W->requires_grad) {
        W->ensure_grad();
        for (int r = 0; r < n; ++r) {
          const double* gr = np->grad.row(r);
          const double* xr = x->val.row(r);
          for (int o = 0; o < out; ++o) {
            const double g = gr[o];
            if (g == 0.0) continue;
            double* wg = W->grad.row(o);
            for (int k = 0; k < in; ++k) wg[k] += g * xr[k];
          }
        }
      }
      if (bb && bb->requires_grad) {
        bb->ensure_grad();
        for (int r = 0; r < n; ++r) {
          const double* gr = np->grad.row(r);
          for (int o = 0; o < out; ++o) bb->grad.v[static_cast<std::size_t>(o)] += gr[o];
        }
      }
    };
  }
  return node;
}

/// Column-wise concatenation.
inline ValuePtr concat_cols(const std::vector<ValuePtr>& xs) {
  if (xs.empty()) throw ShapeError("concat_cols: no inputs");
  const int rows = xs[0]->val.rows;
  int cols = 0;
  for (const auto& x : xs) {
    if (x->val.rows != rows)
      throw ShapeError("concat_cols: row mismatch " + xs[0]->val.shape_str() + " vs " + x->val.shape_str());
    cols += x->val.cols;
  }
  Tensor out(rows, cols);
  int off = 0;
  for (const auto& x : xs) {
    for (int r = 0; r < rows; ++r)
      std::copy(x->val.row(r), x->val.row(r) + x->val.cols, out.row(r) + off);
    off += x->val.cols;
  }
  auto n = make_node(std::move(out), "concat_cols", xs);
  if (n->requires_grad) {
    Node* np = n.get();
    n->backprop = [np, xs, rows] {
      int off2 = 0;
      for (const auto& x : xs) {
        if (x->requires_grad) {
          x->ensure_grad();
          for (int r = 0; r < rows; ++r) {
            const double* gr = np->grad.row(r) + off2;
            double* xg = x->grad.row(r);
            for (int c = 0; c < x->val.cols; ++c) xg[c] += gr[c];
          }
        }
        off2 += x->val.cols;
      }
    };
  }
  return n;
}

// ---- gather / scatter ------------------------------------------------------

/// Row gather: out[r] = x[idx[r]]. Backward is scatter-add.
inline ValuePtr gather_rows(const ValuePtr& x, std::vector<int> idx) {
  Tensor out(static_cast<int>(idx.size()), x->val.cols);
  for (std::size_t r = 0; r < idx.size(); ++r) {
    if (idx[r] < 0 || idx[r] >= x->val.rows) throw ShapeError("gather_rows: index out of range");
    std::copy(x->val.row(idx[r]), x->val.row(idx[r]) + x->val.cols, out.row(static_cast<int>(r)));
  }
  auto n = make_node(std::move(out), "gather_rows", {x});
  if (n->requires_grad) {
    Node* np = n.get();
    n->backprop = [np, x, idx = std::move(idx)] {
      x->ensure_grad();
      for (std::size_t r = 0; r < idx.size(); ++r) {
        const double* gr = np->grad.row(static_cast<int>(r));
        double* xg = x->grad.row(idx[r]);
        for (int c = 0; c < np->grad.cols; ++c) xg[c] += gr[c];
      }
    };
  }
  return n;
}

/// Row scatter-add: out[idx[r]] += x[r], out has n_rows rows. Backward is
/// gather.
inline ValuePtr scatter_add_rows(const ValuePtr& x, std::vector<int> idx, int n_rows) {
  if (static_cast<int>(idx.size()) != x->val.rows)
    throw ShapeError("scatter_add_rows: index count " + std::to_string(idx.size()) + " vs rows " +
                     x->val.shape_str());
  Tensor out(n_rows, x->val.cols);
  for (std::size_t r = 0; r < idx.size(); ++r) {
    if (idx[r] < 0 || idx[r] >= n_rows) throw ShapeError("scatter_add_rows: index out of range");
    const double* xr = x->val.row(static_cast<int>(r));
    double* o = out.row(idx[r]);
    for (int c = 0; c < x->val.cols; ++c) o[c] += xr[c];
  }
  auto n = make_node(std::move(out), "scatter_add_rows", {x});
  if (n->requires_grad) {
    Node* np = n.get();
    n->backprop = [np, x, idx = std::move(idx)] {
      x->ensure_grad();
      for (std::size_t r = 0; r < idx.size(); ++r) {
        const double* gr = np->grad.row(idx[r]);
        double* xg = x->grad.row(static_cast<int>(r));
        for (int c = 0; c < np->grad.cols; ++c) xg[c] += gr[c];
      }
    };
  }
  return n;
}

// ---- reductions ------------------------------------------------------------

/// Per-row L2 norm: [E,F] -> [E,1].
inline ValuePtr row_l2norm(const ValuePtr& x) {
  Tensor out(x->val.rows, 1);
  for (int r = 0; r < x->val.rows; ++r) {
    double s = 0;
    const double* xr = x->val.row(r);
    for (int c = 0; c < x->val.cols; ++c) s += xr[c] * xr[c];
    out.v[static_cast<std::size_t>(r)] = std::sqrt(s);
  }
  auto n = make_node(std::move(out), "row_l2norm", {x});
  if (n->requires_grad) {
    Node* np = n.get();
    n->backprop = [np, x] {
      x->ensure_grad();
      for (int r = 0; r < x->val.rows; ++r) {
        const double nr = std::max(np->val.v[static_cast<std::size_t>(r)], 1e-300);
        const double g = np->grad.v[static_cast<std::size_t>(r)] / nr;
        const double* xr = x->val.row(r);
        double* xg = x->grad.row(r);
        for (int c = 0; c < x->val.cols; ++c) xg[c] += g * xr[c];
      }
    };
  }
  return n;
}

/// Broadcast multiply each row of x [E,F] by the scalar column s [E,1].
inline ValuePtr scale_rows(const ValuePtr& x, const ValuePtr& s) {
  if (s->val.cols != 1 || s->val.rows != x->val.rows)
    throw ShapeError("scale_rows: scales " + s->val.shape_str() + " vs rows of " + x->val.shape_str());
  Tensor out = x->val;
  for (int r = 0; r < out.rows; ++r) {
    const double f = s->val.v[static_cast<std::size_t>(r)];
    double* o = out.row(r);
    for (int c = 0; c < out.cols; ++c) o[c] *= f;
  }
  auto n = make_node(std::move(out), "scale_rows", {x, s});
  if (n->requires_grad) {
    Node* np = n.get();
    n->backprop = [np, x, s] {
      if (x->requires_grad) {
        x->ensure_grad();
        for (int r = 0; r < x->val.rows; ++r) {
          const double f = s->val.v[static_cast<std::size_t>(r)];
          const double* gr = np->grad.row(r);
          double* xg = x->grad.row(r);
          for (int c = 0; c < x->val.cols; ++c) xg[c] += gr[c] * f;
        }
      }
      if (s->requires_grad) {
        s->ensure_grad();
        for (int r = 0; r < x->val.rows; ++r) {
          const double* gr = np->grad.row(r);
          const double* xr = x->val.row(r);
          double acc = 0;
          for (int c = 0; c < x->val.cols; ++c) acc += gr[c] * xr[c];
          s->grad.v[static_cast<std::size_t>(r)] += acc;
        }
      }
    };
  }
  return n;
}

inline ValuePtr sum_rows(const ValuePtr& x) {
  Tensor out(1, x->val.cols);
  for (int r = 0; r < x->val.rows; ++r) {
    const double* xr = x->val.row(r);
    for (int c = 0; c < x->val.cols; ++c) out.v[static_cast<std::size_t>(c)] += xr[c];
  }
  auto n = make_node(std::move(out), "sum_rows", {x});
  if (n->requires_grad) {
    Node* np = n.get();
    n->backprop = [np, x] {
      x->ensure_grad();
      for (int r = 0; r < x->val.rows; ++r) {
        double* xg = x->grad.row(r);
        for (int c = 0; c < x->val.cols; ++c) xg[c] += np->grad.v[static_cast<std::size_t>(c)];
      }
    };
  }
  return n;
}

inline ValuePtr mean_rows(const ValuePtr& x) { return scale(sum_rows(x), 1.0 / x->val.rows); }

inline ValuePtr sum_all(const ValuePtr& x) {
  double s = 0;
  for (double v : x->val.v) s += v;
  auto n = make_node(Tensor::scalar(s), "sum_all", {x});
  if (n->requires_grad) {
    Node* np = n.get();
    n->backprop = [np, x] {
      x->ensure_grad();
      const double g = np->grad.v[0];
      for (double& xg : x->grad.v) xg += g;
    };
  }
  return n;
}

// ---- losses ----------------------------------------------------------------

/// Mean absolute error against a constant target (subgradient 0 at 0).
inline ValuePtr mae_loss(const ValuePtr& pred, const Tensor& target) {
  detail::require_same_shape(pred->val, target, "mae_loss");
  double s = 0;
  for (std::size_t i = 0; i < target.numel(); ++i) s += std::abs(pred->val.v[i] - target.v[i]);
  const double inv = 1.0 / static_cast<double>(target.numel());
  auto n = make_node(Tensor::scalar(s * inv), "mae_loss", {pred});
  if (n->requires_grad) {
    Node* np = n.get();
    n->backprop = [np, pred, target, inv] {
      pred->ensure_grad();
      const double g = np->grad.v[0] * inv;
      for (std::size_t i = 0; i < target.numel(); ++i) {
        const double d = pred->val.v[i] - target.v[i];
        pred->grad.v[i] += g * (d > 0 ? 1.0 : (d < 0 ? -1.0 : 0.0));
      }
    };
  }
  return n;
}

/// Smooth L1 (Huber with beta): 0.5 d^2 / beta for |d| < beta, |d| - beta/2
/// otherwise; averaged over elements.
inline ValuePtr smooth_l1_loss(const ValuePtr& pred, const Tensor& target, double beta = 1.0) {
  detail::require_same_shape(pred->val, target, "smooth_l1_loss");
  double s = 0;
  for (std::size_t i = 0; i < target.numel(); ++i) {
    const double d = std::abs(pred->val.v[i] - target.v[i]);
    s += d < beta ? 0.5 * d * d / beta : d - 0.5 * beta;
  }
  const double inv = 1.0 / static_cast<double>(target.numel());
  auto n = make_node(Tensor::scalar(s * inv), "smooth_l1_loss", {pred});
  if (n->requires_grad) {
    Node* np = n.get();
    n->backprop = [np, pred, target, beta, inv] {
      pred->ensure_grad();
      const double g = np->grad.v[0] * inv;
      for (std::size_t i = 0; i < target.numel(); ++i) {
        const double d = pred->val.v[i] - target.v[i];
        pred->grad.v[i] += g * (std::abs(d) < beta ? d / beta : (d > 0 ? 1.0 : -1.0));
      }
    };
  }
  return n;
}

// ---- backward --------------------------------------------------------------

/// Reverse-mode accumulation from a scalar loss. Returns the number of
/// graph nodes visited (each exactly once).
inline std::size_t backward(const ValuePtr& loss) {
  if (loss->val.rows != 1 || loss->val.cols != 1)
    throw ShapeError("backward: loss must be scalar, got " + loss->val.shape_str());
  if (loss->backward_done)
    throw NumericError("backward: called twice on the same graph without reset");
  loss->backward_done = true;

  // Iterative post-order DFS over nodes that need gradients.
  std::vector<Node*> topo;
  std::unordered_set<Node*> seen;
  std::vector<std::pair<Node*, std::size_t>> stack;
  if (loss->requires_grad) stack.push_back({loss.get(), 0});
  while (!stack.empty()) {
    auto& [node, child] = stack.back();
    if (child == 0 && seen.count(node)) {
      stack.pop_back();
      continue;
    }
    if (child < node->parents.size()) {
      Node* p = node->parents[child].get();
      ++child;
      if (p->requires_grad && !seen.count(p)) stack.push_back({p, 0});
    } else {
      seen.insert(node);
      topo.push_back(node);
      stack.pop_back();
    }
  }

  for (Node* n : topo) n->ensure_grad();
  loss->ensure_grad();
  loss->grad.v[0] = 1.0;
  for (auto it = topo.rbegin(); it != topo.rend(); ++it) {
    if ((*it)->backprop) (*it)->backprop();
  }
  return topo.size();
}

}  // namespace pamnet::ad

#endif  // PAMNET_AUTODIFF_HPP_
