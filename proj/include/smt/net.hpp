#ifndef SMT_NET_HPP
#define SMT_NET_HPP

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "smt/csr.hpp"
#include "smt/dense.hpp"
#include "smt/errors.hpp"
#include "smt/rng.hpp"

namespace smt {

enum class Activation { relu, tanh };

inline std::string to_string(Activation a) {
  return a == Activation::relu ? "relu" : "tanh";
}

inline Activation activation_from_string(const std::string& s) {
  if (s == "relu") return Activation::relu;
  if (s == "tanh") return Activation::tanh;
  throw ValidationError("unknown activation '" + s + "'");
}

// Feed-forward trunk with a sparse input layer and two task-group heads.
// hidden_sizes[0] is the width of the layer fed directly by the sparse input.
struct NetworkArchitecture {
  std::size_t input_dim = 0;
  std::vector<std::size_t> hidden_sizes;
  double trunk_dropout = 0.0;
  Activation activation = Activation::relu;
  std::size_t n_class_tasks = 0;
  std::size_t n_regr_tasks = 0;

  void validate() const {
    if (input_dim < 1) throw ValidationError("input_dim must be >= 1");
    if (hidden_sizes.empty()) throw ValidationError("at least one hidden layer is required");
    for (std::size_t h : hidden_sizes)
      if (h < 1) throw ValidationError("hidden sizes must be >= 1");
    if (n_class_tasks + n_regr_tasks < 1)
      throw ValidationError("at least one task is required");
    if (!(trunk_dropout >= 0.0 && trunk_dropout < 1.0))
      throw ValidationError("trunk_dropout must be in [0, 1)");
  }

  std::size_t last_hidden() const { return hidden_sizes.back(); }
};

// All learnable tensors. trunk_w[0] is input_dim x hidden_sizes[0]; heads are
// last_hidden x n_tasks. Gradients reuse the same layout.
struct ParameterSet {
  std::vector<Matrix> trunk_w;
  std::vector<Vector> trunk_b;
  Matrix class_w;
  Vector class_b;
  Matrix regr_w;
  Vector regr_b;
};

using ParameterGradients = ParameterSet;

inline ParameterSet zeros_like_parameters(const NetworkArchitecture& arch) {
  ParameterSet p;
  std::size_t prev = arch.input_dim;
  for (std::size_t h : arch.hidden_sizes) {
    p.trunk_w.emplace_back(prev, h);
    p.trunk_b.emplace_back(h, 0.0);
    prev = h;
  }
  p.class_w = Matrix(arch.last_hidden(), arch.n_class_tasks);
  p.class_b = Vector(arch.n_class_tasks, 0.0);
  p.regr_w = Matrix(arch.last_hidden(), arch.n_regr_tasks);
  p.regr_b = Vector(arch.n_regr_tasks, 0.0);
  return p;
}

inline ParameterSet zeros_like_parameters(const ParameterSet& other) {
  ParameterSet p;
  for (std::size_t l = 0; l < other.trunk_w.size(); ++l) {
    p.trunk_w.emplace_back(other.trunk_w[l].rows(), other.trunk_w[l].cols());
    p.trunk_b.emplace_back(other.trunk_b[l].size(), 0.0);
  }
  p.class_w = Matrix(other.class_w.rows(), other.class_w.cols());
  p.class_b = Vector(other.class_b.size(), 0.0);
  p.regr_w = Matrix(other.regr_w.rows(), other.regr_w.cols());
  p.regr_b = Vector(other.regr_b.size(), 0.0);
  return p;
}

enum class TensorKind { weight, bias };

struct TensorRef {
  std::string name;
  TensorKind kind;
  std::vector<std::size_t> dims;
  double* data;
  std::size_t size;
};

// Visits every tensor in a fixed order: trunk layers first (weight then
// bias), then the class head, then the regression head. Heads with zero
// tasks are skipped.
template <typename F>
void for_each_tensor(ParameterSet& p, F&& f) {
  for (std::size_t l = 0; l < p.trunk_w.size(); ++l) {
    Matrix& w = p.trunk_w[l];
    f(TensorRef{"trunk." + std::to_string(l) + ".weight", TensorKind::weight,
                {w.rows(), w.cols()}, w.data().data(), w.data().size()});
    Vector& b = p.trunk_b[l];
    f(TensorRef{"trunk." + std::to_string(l) + ".bias", TensorKind::bias,
                {b.size()}, b.data(), b.size()});
  }
  if (p.class_w.cols() > 0) {
    f(TensorRef{"class.weight", TensorKind::weight,
                {p.class_w.rows(), p.class_w.cols()},
                p.class_w.data().data(), p.class_w.data().size()});
    f(TensorRef{"class.bias", TensorKind::bias, {p.class_b.size()},
                p.class_b.data(), p.class_b.size()});
  }
  if (p.regr_w.cols() > 0) {
    f(TensorRef{"regr.weight", TensorKind::weight,
                {p.regr_w.rows(), p.regr_w.cols()},
                p.regr_w.data().data(), p.regr_w.data().size()});
    f(TensorRef{"regr.bias", TensorKind::bias, {p.regr_b.size()},
                p.regr_b.data(), p.regr_b.size()});
  }
}

template <typename F>
void for_each_tensor(const ParameterSet& p, F&& f) {
  for_each_tensor(const_cast<ParameterSet&>(p), [&](const TensorRef& t) { f(t); });
}

// Glorot-uniform weights, zero biases; fully determined by the seed.
inline ParameterSet init_parameters(const NetworkArchitecture& arch, std::uint64_t seed) {
  arch.validate();
  ParameterSet p = zeros_like_parameters(arch);
  Rng rng(seed);
  for_each_tensor(p, [&](const TensorRef& t) {
    if (t.kind != TensorKind::weight) return;
    const double fan_in = static_cast<double>(t.dims[0]);
    const double fan_out = static_cast<double>(t.dims[1]);
    const double bound = std::sqrt(6.0 / (fan_in + fan_out));
    for (std::size_t i = 0; i < t.size; ++i) t.data[i] = rng.uniform(-bound, bound);
  });
  return p;
}

enum class RunMode { train, eval };

// Everything backward needs to replay the forward pass: the input batch, the
// pre-activations, the post-dropout activations, and the dropout masks.
// Masks hold 0 or 1/(1-p); an empty mask means dropout was a no-op.
struct ForwardTrace {
  CsrMatrix x;
  std::vector<Matrix> pre_act;
  std::vector<Matrix> act;
  std::vector<Matrix> dropout_mask;
  RunMode mode = RunMode::eval;
};

struct ForwardResult {
  Matrix class_logits;
  Matrix regr_outputs;
  ForwardTrace trace;
};

namespace detail {

inline double activate(Activation a, double z) {
  return a == Activation::relu ? (z > 0.0 ? z : 0.0) : std::tanh(z);
}

inline double activate_grad(Activation a, double z) {
  if (a == Activation::relu) return z > 0.0 ? 1.0 : 0.0;
  const double t = std::tanh(z);
  return 1.0 - t * t;
}

}  // namespace detail

inline ForwardResult forward(const NetworkArchitecture& arch, const ParameterSet& params,
                             const CsrMatrix& x, RunMode mode, Rng& rng) {
  if (x.n_cols() != arch.input_dim) {
    throw ShapeMismatch("forward: input has " + std::to_string(x.n_cols()) +
                        " columns, architecture expects " + std::to_string(arch.input_dim));
  }
  ForwardResult r;
  r.trace.x = x;
  r.trace.mode = mode;
  const bool use_dropout = mode == RunMode::train && arch.trunk_dropout > 0.0;
  const double keep_scale = use_dropout ? 1.0 / (1.0 - arch.trunk_dropout) : 1.0;

  Matrix cur;
  for (std::size_t l = 0; l < params.trunk_w.size(); ++l) {
    Matrix z = l == 0 ? spmm_dense(x, params.trunk_w[0])
                      : matmul(cur, params.trunk_w[l]);
    add_row_vector(z, params.trunk_b[l]);
    Matrix a(z.rows(), z.cols());
    for (std::size_t i = 0; i < z.data().size(); ++i)
      a.data()[i] = detail::activate(arch.activation, z.data()[i]);
    Matrix mask;
    if (use_dropout) {
      mask = Matrix(a.rows(), a.cols());
      for (std::size_t i = 0; i < mask.data().size(); ++i)
        mask.data()[i] = rng.bernoulli(arch.trunk_dropout) ? 0.0 : keep_scale;
      hadamard_in_place(a, mask);
    }
    r.trace.pre_act.push_back(std::move(z));
    r.trace.dropout_mask.push_back(std::move(mask));
    r.trace.act.push_back(a);
    cur = std::move(a);
  }

  r.class_logits = matmul(cur, params.class_w);
  add_row_vector(r.class_logits, params.class_b);
  r.regr_outputs = matmul(cur, params.regr_w);
  add_row_vector(r.regr_outputs, params.regr_b);
  return r;
}

inline ParameterGradients backward(const NetworkArchitecture& arch,
                                   const ParameterSet& params, const ForwardTrace& trace,
                                   const Matrix& grad_class_logits,
                                   const Matrix& grad_regr_outputs) {
  const std::size_t batch = trace.x.n_rows();
  if (grad_class_logits.rows() != batch || grad_regr_outputs.rows() != batch ||
      grad_class_logits.cols() != arch.n_class_tasks ||
      grad_regr_outputs.cols() != arch.n_regr_tasks) {
    throw ShapeMismatch("backward: upstream gradient shapes disagree with architecture");
  }
  ParameterGradients g = zeros_like_parameters(arch);
  const Matrix& last = trace.act.back();

  g.class_w = matmul_at_b(last, grad_class_logits);
  g.class_b = column_sums(grad_class_logits);
  g.regr_w = matmul_at_b(last, grad_regr_outputs);
  g.regr_b = column_sums(grad_regr_outputs);

  // d(loss)/d(post-dropout activation of the last trunk layer)
  Matrix da = matmul_a_bt(grad_class_logits, params.class_w);
  add_in_place(da, matmul_a_bt(grad_regr_outputs, params.regr_w));

  for (std::size_t l = params.trunk_w.size(); l-- > 0;) {
    if (!trace.dropout_mask[l].data().empty()) hadamard_in_place(da, trace.dropout_mask[l]);
    Matrix dz = std::move(da);
    const Matrix& z = trace.pre_act[l];
    for (std::size_t i = 0; i < dz.data().size(); ++i)
      dz.data()[i] *= detail::activate_grad(arch.activation, z.data()[i]);
    if (l == 0) {
      g.trunk_w[0] = spmm_transpose_dense(trace.x, dz);
    } else {
      g.trunk_w[l] = matmul_at_b(trace.act[l - 1], dz);
      da = matmul_a_bt(dz, params.trunk_w[l]);
    }
    g.trunk_b[l] = column_sums(dz);
  }
  return g;
}

inline void accumulate_gradients(ParameterGradients& acc, const ParameterGradients& g) {
  for (std::size_t l = 0; l < acc.trunk_w.size(); ++l) {
    add_in_place(acc.trunk_w[l], g.trunk_w[l]);
    add_in_place(acc.trunk_b[l], g.trunk_b[l]);
  }
  add_in_place(acc.class_w, g.class_w);
  add_in_place(acc.class_b, g.class_b);
  add_in_place(acc.regr_w, g.regr_w);
  add_in_place(acc.regr_b, g.regr_b);
}

}  // namespace smt

#endif  // SMT_NET_HPP
