#ifndef SMT_OPTIM_HPP
#define SMT_OPTIM_HPP

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "smt/errors.hpp"
#include "smt/net.hpp"

namespace smt {

enum class OptimizerKind { sgd, adam };

inline std::string to_string(OptimizerKind k) {
  return k == OptimizerKind::sgd ? "sgd" : "adam";
}

inline OptimizerKind optimizer_from_string(const std::string& s) {
  if (s == "sgd") return OptimizerKind::sgd;
  if (s == "adam") return OptimizerKind::adam;
  throw ValidationError("unknown optimizer '" + s + "'");
}

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::adam;
  double learning_rate = 1e-3;
  double weight_decay = 0.0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  void validate() const {
    if (!(learning_rate > 0.0)) throw ValidationError("learning rate must be > 0");
    if (!(weight_decay >= 0.0)) throw ValidationError("weight decay must be >= 0");
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0))
      throw ValidationError("beta1/beta2 must lie in [0, 1)");
    if (!(epsilon > 0.0)) throw ValidationError("epsilon must be > 0");
  }
};

// step counter plus Adam moment tensors (allocated on first use).
struct OptimizerState {
  std::uint64_t step = 0;
  std::optional<ParameterSet> first_moment;
  std::optional<ParameterSet> second_moment;
};

// Names of the tensors subject to L2 weight decay: every weight matrix,
// including the sparse input layer; never biases.
inline std::vector<std::string> weight_decay_targets(const ParameterSet& params) {
  std::vector<std::string> names;
  for_each_tensor(params, [&](const TensorRef& t) {
    if (t.kind == TensorKind::weight) names.push_back(t.name);
  });
  return names;
}

// One update. L2 decay is coupled into the gradient (g' = g + wd * theta) for
// weight tensors only, before the SGD/Adam rule is applied.
inline void optimizer_step(ParameterSet& params, const ParameterGradients& grads,
                           OptimizerState& state, const OptimizerConfig& cfg) {
  cfg.validate();
  for_each_tensor(grads, [&](const TensorRef& t) {
    for (std::size_t i = 0; i < t.size; ++i)
      if (!std::isfinite(t.data[i]))
        throw NonFiniteGradient("non-finite gradient in tensor " + t.name);
  });

  state.step += 1;
  if (cfg.kind == OptimizerKind::adam && !state.first_moment) {
    state.first_moment = zeros_like_parameters(params);
    state.second_moment = zeros_like_parameters(params);
  }

  std::vector<TensorRef> p_refs, g_refs, m_refs, v_refs;
  for_each_tensor(params, [&](const TensorRef& t) { p_refs.push_back(t); });
  for_each_tensor(grads, [&](const TensorRef& t) { g_refs.push_back(t); });
  if (cfg.kind == OptimizerKind::adam) {
    for_each_tensor(*state.first_moment, [&](const TensorRef& t) { m_refs.push_back(t); });
    for_each_tensor(*state.second_moment, [&](const TensorRef& t) { v_refs.push_back(t); });
  }

  const double t_step = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(cfg.beta1, t_step);
  const double bc2 = 1.0 - std::pow(cfg.beta2, t_step);

  for (std::size_t n = 0; n < p_refs.size(); ++n) {
    const bool decayed = p_refs[n].kind == TensorKind::weight;
    double* theta = p_refs[n].data;
    const double* g = g_refs[n].data;
    for (std::size_t i = 0; i < p_refs[n].size; ++i) {
      const double eff = decayed ? g[i] + cfg.weight_decay * theta[i] : g[i];
      if (cfg.kind == OptimizerKind::sgd) {
        theta[i] -= cfg.learning_rate * eff;
      } else {
        double& m = m_refs[n].data[i];
        double& v = v_refs[n].data[i];
        m = cfg.beta1 * m + (1.0 - cfg.beta1) * eff;
        v = cfg.beta2 * v + (1.0 - cfg.beta2) * eff * eff;
        const double m_hat = m / bc1;
        const double v_hat = v / bc2;
        theta[i] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
      }
    }
  }
}

}  // namespace smt

#endif  // SMT_OPTIM_HPP
