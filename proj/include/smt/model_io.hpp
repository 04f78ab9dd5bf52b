#ifndef SMT_MODEL_IO_HPP
#define SMT_MODEL_IO_HPP

#include <cstdint>
#include <cstring>
#include <fstream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "smt/csr.hpp"
#include "smt/errors.hpp"
#include "smt/losses.hpp"
#include "smt/net.hpp"
#include "smt/optim.hpp"
#include "smt/pipeline.hpp"

namespace smt {

inline constexpr std::uint32_t kConfigVersion = 1;
inline constexpr std::uint32_t kWeightsVersion = 1;

// Everything needed to reconstruct a trained model besides the weight
// tensors themselves. Serialized as JSON next to the binary weights file.
struct ModelConfig {
  std::uint32_t version = kConfigVersion;
  NetworkArchitecture arch;
  OptimizerConfig optimizer;
  BatchPlan batch_plan;
  TaskWeights task_weights;
  StandardizationStats standardization;
  std::uint64_t seed = 0;
  std::size_t epochs = 0;
  std::size_t min_samples_auc = 5;
  std::vector<std::string> class_task_names;  // optional; empty means "use indices"
  std::vector<std::string> regr_task_names;

  void validate() const {
    arch.validate();
    optimizer.validate();
    batch_plan.validate();
    task_weights.validate();
    if (task_weights.class_weights.size() != arch.n_class_tasks)
      throw ValidationError("config: class task weight count disagrees with architecture");
    if (task_weights.regr_weights.size() != arch.n_regr_tasks)
      throw ValidationError("config: regression task weight count disagrees with architecture");
    if (standardization.enabled && standardization.n_tasks() != arch.n_regr_tasks)
      throw ValidationError("config: standardization stats disagree with task count");
    if (!class_task_names.empty() && class_task_names.size() != arch.n_class_tasks)
      throw ValidationError("config: class task name count disagrees with architecture");
    if (!regr_task_names.empty() && regr_task_names.size() != arch.n_regr_tasks)
      throw ValidationError("config: regression task name count disagrees with architecture");
  }
};

namespace detail {

inline nlohmann::json config_to_json(const ModelConfig& c) {
  nlohmann::json j;
  j["format_version"] = c.version;
  j["architecture"] = {
      {"input_dim", c.arch.input_dim},
      {"hidden_sizes", c.arch.hidden_sizes},
      {"dropout_trunk", c.arch.trunk_dropout},
      {"activation", to_string(c.arch.activation)},
      {"n_class_tasks", c.arch.n_class_tasks},
      {"n_regr_tasks", c.arch.n_regr_tasks},
  };
  j["optimizer"] = {
      {"kind", to_string(c.optimizer.kind)},
      {"learning_rate", c.optimizer.learning_rate},
      {"weight_decay", c.optimizer.weight_decay},
      {"beta1", c.optimizer.beta1},
      {"beta2", c.optimizer.beta2},
      {"epsilon", c.optimizer.epsilon},
  };
  j["batch"] = {
      {"batch_size", c.batch_plan.batch_size},
      {"internal_batch_max", c.batch_plan.chunk_max},
      {"shuffle_seed", c.batch_plan.shuffle_seed},
  };
  j["task_weights"] = {
      {"class", c.task_weights.class_weights},
      {"regr", c.task_weights.regr_weights},
  };
  j["standardization"] = {
      {"enabled", c.standardization.enabled},
      {"mean", c.standardization.mean},
      {"scale", c.standardization.scale},
  };
  j["seed"] = c.seed;
  j["epochs"] = c.epochs;
  j["min_samples_auc"] = c.min_samples_auc;
  if (!c.class_task_names.empty()) j["class_task_names"] = c.class_task_names;
  if (!c.regr_task_names.empty()) j["regr_task_names"] = c.regr_task_names;
  return j;
}

inline ModelConfig config_from_json(const nlohmann::json& j, const std::string& name) {
  ModelConfig c;
  try {
    c.version = j.at("format_version").get<std::uint32_t>();
    if (c.version != kConfigVersion)
      throw VersionError(name + ": unsupported config version " + std::to_string(c.version));
    const auto& a = j.at("architecture");
    c.arch.input_dim = a.at("input_dim").get<std::size_t>();
    c.arch.hidden_sizes = a.at("hidden_sizes").get<std::vector<std::size_t>>();
    c.arch.trunk_dropout = a.at("dropout_trunk").get<double>();
    c.arch.activation = activation_from_string(a.at("activation").get<std::string>());
    c.arch.n_class_tasks = a.at("n_class_tasks").get<std::size_t>();
    c.arch.n_regr_tasks = a.at("n_regr_tasks").get<std::size_t>();
    const auto& o = j.at("optimizer");
    c.optimizer.kind = optimizer_from_string(o.at("kind").get<std::string>());
    c.optimizer.learning_rate = o.at("learning_rate").get<double>();
    c.optimizer.weight_decay = o.at("weight_decay").get<double>();
    c.optimizer.beta1 = o.at("beta1").get<double>();
    c.optimizer.beta2 = o.at("beta2").get<double>();
    c.optimizer.epsilon = o.at("epsilon").get<double>();
    const auto& b = j.at("batch");
    c.batch_plan.batch_size = b.at("batch_size").get<std::size_t>();
    c.batch_plan.chunk_max = b.at("internal_batch_max").get<std::size_t>();
    c.batch_plan.shuffle_seed = b.at("shuffle_seed").get<std::uint64_t>();
    const auto& w = j.at("task_weights");
    c.task_weights.class_weights = w.at("class").get<Vector>();
    c.task_weights.regr_weights = w.at("regr").get<Vector>();
    const auto& s = j.at("standardization");
    c.standardization.enabled = s.at("enabled").get<bool>();
    c.standardization.mean = s.at("mean").get<Vector>();
    c.standardization.scale = s.at("scale").get<Vector>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.epochs = j.at("epochs").get<std::size_t>();
    c.min_samples_auc = j.at("min_samples_auc").get<std::size_t>();
    if (j.contains("class_task_names"))
      c.class_task_names = j.at("class_task_names").get<std::vector<std::string>>();
    if (j.contains("regr_task_names"))
      c.regr_task_names = j.at("regr_task_names").get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(name + ": malformed config: " + e.what());
  }
  try {
    c.validate();
  } catch (const Error& e) {
    throw FormatError(name + ": " + e.what());
  }
  return c;
}

}  // namespace detail

inline void write_config(const ModelConfig& config, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError(path + ": cannot open for writing");
  out << detail::config_to_json(config).dump(2) << "\n";
  out.flush();
  if (!out) throw IoError(path + ": write failed");
}

inline ModelConfig read_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError(path + ": cannot open for reading");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path + ": invalid JSON: " + e.what());
  }
  return detail::config_from_json(j, path);
}

// ---------------------------------------------------------------------------
// Binary weights container: magic "SMTW", version u32, tensor count u64;
// per tensor: name length u32, UTF-8 name, ndim u32, dims u64[], row-major
// little-endian f64 payload. Byte-exact round trip.

inline void write_weights(const ParameterSet& params, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(path + ": cannot open for writing");
  std::uint64_t count = 0;
  for_each_tensor(params, [&](const TensorRef&) { ++count; });
  out.write("SMTW", 4);
  detail::put_u32_le(out, kWeightsVersion);
  detail::put_u64_le(out, count);
  for_each_tensor(params, [&](const TensorRef& t) {
    detail::put_u32_le(out, static_cast<std::uint32_t>(t.name.size()));
    out.write(t.name.data(), static_cast<std::streamsize>(t.name.size()));
    detail::put_u32_le(out, static_cast<std::uint32_t>(t.dims.size()));
    for (std::size_t d : t.dims) detail::put_u64_le(out, d);
    for (std::size_t i = 0; i < t.size; ++i) detail::put_f64_le(out, t.data[i]);
  });
  out.flush();
  if (!out) throw IoError(path + ": write failed");
}

// Reads weights into the tensor layout implied by the architecture; every
// expected tensor must be present with matching dimensions.
inline ParameterSet read_weights(const NetworkArchitecture& arch, const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path + ": cannot open for reading");
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, "SMTW", 4) != 0)
    throw FormatError(path + ": bad magic, not a weights file");
  const std::uint32_t version = detail::get_u32_le(in, path);
  if (version != kWeightsVersion)
    throw VersionError(path + ": unsupported weights version " + std::to_string(version));
  const std::uint64_t count = detail::get_u64_le(in, path);

  ParameterSet params = zeros_like_parameters(arch);
  std::vector<TensorRef> refs;
  for_each_tensor(params, [&](const TensorRef& t) { refs.push_back(t); });
  std::vector<bool> filled(refs.size(), false);

  for (std::uint64_t n = 0; n < count; ++n) {
    const std::uint32_t name_len = detail::get_u32_le(in, path);
    if (name_len > 4096) throw FormatError(path + ": implausible tensor name length");
    std::string name(name_len, '\0');
    if (!in.read(name.data(), name_len)) throw FormatError(path + ": truncated file");
    const std::uint32_t ndim = detail::get_u32_le(in, path);
    if (ndim > 8) throw FormatError(path + ": implausible tensor rank");
    std::vector<std::size_t> dims(ndim);
    std::size_t size = 1;
    for (auto& d : dims) {
      d = detail::get_u64_le(in, path);
      size *= d;
    }
    std::size_t idx = refs.size();
    for (std::size_t i = 0; i < refs.size(); ++i)
      if (refs[i].name == name) idx = i;
    if (idx == refs.size())
      throw FormatError(path + ": unexpected tensor '" + name + "'");
    if (filled[idx]) throw FormatError(path + ": duplicate tensor '" + name + "'");
    if (dims != refs[idx].dims) {
      std::string want, got;
      for (std::size_t d : refs[idx].dims) want += (want.empty() ? "" : "x") + std::to_string(d);
      for (std::size_t d : dims) got += (got.empty() ? "" : "x") + std::to_string(d);
      throw FormatError(path + ": tensor '" + name + "' has dims " + got +
                        " but the architecture requires " + want);
    }
    for (std::size_t i = 0; i < size; ++i) refs[idx].data[i] = detail::get_f64_le(in, path);
    filled[idx] = true;
  }
  for (std::size_t i = 0; i < refs.size(); ++i)
    if (!filled[i]) throw FormatError(path + ": missing tensor '" + refs[i].name + "'");
  return params;
}

inline void save_model(const ModelConfig& config, const ParameterSet& params,
                       const std::string& conf_path, const std::string& weights_path) {
  config.validate();
  write_config(config, conf_path);
  write_weights(params, weights_path);
}

// Loads and cross-validates the (config, weights) pair. Shape violations
// (e.g. a head tensor disagreeing with the configured task count) are
// reported with both values.
inline std::pair<ModelConfig, ParameterSet> load_model(const std::string& conf_path,
                                                       const std::string& weights_path) {
  ModelConfig config = read_config(conf_path);
  ParameterSet params = read_weights(config.arch, weights_path);
  return {std::move(config), std::move(params)};
}

}  // namespace smt

#endif  // SMT_MODEL_IO_HPP
