#ifndef SMT_PIPELINE_HPP
#define SMT_PIPELINE_HPP

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "smt/csr.hpp"
#include "smt/errors.hpp"
#include "smt/losses.hpp"
#include "smt/rng.hpp"

namespace smt {

// Fold id per data row; one fold is held out for validation.
using FoldVector = std::vector<int>;

inline FoldVector read_fold_vector(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError(path + ": cannot open for reading");
  FoldVector folds;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    bool blank = true;
    for (char ch : line)
      if (!std::isspace(static_cast<unsigned char>(ch))) blank = false;
    if (blank) continue;
    const char* s = line.c_str();
    char* end = nullptr;
    const long v = std::strtol(s, &end, 10);
    while (end && *end != '\0' && std::isspace(static_cast<unsigned char>(*end))) ++end;
    if (end == s || *end != '\0' || v < 0)
      throw ParseError(path + ": line " + std::to_string(line_no) +
                       ": expected a nonnegative integer, got '" + line + "'");
    folds.push_back(static_cast<int>(v));
  }
  return folds;
}

inline void write_fold_vector(const FoldVector& folds, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError(path + ": cannot open for writing");
  for (int f : folds) out << f << "\n";
}

// Partition of row indices into (train, validation) by fold id. The
// validation set is exactly the rows whose fold equals va_fold.
inline std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_by_fold(
    const FoldVector& folds, int va_fold) {
  if (std::find(folds.begin(), folds.end(), va_fold) == folds.end())
    throw UnknownFold("validation fold " + std::to_string(va_fold) +
                      " does not occur in the fold vector");
  std::vector<std::size_t> train, valid;
  for (std::size_t i = 0; i < folds.size(); ++i)
    (folds[i] == va_fold ? valid : train).push_back(i);
  return {std::move(train), std::move(valid)};
}

// Per-task affine transform of regression targets: z = (y - mean) / scale.
// Fitted on training rows only, population std; tasks with fewer than two
// observed values or zero variance fall back to scale 1.
struct StandardizationStats {
  bool enabled = false;
  Vector mean;
  Vector scale;

  std::size_t n_tasks() const { return mean.size(); }
};

inline StandardizationStats fit_standardization(const RegrLabels& regr,
                                                std::span<const std::size_t> train_rows) {
  const std::size_t n_tasks = regr.n_tasks();
  StandardizationStats stats;
  stats.enabled = true;
  stats.mean = Vector(n_tasks, 0.0);
  stats.scale = Vector(n_tasks, 1.0);

  std::vector<double> sum(n_tasks, 0.0), sum_sq(n_tasks, 0.0);
  std::vector<std::size_t> count(n_tasks, 0);
  const CsrMatrix& y = regr.targets;
  for (std::size_t r : train_rows) {
    for (std::size_t k = y.row_begin(r); k < y.row_end(r); ++k) {
      const std::size_t j = y.col_idx()[k];
      const double v = y.values()[k];
      sum[j] += v;
      sum_sq[j] += v * v;
      count[j] += 1;
    }
  }
  for (std::size_t j = 0; j < n_tasks; ++j) {
    if (count[j] == 0) continue;  // mean 0, scale 1
    const double n = static_cast<double>(count[j]);
    const double mean = sum[j] / n;
    stats.mean[j] = mean;
    if (count[j] < 2) continue;  // scale stays 1
    const double var = std::max(0.0, sum_sq[j] / n - mean * mean);
    const double sd = std::sqrt(var);
    if (sd > 0.0) stats.scale[j] = sd;
  }
  return stats;
}

inline double standardize_value(double y, std::size_t task, const StandardizationStats& s) {
  if (!s.enabled) return y;
  return (y - s.mean[task]) / s.scale[task];
}

inline double destandardize_value(double z, std::size_t task, const StandardizationStats& s) {
  if (!s.enabled) return z;
  return z * s.scale[task] + s.mean[task];
}

// Standardized copy of the regression targets. The censor mask passes through
// unchanged: the scale is positive, so the inequality direction of one-sided
// losses is preserved.
inline RegrLabels standardize_labels(const RegrLabels& regr, const StandardizationStats& s) {
  if (!s.enabled) return regr;
  const CsrMatrix& y = regr.targets;
  std::vector<double> z_values(y.values().begin(), y.values().end());
  for (std::size_t i = 0; i < y.n_rows(); ++i)
    for (std::size_t k = y.row_begin(i); k < y.row_end(i); ++k)
      z_values[k] = standardize_value(y.values()[k], y.col_idx()[k], s);
  // from_parts keeps the observation pattern even where a value standardizes
  // to exactly 0 (e.g. single-observation tasks, whose mean is that value).
  CsrMatrix z = CsrMatrix::from_parts(
      y.n_rows(), y.n_cols(), {y.row_ptr().begin(), y.row_ptr().end()},
      {y.col_idx().begin(), y.col_idx().end()}, std::move(z_values));
  return RegrLabels{std::move(z), regr.censor};
}

inline Matrix destandardize_outputs(const Matrix& z, const StandardizationStats& s) {
  if (!s.enabled) return z;
  if (z.cols() != s.n_tasks())
    throw ShapeMismatch("destandardize: column count disagrees with fitted tasks");
  Matrix out(z.rows(), z.cols());
  for (std::size_t i = 0; i < z.rows(); ++i)
    for (std::size_t j = 0; j < z.cols(); ++j)
      out(i, j) = destandardize_value(z(i, j), j, s);
  return out;
}

// Mini-batch geometry: logical batches of size <= batch_size, each split
// into internal chunks of size <= chunk_max. Chunk gradients are accumulated
// and a single optimizer step is taken per logical batch, with the loss
// denominator equal to the logical batch row count.
struct BatchPlan {
  std::size_t batch_size = 200;
  std::size_t chunk_max = 200;
  std::uint64_t shuffle_seed = 0;

  void validate() const {
    if (batch_size < 1) throw ValidationError("batch size must be >= 1");
    if (chunk_max < 1 || chunk_max > batch_size)
      throw ValidationError("internal chunk size must lie in [1, batch_size]");
  }
};

struct LogicalBatch {
  std::size_t rows = 0;
  std::vector<std::vector<std::size_t>> chunks;
};

// Seeded Fisher-Yates permutation of the training rows, then consecutive
// slicing into logical batches and internal chunks.
inline std::vector<LogicalBatch> make_batches(std::span<const std::size_t> train_rows,
                                              const BatchPlan& plan,
                                              std::uint64_t epoch_seed) {
  plan.validate();
  std::vector<std::size_t> perm(train_rows.begin(), train_rows.end());
  Rng rng(epoch_seed);
  for (std::size_t i = perm.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng.below(i));
    std::swap(perm[i - 1], perm[j]);
  }
  std::vector<LogicalBatch> batches;
  for (std::size_t start = 0; start < perm.size(); start += plan.batch_size) {
    const std::size_t stop = std::min(perm.size(), start + plan.batch_size);
    LogicalBatch batch;
    batch.rows = stop - start;
    for (std::size_t c = start; c < stop; c += plan.chunk_max) {
      const std::size_t c_stop = std::min(stop, c + plan.chunk_max);
      batch.chunks.emplace_back(perm.begin() + static_cast<std::ptrdiff_t>(c),
                                perm.begin() + static_cast<std::ptrdiff_t>(c_stop));
    }
    batches.push_back(std::move(batch));
  }
  return batches;
}

// ---------------------------------------------------------------------------
// Synthetic teacher datasets. A hidden random linear teacher scores each row;
// class labels are the sign of the score, regression targets the score plus
// small noise. A censor_fraction of regression entries is converted into
// one-sided observations consistent with the censored loss: c = +1 records a
// value below the true one, c = -1 a value above it.

struct SyntheticSpec {
  std::size_t n_rows = 0;
  std::size_t n_features = 0;
  double feature_density = 0.1;
  std::size_t n_class_tasks = 0;
  std::size_t n_regr_tasks = 0;
  double label_density = 1.0;
  double censor_fraction = 0.0;
  std::uint64_t teacher_seed = 0;
  std::size_t n_folds = 5;

  void validate() const {
    if (n_rows < 1 || n_features < 1) throw InvalidSpec("need at least one row and feature");
    if (n_class_tasks + n_regr_tasks < 1) throw InvalidSpec("need at least one task");
    if (!(feature_density > 0.0 && feature_density <= 1.0))
      throw InvalidSpec("feature_density must lie in (0, 1]");
    if (!(label_density > 0.0 && label_density <= 1.0))
      throw InvalidSpec("label_density must lie in (0, 1]");
    if (!(censor_fraction >= 0.0 && censor_fraction <= 1.0))
      throw InvalidSpec("censor_fraction must lie in [0, 1]");
    if (n_folds < 1) throw InvalidSpec("need at least one fold");
  }
};

struct SyntheticData {
  CsrMatrix x;
  ClassLabels y_class;
  RegrLabels y_regr;
  FoldVector folds;
};

inline SyntheticData generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  Rng feat_rng(mix_seed(spec.teacher_seed, 1));
  Rng teacher_rng(mix_seed(spec.teacher_seed, 2));
  Rng label_rng(mix_seed(spec.teacher_seed, 3));
  Rng censor_rng(mix_seed(spec.teacher_seed, 4));

  std::vector<Triplet> x_triplets;
  for (std::size_t i = 0; i < spec.n_rows; ++i)
    for (std::size_t j = 0; j < spec.n_features; ++j)
      if (feat_rng.bernoulli(spec.feature_density)) x_triplets.push_back({i, j, 1.0});
  CsrMatrix x = CsrMatrix::from_triplets(std::move(x_triplets), spec.n_rows, spec.n_features);

  // One teacher weight vector per task, uniform in [-1, 1].
  const std::size_t n_tasks = spec.n_class_tasks + spec.n_regr_tasks;
  std::vector<Vector> teacher(n_tasks, Vector(spec.n_features, 0.0));
  for (auto& w : teacher)
    for (auto& v : w) v = teacher_rng.uniform(-1.0, 1.0);

  auto teacher_score = [&](std::size_t row, std::size_t task) {
    double s = 0.0;
    for (std::size_t k = x.row_begin(row); k < x.row_end(row); ++k)
      s += x.values()[k] * teacher[task][x.col_idx()[k]];
    return s;
  };

  std::vector<Triplet> class_triplets, regr_triplets, censor_triplets;
  for (std::size_t i = 0; i < spec.n_rows; ++i) {
    for (std::size_t t = 0; t < spec.n_class_tasks; ++t) {
      if (!label_rng.bernoulli(spec.label_density)) continue;
      const double s = teacher_score(i, t);
      class_triplets.push_back({i, t, s >= 0.0 ? 1.0 : -1.0});
    }
    for (std::size_t t = 0; t < spec.n_regr_tasks; ++t) {
      if (!label_rng.bernoulli(spec.label_density)) continue;
      const double noise = label_rng.uniform(-0.1, 0.1);
      const double truth = teacher_score(i, spec.n_class_tasks + t) + noise;
      if (censor_rng.bernoulli(spec.censor_fraction)) {
        const bool upper = censor_rng.bernoulli(0.5);
        const double offset = censor_rng.uniform(0.0, 1.0);
        const double recorded = upper ? truth - offset : truth + offset;
        if (recorded == 0.0) continue;  // exact zero is not storable sparsely
        regr_triplets.push_back({i, t, recorded});
        censor_triplets.push_back({i, t, upper ? 1.0 : -1.0});
      } else {
        if (truth == 0.0) continue;
        regr_triplets.push_back({i, t, truth});
      }
    }
  }

  SyntheticData data;
  data.x = std::move(x);
  data.y_class = ClassLabels::validated(CsrMatrix::from_triplets(
      std::move(class_triplets), spec.n_rows, spec.n_class_tasks));
  CsrMatrix targets = CsrMatrix::from_triplets(std::move(regr_triplets), spec.n_rows,
                                               spec.n_regr_tasks);
  std::optional<CsrMatrix> censor;
  if (!censor_triplets.empty())
    censor = CsrMatrix::from_triplets(std::move(censor_triplets), spec.n_rows,
                                      spec.n_regr_tasks);
  data.y_regr = RegrLabels::validated(std::move(targets), std::move(censor));
  data.folds.resize(spec.n_rows);
  for (std::size_t i = 0; i < spec.n_rows; ++i)
    data.folds[i] = static_cast<int>(i % spec.n_folds);
  return data;
}

}  // namespace smt

#endif  // SMT_PIPELINE_HPP
