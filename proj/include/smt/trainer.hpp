#ifndef SMT_TRAINER_HPP
#define SMT_TRAINER_HPP

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "smt/csr.hpp"
#include "smt/errors.hpp"
#include "smt/losses.hpp"
#include "smt/metrics.hpp"
#include "smt/model_io.hpp"
#include "smt/net.hpp"
#include "smt/optim.hpp"
#include "smt/pipeline.hpp"
#include "smt/rng.hpp"

namespace smt {

struct Dataset {
  CsrMatrix x;
  ClassLabels y_class;   // n_rows x n_class_tasks; empty matrix when no head
  RegrLabels y_regr;     // n_rows x n_regr_tasks; empty matrix when no head
  FoldVector folds;

  void validate() const {
    if (y_class.labels.n_rows() != x.n_rows())
      throw ShapeMismatch("dataset: class labels have " +
                          std::to_string(y_class.labels.n_rows()) + " rows but X has " +
                          std::to_string(x.n_rows()));
    if (y_regr.targets.n_rows() != x.n_rows())
      throw ShapeMismatch("dataset: regression targets have " +
                          std::to_string(y_regr.targets.n_rows()) + " rows but X has " +
                          std::to_string(x.n_rows()));
    if (folds.size() != x.n_rows())
      throw ShapeMismatch("dataset: fold vector has " + std::to_string(folds.size()) +
                          " entries but X has " + std::to_string(x.n_rows()) + " rows");
  }
};

struct TrainOptions {
  NetworkArchitecture arch;
  OptimizerConfig optimizer;
  BatchPlan batch_plan;
  TaskWeights task_weights;
  bool standardize_regression = false;
  std::size_t epochs = 20;
  std::uint64_t seed = 42;
  int va_fold = 0;
  std::size_t min_samples_auc = 5;
};

struct EpochStats {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  MetricReport validation;
};

struct TrainedModel {
  ModelConfig config;
  ParameterSet params;
  std::vector<EpochStats> history;
};

// Deterministic eval-mode forward over a row subset, chunked to bound the
// trace memory. Returns (class probabilities, raw-scale regression outputs).
inline std::pair<Matrix, Matrix> predict_rows(const NetworkArchitecture& arch,
                                              const ParameterSet& params,
                                              const CsrMatrix& x,
                                              std::span<const std::size_t> rows,
                                              const StandardizationStats& stats) {
  Matrix probs(rows.size(), arch.n_class_tasks);
  Matrix regr(rows.size(), arch.n_regr_tasks);
  Rng unused(0);
  constexpr std::size_t kEvalChunk = 1024;
  for (std::size_t start = 0; start < rows.size(); start += kEvalChunk) {
    const std::size_t stop = std::min(rows.size(), start + kEvalChunk);
    const CsrMatrix x_chunk = x.select_rows(rows.subspan(start, stop - start));
    ForwardResult r = forward(arch, params, x_chunk, RunMode::eval, unused);
    for (std::size_t i = start; i < stop; ++i) {
      for (std::size_t j = 0; j < arch.n_class_tasks; ++j)
        probs(i, j) = sigmoid(r.class_logits(i - start, j));
      for (std::size_t j = 0; j < arch.n_regr_tasks; ++j)
        regr(i, j) = destandardize_value(r.regr_outputs(i - start, j), j, stats);
    }
  }
  return {std::move(probs), std::move(regr)};
}

inline std::vector<std::size_t> all_rows(const CsrMatrix& x) {
  std::vector<std::size_t> rows(x.n_rows());
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
  return rows;
}

// Per-task metrics over a row subset. Classification scores are
// probabilities; regression is evaluated on the raw scale with censored
// entries excluded.
inline MetricReport evaluate_model(const NetworkArchitecture& arch, const ParameterSet& params,
                                   const CsrMatrix& x, const ClassLabels& y_class,
                                   const RegrLabels& y_regr_raw,
                                   const StandardizationStats& stats,
                                   std::span<const std::size_t> rows,
                                   std::size_t min_samples) {
  const auto [probs, regr] = predict_rows(arch, params, x, rows, stats);

  MetricReport report;
  std::vector<std::vector<double>> cls_scores(arch.n_class_tasks), cls_labels(arch.n_class_tasks);
  const CsrMatrix yc = y_class.labels.select_rows(rows);
  for (std::size_t i = 0; i < yc.n_rows(); ++i)
    for (std::size_t k = yc.row_begin(i); k < yc.row_end(i); ++k) {
      const std::size_t j = yc.col_idx()[k];
      cls_scores[j].push_back(probs(i, j));
      cls_labels[j].push_back(yc.values()[k]);
    }
  for (std::size_t j = 0; j < arch.n_class_tasks; ++j)
    report.class_tasks.push_back(
        evaluate_class_task(j, cls_scores[j], cls_labels[j], min_samples));

  std::vector<std::vector<double>> regr_y(arch.n_regr_tasks), regr_yhat(arch.n_regr_tasks);
  const CsrMatrix yr = y_regr_raw.targets.select_rows(rows);
  const CsrMatrix cen = y_regr_raw.censor ? y_regr_raw.censor->select_rows(rows)
                                          : CsrMatrix(rows.size(), arch.n_regr_tasks);
  for (std::size_t i = 0; i < yr.n_rows(); ++i) {
    std::size_t ck = cen.row_begin(i);
    const std::size_t ck_end = cen.row_end(i);
    for (std::size_t k = yr.row_begin(i); k < yr.row_end(i); ++k) {
      const std::size_t j = yr.col_idx()[k];
      while (ck < ck_end && cen.col_idx()[ck] < j) ++ck;
      if (ck < ck_end && cen.col_idx()[ck] == j) continue;  // censored: excluded
      regr_y[j].push_back(yr.values()[k]);
      regr_yhat[j].push_back(regr(i, j));
    }
  }
  for (std::size_t j = 0; j < arch.n_regr_tasks; ++j)
    report.regr_tasks.push_back(evaluate_regr_task(j, regr_y[j], regr_yhat[j]));
  return report;
}

// Full training run: fold split, optional target standardization fitted on
// the training fold, shuffled logical batches with internal gradient
// accumulation, one optimizer step per logical batch, and a validation-fold
// evaluation every epoch. Deterministic given options.seed.
inline TrainedModel train_model(const Dataset& data, const TrainOptions& opts) {
  data.validate();
  opts.arch.validate();
  opts.optimizer.validate();
  opts.batch_plan.validate();
  opts.task_weights.validate();
  if (opts.epochs < 1) throw ValidationError("epochs must be >= 1");

  const auto [train_rows, valid_rows] = split_by_fold(data.folds, opts.va_fold);

  StandardizationStats stats;
  stats.mean = Vector(opts.arch.n_regr_tasks, 0.0);
  stats.scale = Vector(opts.arch.n_regr_tasks, 1.0);
  if (opts.standardize_regression && opts.arch.n_regr_tasks > 0)
    stats = fit_standardization(data.y_regr, train_rows);
  const RegrLabels y_regr_train = standardize_labels(data.y_regr, stats);
  const CsrMatrix& censor = y_regr_train.censor ? *y_regr_train.censor
                                                : CsrMatrix();

  ParameterSet params = init_parameters(opts.arch, mix_seed(opts.seed, 0x1717));
  OptimizerState opt_state;
  Rng dropout_rng(mix_seed(opts.seed, 0xd407));
  const std::uint64_t shuffle_base =
      opts.batch_plan.shuffle_seed != 0 ? opts.batch_plan.shuffle_seed
                                        : mix_seed(opts.seed, 0x5uff);

  TrainedModel out;
  for (std::size_t epoch = 0; epoch < opts.epochs; ++epoch) {
    const auto batches =
        make_batches(train_rows, opts.batch_plan, mix_seed(shuffle_base, epoch));
    double loss_weighted = 0.0;
    std::size_t loss_rows = 0;
    for (const LogicalBatch& batch : batches) {
      ParameterGradients grads = zeros_like_parameters(params);
      double batch_loss_total = 0.0;
      for (const auto& chunk : batch.chunks) {
        const CsrMatrix x_c = data.x.select_rows(chunk);
        const CsrMatrix yc_c = data.y_class.labels.select_rows(chunk);
        const CsrMatrix yr_c = y_regr_train.targets.select_rows(chunk);
        const CsrMatrix cen_c = censor.n_rows() > 0 ? censor.select_rows(chunk)
                                                    : CsrMatrix(chunk.size(), opts.arch.n_regr_tasks);
        ForwardResult f = forward(opts.arch, params, x_c, RunMode::train, dropout_rng);
        BatchLossResult l = batch_loss(f.class_logits, f.regr_outputs, yc_c, yr_c, cen_c,
                                       opts.task_weights, batch.rows);
        ParameterGradients g = backward(opts.arch, params, f.trace, l.grad_class_logits,
                                        l.grad_regr_outputs);
        accumulate_gradients(grads, g);
        batch_loss_total += l.loss;
      }
      optimizer_step(params, grads, opt_state, opts.optimizer);
      loss_weighted += batch_loss_total * static_cast<double>(batch.rows);
      loss_rows += batch.rows;
    }

    EpochStats es;
    es.epoch = epoch;
    es.train_loss = loss_weighted / static_cast<double>(loss_rows);
    es.validation = evaluate_model(opts.arch, params, data.x, data.y_class, data.y_regr,
                                   stats, valid_rows, opts.min_samples_auc);
    out.history.push_back(std::move(es));
  }

  out.config.arch = opts.arch;
  out.config.optimizer = opts.optimizer;
  out.config.batch_plan = opts.batch_plan;
  out.config.task_weights = opts.task_weights;
  out.config.standardization = stats;
  out.config.standardization.enabled = opts.standardize_regression && opts.arch.n_regr_tasks > 0;
  out.config.seed = opts.seed;
  out.config.epochs = opts.epochs;
  out.config.min_samples_auc = opts.min_samples_auc;
  out.params = std::move(params);
  return out;
}

}  // namespace smt

#endif  // SMT_TRAINER_HPP
