#ifndef SMT_LOSSES_HPP
#define SMT_LOSSES_HPP

#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "smt/csr.hpp"
#include "smt/dense.hpp"
#include "smt/errors.hpp"

namespace smt {

// Observed classification labels: a sparse matrix whose stored values are
// exactly +1 or -1. Zero means "unobserved" and is never stored.
struct ClassLabels {
  CsrMatrix labels;

  static ClassLabels validated(CsrMatrix m) {
    for (double v : m.values())
      if (v != 1.0 && v != -1.0)
        throw ValidationError("classification labels must be +1 or -1, got " +
                              std::to_string(v));
    return ClassLabels{std::move(m)};
  }

  std::size_t n_tasks() const { return labels.n_cols(); }
};

// Observed regression targets plus an optional censoring mask. Censor entries
// are +1 (upper censoring), -1 (lower censoring); entries absent from the
// mask are uncensored. The mask pattern must be a subset of the targets'.
struct RegrLabels {
  CsrMatrix targets;
  std::optional<CsrMatrix> censor;

  static RegrLabels validated(CsrMatrix targets, std::optional<CsrMatrix> censor) {
    for (double v : targets.values())
      if (!std::isfinite(v))
        throw ValidationError("regression targets must be finite");
    if (censor) {
      for (double v : censor->values())
        if (v != 1.0 && v != -1.0)
          throw ValidationError("censor mask values must be +1 or -1, got " +
                                std::to_string(v));
      if (!censor->pattern().is_subset_of(targets.pattern())) {
        // Name the first offending entry for the diagnostic.
        for (std::size_t i = 0; i < censor->n_rows(); ++i)
          for (std::size_t k = censor->row_begin(i); k < censor->row_end(i); ++k) {
            const std::size_t j = censor->col_idx()[k];
            if (i >= targets.n_rows() || targets.find(i, j) == nullptr)
              throw ValidationError("censor entry at row " + std::to_string(i) +
                                    ", col " + std::to_string(j) +
                                    " has no matching regression target");
          }
        throw ValidationError("censor mask shape disagrees with regression targets");
      }
    }
    return RegrLabels{std::move(targets), std::move(censor)};
  }

  std::size_t n_tasks() const { return targets.n_cols(); }
};

// Nonnegative per-task loss weights for the two heads.
struct TaskWeights {
  Vector class_weights;
  Vector regr_weights;

  static TaskWeights ones(std::size_t n_class, std::size_t n_regr) {
    return TaskWeights{Vector(n_class, 1.0), Vector(n_regr, 1.0)};
  }

  void validate() const {
    for (double w : class_weights)
      if (!(w >= 0.0) || !std::isfinite(w))
        throw ValidationError("class task weights must be finite and >= 0");
    for (double w : regr_weights)
      if (!(w >= 0.0) || !std::isfinite(w))
        throw ValidationError("regression task weights must be finite and >= 0");
  }
};

// Squared error with optional one-sided censoring.
//   c = +1: max(y - yhat, 0)^2   (zero once the prediction clears y)
//   c = -1: min(y - yhat, 0)^2
//   c =  0: (y - yhat)^2
inline double censored_se(double y, double yhat, int c) {
  const double r = y - yhat;
  if (c > 0) {
    const double t = r > 0.0 ? r : 0.0;
    return t * t;
  }
  if (c < 0) {
    const double t = r < 0.0 ? r : 0.0;
    return t * t;
  }
  return r * r;
}

// d censored_se / d yhat. Both one-sided pieces are flat at y == yhat, so the
// kink resolves to 0.
inline double censored_se_grad(double y, double yhat, int c) {
  if (c > 0) return yhat < y ? 2.0 * (yhat - y) : 0.0;
  if (c < 0) return yhat > y ? 2.0 * (yhat - y) : 0.0;
  return 2.0 * (yhat - y);
}

// Binary cross-entropy on a +1/-1 label, computed as softplus(-label*logit)
// in the overflow-free form max(z, 0) + log1p(exp(-|z|)).
inline double bce_with_logits(double label, double logit) {
  const double z = -label * logit;
  return (z > 0.0 ? z : 0.0) + std::log1p(std::exp(-std::abs(z)));
}

// d bce_with_logits / d logit = -label * sigmoid(-label * logit).
inline double bce_with_logits_grad(double label, double logit) {
  const double z = -label * logit;
  double s;  // sigmoid(z), overflow-free
  if (z >= 0.0) {
    s = 1.0 / (1.0 + std::exp(-z));
  } else {
    const double e = std::exp(z);
    s = e / (1.0 + e);
  }
  return -label * s;
}

inline double sigmoid(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

struct BatchLossResult {
  double loss = 0.0;
  Matrix grad_class_logits;
  Matrix grad_regr_outputs;
};

// Loss over the observed entries of one chunk, normalized by the FULL logical
// batch row count so that chunk results sum to the logical-batch loss. Label
// slices must be row-aligned with the output matrices; absent censor entries
// mean c = 0. Gradients are dense with zeros at unobserved entries; entries
// are visited in CSR order (rows ascending, columns ascending).
inline BatchLossResult batch_loss(const Matrix& class_logits, const Matrix& regr_outputs,
                                  const CsrMatrix& y_class, const CsrMatrix& y_regr,
                                  const CsrMatrix& y_censor, const TaskWeights& w,
                                  std::size_t batch_rows) {
  if (batch_rows < 1) throw ShapeMismatch("batch_loss: batch_rows must be >= 1");
  if (y_class.n_rows() != class_logits.rows() || y_class.n_cols() != class_logits.cols())
    throw ShapeMismatch("batch_loss: class label slice shape disagrees with logits");
  if (y_regr.n_rows() != regr_outputs.rows() || y_regr.n_cols() != regr_outputs.cols())
    throw ShapeMismatch("batch_loss: regression label slice shape disagrees with outputs");
  if (y_censor.nnz() > 0 &&
      (y_censor.n_rows() != y_regr.n_rows() || y_censor.n_cols() != y_regr.n_cols()))
    throw ShapeMismatch("batch_loss: censor slice shape disagrees with targets");
  if (w.class_weights.size() != y_class.n_cols() || w.regr_weights.size() != y_regr.n_cols())
    throw ShapeMismatch("batch_loss: task weight counts disagree with label columns");

  BatchLossResult r;
  r.grad_class_logits = Matrix(class_logits.rows(), class_logits.cols());
  r.grad_regr_outputs = Matrix(regr_outputs.rows(), regr_outputs.cols());
  const double denom = static_cast<double>(batch_rows);

  double acc = 0.0;
  for (std::size_t i = 0; i < y_class.n_rows(); ++i) {
    for (std::size_t k = y_class.row_begin(i); k < y_class.row_end(i); ++k) {
      const std::size_t j = y_class.col_idx()[k];
      const double label = y_class.values()[k];
      const double wj = w.class_weights[j];
      acc += wj * bce_with_logits(label, class_logits(i, j));
      r.grad_class_logits(i, j) =
          wj * bce_with_logits_grad(label, class_logits(i, j)) / denom;
    }
  }
  for (std::size_t i = 0; i < y_regr.n_rows(); ++i) {
    std::size_t ck = y_censor.nnz() > 0 ? y_censor.row_begin(i) : 0;
    const std::size_t ck_end = y_censor.nnz() > 0 ? y_censor.row_end(i) : 0;
    for (std::size_t k = y_regr.row_begin(i); k < y_regr.row_end(i); ++k) {
      const std::size_t j = y_regr.col_idx()[k];
      const double y = y_regr.values()[k];
      int c = 0;
      while (ck < ck_end && y_censor.col_idx()[ck] < j) ++ck;
      if (ck < ck_end && y_censor.col_idx()[ck] == j)
        c = y_censor.values()[ck] > 0.0 ? 1 : -1;
      const double wj = w.regr_weights[j];
      const double yhat = regr_outputs(i, j);
      acc += wj * censored_se(y, yhat, c);
      r.grad_regr_outputs(i, j) = wj * censored_se_grad(y, yhat, c) / denom;
    }
  }
  r.loss = acc / denom;
  return r;
}

}  // namespace smt

#endif  // SMT_LOSSES_HPP
