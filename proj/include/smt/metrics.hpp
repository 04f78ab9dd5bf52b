#ifndef SMT_METRICS_HPP
#define SMT_METRICS_HPP

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "smt/errors.hpp"

namespace smt {

enum class UndefinedReason {
  none,
  single_class,       // AUC needs both classes
  no_positives,       // AUC-PR needs at least one positive
  no_denominator,     // F1 with no positive labels and no positive predictions
  degenerate_agreement,  // Kappa with expected agreement 1
  too_few_samples,    // below the per-task evaluation threshold
  zero_variance,      // R^2 / Pearson on constant data
  no_data,            // nothing to evaluate
};

inline const char* to_string(UndefinedReason r) {
  switch (r) {
    case UndefinedReason::none: return "none";
    case UndefinedReason::single_class: return "single_class";
    case UndefinedReason::no_positives: return "no_positives";
    case UndefinedReason::no_denominator: return "no_denominator";
    case UndefinedReason::degenerate_agreement: return "degenerate_agreement";
    case UndefinedReason::too_few_samples: return "too_few_samples";
    case UndefinedReason::zero_variance: return "zero_variance";
    case UndefinedReason::no_data: return "no_data";
  }
  return "unknown";
}

// A metric value or UNDEFINED with a reason code. UNDEFINED tasks are skipped
// by aggregation rather than polluting it with sentinel numbers.
struct MetricValue {
  std::optional<double> value;
  UndefinedReason reason = UndefinedReason::none;

  static MetricValue of(double v) { return MetricValue{v, UndefinedReason::none}; }
  static MetricValue undefined(UndefinedReason r) { return MetricValue{std::nullopt, r}; }
  bool defined() const { return value.has_value(); }
};

// ---------------------------------------------------------------------------
// Classification metrics. Labels are +1/-1; scores are arbitrary reals for the
// ranking metrics and probabilities in [0, 1] for the thresholded ones.

// Mann-Whitney AUC: probability that a random positive outranks a random
// negative, ties counted 1/2. Concordant/tied pair counts are accumulated in
// exact integer arithmetic so the result equals the O(n^2) pairwise rule.
inline MetricValue auc_roc(std::span<const double> scores, std::span<const double> labels) {
  if (scores.size() != labels.size()) throw ShapeMismatch("auc_roc: size mismatch");
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  unsigned long long n_pos = 0, n_neg = 0;
  for (double l : labels) (l > 0.0 ? n_pos : n_neg) += 1;
  if (n_pos == 0 || n_neg == 0)
    return MetricValue::undefined(UndefinedReason::single_class);

  unsigned long long concordant2 = 0;  // twice the pair score, to stay integral
  unsigned long long neg_below = 0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    unsigned long long pos_here = 0, neg_here = 0;
    while (j < n && scores[order[j]] == scores[order[i]]) {
      (labels[order[j]] > 0.0 ? pos_here : neg_here) += 1;
      ++j;
    }
    concordant2 += pos_here * (2 * neg_below + neg_here);
    neg_below += neg_here;
    i = j;
  }
  return MetricValue::of((0.5 * static_cast<double>(concordant2)) /
                         (static_cast<double>(n_pos) * static_cast<double>(n_neg)));
}

// Average precision with the step rule AP = sum_n (R_n - R_{n-1}) P_n over the
// score-descending sweep; tied scores are processed as one block.
inline MetricValue auc_pr(std::span<const double> scores, std::span<const double> labels) {
  if (scores.size() != labels.size()) throw ShapeMismatch("auc_pr: size mismatch");
  const std::size_t n = scores.size();
  unsigned long long n_pos = 0;
  for (double l : labels) n_pos += l > 0.0 ? 1 : 0;
  if (n_pos == 0) return MetricValue::undefined(UndefinedReason::no_positives);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  double ap = 0.0;
  double recall_prev = 0.0;
  unsigned long long tp = 0, fp = 0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) {
      (labels[order[j]] > 0.0 ? tp : fp) += 1;
      ++j;
    }
    const double recall = static_cast<double>(tp) / static_cast<double>(n_pos);
    const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    ap += (recall - recall_prev) * precision;
    recall_prev = recall;
    i = j;
  }
  return MetricValue::of(ap);
}

namespace detail {

struct Confusion {
  unsigned long long tp = 0, fp = 0, fn = 0, tn = 0;
  unsigned long long total() const { return tp + fp + fn + tn; }
};

inline Confusion confusion_at_half(std::span<const double> probs,
                                   std::span<const double> labels) {
  if (probs.size() != labels.size()) throw ShapeMismatch("confusion: size mismatch");
  Confusion c;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const bool pred_pos = probs[i] >= 0.5;
    const bool is_pos = labels[i] > 0.0;
    if (pred_pos && is_pos) c.tp += 1;
    else if (pred_pos) c.fp += 1;
    else if (is_pos) c.fn += 1;
    else c.tn += 1;
  }
  return c;
}

}  // namespace detail

// F1 at the 0.5 probability threshold.
inline MetricValue f1_at_half(std::span<const double> probs, std::span<const double> labels) {
  const auto c = detail::confusion_at_half(probs, labels);
  const unsigned long long denom = 2 * c.tp + c.fp + c.fn;
  if (denom == 0) return MetricValue::undefined(UndefinedReason::no_denominator);
  return MetricValue::of(2.0 * static_cast<double>(c.tp) / static_cast<double>(denom));
}

// Cohen's kappa from the 2x2 table at the 0.5 threshold.
inline MetricValue cohen_kappa_at_half(std::span<const double> probs,
                                       std::span<const double> labels) {
  const auto c = detail::confusion_at_half(probs, labels);
  const unsigned long long n = c.total();
  if (n == 0) return MetricValue::undefined(UndefinedReason::no_data);
  // integer test for p_e == 1 to avoid rounding surprises
  const unsigned long long agree_exp2 =
      (c.tp + c.fp) * (c.tp + c.fn) + (c.fn + c.tn) * (c.fp + c.tn);
  if (agree_exp2 == n * n)
    return MetricValue::undefined(UndefinedReason::degenerate_agreement);
  const double nn = static_cast<double>(n);
  const double p_o = static_cast<double>(c.tp + c.tn) / nn;
  const double p_e = static_cast<double>(agree_exp2) / (nn * nn);
  return MetricValue::of((p_o - p_e) / (1.0 - p_e));
}

// ---------------------------------------------------------------------------
// Regression metrics, evaluated on the raw (destandardized) scale.

inline MetricValue rmse(std::span<const double> y, std::span<const double> yhat) {
  if (y.size() != yhat.size()) throw ShapeMismatch("rmse: size mismatch");
  if (y.empty()) return MetricValue::undefined(UndefinedReason::no_data);
  double ss = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double d = y[i] - yhat[i];
    ss += d * d;
  }
  return MetricValue::of(std::sqrt(ss / static_cast<double>(y.size())));
}

inline MetricValue r_squared(std::span<const double> y, std::span<const double> yhat) {
  if (y.size() != yhat.size()) throw ShapeMismatch("r_squared: size mismatch");
  if (y.size() < 2) return MetricValue::undefined(UndefinedReason::too_few_samples);
  const double mean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
  double ss_res = 0.0, ss_tot = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double r = y[i] - yhat[i];
    const double t = y[i] - mean;
    ss_res += r * r;
    ss_tot += t * t;
  }
  if (ss_tot == 0.0) return MetricValue::undefined(UndefinedReason::zero_variance);
  return MetricValue::of(1.0 - ss_res / ss_tot);
}

inline MetricValue pearson(std::span<const double> y, std::span<const double> yhat) {
  if (y.size() != yhat.size()) throw ShapeMismatch("pearson: size mismatch");
  if (y.size() < 2) return MetricValue::undefined(UndefinedReason::too_few_samples);
  const double n = static_cast<double>(y.size());
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  const double mh = std::accumulate(yhat.begin(), yhat.end(), 0.0) / n;
  double sy = 0.0, sh = 0.0, cov = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double a = y[i] - my;
    const double b = yhat[i] - mh;
    sy += a * a;
    sh += b * b;
    cov += a * b;
  }
  if (sy == 0.0 || sh == 0.0) return MetricValue::undefined(UndefinedReason::zero_variance);
  return MetricValue::of(cov / std::sqrt(sy * sh));
}

// ---------------------------------------------------------------------------
// Per-task results and aggregation.

struct ClassTaskMetrics {
  std::size_t task = 0;
  std::size_t n_evaluated = 0;
  MetricValue auc_roc;
  MetricValue auc_pr;
  MetricValue f1;
  MetricValue kappa;
};

struct RegrTaskMetrics {
  std::size_t task = 0;
  std::size_t n_evaluated = 0;
  MetricValue rmse;
  MetricValue r2;
  MetricValue pearson;
};

struct Aggregate {
  std::optional<double> mean;
  std::size_t n_defined = 0;
  std::size_t n_tasks = 0;
};

template <typename Task, typename Get>
Aggregate aggregate_metric(const std::vector<Task>& tasks, Get&& get) {
  Aggregate a;
  a.n_tasks = tasks.size();
  double sum = 0.0;
  for (const Task& t : tasks) {
    const MetricValue& v = get(t);
    if (v.defined()) {
      sum += *v.value;
      a.n_defined += 1;
    }
  }
  if (a.n_defined > 0) a.mean = sum / static_cast<double>(a.n_defined);
  return a;
}

struct MetricReport {
  std::vector<ClassTaskMetrics> class_tasks;
  std::vector<RegrTaskMetrics> regr_tasks;

  Aggregate agg_auc_roc() const {
    return aggregate_metric(class_tasks, [](const auto& t) -> const MetricValue& { return t.auc_roc; });
  }
  Aggregate agg_auc_pr() const {
    return aggregate_metric(class_tasks, [](const auto& t) -> const MetricValue& { return t.auc_pr; });
  }
  Aggregate agg_f1() const {
    return aggregate_metric(class_tasks, [](const auto& t) -> const MetricValue& { return t.f1; });
  }
  Aggregate agg_kappa() const {
    return aggregate_metric(class_tasks, [](const auto& t) -> const MetricValue& { return t.kappa; });
  }
  Aggregate agg_rmse() const {
    return aggregate_metric(regr_tasks, [](const auto& t) -> const MetricValue& { return t.rmse; });
  }
  Aggregate agg_r2() const {
    return aggregate_metric(regr_tasks, [](const auto& t) -> const MetricValue& { return t.r2; });
  }
  Aggregate agg_pearson() const {
    return aggregate_metric(regr_tasks, [](const auto& t) -> const MetricValue& { return t.pearson; });
  }
};

// Computes the four classification metrics for one task, applying the
// evaluation filter: the task needs at least min_samples observed labels and
// both classes present, otherwise every metric is UNDEFINED.
inline ClassTaskMetrics evaluate_class_task(std::size_t task,
                                            std::span<const double> probs,
                                            std::span<const double> labels,
                                            std::size_t min_samples) {
  ClassTaskMetrics m;
  m.task = task;
  m.n_evaluated = labels.size();
  bool has_pos = false, has_neg = false;
  for (double l : labels) (l > 0.0 ? has_pos : has_neg) = true;
  if (labels.size() < min_samples) {
    const auto u = MetricValue::undefined(UndefinedReason::too_few_samples);
    m.auc_roc = m.auc_pr = m.f1 = m.kappa = u;
    return m;
  }
  if (!has_pos || !has_neg) {
    const auto u = MetricValue::undefined(UndefinedReason::single_class);
    m.auc_roc = m.auc_pr = m.f1 = m.kappa = u;
    return m;
  }
  m.auc_roc = auc_roc(probs, labels);
  m.auc_pr = auc_pr(probs, labels);
  m.f1 = f1_at_half(probs, labels);
  m.kappa = cohen_kappa_at_half(probs, labels);
  return m;
}

inline RegrTaskMetrics evaluate_regr_task(std::size_t task, std::span<const double> y,
                                          std::span<const double> yhat) {
  RegrTaskMetrics m;
  m.task = task;
  m.n_evaluated = y.size();
  m.rmse = rmse(y, yhat);
  m.r2 = r_squared(y, yhat);
  m.pearson = pearson(y, yhat);
  return m;
}

// ---------------------------------------------------------------------------
// Text rendering: one line per task per metric, then an aggregate block.

namespace detail {

inline std::string format_metric(const MetricValue& v) {
  if (!v.defined()) return std::string("UNDEFINED(") + to_string(v.reason) + ")";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", *v.value);
  return buf;
}

}  // namespace detail

inline std::string format_metric_report(const MetricReport& report) {
  std::string out;
  auto line = [&out](const std::string& s) { out += s + "\n"; };
  for (const ClassTaskMetrics& t : report.class_tasks) {
    const std::string p = "class " + std::to_string(t.task) + " ";
    line(p + "n " + std::to_string(t.n_evaluated));
    line(p + "auc_roc " + detail::format_metric(t.auc_roc));
    line(p + "auc_pr " + detail::format_metric(t.auc_pr));
    line(p + "f1 " + detail::format_metric(t.f1));
    line(p + "kappa " + detail::format_metric(t.kappa));
  }
  for (const RegrTaskMetrics& t : report.regr_tasks) {
    const std::string p = "regr " + std::to_string(t.task) + " ";
    line(p + "n " + std::to_string(t.n_evaluated));
    line(p + "rmse " + detail::format_metric(t.rmse));
    line(p + "r2 " + detail::format_metric(t.r2));
    line(p + "pearson " + detail::format_metric(t.pearson));
  }
  auto agg_line = [&](const std::string& head, const std::string& name, const Aggregate& a) {
    std::string s = "aggregate " + head + " " + name + " ";
    if (a.mean) {
      char buf[40];
      std::snprintf(buf, sizeof(buf), "%.9g", *a.mean);
      s += buf;
    } else {
      s += "UNDEFINED(no_defined_tasks)";
    }
    s += " defined " + std::to_string(a.n_defined) + " of " + std::to_string(a.n_tasks);
    line(s);
  };
  if (!report.class_tasks.empty()) {
    agg_line("class", "auc_roc", report.agg_auc_roc());
    agg_line("class", "auc_pr", report.agg_auc_pr());
    agg_line("class", "f1", report.agg_f1());
    agg_line("class", "kappa", report.agg_kappa());
  }
  if (!report.regr_tasks.empty()) {
    agg_line("regr", "rmse", report.agg_rmse());
    agg_line("regr", "r2", report.agg_r2());
    agg_line("regr", "pearson", report.agg_pearson());
  }
  return out;
}

}  // namespace smt

#endif  // SMT_METRICS_HPP
