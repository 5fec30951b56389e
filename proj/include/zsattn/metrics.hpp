#ifndef ZSATTN_METRICS_HPP
#define ZSATTN_METRICS_HPP

#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "core.hpp"

namespace zsattn {

using LabelSet = std::set<std::string>;

struct ClassStats {
  long tp = 0;
  long fp = 0;
  long fn = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct EvalReport {
  double micro_f1 = 0.0;
  double macro_f1 = 0.0;
  std::map<std::string, ClassStats> per_class;
  std::size_t n_samples = 0;
};

namespace detail {

inline void check_eval_inputs(const std::vector<LabelSet>& golds,
                              const std::vector<LabelSet>& preds,
                              const std::vector<std::string>& classes) {
  if (golds.size() != preds.size())
    throw ValidationError("metrics: golds and preds differ in length (" +
                          std::to_string(golds.size()) + " vs " +
                          std::to_string(preds.size()) + ")");
  std::set<std::string> known(classes.begin(), classes.end());
  auto check = [&](const std::vector<LabelSet>& sets, const char* what) {
    for (const auto& s : sets)
      for (const auto& l : s)
        if (!known.count(l))
          throw ValidationError(std::string("metrics: ") + what + " label '" + l +
                                "' not in class list");
  };
  check(golds, "gold");
  check(preds, "predicted");
}

}  // namespace detail

// Per-class tp/fp/fn plus the pooled and averaged F1s. Per-class F1 uses
// 2tp/(2tp+fp+fn), 0 when the denominator is 0; the macro average runs over
// every class in `classes`, zero-support classes included.
inline EvalReport evaluate(const std::vector<LabelSet>& golds,
                           const std::vector<LabelSet>& preds,
                           const std::vector<std::string>& classes) {
  detail::check_eval_inputs(golds, preds, classes);
  EvalReport rep;
  rep.n_samples = golds.size();

  long tp_all = 0, fp_all = 0, fn_all = 0;
  double f1_sum = 0.0;
  for (const auto& cls : classes) {
    ClassStats st;
    for (std::size_t i = 0; i < golds.size(); ++i) {
      bool in_gold = golds[i].count(cls) > 0;
      bool in_pred = preds[i].count(cls) > 0;
      if (in_gold && in_pred) ++st.tp;
      else if (in_pred) ++st.fp;
      else if (in_gold) ++st.fn;
    }
    st.precision = (st.tp + st.fp) ? static_cast<double>(st.tp) / (st.tp + st.fp) : 0.0;
    st.recall = (st.tp + st.fn) ? static_cast<double>(st.tp) / (st.tp + st.fn) : 0.0;
    long denom = 2 * st.tp + st.fp + st.fn;
    st.f1 = denom ? 2.0 * st.tp / static_cast<double>(denom) : 0.0;
    tp_all += st.tp;
    fp_all += st.fp;
    fn_all += st.fn;
    f1_sum += st.f1;
    rep.per_class.emplace(cls, st);
  }

  long denom = 2 * tp_all + fp_all + fn_all;
  rep.micro_f1 = denom ? 2.0 * tp_all / static_cast<double>(denom) : 0.0;
  rep.macro_f1 = classes.empty() ? 0.0 : f1_sum / static_cast<double>(classes.size());
  return rep;
}

inline double micro_f1(const std::vector<LabelSet>& golds,
                       const std::vector<LabelSet>& preds,
                       const std::vector<std::string>& classes) {
  return evaluate(golds, preds, classes).micro_f1;
}

inline double macro_f1(const std::vector<LabelSet>& golds,
                       const std::vector<LabelSet>& preds,
                       const std::vector<std::string>& classes) {
  return evaluate(golds, preds, classes).macro_f1;
}

// Always predicts the single most frequent class of `freq_labels` (ties break
// lexicographically). An intentionally weak reference point.
inline EvalReport zero_rule(const std::vector<LabelSet>& freq_labels,
                            const std::vector<LabelSet>& eval_golds,
                            const std::vector<std::string>& classes) {
  if (freq_labels.empty() || eval_golds.empty())
    throw ValidationError("zero rule: empty label statistics");
  std::map<std::string, long> freq;
  for (const auto& s : freq_labels)
    for (const auto& l : s) ++freq[l];
  if (freq.empty()) throw ValidationError("zero rule: no labels present");

  std::string modal;
  long best = -1;
  for (const auto& [label, count] : freq) {  // map order resolves ties lexicographically
    if (count > best) {
      best = count;
      modal = label;
    }
  }

  std::vector<LabelSet> preds(eval_golds.size(), LabelSet{modal});
  return evaluate(eval_golds, preds, classes);
}

inline nlohmann::json eval_report_to_json(const EvalReport& rep) {
  nlohmann::json per_class = nlohmann::json::object();
  for (const auto& [label, st] : rep.per_class)
    per_class[label] = {{"tp", st.tp},
                        {"fp", st.fp},
                        {"fn", st.fn},
                        {"precision", st.precision},
                        {"recall", st.recall},
                        {"f1", st.f1}};
  return {{"micro_f1", rep.micro_f1},
          {"macro_f1", rep.macro_f1},
          {"n_samples", rep.n_samples},
          {"per_class", per_class}};
}

}  // namespace zsattn

#endif  // ZSATTN_METRICS_HPP
