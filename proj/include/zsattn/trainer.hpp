#ifndef ZSATTN_TRAINER_HPP
#define ZSATTN_TRAINER_HPP

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "dataset.hpp"
#include "loss.hpp"
#include "metrics.hpp"
#include "model.hpp"

namespace zsattn {

enum class SelectMetric { MicroF1, MacroF1 };

struct TrainConfig {
  std::size_t batch_size = 32;
  double learning_rate = 0.01;
  std::size_t epochs = 100;
  std::uint64_t seed = 1;
  double delta = 1.0;
  SelectMetric select_metric = SelectMetric::MicroF1;
  bool select_last_epoch = false;  // otherwise best validation epoch wins

  void validate() const {
    if (batch_size == 0) throw ValidationError("train config: batch_size must be positive");
    if (!(learning_rate > 0.0))
      throw ValidationError("train config: learning_rate must be positive");
    if (epochs == 0) throw ValidationError("train config: epochs must be positive");
    if (!(delta >= 0.0)) throw ValidationError("train config: delta must be >= 0");
  }
};

// Projection widths; the data dims come from the dataset itself.
struct Arch {
  std::size_t d_model = 128;
  std::size_t d_hidden = 512;
};

struct TrainReport {
  struct EpochRow {
    std::size_t epoch = 0;  // 1-based
    double train_loss = 0.0;
    double val_micro_f1 = 0.0;
    double val_macro_f1 = 0.0;
  };
  std::vector<EpochRow> per_epoch;
  std::size_t best_epoch = 0;
  std::string checkpoint_path;
};

struct TrainResult {
  ModelParams params;
  TrainReport report;
};

// Thresholded prediction over the dataset's own class set. Classes are
// projected once per call, not per sample.
inline EvalReport evaluate_model(const ModelParams& params, const Dataset& ds,
                                 const HyperParams& h) {
  std::vector<std::string> class_order = ds.semantics.labels();
  Mat v_classes = project_classes(params, ds.semantics, class_order);
  std::vector<LabelSet> golds, preds;
  golds.reserve(ds.samples.size());
  preds.reserve(ds.samples.size());
  for (const auto& s : ds.samples) {
    Mat v_x = project_audio(params, s.acoustic);
    ScoreMatrix sm = scores_from_projected(v_x, v_classes, class_order);
    golds.push_back(s.labels);
    preds.push_back(predict_set(sm, h));
  }
  return evaluate(golds, preds, class_order);
}

// Mini-batch SGD with seeded shuffling. One RNG stream drives both the
// parameter init and every epoch's shuffle, so a (data, config) pair fixes
// the whole run. Validation only picks the checkpoint; it never feeds back
// into gradients. The last partial batch is kept and averaged over its
// actual size.
inline TrainResult train(const Dataset& train_set, const Dataset& val_set,
                         const TrainConfig& cfg, const HyperParams& h,
                         const Arch& arch = {},
                         AttentionKind kind = AttentionKind::Softmax,
                         std::ostream* progress = nullptr) {
  cfg.validate();
  if (train_set.samples.empty()) throw ValidationError("train: empty training set");
  if (train_set.meta.f_a != val_set.meta.f_a || train_set.meta.f_s != val_set.meta.f_s ||
      train_set.meta.t != val_set.meta.t)
    throw ValidationError("dimension mismatch: train and validation sets disagree on dims");

  ModelDims dims{train_set.meta.f_a, train_set.meta.f_s, arch.d_hidden, arch.d_model,
                 train_set.meta.t};
  Rng rng(cfg.seed);
  ModelParams params = ModelParams::init(dims, rng);

  std::vector<std::string> class_order = train_set.semantics.labels();
  Mat class_sems = semantic_matrix(train_set.semantics, class_order);
  std::map<std::string, std::size_t> class_index;
  for (std::size_t c = 0; c < class_order.size(); ++c) class_index[class_order[c]] = c;

  std::vector<BatchItem> items(train_set.samples.size());
  for (std::size_t i = 0; i < train_set.samples.size(); ++i) {
    items[i].acoustic = &train_set.samples[i].acoustic;
    for (const auto& l : train_set.samples[i].labels) {
      auto it = class_index.find(l);
      if (it == class_index.end())
        throw ValidationError("train: sample '" + train_set.samples[i].id +
                              "' carries label '" + l + "' outside the training classes");
      items[i].positives.push_back(it->second);
    }
  }

  std::vector<std::size_t> order(items.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  TrainResult result;
  ModelParams best_params = params;
  double best_metric = -1.0;
  std::size_t best_epoch = 0;

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    rng.shuffle(order);
    double loss_sum = 0.0;
    std::size_t n_batches = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += cfg.batch_size) {
      std::size_t end = std::min(begin + cfg.batch_size, order.size());
      std::vector<BatchItem> batch;
      batch.reserve(end - begin);
      for (std::size_t i = begin; i < end; ++i) batch.push_back(items[order[i]]);
      BatchResult br = backward(params, class_sems, batch, cfg.delta, kind);
      params.axpy(-cfg.learning_rate, br.grads);
      loss_sum += br.loss;
      ++n_batches;
    }

    EvalReport val = evaluate_model(params, val_set, h);
    TrainReport::EpochRow row{epoch, loss_sum / static_cast<double>(n_batches),
                              val.micro_f1, val.macro_f1};
    result.report.per_epoch.push_back(row);
    if (progress)
      (*progress) << epoch << "," << row.train_loss << "," << row.val_micro_f1 << ","
                  << row.val_macro_f1 << "\n";

    double metric = cfg.select_metric == SelectMetric::MicroF1 ? val.micro_f1 : val.macro_f1;
    if (metric > best_metric) {  // strict: ties keep the earliest epoch
      best_metric = metric;
      best_epoch = epoch;
      best_params = params;
    }
  }

  if (cfg.select_last_epoch) {
    result.params = params;
    result.report.best_epoch = cfg.epochs;
  } else {
    result.params = best_params;
    result.report.best_epoch = best_epoch;
  }
  return result;
}

struct RunScores {
  std::uint64_t seed = 0;
  double micro_f1 = 0.0;
  double macro_f1 = 0.0;
};

struct MultiRunReport {
  std::vector<RunScores> runs;
  std::vector<EvalReport> test_reports;
  double mean_micro_f1 = 0.0;
  double mean_macro_f1 = 0.0;
};

// Repeats train+test with seeds cfg.seed, cfg.seed+1, ... and averages.
inline MultiRunReport run_seeds(const Dataset& train_set, const Dataset& val_set,
                                const Dataset& test_set, const TrainConfig& cfg,
                                const HyperParams& h, std::size_t n_runs,
                                const Arch& arch = {},
                                AttentionKind kind = AttentionKind::Softmax,
                                std::ostream* progress = nullptr) {
  if (n_runs == 0) throw ValidationError("run_seeds: n_runs must be >= 1");
  MultiRunReport rep;
  for (std::size_t r = 0; r < n_runs; ++r) {
    TrainConfig run_cfg = cfg;
    run_cfg.seed = cfg.seed + r;
    TrainResult tr = train(train_set, val_set, run_cfg, h, arch, kind, progress);
    EvalReport test = evaluate_model(tr.params, test_set, h);
    rep.runs.push_back({run_cfg.seed, test.micro_f1, test.macro_f1});
    rep.test_reports.push_back(std::move(test));
    rep.mean_micro_f1 += rep.runs.back().micro_f1;
    rep.mean_macro_f1 += rep.runs.back().macro_f1;
  }
  rep.mean_micro_f1 /= static_cast<double>(n_runs);
  rep.mean_macro_f1 /= static_cast<double>(n_runs);
  return rep;
}

}  // namespace zsattn

#endif  // ZSATTN_TRAINER_HPP
