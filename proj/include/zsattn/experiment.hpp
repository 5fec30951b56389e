#ifndef ZSATTN_EXPERIMENT_HPP
#define ZSATTN_EXPERIMENT_HPP

#include <array>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "dataset.hpp"
#include "metrics.hpp"
#include "splitter.hpp"
#include "trainer.hpp"

namespace zsattn {

enum class Mode { ZeroShot, UniformAggregation, ZeroRule, Supervised };

inline std::string mode_name(Mode m) {
  switch (m) {
    case Mode::ZeroShot: return "zero_shot";
    case Mode::UniformAggregation: return "uniform_aggregation";
    case Mode::ZeroRule: return "zero_rule";
    case Mode::Supervised: return "supervised";
  }
  return "?";
}

inline Mode mode_from_name(const std::string& name) {
  if (name == "zero_shot") return Mode::ZeroShot;
  if (name == "uniform_aggregation") return Mode::UniformAggregation;
  if (name == "zero_rule") return Mode::ZeroRule;
  if (name == "supervised") return Mode::Supervised;
  throw ValidationError("unknown mode '" + name + "'");
}

// Fold rotation: setting k tests on fold k.
//   setting 1: train fold2, val fold3, test fold1
//   setting 2: train fold3, val fold1, test fold2
//   setting 3: train fold1, val fold2, test fold3
struct SettingFolds {
  std::size_t train, val, test;  // 0-based fold indices
};

inline SettingFolds setting_folds(int setting) {
  switch (setting) {
    case 1: return {1, 2, 0};
    case 2: return {2, 0, 1};
    case 3: return {0, 1, 2};
    default: throw ValidationError("setting must be 1, 2 or 3");
  }
}

// Restriction of the full dataset to one fold: its samples, its classes.
inline Dataset fold_dataset(const Dataset& full, const Fold& fold) {
  std::map<std::string, std::size_t> by_id;
  for (std::size_t i = 0; i < full.samples.size(); ++i) by_id[full.samples[i].id] = i;

  Dataset out;
  out.meta = full.meta;
  for (const auto& cls : fold.classes) out.semantics.entries[cls] = full.semantics.at(cls);
  for (const auto& id : fold.sample_ids) {
    auto it = by_id.find(id);
    if (it == by_id.end())
      throw ValidationError("folds reference unknown sample id '" + id + "'");
    out.samples.push_back(full.samples[it->second]);
  }
  return out;
}

struct ExperimentConfig {
  int setting = 0;  // 1, 2, 3, or 0 = all
  Mode mode = Mode::ZeroShot;
  TrainConfig train;
  HyperParams hyper;
  Arch arch;
  std::size_t n_runs = 3;
};

struct SettingResult {
  int setting = 0;
  std::string test_fold;
  std::vector<RunScores> runs;
  double mean_micro_f1 = 0.0;
  double mean_macro_f1 = 0.0;
};

struct ExperimentReport {
  Mode mode = Mode::ZeroShot;
  std::vector<SettingResult> settings;
  bool has_mean = false;  // only when all three settings ran
  double mean_micro_f1 = 0.0;
  double mean_macro_f1 = 0.0;
};

// Seeded per-sample 60/20/20 split used by the supervised reference, which
// shares classes across train/val/test instead of keeping them disjoint.
struct SupervisedSplit {
  Dataset train, val, test;
};

inline SupervisedSplit supervised_split(const Dataset& fold_ds, std::uint64_t seed) {
  const std::size_t n = fold_ds.samples.size();
  std::size_t n_train = n * 60 / 100;
  std::size_t n_val = n * 20 / 100;
  if (n_train == 0 || n_val == 0 || n_train + n_val >= n)
    throw ValidationError("supervised split: fold has too few samples (" +
                          std::to_string(n) + ") for a 60/20/20 split");
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng(seed);
  rng.shuffle(order);

  SupervisedSplit out;
  out.train.meta = out.val.meta = out.test.meta = fold_ds.meta;
  out.train.semantics = out.val.semantics = out.test.semantics = fold_ds.semantics;
  for (std::size_t i = 0; i < n; ++i) {
    const Sample& s = fold_ds.samples[order[i]];
    if (i < n_train) out.train.samples.push_back(s);
    else if (i < n_train + n_val) out.val.samples.push_back(s);
    else out.test.samples.push_back(s);
  }
  return out;
}

inline std::vector<LabelSet> gold_labels(const Dataset& ds) {
  std::vector<LabelSet> out;
  out.reserve(ds.samples.size());
  for (const auto& s : ds.samples) out.push_back(s.labels);
  return out;
}

inline SettingResult run_setting(const Dataset& full, const FoldSplit& folds, int setting,
                                 const ExperimentConfig& cfg, std::ostream* progress = nullptr) {
  SettingFolds sf = setting_folds(setting);
  SettingResult res;
  res.setting = setting;
  res.test_fold = folds.fold(sf.test).name;

  Dataset test_ds = fold_dataset(full, folds.fold(sf.test));

  switch (cfg.mode) {
    case Mode::ZeroShot: {
      Dataset train_ds = fold_dataset(full, folds.fold(sf.train));
      Dataset val_ds = fold_dataset(full, folds.fold(sf.val));
      MultiRunReport mr = run_seeds(train_ds, val_ds, test_ds, cfg.train, cfg.hyper,
                                    cfg.n_runs, cfg.arch, AttentionKind::Softmax, progress);
      res.runs = mr.runs;
      res.mean_micro_f1 = mr.mean_micro_f1;
      res.mean_macro_f1 = mr.mean_macro_f1;
      break;
    }
    case Mode::UniformAggregation: {
      // Same pipeline with attention pinned to 1/T during training and the
      // fusion coefficient forced to 0 at prediction time, so scores reduce
      // to the unweighted segment sum.
      Dataset train_ds = fold_dataset(full, folds.fold(sf.train));
      Dataset val_ds = fold_dataset(full, folds.fold(sf.val));
      HyperParams h = cfg.hyper;
      h.gamma = 0.0;
      MultiRunReport mr = run_seeds(train_ds, val_ds, test_ds, cfg.train, h, cfg.n_runs,
                                    cfg.arch, AttentionKind::Uniform, progress);
      res.runs = mr.runs;
      res.mean_micro_f1 = mr.mean_micro_f1;
      res.mean_macro_f1 = mr.mean_macro_f1;
      break;
    }
    case Mode::ZeroRule: {
      std::vector<LabelSet> golds = gold_labels(test_ds);
      EvalReport rep = zero_rule(golds, golds, test_ds.semantics.labels());
      res.runs.push_back({0, rep.micro_f1, rep.macro_f1});
      res.mean_micro_f1 = rep.micro_f1;
      res.mean_macro_f1 = rep.macro_f1;
      break;
    }
    case Mode::Supervised: {
      SupervisedSplit split = supervised_split(test_ds, cfg.train.seed);
      MultiRunReport mr = run_seeds(split.train, split.val, split.test, cfg.train,
                                    cfg.hyper, cfg.n_runs, cfg.arch,
                                    AttentionKind::Softmax, progress);
      res.runs = mr.runs;
      res.mean_micro_f1 = mr.mean_micro_f1;
      res.mean_macro_f1 = mr.mean_macro_f1;
      break;
    }
  }
  return res;
}

inline ExperimentReport run_experiment(const Dataset& full, const FoldSplit& folds,
                                       const ExperimentConfig& cfg,
                                       std::ostream* progress = nullptr) {
  ExperimentReport rep;
  rep.mode = cfg.mode;
  std::vector<int> settings =
      cfg.setting == 0 ? std::vector<int>{1, 2, 3} : std::vector<int>{cfg.setting};
  for (int s : settings)
    rep.settings.push_back(run_setting(full, folds, s, cfg, progress));

  if (settings.size() == 3) {
    rep.has_mean = true;
    for (const auto& s : rep.settings) {
      rep.mean_micro_f1 += s.mean_micro_f1;
      rep.mean_macro_f1 += s.mean_macro_f1;
    }
    rep.mean_micro_f1 /= 3.0;
    rep.mean_macro_f1 /= 3.0;
  }
  return rep;
}

// Rows fold1, fold2, fold3, mean — the layout the fold rotation reports use.
inline std::string experiment_csv(const ExperimentReport& rep) {
  std::ostringstream out;
  out.precision(17);
  out << "test_fold,micro_f1,macro_f1\n";
  for (const auto& s : rep.settings)
    out << s.test_fold << "," << s.mean_micro_f1 << "," << s.mean_macro_f1 << "\n";
  if (rep.has_mean)
    out << "mean," << rep.mean_micro_f1 << "," << rep.mean_macro_f1 << "\n";
  return out.str();
}

inline nlohmann::json experiment_to_json(const ExperimentReport& rep) {
  nlohmann::json settings = nlohmann::json::array();
  for (const auto& s : rep.settings) {
    nlohmann::json runs = nlohmann::json::array();
    for (const auto& r : s.runs)
      runs.push_back({{"seed", r.seed}, {"micro_f1", r.micro_f1}, {"macro_f1", r.macro_f1}});
    settings.push_back({{"setting", s.setting},
                        {"test_fold", s.test_fold},
                        {"runs", runs},
                        {"mean_micro_f1", s.mean_micro_f1},
                        {"mean_macro_f1", s.mean_macro_f1}});
  }
  nlohmann::json j = {{"mode", mode_name(rep.mode)}, {"settings", settings}};
  if (rep.has_mean) {
    j["mean_micro_f1"] = rep.mean_micro_f1;
    j["mean_macro_f1"] = rep.mean_macro_f1;
  }
  return j;
}

}  // namespace zsattn

#endif  // ZSATTN_EXPERIMENT_HPP
