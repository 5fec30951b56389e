#ifndef ZSATTN_CLI_HPP
#define ZSATTN_CLI_HPP

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "zsattn.hpp"

namespace zsattn {
namespace cli {

namespace fs = std::filesystem;

struct CommonOpts {
  std::optional<std::string> config;
  std::optional<std::string> dataset;
  std::optional<std::string> folds;
  std::optional<std::string> out;
  std::optional<std::string> mode;
  std::optional<std::string> setting;
  std::optional<std::uint64_t> seed;
  std::optional<double> gamma;
  std::optional<double> threshold;
  std::optional<std::size_t> runs;
  std::optional<std::size_t> epochs;
  std::optional<double> lr;
  std::optional<std::size_t> batch_size;
  std::optional<double> delta;
  std::optional<std::size_t> d_model;
  std::optional<std::size_t> d_hidden;
  std::optional<std::string> select_metric;
  bool select_last = false;
};

inline void add_common_flags(CLI::App* cmd, CommonOpts& o, bool with_experiment) {
  cmd->add_option("--config", o.config, "JSON config file; flags override its values");
  cmd->add_option("--dataset", o.dataset, "dataset directory");
  cmd->add_option("--out", o.out, "output path");
  cmd->add_option("--seed", o.seed, "base RNG seed");
  cmd->add_option("--gamma", o.gamma, "fusion coefficient in [0,1]");
  cmd->add_option("--threshold", o.threshold, "decision threshold M");
  cmd->add_option("--epochs", o.epochs, "training epochs");
  cmd->add_option("--lr", o.lr, "SGD learning rate");
  cmd->add_option("--batch-size", o.batch_size, "mini-batch size");
  cmd->add_option("--delta", o.delta, "hinge margin");
  cmd->add_option("--d-model", o.d_model, "shared projection width");
  cmd->add_option("--d-hidden", o.d_hidden, "semantic hidden width");
  cmd->add_option("--select-metric", o.select_metric, "micro_f1 or macro_f1");
  cmd->add_flag("--select-last", o.select_last, "keep the last epoch instead of best validation");
  if (with_experiment) {
    cmd->add_option("--folds", o.folds, "folds.json path");
    cmd->add_option("--mode", o.mode,
                    "zero_shot | uniform_aggregation | zero_rule | supervised");
    cmd->add_option("--setting", o.setting, "1 | 2 | 3 | all");
    cmd->add_option("--runs", o.runs, "number of seeded runs to average");
  }
}

// Defaults <- config file <- flags, later wins.
struct ResolvedConfig {
  ExperimentConfig exp;
  std::string dataset;
  std::string folds;
  std::string out;
};

inline ResolvedConfig resolve(const CommonOpts& o) {
  ResolvedConfig rc;
  if (o.config) {
    nlohmann::json j = detail::parse_file(*o.config);
    try {
      if (j.contains("dataset")) rc.dataset = j["dataset"].get<std::string>();
      if (j.contains("folds")) rc.folds = j["folds"].get<std::string>();
      if (j.contains("out")) rc.out = j["out"].get<std::string>();
      if (j.contains("mode")) rc.exp.mode = mode_from_name(j["mode"].get<std::string>());
      if (j.contains("setting")) {
        if (j["setting"].is_string()) {
          std::string s = j["setting"].get<std::string>();
          if (s == "all") rc.exp.setting = 0;
          else if (s == "1" || s == "2" || s == "3") rc.exp.setting = s[0] - '0';
          else throw ValidationError("setting must be 1, 2, 3 or all");
        } else {
          rc.exp.setting = j["setting"].get<int>();
        }
      }
      if (j.contains("runs")) rc.exp.n_runs = j["runs"].get<std::size_t>();
      if (j.contains("train")) {
        const auto& t = j["train"];
        if (t.contains("batch_size")) rc.exp.train.batch_size = t["batch_size"].get<std::size_t>();
        if (t.contains("learning_rate")) rc.exp.train.learning_rate = t["learning_rate"].get<double>();
        if (t.contains("epochs")) rc.exp.train.epochs = t["epochs"].get<std::size_t>();
        if (t.contains("seed")) rc.exp.train.seed = t["seed"].get<std::uint64_t>();
        if (t.contains("delta")) rc.exp.train.delta = t["delta"].get<double>();
        if (t.contains("select_metric"))
          rc.exp.train.select_metric = t["select_metric"] == "macro_f1" ? SelectMetric::MacroF1
                                                                        : SelectMetric::MicroF1;
        if (t.contains("select_last_epoch"))
          rc.exp.train.select_last_epoch = t["select_last_epoch"].get<bool>();
      }
      if (j.contains("hyper")) {
        const auto& h = j["hyper"];
        if (h.contains("gamma")) rc.exp.hyper.gamma = h["gamma"].get<double>();
        if (h.contains("threshold")) rc.exp.hyper.m_threshold = h["threshold"].get<double>();
        if (h.contains("delta")) rc.exp.hyper.delta = h["delta"].get<double>();
      }
      if (j.contains("model")) {
        const auto& m = j["model"];
        if (m.contains("d_model")) rc.exp.arch.d_model = m["d_model"].get<std::size_t>();
        if (m.contains("d_hidden")) rc.exp.arch.d_hidden = m["d_hidden"].get<std::size_t>();
      }
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError("parse error in " + *o.config + ": " + e.what());
    }
  }

  if (o.dataset) rc.dataset = *o.dataset;
  if (o.folds) rc.folds = *o.folds;
  if (o.out) rc.out = *o.out;
  if (o.mode) rc.exp.mode = mode_from_name(*o.mode);
  if (o.setting) {
    if (*o.setting == "all") rc.exp.setting = 0;
    else if (*o.setting == "1" || *o.setting == "2" || *o.setting == "3")
      rc.exp.setting = (*o.setting)[0] - '0';
    else throw ValidationError("setting must be 1, 2, 3 or all");
  }
  if (o.runs) rc.exp.n_runs = *o.runs;
  if (o.seed) rc.exp.train.seed = *o.seed;
  if (o.gamma) rc.exp.hyper.gamma = *o.gamma;
  if (o.threshold) rc.exp.hyper.m_threshold = *o.threshold;
  if (o.epochs) rc.exp.train.epochs = *o.epochs;
  if (o.lr) rc.exp.train.learning_rate = *o.lr;
  if (o.batch_size) rc.exp.train.batch_size = *o.batch_size;
  if (o.delta) {
    rc.exp.train.delta = *o.delta;
    rc.exp.hyper.delta = *o.delta;
  }
  if (o.d_model) rc.exp.arch.d_model = *o.d_model;
  if (o.d_hidden) rc.exp.arch.d_hidden = *o.d_hidden;
  if (o.select_metric) {
    if (*o.select_metric == "micro_f1") rc.exp.train.select_metric = SelectMetric::MicroF1;
    else if (*o.select_metric == "macro_f1") rc.exp.train.select_metric = SelectMetric::MacroF1;
    else throw ValidationError("select_metric must be micro_f1 or macro_f1");
  }
  if (o.select_last) rc.exp.train.select_last_epoch = true;

  if (!(rc.exp.hyper.gamma >= 0.0 && rc.exp.hyper.gamma <= 1.0))
    throw ValidationError("gamma must lie in [0,1]");
  return rc;
}

struct SynthOpts {
  SynthSpec spec;
  std::string out;
  bool overwrite = false;
};

inline int cmd_synth(const SynthOpts& o, std::ostream& log) {
  Dataset ds = generate_synthetic(o.spec);
  save_dataset(ds, o.out, o.overwrite);
  log << "wrote " << ds.samples.size() << " samples, " << ds.semantics.entries.size()
      << " classes to " << o.out << "\n";
  return 0;
}

inline int cmd_split(const std::string& dataset, const std::string& out, std::ostream& log) {
  if (dataset.empty()) throw ValidationError("split: --dataset is required");
  if (out.empty()) throw ValidationError("split: --out is required");
  Dataset ds = load_dataset(dataset);
  FoldSplit split = split_folds(ds);
  fs::path out_path(out);
  if (out_path.has_parent_path()) fs::create_directories(out_path.parent_path());
  save_folds(split, out_path);
  log << "set,classes,samples\n";
  for (const auto& f : split.folds)
    log << f.name << "," << f.classes.size() << "," << f.sample_ids.size() << "\n";
  log << "dropped,," << split.dropped.size() << "\n";
  return 0;
}

// Training data for one setting under one mode. The supervised reference
// resplits the test fold by sample; the zero-shot modes use the fold rotation.
struct SettingData {
  Dataset train, val, test;
};

inline SettingData setting_data(const Dataset& full, const FoldSplit& folds, int setting,
                                Mode mode, std::uint64_t seed) {
  SettingFolds sf = setting_folds(setting);
  SettingData data;
  if (mode == Mode::Supervised) {
    Dataset test_ds = fold_dataset(full, folds.fold(sf.test));
    SupervisedSplit split = supervised_split(test_ds, seed);
    data.train = std::move(split.train);
    data.val = std::move(split.val);
    data.test = std::move(split.test);
  } else {
    data.train = fold_dataset(full, folds.fold(sf.train));
    data.val = fold_dataset(full, folds.fold(sf.val));
    data.test = fold_dataset(full, folds.fold(sf.test));
  }
  return data;
}

inline nlohmann::json train_report_to_json(const TrainReport& rep) {
  nlohmann::json per_epoch = nlohmann::json::array();
  for (const auto& row : rep.per_epoch)
    per_epoch.push_back({{"epoch", row.epoch},
                         {"train_loss", row.train_loss},
                         {"val_micro_f1", row.val_micro_f1},
                         {"val_macro_f1", row.val_macro_f1}});
  return {{"per_epoch", per_epoch},
          {"best_epoch", rep.best_epoch},
          {"checkpoint_path", rep.checkpoint_path}};
}

inline int cmd_train(const ResolvedConfig& rc, std::ostream& log) {
  if (rc.dataset.empty()) throw ValidationError("train: --dataset is required");
  if (rc.folds.empty()) throw ValidationError("train: --folds is required");
  if (rc.out.empty()) throw ValidationError("train: --out is required");
  if (rc.exp.setting == 0)
    throw ValidationError("train: pick one setting (1, 2 or 3)");
  if (rc.exp.mode == Mode::ZeroRule)
    throw ValidationError("train: zero_rule has nothing to train");

  Dataset full = load_dataset(rc.dataset);
  FoldSplit folds = load_folds(rc.folds);
  SettingData data = setting_data(full, folds, rc.exp.setting, rc.exp.mode, rc.exp.train.seed);

  HyperParams h = rc.exp.hyper;
  AttentionKind kind = AttentionKind::Softmax;
  if (rc.exp.mode == Mode::UniformAggregation) {
    h.gamma = 0.0;
    kind = AttentionKind::Uniform;
  }

  TrainResult tr = train(data.train, data.val, rc.exp.train, h, rc.exp.arch, kind, &log);

  fs::create_directories(rc.out);
  fs::path model_path = fs::path(rc.out) / "model.json";
  save_model({tr.params, h, rc.exp.train.seed, "glorot_uniform"}, model_path);
  tr.report.checkpoint_path = model_path.string();
  detail::write_text(fs::path(rc.out) / "train_report.json",
                     train_report_to_json(tr.report).dump(2) + "\n");

  EvalReport test_rep = evaluate_model(tr.params, data.test, h);
  detail::write_text(fs::path(rc.out) / "eval_report.json",
                     eval_report_to_json(test_rep).dump(2) + "\n");

  log << "best_epoch," << tr.report.best_epoch << "\n";
  log << "test_micro_f1," << test_rep.micro_f1 << "\n";
  log << "test_macro_f1," << test_rep.macro_f1 << "\n";
  return 0;
}

inline int cmd_run(const ResolvedConfig& rc, std::ostream& log) {
  if (rc.dataset.empty()) throw ValidationError("run: --dataset is required");
  if (rc.folds.empty()) throw ValidationError("run: --folds is required");
  Dataset full = load_dataset(rc.dataset);
  FoldSplit folds = load_folds(rc.folds);

  ExperimentReport rep = run_experiment(full, folds, rc.exp);
  log << "mode," << mode_name(rep.mode) << "\n" << experiment_csv(rep);
  if (!rc.out.empty()) {
    fs::create_directories(rc.out);
    detail::write_text(fs::path(rc.out) / "results.json",
                       experiment_to_json(rep).dump(2) + "\n");
  }
  return 0;
}

struct AttnDumpOpts {
  std::string model, dataset, sample_id, label, out;
};

inline int cmd_attn_dump(const AttnDumpOpts& o, std::ostream& log) {
  Checkpoint ck = load_model(o.model);
  Dataset ds = load_dataset(o.dataset);
  const Sample* sample = nullptr;
  for (const auto& s : ds.samples)
    if (s.id == o.sample_id) {
      sample = &s;
      break;
    }
  if (!sample) throw ValidationError("unknown sample id '" + o.sample_id + "'");

  ScoreMatrix sm = score_all(ck.params, ds.semantics, sample->acoustic, ds.semantics.labels());
  Vec alpha = attention_dump(sm, o.label);
  fs::path out_path(o.out);
  if (out_path.has_parent_path()) fs::create_directories(out_path.parent_path());
  write_attention_csv(out_path, o.sample_id, o.label, alpha);
  log << "wrote " << alpha.size() << " attention weights to " << o.out << "\n";
  return 0;
}

inline int run(int argc, const char* const* argv, std::ostream& log = std::cout) {
  CLI::App app{"Multi-label zero-shot audio classification with temporal attention"};
  app.require_subcommand(1);

  SynthOpts synth;
  auto* synth_cmd = app.add_subcommand("synth", "generate a planted-structure synthetic dataset");
  synth_cmd->add_option("--classes", synth.spec.n_classes, "number of classes");
  synth_cmd->add_option("--samples", synth.spec.n_samples, "number of samples");
  synth_cmd->add_option("--segments", synth.spec.t, "segments per sample (T)");
  synth_cmd->add_option("--f-a", synth.spec.f_a, "acoustic feature dim");
  synth_cmd->add_option("--f-s", synth.spec.f_s, "semantic feature dim");
  synth_cmd->add_option("--max-labels", synth.spec.labels_per_sample_max, "max labels per sample");
  synth_cmd->add_option("--sigma", synth.spec.noise_sigma, "acoustic noise stddev");
  synth_cmd->add_option("--seed", synth.spec.seed, "generator seed");
  synth_cmd->add_option("--out", synth.out, "output dataset directory")->required();
  synth_cmd->add_flag("--overwrite", synth.overwrite, "replace existing dataset files");

  CommonOpts split_opts;
  auto* split_cmd = app.add_subcommand("split", "greedy disjoint-class fold split");
  split_cmd->add_option("--dataset", split_opts.dataset, "dataset directory")->required();
  split_cmd->add_option("--out", split_opts.out, "folds.json output path")->required();

  CommonOpts train_opts;
  auto* train_cmd = app.add_subcommand("train", "train one model for one setting");
  add_common_flags(train_cmd, train_opts, true);

  CommonOpts run_opts;
  auto* run_cmd = app.add_subcommand("run", "run the evaluation protocol");
  add_common_flags(run_cmd, run_opts, true);

  AttnDumpOpts attn;
  auto* attn_cmd = app.add_subcommand("attn-dump", "export attention weights as CSV");
  attn_cmd->add_option("--model", attn.model, "model.json path")->required();
  attn_cmd->add_option("--dataset", attn.dataset, "dataset directory")->required();
  attn_cmd->add_option("--sample", attn.sample_id, "sample id")->required();
  attn_cmd->add_option("--label", attn.label, "class label")->required();
  attn_cmd->add_option("--out", attn.out, "CSV output path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (synth_cmd->parsed()) return cmd_synth(synth, log);
    if (split_cmd->parsed()) return cmd_split(*split_opts.dataset, *split_opts.out, log);
    if (train_cmd->parsed()) return cmd_train(resolve(train_opts), log);
    if (run_cmd->parsed()) return cmd_run(resolve(run_opts), log);
    if (attn_cmd->parsed()) return cmd_attn_dump(attn, log);
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

}  // namespace cli
}  // namespace zsattn

#endif  // ZSATTN_CLI_HPP
