#include <catch2/catch_amalgamated.hpp>

#include <sstream>

#include "zsattn/experiment.hpp"
#include "zsattn/trainer.hpp"

using namespace zsattn;
using Catch::Approx;

namespace {

SynthSpec tiny_spec() {
  SynthSpec spec;
  spec.n_classes = 9;
  spec.n_samples = 60;
  spec.t = 3;
  spec.f_a = 5;
  spec.f_s = 6;
  spec.labels_per_sample_max = 2;
  spec.noise_sigma = 0.1;
  spec.seed = 11;
  return spec;
}

TrainConfig tiny_cfg() {
  TrainConfig cfg;
  cfg.batch_size = 8;
  cfg.epochs = 4;
  cfg.seed = 3;
  return cfg;
}

Arch tiny_arch() { return {6, 8}; }

bool params_equal(const ModelParams& a, const ModelParams& b) {
  return a.w1 == b.w1 && a.b1 == b.b1 && a.v1 == b.v1 && a.c1 == b.c1 &&
         a.v2 == b.v2 && a.c2 == b.c2;
}

}  // namespace

TEST_CASE("training is bit-deterministic in (data, config)") {
  Dataset ds = generate_synthetic(tiny_spec());
  FoldSplit folds = split_folds(ds);
  Dataset train_ds = fold_dataset(ds, folds.fold(0));
  Dataset val_ds = fold_dataset(ds, folds.fold(1));

  HyperParams h;
  TrainResult a = train(train_ds, val_ds, tiny_cfg(), h, tiny_arch());
  TrainResult b = train(train_ds, val_ds, tiny_cfg(), h, tiny_arch());

  REQUIRE(params_equal(a.params, b.params));
  REQUIRE(a.report.best_epoch == b.report.best_epoch);
  REQUIRE(a.report.per_epoch.size() == b.report.per_epoch.size());
  for (std::size_t i = 0; i < a.report.per_epoch.size(); ++i) {
    REQUIRE(a.report.per_epoch[i].train_loss == b.report.per_epoch[i].train_loss);
    REQUIRE(a.report.per_epoch[i].val_micro_f1 == b.report.per_epoch[i].val_micro_f1);
    REQUIRE(a.report.per_epoch[i].val_macro_f1 == b.report.per_epoch[i].val_macro_f1);
  }
}

TEST_CASE("loss descends on a one-sample problem") {
  // one sample, one positive among three classes, small steps
  Dataset ds;
  ds.meta = {4, 3, 2};
  Rng rng(5);
  for (const char* l : {"c0", "c1", "c2"}) {
    Vec v(3);
    for (auto& x : v) x = rng.normal();
    ds.semantics.entries[l] = v;
  }
  Sample s;
  s.id = "only";
  s.labels = {"c0"};
  s.acoustic.values = Mat(4, 2);
  for (auto& x : s.acoustic.values.data()) x = rng.normal();
  ds.samples.push_back(s);

  TrainConfig cfg;
  cfg.batch_size = 1;
  cfg.learning_rate = 0.005;
  cfg.epochs = 5;
  cfg.seed = 1;
  TrainResult tr = train(ds, ds, cfg, HyperParams{}, Arch{4, 6});

  REQUIRE(tr.report.per_epoch.size() == 5);
  for (std::size_t i = 1; i < 5; ++i)
    REQUIRE(tr.report.per_epoch[i].train_loss <=
            tr.report.per_epoch[i - 1].train_loss + 1e-12);
}

TEST_CASE("config validation") {
  Dataset ds = generate_synthetic(tiny_spec());
  TrainConfig cfg = tiny_cfg();
  cfg.epochs = 0;
  REQUIRE_THROWS_AS(train(ds, ds, cfg, HyperParams{}, tiny_arch()), ValidationError);
  cfg = tiny_cfg();
  cfg.batch_size = 0;
  REQUIRE_THROWS_AS(train(ds, ds, cfg, HyperParams{}, tiny_arch()), ValidationError);
  cfg = tiny_cfg();
  cfg.learning_rate = 0.0;
  REQUIRE_THROWS_AS(train(ds, ds, cfg, HyperParams{}, tiny_arch()), ValidationError);

  Dataset empty = ds;
  empty.samples.clear();
  REQUIRE_THROWS_AS(train(empty, ds, tiny_cfg(), HyperParams{}, tiny_arch()),
                    ValidationError);
}

TEST_CASE("constantly-zero validation keeps the earliest epoch") {
  Dataset ds = generate_synthetic(tiny_spec());
  FoldSplit folds = split_folds(ds);
  Dataset train_ds = fold_dataset(ds, folds.fold(0));
  Dataset val_ds = fold_dataset(ds, folds.fold(1));

  HyperParams h;
  h.m_threshold = 1e9;  // nothing ever predicted, every epoch ties at zero
  TrainResult tr = train(train_ds, val_ds, tiny_cfg(), h, tiny_arch());
  REQUIRE(tr.report.best_epoch == 1);

  TrainConfig last = tiny_cfg();
  last.select_last_epoch = true;
  TrainResult tr2 = train(train_ds, val_ds, last, h, tiny_arch());
  REQUIRE(tr2.report.best_epoch == last.epochs);
}

TEST_CASE("returned params are the best-validation checkpoint") {
  Dataset ds = generate_synthetic(tiny_spec());
  FoldSplit folds = split_folds(ds);
  Dataset train_ds = fold_dataset(ds, folds.fold(0));
  Dataset val_ds = fold_dataset(ds, folds.fold(1));

  HyperParams h;
  TrainConfig cfg = tiny_cfg();
  cfg.epochs = 6;
  TrainResult tr = train(train_ds, val_ds, cfg, h, tiny_arch());

  double best = -1.0;
  std::size_t best_epoch = 0;
  for (const auto& row : tr.report.per_epoch)
    if (row.val_micro_f1 > best) {
      best = row.val_micro_f1;
      best_epoch = row.epoch;
    }
  REQUIRE(tr.report.best_epoch == best_epoch);
  EvalReport ev = evaluate_model(tr.params, val_ds, h);
  REQUIRE(ev.micro_f1 == best);
}

TEST_CASE("progress lines are CSV rows") {
  Dataset ds = generate_synthetic(tiny_spec());
  std::ostringstream progress;
  TrainConfig cfg = tiny_cfg();
  cfg.epochs = 2;
  train(ds, ds, cfg, HyperParams{}, tiny_arch(), AttentionKind::Softmax, &progress);
  std::istringstream lines(progress.str());
  std::string line;
  std::size_t n = 0;
  while (std::getline(lines, line)) {
    ++n;
    REQUIRE(std::count(line.begin(), line.end(), ',') == 3);
    REQUIRE(line.substr(0, line.find(',')) == std::to_string(n));
  }
  REQUIRE(n == 2);
}

TEST_CASE("run_seeds averages per-run test scores") {
  Dataset ds = generate_synthetic(tiny_spec());
  FoldSplit folds = split_folds(ds);
  Dataset train_ds = fold_dataset(ds, folds.fold(0));
  Dataset val_ds = fold_dataset(ds, folds.fold(1));
  Dataset test_ds = fold_dataset(ds, folds.fold(2));

  HyperParams h;
  TrainConfig cfg = tiny_cfg();
  cfg.epochs = 2;

  MultiRunReport one = run_seeds(train_ds, val_ds, test_ds, cfg, h, 1, tiny_arch());
  REQUIRE(one.runs.size() == 1);
  REQUIRE(one.mean_micro_f1 == one.runs[0].micro_f1);
  REQUIRE(one.mean_macro_f1 == one.runs[0].macro_f1);

  MultiRunReport three = run_seeds(train_ds, val_ds, test_ds, cfg, h, 3, tiny_arch());
  REQUIRE(three.runs.size() == 3);
  REQUIRE(three.test_reports.size() == 3);
  for (std::size_t r = 0; r < 3; ++r) REQUIRE(three.runs[r].seed == cfg.seed + r);
  REQUIRE(three.runs[0].micro_f1 == one.runs[0].micro_f1);  // same seed, same run

  double micro = 0.0, macro = 0.0;
  for (const auto& r : three.runs) {
    micro += r.micro_f1;
    macro += r.macro_f1;
  }
  REQUIRE(three.mean_micro_f1 == Approx(micro / 3.0).epsilon(1e-15));
  REQUIRE(three.mean_macro_f1 == Approx(macro / 3.0).epsilon(1e-15));

  REQUIRE_THROWS_AS(run_seeds(train_ds, val_ds, test_ds, cfg, h, 0, tiny_arch()),
                    ValidationError);
}

TEST_CASE("cached evaluation equals the per-sample scoring route") {
  Dataset ds = generate_synthetic(tiny_spec());
  Rng rng(99);
  ModelDims dims{ds.meta.f_a, ds.meta.f_s, 8, 6, ds.meta.t};
  ModelParams params = ModelParams::init(dims, rng);

  HyperParams h;
  h.m_threshold = 0.0;  // make predictions non-trivial
  EvalReport fast = evaluate_model(params, ds, h);

  std::vector<std::string> order = ds.semantics.labels();
  std::vector<LabelSet> golds, preds;
  for (const auto& s : ds.samples) {
    golds.push_back(s.labels);
    preds.push_back(predict_set(score_all(params, ds.semantics, s.acoustic, order), h));
  }
  EvalReport slow = evaluate(golds, preds, order);
  REQUIRE(fast.micro_f1 == slow.micro_f1);
  REQUIRE(fast.macro_f1 == slow.macro_f1);
}
