#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "test_util.hpp"
#include "zsattn/model.hpp"

using namespace zsattn;
using Catch::Approx;

namespace {

ModelParams random_params(const ModelDims& dims, std::uint64_t seed, double spread = 0.7) {
  Rng rng(seed);
  ModelParams p = ModelParams::zeros(dims);
  for (auto* m : {&p.w1, &p.v1, &p.v2})
    for (auto& x : m->data()) x = rng.uniform(-spread, spread);
  for (auto* v : {&p.b1, &p.c1, &p.c2})
    for (auto& x : *v) x = rng.uniform(-spread, spread);
  return p;
}

AcousticEmbedding random_acoustic(std::size_t f_a, std::size_t t, Rng& rng) {
  AcousticEmbedding a;
  a.values = Mat(f_a, t);
  for (auto& x : a.values.data()) x = rng.normal();
  return a;
}

}  // namespace

TEST_CASE("audio projection basics") {
  ModelDims dims{1, 1, 1, 1, 1};
  ModelParams zero = ModelParams::zeros(dims);
  AcousticEmbedding a;
  a.values = Mat(1, 1);
  a.values(0, 0) = 0.5;
  Mat out = project_audio(zero, a);
  REQUIRE(out(0, 0) == 0.0);  // tanh(0)

  ModelParams p = ModelParams::zeros(dims);
  p.w1(0, 0) = 1.0;
  Mat scalar = project_audio(p, a);
  REQUIRE(scalar(0, 0) == Approx(std::tanh(0.5)).epsilon(1e-15));
}

TEST_CASE("audio projection stays inside (-1,1) and checks dims") {
  ModelDims dims{4, 3, 5, 6, 2};
  ModelParams p = random_params(dims, 5);
  Rng rng(6);
  AcousticEmbedding a = random_acoustic(4, 2, rng);
  Mat out = project_audio(p, a);
  for (double v : out.data()) {
    REQUIRE(v > -1.0);
    REQUIRE(v < 1.0);
  }
  // extreme inputs saturate to the closed interval, still finite
  for (auto& x : a.values.data()) x *= 1e6;
  Mat saturated = project_audio(p, a);
  for (double v : saturated.data()) {
    REQUIRE(v >= -1.0);
    REQUIRE(v <= 1.0);
  }
  AcousticEmbedding bad = random_acoustic(3, 2, rng);
  REQUIRE_THROWS_AS(project_audio(p, bad), ValidationError);
}

TEST_CASE("semantic projection basics") {
  ModelDims dims{1, 1, 1, 1, 1};
  ModelParams zero = ModelParams::zeros(dims);
  REQUIRE(project_semantic(zero, {3.0})[0] == 0.0);

  ModelParams unit = ModelParams::zeros(dims);
  unit.v1(0, 0) = 1.0;
  unit.v2(0, 0) = 1.0;
  Vec out = project_semantic(unit, {1.0});
  REQUIRE(out[0] == Approx(std::tanh(std::tanh(1.0))).epsilon(1e-15));
  REQUIRE(out[0] == Approx(0.642015).margin(5e-7));

  REQUIRE_THROWS_AS(project_semantic(unit, Vec{1.0, 2.0}), ValidationError);
}

TEST_CASE("compatibility is the per-segment dot product") {
  Mat v_x(2, 2);
  v_x(0, 0) = 3.0;
  v_x(1, 0) = 4.0;
  v_x(0, 1) = -1.0;
  v_x(1, 1) = 2.5;

  REQUIRE(compatibility(v_x, {0.0, 0.0}) == Vec{0.0, 0.0});
  REQUIRE(compatibility(v_x, {1.0, 0.0}) == Vec{3.0, -1.0});  // basis row extraction
  REQUIRE(compatibility(v_x, {1.0, 2.0})[0] == 11.0);
  REQUIRE_THROWS_AS(compatibility(v_x, Vec{1.0}), ValidationError);
}

TEST_CASE("attention weights") {
  Vec uniform = attention_weights({2.0, 2.0, 2.0, 2.0});
  for (double a : uniform) REQUIRE(a == Approx(0.25).epsilon(1e-12));

  Vec w = attention_weights({0.0, std::log(3.0)});
  REQUIRE(w[0] == Approx(0.25).epsilon(1e-12));
  REQUIRE(w[1] == Approx(0.75).epsilon(1e-12));

  Vec extreme = attention_weights({1000.0, 0.0});
  REQUIRE(std::isfinite(extreme[0]));
  REQUIRE(extreme[0] == Approx(1.0).epsilon(1e-12));
  REQUIRE(extreme[1] == Approx(0.0).margin(1e-300));
}

TEST_CASE("attended score") {
  REQUIRE(attended_score({3.5, 3.5, 3.5}) == Approx(3.5).epsilon(1e-12));
  REQUIRE(attended_score({0.0, std::log(3.0)}) ==
          Approx(0.75 * std::log(3.0)).epsilon(1e-12));
  REQUIRE(attended_score({0.0, std::log(3.0)}) == Approx(0.8240).margin(5e-5));

  Rng rng(17);
  for (int i = 0; i < 200; ++i) {
    Vec s(1 + rng.index(8));
    for (auto& x : s) x = rng.normal() * 10.0;
    double y = attended_score(s);
    double lo = *std::min_element(s.begin(), s.end());
    double hi = *std::max_element(s.begin(), s.end());
    REQUIRE(y >= lo - 1e-9);
    REQUIRE(y <= hi + 1e-9);
  }
}

TEST_CASE("constant shift leaves attention alone and shifts the score") {
  Rng rng(21);
  for (int i = 0; i < 100; ++i) {
    Vec s(2 + rng.index(6));
    for (auto& x : s) x = rng.normal() * 3.0;
    double k = rng.uniform(-10.0, 10.0);
    Vec shifted = s;
    for (auto& x : shifted) x += k;
    Vec a0 = attention_weights(s), a1 = attention_weights(shifted);
    for (std::size_t t = 0; t < s.size(); ++t)
      REQUIRE(a1[t] == Approx(a0[t]).margin(1e-9));
    REQUIRE(attended_score(shifted) == Approx(attended_score(s) + k).margin(1e-9));
  }
}

TEST_CASE("uniform score") {
  REQUIRE(uniform_score({0.0, 0.0}) == 0.0);
  REQUIRE(uniform_score({1.0, 2.0, 3.0}) == 6.0);
  Vec s = {0.5, -2.0, 1.25};
  Vec twice = {1.0, -4.0, 2.5};
  REQUIRE(uniform_score(twice) == Approx(2.0 * uniform_score(s)).epsilon(1e-15));
}

TEST_CASE("fusion") {
  REQUIRE(fuse(0.4, 0.8, 0.0) == 0.8);
  REQUIRE(fuse(0.4, 0.8, 0.5) == Approx(0.6).epsilon(1e-15));
  REQUIRE(fuse(0.4, 0.8, 1.0) == 0.4);
  REQUIRE_THROWS_AS(fuse(0.0, 0.0, 1.5), ValidationError);
  REQUIRE_THROWS_AS(fuse(0.0, 0.0, -0.1), ValidationError);
}

TEST_CASE("score_all composes the per-class pipeline") {
  Rng rng(32);
  for (int round = 0; round < 20; ++round) {
    ModelDims dims{2 + rng.index(4), 2 + rng.index(4), 2 + rng.index(5),
                   1 + rng.index(4), 1 + rng.index(4)};
    ModelParams p = random_params(dims, 31 + round);
    SemanticTable sems;
    std::vector<std::string> order;
    std::size_t n_classes = 1 + rng.index(4);
    for (std::size_t c = 0; c < n_classes; ++c) {
      Vec v(dims.f_s);
      for (auto& x : v) x = rng.normal();
      order.push_back("k" + std::to_string(c));
      sems.entries[order.back()] = v;
    }
    std::reverse(order.begin(), order.end());
    AcousticEmbedding a = random_acoustic(dims.f_a, dims.t, rng);

    ScoreMatrix sm = score_all(p, sems, a, order);
    REQUIRE(sm.class_order == order);  // row order follows class_order

    Mat v_x = project_audio(p, a);
    for (std::size_t c = 0; c < order.size(); ++c) {
      Vec expected = compatibility(v_x, project_semantic(p, sems.at(order[c])));
      for (std::size_t t = 0; t < dims.t; ++t)
        REQUIRE(sm.s(c, t) == Approx(expected[t]).margin(1e-12));
    }
  }

  ModelDims dims{3, 4, 5, 2, 2};
  ModelParams p = random_params(dims, 31);
  SemanticTable sems;
  AcousticEmbedding a = random_acoustic(3, 2, rng);
  REQUIRE_THROWS_AS(score_all(p, sems, a, std::vector<std::string>{"missing"}),
                    ValidationError);
}

TEST_CASE("fusion extremes reduce prediction to one pooling path") {
  Rng rng(57);
  ScoreMatrix sm;
  sm.class_order = {"a", "b", "c", "d", "e"};
  sm.s = Mat(5, 4);
  for (auto& x : sm.s.data()) x = rng.normal() * 2.0;

  HyperParams h;
  h.m_threshold = 0.5;

  h.gamma = 0.0;
  std::set<std::string> by_sum;
  for (std::size_t c = 0; c < 5; ++c)
    if (uniform_score(score_row(sm, c)) > h.m_threshold) by_sum.insert(sm.class_order[c]);
  REQUIRE(predict_set(sm, h) == by_sum);

  h.gamma = 1.0;
  std::set<std::string> by_attention;
  for (std::size_t c = 0; c < 5; ++c)
    if (attended_score(score_row(sm, c)) > h.m_threshold)
      by_attention.insert(sm.class_order[c]);
  REQUIRE(predict_set(sm, h) == by_attention);
}

TEST_CASE("predict_set thresholds strictly") {
  // one segment makes the fused score equal to the raw score
  ScoreMatrix sm;
  sm.class_order = {"class0", "class1"};
  sm.s = Mat(2, 1);
  sm.s(0, 0) = 1.6;
  sm.s(1, 0) = 1.2;
  HyperParams h;  // gamma 0.5, threshold 1.51
  REQUIRE(predict_set(sm, h) == std::set<std::string>{"class0"});

  sm.s(0, 0) = 1.2;
  REQUIRE(predict_set(sm, h).empty());

  sm.s(0, 0) = h.m_threshold;  // exactly at the threshold: excluded
  REQUIRE(predict_set(sm, h).empty());
}

TEST_CASE("predict_set shrinks as the threshold grows") {
  Rng rng(44);
  ScoreMatrix sm;
  sm.class_order = {"a", "b", "c", "d"};
  sm.s = Mat(4, 3);
  for (auto& x : sm.s.data()) x = rng.normal() * 2.0;
  HyperParams lo, hi;
  lo.m_threshold = -1.0;
  hi.m_threshold = 1.0;
  auto set_lo = predict_set(sm, lo);
  auto set_hi = predict_set(sm, hi);
  for (const auto& l : set_hi) REQUIRE(set_lo.count(l) == 1);
}

TEST_CASE("attention dump") {
  ScoreMatrix sm;
  sm.class_order = {"flat", "peaked"};
  sm.s = Mat(2, 4);
  for (std::size_t t = 0; t < 4; ++t) sm.s(0, t) = 1.0;
  sm.s(1, 0) = -1.0;
  sm.s(1, 1) = 5.0;
  sm.s(1, 2) = 0.0;
  sm.s(1, 3) = 1.0;

  Vec flat = attention_dump(sm, "flat");
  for (double a : flat) REQUIRE(a == Approx(0.25).epsilon(1e-12));

  Vec peaked = attention_dump(sm, "peaked");
  double sum = 0.0;
  for (double a : peaked) sum += a;
  REQUIRE(sum == Approx(1.0).margin(1e-9));
  REQUIRE(std::max_element(peaked.begin(), peaked.end()) - peaked.begin() == 1);

  REQUIRE_THROWS_AS(attention_dump(sm, "nope"), ValidationError);
}

TEST_CASE("checkpoint round trip is exact") {
  testutil::TempDir tmp;
  ModelDims dims{3, 4, 5, 2, 6};
  Checkpoint ck{random_params(dims, 91), HyperParams{0.25, 1.75, 0.5}, 91,
                "glorot_uniform"};
  save_model(ck, tmp / "model.json");
  Checkpoint back = load_model(tmp / "model.json");
  REQUIRE(back.params.w1 == ck.params.w1);
  REQUIRE(back.params.b1 == ck.params.b1);
  REQUIRE(back.params.v1 == ck.params.v1);
  REQUIRE(back.params.c1 == ck.params.c1);
  REQUIRE(back.params.v2 == ck.params.v2);
  REQUIRE(back.params.c2 == ck.params.c2);
  REQUIRE(back.hyper.gamma == ck.hyper.gamma);
  REQUIRE(back.hyper.m_threshold == ck.hyper.m_threshold);
  REQUIRE(back.seed == 91);
  REQUIRE(back.init_scheme == "glorot_uniform");
  REQUIRE(back.params.dims.d_hidden == 5);
}

TEST_CASE("glorot init is seed-deterministic and bounded") {
  ModelDims dims{8, 6, 10, 4, 3};
  ModelParams a = ModelParams::init(dims, 7);
  ModelParams b = ModelParams::init(dims, 7);
  REQUIRE(a.w1 == b.w1);
  REQUIRE(a.v1 == b.v1);
  REQUIRE(a.v2 == b.v2);
  double limit = std::sqrt(6.0 / (8 + 4));
  for (double x : a.w1.data()) {
    REQUIRE(x >= -limit);
    REQUIRE(x <= limit);
  }
  for (double x : a.b1) REQUIRE(x == 0.0);
  for (double x : a.c1) REQUIRE(x == 0.0);
}
