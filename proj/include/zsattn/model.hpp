#ifndef ZSATTN_MODEL_HPP
#define ZSATTN_MODEL_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "core.hpp"
#include "dataset.hpp"
#include "rng.hpp"

namespace zsattn {

struct ModelDims {
  std::size_t f_a = 128;
  std::size_t f_s = 768;
  std::size_t d_hidden = 512;
  std::size_t d_model = 128;
  std::size_t t = 10;
};

struct HyperParams {
  double gamma = 0.5;
  double m_threshold = 1.51;
  double delta = 1.0;
};

// Audio projection is one dense layer, semantic projection two, each
// followed by tanh. Biases start at zero; weights are Glorot-uniform
// (+-sqrt(6/(fan_in+fan_out))) drawn from the given seed in the order
// w1, v1, v2.
struct ModelParams {
  Mat w1;  // d_model x f_a
  Vec b1;  // d_model
  Mat v1;  // d_hidden x f_s
  Vec c1;  // d_hidden
  Mat v2;  // d_model x d_hidden
  Vec c2;  // d_model
  ModelDims dims;

  static ModelParams zeros(const ModelDims& dims) {
    ModelParams p;
    p.dims = dims;
    p.w1 = Mat(dims.d_model, dims.f_a);
    p.b1 = Vec(dims.d_model, 0.0);
    p.v1 = Mat(dims.d_hidden, dims.f_s);
    p.c1 = Vec(dims.d_hidden, 0.0);
    p.v2 = Mat(dims.d_model, dims.d_hidden);
    p.c2 = Vec(dims.d_model, 0.0);
    return p;
  }

  static void glorot_fill(Mat& m, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
    double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    for (auto& x : m.data()) x = rng.uniform(-limit, limit);
  }

  static ModelParams init(const ModelDims& dims, Rng& rng) {
    ModelParams p = zeros(dims);
    glorot_fill(p.w1, dims.f_a, dims.d_model, rng);
    glorot_fill(p.v1, dims.f_s, dims.d_hidden, rng);
    glorot_fill(p.v2, dims.d_hidden, dims.d_model, rng);
    return p;
  }

  static ModelParams init(const ModelDims& dims, std::uint64_t seed) {
    Rng rng(seed);
    return init(dims, rng);
  }

  // theta <- theta + scale * other, over every weight and bias
  void axpy(double scale, const ModelParams& other) {
    auto add = [scale](Vec& dst, const Vec& src) {
      for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += scale * src[i];
    };
    add(w1.data(), other.w1.data());
    add(b1, other.b1);
    add(v1.data(), other.v1.data());
    add(c1, other.c1);
    add(v2.data(), other.v2.data());
    add(c2, other.c2);
  }

  void scale(double s) {
    scale_in_place(w1.data(), s);
    scale_in_place(b1, s);
    scale_in_place(v1.data(), s);
    scale_in_place(c1, s);
    scale_in_place(v2.data(), s);
    scale_in_place(c2, s);
  }
};

// Compatibility scores, one row per class in class_order, one column per segment.
struct ScoreMatrix {
  Mat s;
  std::vector<std::string> class_order;
};

// column t = tanh(w1 * a[:,t] + b1), per segment
inline Mat project_audio(const ModelParams& p, const AcousticEmbedding& a) {
  if (a.feature_dim() != p.dims.f_a)
    throw ValidationError("dimension mismatch: acoustic feature dim " +
                          std::to_string(a.feature_dim()) + ", model expects " +
                          std::to_string(p.dims.f_a));
  const std::size_t d = p.dims.d_model, t_len = a.segments();
  Mat out(d, t_len);
  for (std::size_t t = 0; t < t_len; ++t) {
    for (std::size_t i = 0; i < d; ++i) {
      double acc = p.b1[i];
      for (std::size_t j = 0; j < p.dims.f_a; ++j) acc += p.w1(i, j) * a.values(j, t);
      out(i, t) = std::tanh(acc);
    }
  }
  return out;
}

// tanh(v2 * tanh(v1 * sem + c1) + c2)
inline Vec project_semantic(const ModelParams& p, const Vec& sem) {
  if (sem.size() != p.dims.f_s)
    throw ValidationError("dimension mismatch: semantic dim " +
                          std::to_string(sem.size()) + ", model expects " +
                          std::to_string(p.dims.f_s));
  Vec h(p.dims.d_hidden);
  for (std::size_t i = 0; i < p.dims.d_hidden; ++i) {
    double acc = p.c1[i];
    for (std::size_t j = 0; j < p.dims.f_s; ++j) acc += p.v1(i, j) * sem[j];
    h[i] = std::tanh(acc);
  }
  Vec out(p.dims.d_model);
  for (std::size_t i = 0; i < p.dims.d_model; ++i) {
    double acc = p.c2[i];
    for (std::size_t j = 0; j < p.dims.d_hidden; ++j) acc += p.v2(i, j) * h[j];
    out[i] = std::tanh(acc);
  }
  return out;
}

// s_c[t] = dot(v_c, v_x[:,t])
inline Vec compatibility(const Mat& v_x, const Vec& v_c) {
  if (v_x.rows() != v_c.size())
    throw ValidationError("dimension mismatch: projected audio has " +
                          std::to_string(v_x.rows()) + " rows, class vector " +
                          std::to_string(v_c.size()));
  Vec s(v_x.cols());
  for (std::size_t t = 0; t < v_x.cols(); ++t) {
    double acc = 0.0;
    for (std::size_t i = 0; i < v_x.rows(); ++i) acc += v_c[i] * v_x(i, t);
    s[t] = acc;
  }
  return s;
}

// Softmax over segments, computed with max-subtraction.
inline Vec attention_weights(const Vec& s_c) {
  double m = *std::max_element(s_c.begin(), s_c.end());
  Vec a(s_c.size());
  double denom = 0.0;
  for (std::size_t t = 0; t < s_c.size(); ++t) {
    a[t] = std::exp(s_c[t] - m);
    denom += a[t];
  }
  for (auto& x : a) x /= denom;
  return a;
}

inline double attended_score(const Vec& s_c) {
  Vec a = attention_weights(s_c);
  double y = 0.0;
  for (std::size_t t = 0; t < s_c.size(); ++t) y += a[t] * s_c[t];
  return y;
}

inline double uniform_score(const Vec& s_c) {
  double z = 0.0;
  for (double v : s_c) z += v;
  return z;
}

inline double fuse(double y_hat, double z_hat, double gamma) {
  if (!(gamma >= 0.0 && gamma <= 1.0))
    throw ValidationError("gamma must lie in [0,1], got " + std::to_string(gamma));
  return gamma * y_hat + (1.0 - gamma) * z_hat;
}

// Projected class vectors stacked into a matrix, one row per class. Shared
// by score_all and the evaluation loop so classes are projected once per
// parameter state rather than once per sample.
inline Mat project_classes(const ModelParams& p, const SemanticTable& sems,
                           const std::vector<std::string>& class_order) {
  Mat out(class_order.size(), p.dims.d_model);
  for (std::size_t c = 0; c < class_order.size(); ++c) {
    Vec v = project_semantic(p, sems.at(class_order[c]));
    for (std::size_t i = 0; i < v.size(); ++i) out(c, i) = v[i];
  }
  return out;
}

inline ScoreMatrix scores_from_projected(const Mat& v_x, const Mat& v_classes,
                                         const std::vector<std::string>& class_order) {
  ScoreMatrix sm;
  sm.class_order = class_order;
  sm.s = Mat(class_order.size(), v_x.cols());
  for (std::size_t c = 0; c < class_order.size(); ++c)
    for (std::size_t t = 0; t < v_x.cols(); ++t) {
      double acc = 0.0;
      for (std::size_t i = 0; i < v_x.rows(); ++i) acc += v_classes(c, i) * v_x(i, t);
      sm.s(c, t) = acc;
    }
  return sm;
}

inline ScoreMatrix score_all(const ModelParams& p, const SemanticTable& sems,
                             const AcousticEmbedding& a,
                             const std::vector<std::string>& class_order) {
  Mat v_x = project_audio(p, a);
  return scores_from_projected(v_x, project_classes(p, sems, class_order), class_order);
}

inline Vec score_row(const ScoreMatrix& sm, std::size_t c) {
  Vec row(sm.s.cols());
  for (std::size_t t = 0; t < sm.s.cols(); ++t) row[t] = sm.s(c, t);
  return row;
}

// Labels whose fused score strictly exceeds the threshold. May be empty.
inline std::set<std::string> predict_set(const ScoreMatrix& scores, const HyperParams& h) {
  std::set<std::string> out;
  for (std::size_t c = 0; c < scores.class_order.size(); ++c) {
    Vec row = score_row(scores, c);
    double p_hat = fuse(attended_score(row), uniform_score(row), h.gamma);
    if (p_hat > h.m_threshold) out.insert(scores.class_order[c]);
  }
  return out;
}

inline Vec attention_dump(const ScoreMatrix& scores, const std::string& label) {
  auto it = std::find(scores.class_order.begin(), scores.class_order.end(), label);
  if (it == scores.class_order.end())
    throw ValidationError("unknown class label '" + label + "'");
  return attention_weights(score_row(scores, static_cast<std::size_t>(it - scores.class_order.begin())));
}

namespace detail {

inline nlohmann::json mat_to_json(const Mat& m) {
  auto rows = nlohmann::json::array();
  for (std::size_t i = 0; i < m.rows(); ++i) {
    auto row = nlohmann::json::array();
    for (std::size_t j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Mat mat_from_json(const nlohmann::json& j, const std::string& what) {
  if (!j.is_array() || j.empty())
    throw ValidationError("parse error: " + what + " is not a non-empty array");
  Mat m(j.size(), j.at(0).size());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const auto& row = j.at(i);
    if (row.size() != m.cols())
      throw ValidationError("dimension mismatch: ragged rows in " + what);
    for (std::size_t k = 0; k < m.cols(); ++k) m(i, k) = row.at(k).get<double>();
  }
  if (!m.all_finite())
    throw ValidationError("parse error: non-finite entries in " + what);
  return m;
}

}  // namespace detail

struct Checkpoint {
  ModelParams params;
  HyperParams hyper;
  std::uint64_t seed = 0;
  std::string init_scheme = "glorot_uniform";
};

inline void save_model(const Checkpoint& ck, const std::filesystem::path& path) {
  const ModelParams& p = ck.params;
  nlohmann::json j;
  j["dims"] = {{"f_a", p.dims.f_a},
               {"f_s", p.dims.f_s},
               {"d_hidden", p.dims.d_hidden},
               {"d_model", p.dims.d_model},
               {"t", p.dims.t}};
  j["hyper"] = {{"gamma", ck.hyper.gamma},
                {"threshold", ck.hyper.m_threshold},
                {"delta", ck.hyper.delta}};
  j["seed"] = ck.seed;
  j["init"] = ck.init_scheme;
  j["audio_proj"] = {{"w1", detail::mat_to_json(p.w1)}, {"b1", p.b1}};
  j["sem_proj"] = {{"v1", detail::mat_to_json(p.v1)},
                   {"c1", p.c1},
                   {"v2", detail::mat_to_json(p.v2)},
                   {"c2", p.c2}};
  detail::write_text(path, j.dump(2) + "\n");
}

inline Checkpoint load_model(const std::filesystem::path& path) {
  nlohmann::json j = detail::parse_file(path);
  Checkpoint ck;
  try {
    ck.params.dims.f_a = j.at("dims").at("f_a").get<std::size_t>();
    ck.params.dims.f_s = j.at("dims").at("f_s").get<std::size_t>();
    ck.params.dims.d_hidden = j.at("dims").at("d_hidden").get<std::size_t>();
    ck.params.dims.d_model = j.at("dims").at("d_model").get<std::size_t>();
    ck.params.dims.t = j.at("dims").at("t").get<std::size_t>();
    ck.hyper.gamma = j.at("hyper").at("gamma").get<double>();
    ck.hyper.m_threshold = j.at("hyper").at("threshold").get<double>();
    ck.hyper.delta = j.at("hyper").at("delta").get<double>();
    ck.seed = j.at("seed").get<std::uint64_t>();
    ck.init_scheme = j.at("init").get<std::string>();
    ck.params.w1 = detail::mat_from_json(j.at("audio_proj").at("w1"), "w1");
    ck.params.b1 = j.at("audio_proj").at("b1").get<Vec>();
    ck.params.v1 = detail::mat_from_json(j.at("sem_proj").at("v1"), "v1");
    ck.params.c1 = j.at("sem_proj").at("c1").get<Vec>();
    ck.params.v2 = detail::mat_from_json(j.at("sem_proj").at("v2"), "v2");
    ck.params.c2 = j.at("sem_proj").at("c2").get<Vec>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("parse error in " + path.string() + ": " + e.what());
  }
  const ModelParams& p = ck.params;
  if (p.w1.rows() != p.dims.d_model || p.w1.cols() != p.dims.f_a ||
      p.b1.size() != p.dims.d_model || p.v1.rows() != p.dims.d_hidden ||
      p.v1.cols() != p.dims.f_s || p.c1.size() != p.dims.d_hidden ||
      p.v2.rows() != p.dims.d_model || p.v2.cols() != p.dims.d_hidden ||
      p.c2.size() != p.dims.d_model)
    throw ValidationError("dimension mismatch in " + path.string() +
                          ": weight shapes disagree with dims");
  return ck;
}

// One row per segment: sample_id,label,t,alpha
inline void write_attention_csv(const std::filesystem::path& path,
                                const std::string& sample_id, const std::string& label,
                                const Vec& alpha) {
  std::ostringstream out;
  out << "sample_id,label,t,alpha\n";
  out.precision(17);
  for (std::size_t t = 0; t < alpha.size(); ++t)
    out << sample_id << "," << label << "," << t << "," << alpha[t] << "\n";
  detail::write_text(path, out.str());
}

}  // namespace zsattn

#endif  // ZSATTN_MODEL_HPP
