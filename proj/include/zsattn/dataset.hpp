#ifndef ZSATTN_DATASET_HPP
#define ZSATTN_DATASET_HPP

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "core.hpp"
#include "rng.hpp"

namespace zsattn {

// Per-sample segment features, feature_dim rows x n_segments columns.
struct AcousticEmbedding {
  Mat values;

  std::size_t feature_dim() const { return values.rows(); }
  std::size_t segments() const { return values.cols(); }
};

// Class label -> semantic vector. All vectors share one dimensionality.
struct SemanticTable {
  std::map<std::string, Vec> entries;

  std::size_t dim() const {
    return entries.empty() ? 0 : entries.begin()->second.size();
  }
  bool has(const std::string& label) const { return entries.count(label) > 0; }
  const Vec& at(const std::string& label) const {
    auto it = entries.find(label);
    if (it == entries.end())
      throw ValidationError("unknown class label '" + label + "'");
    return it->second;
  }
  std::vector<std::string> labels() const {
    std::vector<std::string> out;
    out.reserve(entries.size());
    for (const auto& [k, v] : entries) out.push_back(k);
    return out;
  }
};

struct Sample {
  std::string id;
  std::set<std::string> labels;
  AcousticEmbedding acoustic;
};

struct DatasetMeta {
  std::size_t f_a = 0;
  std::size_t f_s = 0;
  std::size_t t = 0;
};

struct Dataset {
  std::vector<Sample> samples;
  SemanticTable semantics;
  DatasetMeta meta;

  // Throws ValidationError naming the first offending sample/label.
  void validate() const {
    if (meta.f_a == 0 || meta.f_s == 0 || meta.t == 0)
      throw ValidationError("dimension mismatch: meta dims must be positive");
    std::set<std::string> seen_ids;
    for (const auto& [label, vec] : semantics.entries) {
      if (label.empty())
        throw ValidationError("parse error: empty class label in semantics");
      if (vec.size() != meta.f_s)
        throw ValidationError("dimension mismatch: class '" + label +
                              "' semantic vector has length " +
                              std::to_string(vec.size()) + ", expected " +
                              std::to_string(meta.f_s));
      if (!all_finite(vec))
        throw ValidationError("dimension mismatch: class '" + label +
                              "' has non-finite semantic entries");
    }
    for (const auto& s : samples) {
      if (!seen_ids.insert(s.id).second)
        throw ValidationError("dimension mismatch: duplicate sample id '" + s.id + "'");
      if (s.labels.empty())
        throw ValidationError("dimension mismatch: sample '" + s.id + "' has no labels");
      for (const auto& l : s.labels)
        if (!semantics.has(l))
          throw ValidationError("dimension mismatch: sample '" + s.id +
                                "' references unknown label '" + l + "'");
      if (s.acoustic.feature_dim() != meta.f_a || s.acoustic.segments() != meta.t)
        throw ValidationError(
            "dimension mismatch: sample '" + s.id + "' acoustic is " +
            std::to_string(s.acoustic.feature_dim()) + "x" +
            std::to_string(s.acoustic.segments()) + ", expected " +
            std::to_string(meta.f_a) + "x" + std::to_string(meta.t));
      if (!s.acoustic.values.all_finite())
        throw ValidationError("dimension mismatch: sample '" + s.id +
                              "' has non-finite acoustic entries");
    }
  }
};

struct SynthSpec {
  std::size_t n_classes = 30;
  std::size_t n_samples = 600;
  std::size_t t = 10;
  std::size_t f_a = 16;
  std::size_t f_s = 24;
  std::size_t labels_per_sample_max = 3;
  double noise_sigma = 0.1;
  std::uint64_t seed = 42;

  void validate() const {
    if (n_classes == 0 || n_samples == 0 || t == 0 || f_a == 0 || f_s == 0 ||
        labels_per_sample_max == 0)
      throw ValidationError("synth spec: all counts must be positive");
    if (labels_per_sample_max > n_classes)
      throw ValidationError("synth spec: labels_per_sample_max (" +
                            std::to_string(labels_per_sample_max) +
                            ") exceeds n_classes (" + std::to_string(n_classes) + ")");
    if (!(noise_sigma >= 0.0))
      throw ValidationError("synth spec: noise_sigma must be >= 0");
  }
};

// Ground-truth activity interval planted for one label of one sample,
// inclusive segment range [start, end].
struct PlantedInterval {
  std::string label;
  std::size_t start = 0;
  std::size_t end = 0;
};

using PlantMap = std::map<std::string, std::vector<PlantedInterval>>;

// Generator-side ground truth, for tests and diagnostics.
struct SynthTruth {
  PlantMap plants;
  Mat w;  // the shared semantic-to-acoustic map, f_a x f_s
};

namespace detail {

inline std::string padded_name(char prefix, std::size_t i, std::size_t count) {
  std::size_t width = std::to_string(count - 1).size();
  std::string digits = std::to_string(i);
  return prefix + std::string(width - digits.size(), '0') + digits;
}

}  // namespace detail

// Deterministic planted-structure generator.
//
// Draw order (part of the format contract, with the generator in rng.hpp):
//   1. one semantic vector per class, classes in label order, entries iid N(0,1);
//   2. a shared map W (f_a x f_s, row-major), entries N(0,1)/sqrt(f_s);
//   3. per sample in id order: label count k, then k label indices without
//      replacement, then one contiguous segment interval per label (uniform
//      over all t*(t+1)/2 intervals), then, when noise_sigma > 0, noise
//      entries per segment then per feature.
// Segment t's acoustic column is the sum of W*phi(label) over labels active
// at t, plus noise. The shared W ties acoustic and semantic spaces together,
// which is what lets compatibility scores transfer to held-out classes.
inline Dataset generate_synthetic(const SynthSpec& spec, SynthTruth* truth = nullptr) {
  spec.validate();
  Rng rng(spec.seed);

  Dataset ds;
  ds.meta = {spec.f_a, spec.f_s, spec.t};

  std::vector<std::string> labels;
  labels.reserve(spec.n_classes);
  for (std::size_t c = 0; c < spec.n_classes; ++c)
    labels.push_back(detail::padded_name('c', c, spec.n_classes));

  for (const auto& label : labels) {
    Vec v(spec.f_s);
    for (auto& x : v) x = rng.normal();
    ds.semantics.entries.emplace(label, std::move(v));
  }

  Mat w(spec.f_a, spec.f_s);
  const double scale = 1.0 / std::sqrt(static_cast<double>(spec.f_s));
  for (std::size_t i = 0; i < spec.f_a; ++i)
    for (std::size_t j = 0; j < spec.f_s; ++j) w(i, j) = rng.normal() * scale;
  if (truth) truth->w = w;

  // W*phi per class, computed once.
  std::vector<Vec> projected(spec.n_classes, Vec(spec.f_a, 0.0));
  for (std::size_t c = 0; c < spec.n_classes; ++c) {
    const Vec& phi = ds.semantics.entries.at(labels[c]);
    for (std::size_t i = 0; i < spec.f_a; ++i) {
      double acc = 0.0;
      for (std::size_t j = 0; j < spec.f_s; ++j) acc += w(i, j) * phi[j];
      projected[c][i] = acc;
    }
  }

  const std::size_t n_intervals = spec.t * (spec.t + 1) / 2;
  ds.samples.reserve(spec.n_samples);
  for (std::size_t n = 0; n < spec.n_samples; ++n) {
    Sample s;
    s.id = detail::padded_name('s', n, spec.n_samples);

    std::size_t k = 1 + rng.index(spec.labels_per_sample_max);
    std::vector<std::size_t> pool(spec.n_classes);
    for (std::size_t c = 0; c < spec.n_classes; ++c) pool[c] = c;
    std::vector<std::size_t> chosen;
    for (std::size_t d = 0; d < k; ++d) {
      std::size_t j = rng.index(pool.size());
      chosen.push_back(pool[j]);
      pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(j));
    }

    std::vector<PlantedInterval> intervals;
    for (std::size_t c : chosen) {
      std::size_t u = rng.index(n_intervals);
      std::size_t start = 0;
      while (u >= spec.t - start) {
        u -= spec.t - start;
        ++start;
      }
      intervals.push_back({labels[c], start, start + u});
      s.labels.insert(labels[c]);
    }

    s.acoustic.values = Mat(spec.f_a, spec.t);
    for (std::size_t d = 0; d < chosen.size(); ++d) {
      const Vec& p = projected[chosen[d]];
      for (std::size_t t = intervals[d].start; t <= intervals[d].end; ++t)
        for (std::size_t i = 0; i < spec.f_a; ++i) s.acoustic.values(i, t) += p[i];
    }
    if (spec.noise_sigma > 0.0) {
      for (std::size_t t = 0; t < spec.t; ++t)
        for (std::size_t i = 0; i < spec.f_a; ++i)
          s.acoustic.values(i, t) += spec.noise_sigma * rng.normal();
    }

    if (truth) truth->plants[s.id] = intervals;
    ds.samples.push_back(std::move(s));
  }

  ds.validate();
  return ds;
}

namespace detail {

inline nlohmann::json parse_file(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path))
    throw IoError(path.string() + " not found");
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError("parse error in " + path.string() + ": " + e.what());
  }
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace detail

// Directory layout: meta.json, classes.json, samples.jsonl. Decimal text
// numbers at full round-trip precision; UTF-8 with LF line endings.
inline void save_dataset(const Dataset& d, const std::filesystem::path& path,
                         bool overwrite = false) {
  d.validate();
  std::error_code ec;
  std::filesystem::create_directories(path, ec);
  if (ec) throw IoError("cannot create directory " + path.string());

  for (const char* name : {"meta.json", "classes.json", "samples.jsonl"}) {
    if (!overwrite && std::filesystem::exists(path / name))
      throw IoError((path / name).string() + " already exists (pass overwrite to replace)");
  }

  nlohmann::json meta = {{"f_a", d.meta.f_a}, {"f_s", d.meta.f_s}, {"t", d.meta.t}};
  detail::write_text(path / "meta.json", meta.dump(2) + "\n");

  nlohmann::json classes = nlohmann::json::object();
  for (const auto& [label, vec] : d.semantics.entries) classes[label] = vec;
  detail::write_text(path / "classes.json", classes.dump(2) + "\n");

  std::ostringstream lines;
  for (const auto& s : d.samples) {
    nlohmann::json rec;
    rec["id"] = s.id;
    rec["labels"] = s.labels;
    auto acoustic = nlohmann::json::array();
    for (std::size_t t = 0; t < s.acoustic.segments(); ++t) {
      auto col = nlohmann::json::array();
      for (std::size_t i = 0; i < s.acoustic.feature_dim(); ++i)
        col.push_back(s.acoustic.values(i, t));
      acoustic.push_back(std::move(col));
    }
    rec["acoustic"] = std::move(acoustic);
    lines << rec.dump() << "\n";
  }
  detail::write_text(path / "samples.jsonl", lines.str());
}

inline Dataset load_dataset(const std::filesystem::path& path) {
  Dataset ds;

  nlohmann::json meta = detail::parse_file(path / "meta.json");
  try {
    ds.meta.f_a = meta.at("f_a").get<std::size_t>();
    ds.meta.f_s = meta.at("f_s").get<std::size_t>();
    ds.meta.t = meta.at("t").get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("parse error in meta.json: " + std::string(e.what()));
  }

  nlohmann::json classes = detail::parse_file(path / "classes.json");
  if (!classes.is_object())
    throw ValidationError("parse error in classes.json: expected an object");
  for (const auto& [label, arr] : classes.items()) {
    Vec v;
    try {
      v = arr.get<Vec>();
    } catch (const nlohmann::json::exception&) {
      throw ValidationError("parse error in classes.json: class '" + label +
                            "' is not a numeric array");
    }
    ds.semantics.entries.emplace(label, std::move(v));
  }

  auto samples_path = path / "samples.jsonl";
  if (!std::filesystem::exists(samples_path))
    throw IoError(samples_path.string() + " not found");
  std::ifstream in(samples_path, std::ios::binary);
  if (!in) throw IoError("cannot open " + samples_path.string());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json rec;
    try {
      rec = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ValidationError("parse error in samples.jsonl line " +
                            std::to_string(line_no) + ": " + e.what());
    }
    Sample s;
    try {
      s.id = rec.at("id").get<std::string>();
      for (const auto& l : rec.at("labels"))
        s.labels.insert(l.get<std::string>());
      const auto& acoustic = rec.at("acoustic");
      if (!acoustic.is_array() || acoustic.size() != ds.meta.t)
        throw ValidationError("dimension mismatch: sample '" + s.id + "' has " +
                              std::to_string(acoustic.size()) + " segments, expected " +
                              std::to_string(ds.meta.t));
      s.acoustic.values = Mat(ds.meta.f_a, ds.meta.t);
      for (std::size_t t = 0; t < ds.meta.t; ++t) {
        const auto& col = acoustic.at(t);
        if (!col.is_array() || col.size() != ds.meta.f_a)
          throw ValidationError("dimension mismatch: sample '" + s.id +
                                "' segment " + std::to_string(t) + " has " +
                                std::to_string(col.size()) + " features, expected " +
                                std::to_string(ds.meta.f_a));
        for (std::size_t i = 0; i < ds.meta.f_a; ++i)
          s.acoustic.values(i, t) = col.at(i).get<double>();
      }
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError("parse error in samples.jsonl line " +
                            std::to_string(line_no) + ": " + e.what());
    }
    ds.samples.push_back(std::move(s));
  }

  ds.validate();
  return ds;
}

}  // namespace zsattn

#endif  // ZSATTN_DATASET_HPP
