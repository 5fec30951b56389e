#ifndef ZSATTN_SPLITTER_HPP
#define ZSATTN_SPLITTER_HPP

#include <algorithm>
#include <array>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "dataset.hpp"

namespace zsattn {

struct CooccurrenceStats {
  // samples containing the class
  std::map<std::string, long> class_freq;
  // samples containing both classes, keyed by ordered pair (a < b)
  std::map<std::pair<std::string, std::string>, long> co_count;

  long freq(const std::string& label) const {
    auto it = class_freq.find(label);
    return it == class_freq.end() ? 0 : it->second;
  }

  // Symmetric; co(a, a) equals freq(a).
  long co(const std::string& a, const std::string& b) const {
    if (a == b) return freq(a);
    auto key = a < b ? std::make_pair(a, b) : std::make_pair(b, a);
    auto it = co_count.find(key);
    return it == co_count.end() ? 0 : it->second;
  }
};

inline CooccurrenceStats compute_stats(const Dataset& d) {
  CooccurrenceStats stats;
  for (const auto& label : d.semantics.labels()) stats.class_freq[label] = 0;
  for (const auto& s : d.samples) {
    std::vector<std::string> labels(s.labels.begin(), s.labels.end());
    for (std::size_t i = 0; i < labels.size(); ++i) {
      ++stats.class_freq[labels[i]];
      for (std::size_t j = i + 1; j < labels.size(); ++j)
        ++stats.co_count[{labels[i], labels[j]}];  // set iteration keeps i < j sorted
    }
  }
  return stats;
}

struct Fold {
  std::string name;
  std::vector<std::string> classes;  // in order of addition
  std::vector<std::string> sample_ids;
};

struct FoldSplit {
  std::array<Fold, 3> folds;
  std::vector<std::string> dropped;  // samples whose labels span folds

  const Fold& fold(std::size_t i) const { return folds.at(i); }
};

// Greedy disjoint-class split into three folds.
//
// The three least frequent classes seed fold1..fold3 (least frequent first).
// Rounds then visit fold1, fold2, fold3 in order; each fold adds the
// unassigned class that most often co-occurs with its last added class,
// skipping when every unassigned class has co-occurrence zero. Once a full
// round adds nothing the greedy phase is over and leftover classes are
// appended round-robin by ascending frequency. Ties anywhere break on
// lexicographic label order. A sample lands in a fold only when all its
// labels do; samples spanning folds are dropped and reported.
inline FoldSplit split_folds(const Dataset& d) {
  std::vector<std::string> all_classes = d.semantics.labels();
  if (all_classes.size() < 3)
    throw ValidationError("fold split requires at least 3 classes, got " +
                          std::to_string(all_classes.size()));

  CooccurrenceStats stats = compute_stats(d);

  std::vector<std::string> by_freq = all_classes;  // already lexicographic
  std::stable_sort(by_freq.begin(), by_freq.end(),
                   [&](const std::string& a, const std::string& b) {
                     return stats.freq(a) < stats.freq(b);
                   });

  FoldSplit result;
  std::set<std::string> unassigned(all_classes.begin(), all_classes.end());
  for (std::size_t i = 0; i < 3; ++i) {
    result.folds[i].name = "fold" + std::to_string(i + 1);
    result.folds[i].classes.push_back(by_freq[i]);
    unassigned.erase(by_freq[i]);
  }

  bool added = true;
  while (added && !unassigned.empty()) {
    added = false;
    for (auto& fold : result.folds) {
      const std::string& last = fold.classes.back();
      std::string best;
      long best_co = 0;
      for (const auto& cand : unassigned) {  // ascending label order breaks ties
        long c = stats.co(last, cand);
        if (c > best_co) {
          best_co = c;
          best = cand;
        }
      }
      if (best_co > 0) {
        fold.classes.push_back(best);
        unassigned.erase(best);
        added = true;
      }
    }
  }

  // Orphans: zero co-occurrence with every frontier class. Round-robin by
  // ascending frequency so the folds still partition all classes.
  std::vector<std::string> orphans(unassigned.begin(), unassigned.end());
  std::stable_sort(orphans.begin(), orphans.end(),
                   [&](const std::string& a, const std::string& b) {
                     return stats.freq(a) < stats.freq(b);
                   });
  for (std::size_t i = 0; i < orphans.size(); ++i)
    result.folds[i % 3].classes.push_back(orphans[i]);

  std::array<std::set<std::string>, 3> class_sets;
  for (std::size_t i = 0; i < 3; ++i)
    class_sets[i] = {result.folds[i].classes.begin(), result.folds[i].classes.end()};

  for (const auto& s : d.samples) {
    bool placed = false;
    for (std::size_t i = 0; i < 3; ++i) {
      bool inside = std::all_of(s.labels.begin(), s.labels.end(),
                                [&](const std::string& l) { return class_sets[i].count(l) > 0; });
      if (inside) {
        result.folds[i].sample_ids.push_back(s.id);
        placed = true;
        break;
      }
    }
    if (!placed) result.dropped.push_back(s.id);
  }

  return result;
}

inline void save_folds(const FoldSplit& split, const std::filesystem::path& path) {
  nlohmann::json j;
  for (const auto& fold : split.folds)
    j[fold.name] = {{"classes", fold.classes}, {"samples", fold.sample_ids}};
  j["dropped"] = split.dropped;
  detail::write_text(path, j.dump(2) + "\n");
}

inline FoldSplit load_folds(const std::filesystem::path& path) {
  nlohmann::json j = detail::parse_file(path);
  FoldSplit split;
  try {
    for (std::size_t i = 0; i < 3; ++i) {
      std::string name = "fold" + std::to_string(i + 1);
      split.folds[i].name = name;
      split.folds[i].classes = j.at(name).at("classes").get<std::vector<std::string>>();
      split.folds[i].sample_ids = j.at(name).at("samples").get<std::vector<std::string>>();
    }
    split.dropped = j.at("dropped").get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("parse error in " + path.string() + ": " + e.what());
  }
  return split;
}

}  // namespace zsattn

#endif  // ZSATTN_SPLITTER_HPP
