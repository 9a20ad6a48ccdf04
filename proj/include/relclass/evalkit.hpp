#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "relclass/corpus.hpp"

namespace relclass {

struct SlotMetrics {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;

  void add(bool predicted, bool gold) {
    if (predicted && gold) ++tp;
    else if (predicted) ++fp;
    else if (gold) ++fn;
  }
  double precision() const {
    return tp + fp == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
  }
  double recall() const {
    return tp + fn == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
  }
  double f1() const {
    double p = precision();
    double r = recall();
    return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0;
  }
};

struct EvalReport {
  std::map<std::string, SlotMetrics> per_slot;
  // Unweighted mean of per-slot F1.
  double macro_f1 = 0.0;
};

// scores[i] is the positive-class score for instances[i].
EvalReport evaluate(std::span<const RelationInstance> instances,
                    std::span<const double> scores, double threshold = 0.5);

// Same, keyed by instance position; throws if any gold instance lacks a score.
EvalReport evaluate(std::span<const RelationInstance> instances,
                    const std::map<std::size_t, double>& scores,
                    double threshold = 0.5);

double macro_average(const std::map<std::string, SlotMetrics>& per_slot);

// Sample Pearson correlation; throws on length mismatch, n < 2, or zero variance.
double pearson(std::span<const double> xs, std::span<const double> ys);

using Predictor = std::function<double(const RelationInstance&)>;
// Trains on a multi-slot training set and returns a scorer for any instance.
using Trainer =
    std::function<Predictor(std::span<const RelationInstance> train, std::uint64_t seed)>;

struct NamedTrainer {
  std::string name;
  Trainer train;
};

struct GenreCell {
  Genre train_genre = Genre::news;
  Genre test_genre = Genre::news;
  std::string model;
  Split split = Split::dev;
  EvalReport report;
};

struct GenreMatrix {
  std::vector<GenreCell> cells;
  // Per slot: |WEB| training instances, which is also |NEWS_sub|.
  std::map<std::string, std::size_t> train_size;

  const GenreCell& cell(Genre train, Genre test, std::string_view model,
                        Split split) const;
};

// Trains every model on WEB and on a per-slot news subsample of equal size,
// then evaluates on news and web portions of dev and eval.
GenreMatrix genre_matrix(std::span<const RelationInstance> instances,
                         std::span<const NamedTrainer> trainers,
                         std::uint64_t seed);

}  // namespace relclass
