#include "relclass/evalkit.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace relclass {

double macro_average(const std::map<std::string, SlotMetrics>& per_slot) {
  if (per_slot.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& [_, m] : per_slot) sum += m.f1();
  return sum / static_cast<double>(per_slot.size());
}

EvalReport evaluate(std::span<const RelationInstance> instances,
                    std::span<const double> scores, double threshold) {
  if (scores.size() != instances.size()) {
    throw Error("prediction count " + std::to_string(scores.size()) +
                " does not match instance count " + std::to_string(instances.size()));
  }
  EvalReport report;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    report.per_slot[instances[i].slot].add(scores[i] >= threshold,
                                           instances[i].positive);
  }
  report.macro_f1 = macro_average(report.per_slot);
  return report;
}

EvalReport evaluate(std::span<const RelationInstance> instances,
                    const std::map<std::size_t, double>& scores, double threshold) {
  std::vector<double> dense(instances.size());
  for (std::size_t i = 0; i < instances.size(); ++i) {
    auto it = scores.find(i);
    if (it == scores.end()) {
      throw Error("missing prediction for instance " + std::to_string(i) +
                  " (slot " + instances[i].slot + ")");
    }
    dense[i] = it->second;
  }
  return evaluate(instances, dense, threshold);
}

double pearson(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw Error("pearson: length mismatch");
  if (xs.size() < 2) throw Error("pearson: need at least two points");
  const double n = static_cast<double>(xs.size());
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = xs[i] - mx;
    const double dy = ys[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw Error("pearson: undefined correlation (zero variance)");
  double r = sxy / std::sqrt(sxx * syy);
  return std::clamp(r, -1.0, 1.0);
}

const GenreCell& GenreMatrix::cell(Genre train, Genre test, std::string_view model,
                                   Split split) const {
  for (const auto& c : cells) {
    if (c.train_genre == train && c.test_genre == test && c.model == model &&
        c.split == split) {
      return c;
    }
  }
  throw Error("no genre-matrix cell for model '" + std::string(model) + "'");
}

GenreMatrix genre_matrix(std::span<const RelationInstance> instances,
                         std::span<const NamedTrainer> trainers, std::uint64_t seed) {
  if (trainers.empty()) throw Error("genre matrix needs at least one model");

  std::map<std::string, std::vector<const RelationInstance*>> news_train;
  std::map<std::string, std::vector<const RelationInstance*>> web_train;
  std::set<std::string> slots;
  for (const auto& inst : instances) {
    slots.insert(inst.slot);
    if (inst.split != Split::train) continue;
    auto& bucket = genre_group(inst.genre) == Genre::web ? web_train : news_train;
    bucket[inst.slot].push_back(&inst);
  }

  GenreMatrix matrix;
  std::vector<RelationInstance> web_set;
  std::vector<RelationInstance> news_subset;
  for (const auto& slot : slots) {
    auto& web = web_train[slot];
    auto& news = news_train[slot];
    if (web.empty()) throw Error("no web training data for slot " + slot);
    if (news.empty()) throw Error("no news training data for slot " + slot);
    // Subsample news to |WEB|, keeping corpus order among the chosen.
    std::vector<std::size_t> order(news.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng rng(derive_seed(seed, "news-subset/" + slot));
    rng.shuffle(order);
    order.resize(std::min(order.size(), web.size()));
    std::sort(order.begin(), order.end());
    for (auto i : order) news_subset.push_back(*news[i]);
    for (auto* p : web) web_set.push_back(*p);
    matrix.train_size[slot] = web.size();
  }

  for (const auto& trainer : trainers) {
    for (Genre train_genre : {Genre::news, Genre::web}) {
      const auto& train = train_genre == Genre::news ? news_subset : web_set;
      auto predict = trainer.train(
          train, derive_seed(seed, trainer.name + "/" + std::string(to_string(train_genre))));
      for (Split split : {Split::dev, Split::eval}) {
        for (Genre test_genre : {Genre::news, Genre::web}) {
          std::vector<RelationInstance> test;
          for (const auto& inst : instances) {
            if (inst.split == split && genre_group(inst.genre) == test_genre) {
              test.push_back(inst);
            }
          }
          std::vector<double> scores;
          scores.reserve(test.size());
          for (const auto& inst : test) scores.push_back(predict(inst));
          matrix.cells.push_back(
              {train_genre, test_genre, trainer.name, split, evaluate(test, scores)});
        }
      }
    }
  }
  return matrix;
}

}  // namespace relclass
