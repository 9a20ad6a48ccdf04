#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "relclass/common.hpp"

namespace relclass {

// Convex interpolation weights on a lattice of the given step.
struct CombinationWeights {
  std::vector<double> alpha;
  double step = 0.1;

  // Throws Error unless every alpha is in [0,1], a multiple of step, and the
  // weights sum to 1 within 1e-9.
  void validate() const;
  bool operator==(const CombinationWeights&) const = default;
};

struct ScoreRow {
  std::string slot;
  bool gold = false;
  std::vector<double> scores;  // one per model, in ScoreTable::models order
};

struct ScoreTable {
  std::vector<std::string> models;
  std::vector<ScoreRow> rows;

  void validate() const;
  // Rows of one slot, in table order.
  ScoreTable for_slot(std::string_view slot) const;
  std::vector<std::string> slots() const;
  // Column-wise concatenation; rows must agree on slot and gold label.
  static ScoreTable merge(std::span<const ScoreTable> tables);
};

// Header: "slot<TAB>gold<TAB>model1<TAB>...".
ScoreTable parse_score_table(std::string_view text, std::string_view source = "<scores>");
std::string serialize_score_table(const ScoreTable& table);
ScoreTable load_score_table(const std::filesystem::path& path);

ModelScore combine(std::span<const double> scores, const CombinationWeights& weights);

// All weight vectors on the simplex lattice, in lexicographically descending
// order of the weight vector, e.g. (1,0), (0.9,0.1), ..., (0,1).
std::vector<CombinationWeights> simplex_lattice(std::size_t n_models, double step = 0.1);

struct GridSearchResult {
  CombinationWeights weights;
  double dev_f1 = 0.0;
  std::size_t lattice_size = 0;
};

// Best dev F1 of q_CMB >= threshold over the lattice; the first-enumerated
// (lexicographically largest) weight vector wins ties.
GridSearchResult grid_search(const ScoreTable& table, double step = 0.1,
                             double threshold = 0.5);

// model -> (lattice weight value -> number of slots selecting it).
using WeightHistogram = std::map<std::string, std::map<double, std::size_t>>;

WeightHistogram weight_histogram(const std::vector<std::string>& models,
                                 const std::map<std::string, CombinationWeights>& per_slot);

// Binary F1 of a single score column or a combination at threshold 0.5.
double column_f1(const ScoreTable& table, std::size_t column, double threshold = 0.5);
double combined_f1(const ScoreTable& table, const CombinationWeights& weights,
                   double threshold = 0.5);

}  // namespace relclass
