#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "relclass/corpus.hpp"

namespace relclass {

enum class Weighting { counts, binary, l2_counts };

std::string_view to_string(Weighting weighting);
Weighting parse_weighting(std::string_view text);

enum class FeatureKind { bow, skip };

std::string_view to_string(FeatureKind kind);
FeatureKind parse_feature_kind(std::string_view text);

// Named feature counts before indexing. Ordered so iteration is deterministic.
using FeatureBag = std::map<std::string, double>;

// Index-sorted sparse vector; zero weights are never stored.
class SparseVector {
 public:
  using Entry = std::pair<std::uint32_t, double>;

  SparseVector() = default;
  // Entries may be unsorted; zeros are dropped and duplicates summed.
  explicit SparseVector(std::vector<Entry> entries);

  std::span<const Entry> entries() const { return entries_; }
  std::size_t nnz() const { return entries_.size(); }
  double dot(std::span<const double> dense) const;
  double dot(const SparseVector& other) const;
  double squared_norm() const;
  SparseVector scaled(double factor) const;
  bool operator==(const SparseVector&) const = default;

 private:
  std::vector<Entry> entries_;
};

class FeatureSpace {
 public:
  // Adds every feature name in the bag; throws once frozen.
  void fit(const FeatureBag& bag);
  std::size_t add(std::string_view name);
  void freeze() { frozen_ = true; }
  bool frozen() const { return frozen_; }

  std::optional<std::size_t> index_of(std::string_view name) const;
  const std::string& name(std::size_t index) const { return names_.at(index); }
  std::size_t size() const { return names_.size(); }

  // Unknown features are dropped.
  SparseVector vectorize(const FeatureBag& bag, Weighting weighting) const;

  // "index<TAB>feature" per line.
  std::string dump() const;
  static FeatureSpace parse_dump(std::string_view text, std::string_view source = "<features>");

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, std::size_t> index_;
  bool frozen_ = false;
};

// Flag plus left/middle/right/all bags.
FeatureBag bow_bag(const RelationInstance& instance);

// For every window of n tokens: "first last". Requires n >= 3.
std::vector<std::string> skip_ngrams(std::span<const std::string> tokens,
                                     std::size_t n);

// Sentence with each mention collapsed to <NAME> / <FILLER>.
std::vector<std::string> placeholder_tokens(const RelationInstance& instance);

// bow_bag plus skip3/skip4/skip5 features over placeholder_tokens.
FeatureBag skip_bag(const RelationInstance& instance);

FeatureBag feature_bag(const RelationInstance& instance, FeatureKind kind);

SparseVector bow_features(const RelationInstance& instance,
                          const FeatureSpace& space,
                          Weighting weighting = Weighting::l2_counts);
SparseVector skip_feature_vector(const RelationInstance& instance,
                                 const FeatureSpace& space,
                                 Weighting weighting = Weighting::l2_counts);

}  // namespace relclass
