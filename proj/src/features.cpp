#include "relclass/features.hpp"

#include <algorithm>
#include <cmath>

namespace relclass {

std::string_view to_string(Weighting weighting) {
  switch (weighting) {
    case Weighting::counts: return "counts";
    case Weighting::binary: return "binary";
    case Weighting::l2_counts: return "l2-counts";
  }
  return "?";
}

Weighting parse_weighting(std::string_view text) {
  if (text == "counts") return Weighting::counts;
  if (text == "binary") return Weighting::binary;
  if (text == "l2-counts" || text == "l2_counts") return Weighting::l2_counts;
  throw Error("unknown weighting '" + std::string(text) + "'");
}

std::string_view to_string(FeatureKind kind) {
  return kind == FeatureKind::bow ? "bow" : "skip";
}

FeatureKind parse_feature_kind(std::string_view text) {
  if (text == "bow") return FeatureKind::bow;
  if (text == "skip") return FeatureKind::skip;
  throw Error("unknown feature kind '" + std::string(text) + "'");
}

SparseVector::SparseVector(std::vector<Entry> entries) {
  std::sort(entries.begin(), entries.end(),
            [](const Entry& a, const Entry& b) { return a.first < b.first; });
  for (const auto& e : entries) {
    if (!entries_.empty() && entries_.back().first == e.first) {
      entries_.back().second += e.second;
    } else {
      entries_.push_back(e);
    }
  }
  std::erase_if(entries_, [](const Entry& e) { return e.second == 0.0; });
}

double SparseVector::dot(std::span<const double> dense) const {
  double sum = 0.0;
  for (const auto& [idx, v] : entries_) {
    if (idx < dense.size()) sum += v * dense[idx];
  }
  return sum;
}

double SparseVector::dot(const SparseVector& other) const {
  double sum = 0.0;
  auto a = entries_.begin();
  auto b = other.entries_.begin();
  while (a != entries_.end() && b != other.entries_.end()) {
    if (a->first == b->first) {
      sum += a->second * b->second;
      ++a;
      ++b;
    } else if (a->first < b->first) {
      ++a;
    } else {
      ++b;
    }
  }
  return sum;
}

double SparseVector::squared_norm() const {
  double sum = 0.0;
  for (const auto& e : entries_) sum += e.second * e.second;
  return sum;
}

SparseVector SparseVector::scaled(double factor) const {
  std::vector<Entry> out(entries_);
  for (auto& e : out) e.second *= factor;
  return SparseVector(std::move(out));
}

void FeatureSpace::fit(const FeatureBag& bag) {
  if (frozen_) throw Error("feature space is frozen");
  for (const auto& [name, _] : bag) add(name);
}

std::size_t FeatureSpace::add(std::string_view name) {
  if (frozen_) throw Error("feature space is frozen");
  auto it = index_.find(std::string(name));
  if (it != index_.end()) return it->second;
  auto idx = names_.size();
  names_.emplace_back(name);
  index_.emplace(names_.back(), idx);
  return idx;
}

std::optional<std::size_t> FeatureSpace::index_of(std::string_view name) const {
  auto it = index_.find(std::string(name));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

SparseVector FeatureSpace::vectorize(const FeatureBag& bag,
                                     Weighting weighting) const {
  std::vector<SparseVector::Entry> entries;
  entries.reserve(bag.size());
  for (const auto& [name, count] : bag) {
    auto idx = index_of(name);
    if (!idx) continue;
    double w = weighting == Weighting::binary ? 1.0 : count;
    entries.emplace_back(static_cast<std::uint32_t>(*idx), w);
  }
  SparseVector vec(std::move(entries));
  if (weighting == Weighting::l2_counts) {
    double norm = std::sqrt(vec.squared_norm());
    if (norm > 0.0) vec = vec.scaled(1.0 / norm);
  }
  return vec;
}

std::string FeatureSpace::dump() const {
  std::string out;
  for (std::size_t i = 0; i < names_.size(); ++i) {
    out += std::to_string(i) + "\t" + names_[i] + "\n";
  }
  return out;
}

FeatureSpace FeatureSpace::parse_dump(std::string_view text, std::string_view source) {
  FeatureSpace space;
  LineReader reader(text);
  std::string_view line;
  while (reader.next(line)) {
    if (line.empty()) continue;
    auto tab = line.find('\t');
    if (tab == std::string_view::npos) {
      throw ParseError(source, reader.line_number(), "expected 'index<TAB>feature'");
    }
    long long idx = -1;
    try {
      idx = parse_int(line.substr(0, tab));
    } catch (const Error& e) {
      throw ParseError(source, reader.line_number(), e.what());
    }
    if (idx != static_cast<long long>(space.size()) ||
        space.add(line.substr(tab + 1)) != static_cast<std::size_t>(idx)) {
      throw ParseError(source, reader.line_number(), "non-sequential feature index");
    }
  }
  space.freeze();
  return space;
}

FeatureBag bow_bag(const RelationInstance& instance) {
  FeatureBag bag;
  auto ctx = split_contexts(instance);
  bag["flag:" + std::string(to_string(ctx.order))] = 1.0;
  for (const auto& t : ctx.left) bag["left:" + t] += 1.0;
  for (const auto& t : ctx.middle) bag["mid:" + t] += 1.0;
  for (const auto& t : ctx.right) bag["right:" + t] += 1.0;
  for (const auto& t : instance.tokens) bag["all:" + t] += 1.0;
  return bag;
}

std::vector<std::string> skip_ngrams(std::span<const std::string> tokens,
                                     std::size_t n) {
  if (n < 3) throw Error("skip n-grams require n >= 3");
  std::vector<std::string> out;
  if (tokens.size() < n) return out;
  out.reserve(tokens.size() - n + 1);
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    out.push_back(tokens[i] + " " + tokens[i + n - 1]);
  }
  return out;
}

std::vector<std::string> placeholder_tokens(const RelationInstance& instance) {
  std::vector<std::string> out;
  const auto& tokens = instance.tokens;
  for (std::size_t i = 0; i < tokens.size();) {
    if (i == instance.name.begin) {
      out.emplace_back("<NAME>");
      i = instance.name.end;
    } else if (i == instance.filler.begin) {
      out.emplace_back("<FILLER>");
      i = instance.filler.end;
    } else {
      out.push_back(tokens[i]);
      ++i;
    }
  }
  return out;
}

FeatureBag skip_bag(const RelationInstance& instance) {
  FeatureBag bag = bow_bag(instance);
  auto seq = placeholder_tokens(instance);
  for (std::size_t n = 3; n <= 5; ++n) {
    const std::string prefix = "skip" + std::to_string(n) + ":";
    for (const auto& g : skip_ngrams(seq, n)) bag[prefix + g] += 1.0;
  }
  return bag;
}

FeatureBag feature_bag(const RelationInstance& instance, FeatureKind kind) {
  return kind == FeatureKind::bow ? bow_bag(instance) : skip_bag(instance);
}

SparseVector bow_features(const RelationInstance& instance,
                          const FeatureSpace& space, Weighting weighting) {
  return space.vectorize(bow_bag(instance), weighting);
}

SparseVector skip_feature_vector(const RelationInstance& instance,
                                 const FeatureSpace& space, Weighting weighting) {
  return space.vectorize(skip_bag(instance), weighting);
}

}  // namespace relclass
