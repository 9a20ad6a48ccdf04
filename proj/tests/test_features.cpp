#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "helpers.hpp"
#include "relclass/features.hpp"

using namespace relclass;
using testutil::make_instance;

namespace {

std::vector<std::string> toks(const std::string& s) { return split_whitespace(s); }

bool has(const FeatureBag& bag, const std::string& f) { return bag.count(f) > 0; }

}  // namespace

TEST_CASE("bow bag unrolls the definition") {
  auto inst = make_instance("Steve Jobs founded Apple in 1976", {0, 2}, {3, 4});
  auto bag = bow_bag(inst);
  FeatureBag expected = {{"flag:name-first", 1},  {"mid:founded", 1}, {"right:in", 1},
                         {"right:1976", 1},       {"all:Steve", 1},   {"all:Jobs", 1},
                         {"all:founded", 1},      {"all:Apple", 1},   {"all:in", 1},
                         {"all:1976", 1}};
  CHECK(bag == expected);
}

TEST_CASE("bow bag counts repeats and handles empty contexts") {
  auto inst = make_instance("A of of B", {0, 1}, {3, 4});
  CHECK(bow_bag(inst).at("mid:of") == 2.0);
  auto bare = make_instance("A B", {1, 2}, {0, 1});
  FeatureBag expected = {{"flag:filler-first", 1}, {"all:A", 1}, {"all:B", 1}};
  CHECK(bow_bag(bare) == expected);
}

TEST_CASE("skip n-gram examples") {
  auto out = skip_ngrams(toks(", founder and director of"), 4);
  CHECK(out == std::vector<std::string>{", director", "founder of"});
  CHECK(skip_ngrams(toks("a b c"), 3) == std::vector<std::string>{"a c"});
  CHECK(skip_ngrams(toks("a b"), 3).empty());
  CHECK_THROWS_AS(skip_ngrams(toks("a b c"), 2), Error);
}

TEST_CASE("property: skip n-grams match brute-force window enumeration") {
  Rng rng(31);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<std::string> t;
    for (std::size_t i = 0, n = rng.below(12); i < n; ++i) t.push_back(std::to_string(rng.below(5)));
    const std::size_t n = 3 + rng.below(3);
    auto got = skip_ngrams(t, n);
    std::vector<std::string> want;
    for (std::size_t s = 0; s + n <= t.size(); ++s) want.push_back(t[s] + " " + t[s + n - 1]);
    CHECK(got == want);
    CHECK(got.size() == (t.size() >= n ? t.size() - n + 1 : 0));
  }
}

TEST_CASE("skip features use argument placeholders") {
  auto inst = make_instance("X , founder and director of Y", {6, 7}, {0, 1});
  CHECK(placeholder_tokens(inst) ==
        toks("<FILLER> , founder and director of <NAME>"));
  auto bag = skip_bag(inst);
  CHECK(has(bag, "skip4:founder of"));
  CHECK(has(bag, "skip3:<FILLER> founder"));
  CHECK(has(bag, "skip5:, of"));

  auto adjacent = make_instance("Ann Bob", {0, 1}, {1, 2});
  for (const auto& [f, _] : skip_bag(adjacent)) CHECK(f.rfind("skip", 0) != 0);
}

TEST_CASE("property: bow features are the non-skip part of skip features") {
  Rng rng(32);
  for (int trial = 0; trial < 300; ++trial) {
    auto inst = testutil::random_instance(rng);
    auto bow = bow_bag(inst);
    FeatureBag restricted;
    for (const auto& [f, v] : skip_bag(inst)) {
      if (f.rfind("skip", 0) != 0) restricted[f] = v;
    }
    CHECK(restricted == bow);
    CHECK(skip_bag(inst) == skip_bag(inst));
  }
}

TEST_CASE("sparse vectors drop zeros and sum duplicates") {
  SparseVector v({{3, 1.0}, {1, 0.0}, {3, 2.0}, {0, -1.0}});
  REQUIRE(v.nnz() == 2);
  CHECK(v.entries()[0] == SparseVector::Entry{0, -1.0});
  CHECK(v.entries()[1] == SparseVector::Entry{3, 3.0});
  std::vector<double> dense = {2, 0, 0, 1};
  CHECK(v.dot(dense) == 1.0);
  CHECK(v.squared_norm() == 10.0);
  SparseVector w({{3, 2.0}, {5, 7.0}});
  CHECK(v.dot(w) == 6.0);
  CHECK(SparseVector({{1, 1.0}, {1, -1.0}}).nnz() == 0);
}

TEST_CASE("feature space freezing and weighting") {
  FeatureSpace space;
  space.fit({{"a", 1}, {"b", 2}});
  space.freeze();
  CHECK_THROWS_AS(space.fit({{"c", 1}}), Error);
  CHECK(space.size() == 2);
  auto v = space.vectorize({{"a", 3}, {"b", 4}, {"zzz", 9}}, Weighting::counts);
  CHECK(v.nnz() == 2);
  CHECK(v.squared_norm() == 25.0);
  auto l2 = space.vectorize({{"a", 3}, {"b", 4}}, Weighting::l2_counts);
  CHECK(std::abs(l2.squared_norm() - 1.0) < 1e-15);
  auto bin = space.vectorize({{"a", 3}, {"b", 4}}, Weighting::binary);
  CHECK(bin.squared_norm() == 2.0);
  CHECK(space.vectorize({{"zzz", 1}}, Weighting::l2_counts).nnz() == 0);
  CHECK(parse_weighting("l2-counts") == Weighting::l2_counts);

  auto back = FeatureSpace::parse_dump(space.dump());
  CHECK(back.size() == 2);
  CHECK(back.index_of("b") == space.index_of("b"));
  CHECK_FALSE(back.index_of("c").has_value());
}

TEST_CASE("property: fitted space loses nothing on its own corpus") {
  Rng rng(33);
  std::vector<RelationInstance> train, unseen;
  for (int i = 0; i < 100; ++i) train.push_back(testutil::random_instance(rng));
  for (int i = 0; i < 100; ++i) unseen.push_back(testutil::random_instance(rng));
  FeatureSpace space;
  for (const auto& inst : train) space.fit(skip_bag(inst));
  space.freeze();
  for (const auto& inst : train) {
    CHECK(space.vectorize(skip_bag(inst), Weighting::counts).nnz() == skip_bag(inst).size());
  }
  for (const auto& inst : unseen) {
    auto bag = skip_bag(inst);
    std::size_t known = 0;
    for (const auto& [f, _] : bag) known += space.index_of(f).has_value();
    CHECK(space.vectorize(bag, Weighting::counts).nnz() == known);
  }
}
