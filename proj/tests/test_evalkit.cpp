#include <doctest.h>

#include <cmath>
#include <set>

#include "helpers.hpp"
#include "relclass/evalkit.hpp"

using namespace relclass;
using testutil::make_instance;

TEST_CASE("slot metric arithmetic") {
  SlotMetrics m;
  m.add(true, true);
  m.add(true, false);
  m.add(false, true);
  m.add(false, false);
  CHECK(m.tp == 1);
  CHECK(m.fp == 1);
  CHECK(m.fn == 1);
  CHECK(m.precision() == 0.5);
  CHECK(m.recall() == 0.5);
  CHECK(m.f1() == 0.5);
  SlotMetrics empty;
  CHECK(empty.f1() == 0.0);
  CHECK(empty.precision() == 0.0);
}

TEST_CASE("evaluate examples") {
  std::vector<RelationInstance> insts;
  for (int i = 0; i < 6; ++i) {
    insts.push_back(make_instance("A x B", {0, 1}, {2, 3}, i < 3 ? "per:spouse" : "per:age",
                                  i % 2 == 0));
  }
  std::vector<double> perfect;
  for (const auto& x : insts) perfect.push_back(x.positive ? 1.0 : 0.0);
  auto r = evaluate(insts, perfect);
  CHECK(r.per_slot.size() == 2);
  CHECK(r.macro_f1 == 1.0);
  for (const auto& [slot, m] : r.per_slot) CHECK(m.f1() == 1.0);

  std::vector<double> none(insts.size(), 0.0);
  auto z = evaluate(insts, none);
  CHECK(z.macro_f1 == 0.0);
  CHECK(z.per_slot.at("per:spouse").recall() == 0.0);

  // Score equal to the threshold counts as positive.
  std::vector<double> half(insts.size(), 0.5);
  CHECK(evaluate(insts, half).per_slot.at("per:spouse").fp == 1);
  CHECK(evaluate(insts, half, 0.6).per_slot.at("per:spouse").fp == 0);

  // Macro average is unweighted over slots.
  std::vector<double> one_slot = perfect;
  for (int i = 3; i < 6; ++i) one_slot[i] = 0.0;
  CHECK(evaluate(insts, one_slot).macro_f1 == 0.5);

  CHECK_THROWS_AS(evaluate(insts, std::vector<double>(2, 0.0)), Error);
  std::map<std::size_t, double> partial = {{0, 1.0}, {1, 0.0}};
  CHECK_THROWS_AS(evaluate(insts, partial), Error);
  std::map<std::size_t, double> full;
  for (std::size_t i = 0; i < insts.size(); ++i) full[i] = perfect[i];
  CHECK(evaluate(insts, full).macro_f1 == 1.0);
}

TEST_CASE("property: evaluate is order invariant and bounded") {
  Rng rng(71);
  const std::vector<std::string> slots = {"a:x", "b:y", "c:z"};
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<RelationInstance> insts;
    std::vector<double> scores;
    const std::size_t n = 1 + rng.below(40);
    for (std::size_t i = 0; i < n; ++i) {
      insts.push_back(testutil::random_instance(rng, slots[rng.below(3)]));
      scores.push_back(rng.uniform());
    }
    auto base = evaluate(insts, scores);
    std::vector<std::size_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;
    rng.shuffle(perm);
    std::vector<RelationInstance> pi;
    std::vector<double> ps;
    for (auto i : perm) {
      pi.push_back(insts[i]);
      ps.push_back(scores[i]);
    }
    auto shuffled = evaluate(pi, ps);
    CHECK(shuffled.macro_f1 == base.macro_f1);
    for (const auto& [slot, m] : base.per_slot) {
      const auto& s = shuffled.per_slot.at(slot);
      CHECK(s.tp == m.tp);
      CHECK(s.fp == m.fp);
      CHECK(s.fn == m.fn);
      CHECK(m.f1() >= 0.0);
      CHECK(m.f1() <= 1.0);
      if (m.tp == 0) CHECK(m.f1() == 0.0);
    }
  }
}

TEST_CASE("pearson examples") {
  CHECK(pearson(std::vector<double>{1, 2, 3}, std::vector<double>{2, 4, 6}) ==
        doctest::Approx(1.0).epsilon(1e-15));
  CHECK(pearson(std::vector<double>{1, 2, 3}, std::vector<double>{3, 2, 1}) ==
        doctest::Approx(-1.0).epsilon(1e-15));
  CHECK(pearson(std::vector<double>{1, 2, 3, 4}, std::vector<double>{1, 3, 2, 4}) ==
        doctest::Approx(0.8).epsilon(1e-15));
  CHECK_THROWS_AS(pearson(std::vector<double>{1, 1, 1}, std::vector<double>{1, 2, 3}), Error);
  CHECK_THROWS_AS(pearson(std::vector<double>{1}, std::vector<double>{1}), Error);
  CHECK_THROWS_AS(pearson(std::vector<double>{1, 2}, std::vector<double>{1, 2, 3}), Error);
}

TEST_CASE("property: pearson is invariant under positive affine maps") {
  Rng rng(72);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 2 + rng.below(20);
    std::vector<double> x(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = rng.uniform(-1, 1);
      y[i] = rng.uniform(-1, 1);
    }
    const double r = pearson(x, y);
    CHECK(r >= -1.0);
    CHECK(r <= 1.0);
    CHECK(pearson(x, x) == doctest::Approx(1.0).epsilon(1e-12));
    const double a = rng.uniform(0.1, 10.0);
    const double b = rng.uniform(-5.0, 5.0);
    std::vector<double> ax(n);
    for (std::size_t i = 0; i < n; ++i) ax[i] = a * x[i] + b;
    CHECK(std::abs(pearson(ax, y) - r) < 1e-12);
    CHECK(std::abs(pearson(x, ax) - 1.0) < 1e-12);
  }
}

namespace {

// Memorizes middle tokens seen only in positive training instances.
Predictor train_trigger_lexicon(std::span<const RelationInstance> train, std::uint64_t) {
  std::set<std::string> pos, neg;
  for (const auto& x : train) {
    for (const auto& t : split_contexts(x).middle) (x.positive ? pos : neg).insert(t);
  }
  std::set<std::string> lex;
  for (const auto& t : pos) {
    if (!neg.count(t)) lex.insert(t);
  }
  return [lex](const RelationInstance& x) {
    for (const auto& t : split_contexts(x).middle) {
      if (lex.count(t)) return 1.0;
    }
    return 0.0;
  };
}

std::vector<RelationInstance> genre_corpus(Rng& rng) {
  std::vector<RelationInstance> out;
  const std::vector<std::string> slots = {"per:spouse", "org:founded_by"};
  const std::map<std::pair<std::string, Genre>, std::string> trigger = {
      {{"per:spouse", Genre::news}, "married"},
      {{"per:spouse", Genre::web}, "hitched"},
      {{"org:founded_by", Genre::news}, "founded"},
      {{"org:founded_by", Genre::web}, "started"}};
  const std::vector<std::string> filler = {"met", "saw", "thanked", "called"};
  for (Split split : {Split::train, Split::dev, Split::eval}) {
    for (const auto& slot : slots) {
      for (int i = 0; i < 60; ++i) {
        const Genre genre = i % 3 == 0 ? Genre::web : Genre::news;
        const bool pos = i % 2 == 0;
        const std::string mid = pos ? trigger.at({slot, genre}) : filler[rng.below(4)];
        out.push_back(make_instance("X " + mid + " Y", {0, 1}, {2, 3}, slot, pos, genre, split));
      }
    }
  }
  return out;
}

}  // namespace

TEST_CASE("genre matrix shape, sizes and within-genre advantage") {
  Rng rng(73);
  auto corpus = genre_corpus(rng);
  std::vector<NamedTrainer> trainers = {{"lex", train_trigger_lexicon},
                                        {"lex2", train_trigger_lexicon}};
  auto m = genre_matrix(corpus, trainers, 5);
  CHECK(m.cells.size() == 2 * 2 * 2 * 2);
  CHECK(m.train_size.at("per:spouse") == 20);
  CHECK(m.train_size.at("org:founded_by") == 20);
  for (Split split : {Split::dev, Split::eval}) {
    for (const char* model : {"lex", "lex2"}) {
      for (Genre g : {Genre::news, Genre::web}) {
        const Genre other = g == Genre::news ? Genre::web : Genre::news;
        CHECK(m.cell(g, g, model, split).report.macro_f1 >=
              m.cell(g, other, model, split).report.macro_f1);
      }
      CHECK(m.cell(Genre::news, Genre::news, model, split).report.macro_f1 == 1.0);
      CHECK(m.cell(Genre::news, Genre::web, model, split).report.macro_f1 == 0.0);
    }
  }
  CHECK_THROWS_AS(m.cell(Genre::news, Genre::news, "missing", Split::dev), Error);

  std::vector<RelationInstance> news_only;
  for (const auto& x : corpus) {
    if (x.genre == Genre::news) news_only.push_back(x);
  }
  CHECK_THROWS_WITH_AS(genre_matrix(news_only, trainers, 5), doctest::Contains("web"), Error);
  CHECK_THROWS_AS(genre_matrix(corpus, std::vector<NamedTrainer>{}, 5), Error);
}

TEST_CASE("forum data counts as web") {
  Rng rng(74);
  auto corpus = genre_corpus(rng);
  for (auto& x : corpus) {
    if (x.genre == Genre::web) x.genre = Genre::forum;
  }
  auto m = genre_matrix(corpus, std::vector<NamedTrainer>{{"lex", train_trigger_lexicon}}, 5);
  CHECK(m.train_size.at("per:spouse") == 20);
  CHECK(m.cell(Genre::web, Genre::web, "lex", Split::eval).report.macro_f1 == 1.0);
}
