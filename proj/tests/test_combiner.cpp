#include <doctest.h>

#include <cmath>
#include <functional>

#include "relclass/combiner.hpp"

using namespace relclass;

namespace {

// Brute force: all integer compositions of s into m parts, as weight vectors.
std::vector<std::vector<double>> compositions(std::size_t m, std::size_t s) {
  std::vector<std::vector<double>> out;
  std::vector<std::size_t> cur;
  std::function<void(std::size_t)> rec = [&](std::size_t left) {
    if (cur.size() + 1 == m) {
      cur.push_back(left);
      std::vector<double> w;
      for (auto c : cur) w.push_back(static_cast<double>(c) / static_cast<double>(s));
      out.push_back(w);
      cur.pop_back();
      return;
    }
    for (std::size_t c = 0; c <= left; ++c) {
      cur.push_back(c);
      rec(left - c);
      cur.pop_back();
    }
  };
  rec(s);
  return out;
}

std::size_t binomial(std::size_t n, std::size_t k) {
  std::size_t r = 1;
  for (std::size_t i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

ScoreTable random_table(Rng& rng, std::size_t models, std::size_t rows) {
  ScoreTable t;
  for (std::size_t m = 0; m < models; ++m) t.models.push_back("m" + std::to_string(m));
  for (std::size_t i = 0; i < rows; ++i) {
    ScoreRow r;
    r.slot = "s";
    r.gold = rng.below(3) == 0;
    for (std::size_t m = 0; m < models; ++m) r.scores.push_back(rng.uniform());
    t.rows.push_back(r);
  }
  return t;
}

}  // namespace

TEST_CASE("combine examples") {
  CHECK(combine(std::vector<double>{0.3, 0.9, 0.1}, {{1.0, 0.0, 0.0}, 0.1}).value() == 0.3);
  CHECK(combine(std::vector<double>{0.4, 0.8}, {{0.5, 0.5}, 0.1}).value() ==
        doctest::Approx(0.6).epsilon(1e-15));
  CHECK_THROWS_AS(combine(std::vector<double>{0.4, 0.8}, {{0.4, 0.4}, 0.1}), Error);
  CHECK_THROWS_AS(combine(std::vector<double>{0.4, 0.8}, {{0.55, 0.45}, 0.1}), Error);
  CHECK_THROWS_AS(combine(std::vector<double>{0.4}, {{0.5, 0.5}, 0.1}), Error);
  CHECK_THROWS_AS(combine(std::vector<double>{0.4, 0.6}, {{1.5, -0.5}, 0.1}), Error);
}

TEST_CASE("property: combine is convex and monotone") {
  Rng rng(81);
  const auto lattice = simplex_lattice(3, 0.1);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<double> q = {rng.uniform(), rng.uniform(), rng.uniform()};
    const auto& w = lattice[rng.below(lattice.size())];
    const double v = combine(q, w).value();
    CHECK(v >= *std::min_element(q.begin(), q.end()) - 1e-15);
    CHECK(v <= *std::max_element(q.begin(), q.end()) + 1e-15);
    auto up = q;
    const auto m = rng.below(3);
    up[m] = std::min(1.0, up[m] + rng.uniform(0.0, 0.5));
    CHECK(combine(up, w).value() >= v);
  }
}

TEST_CASE("simplex lattice size and order") {
  CHECK(simplex_lattice(3, 0.1).size() == 66);
  CHECK(simplex_lattice(1, 0.1).size() == 1);
  auto two = simplex_lattice(2, 0.1);
  REQUIRE(two.size() == 11);
  CHECK(two.front().alpha == std::vector<double>{1.0, 0.0});
  CHECK(two.back().alpha == std::vector<double>{0.0, 1.0});
  for (std::size_t m = 1; m <= 4; ++m) {
    for (std::size_t s = 1; s <= 10; ++s) {
      const double step = 1.0 / static_cast<double>(s);
      auto lattice = simplex_lattice(m, step);
      auto brute = compositions(m, s);
      CHECK(lattice.size() == binomial(s + m - 1, m - 1));
      CHECK(lattice.size() == brute.size());
      for (std::size_t i = 0; i + 1 < lattice.size(); ++i) {
        CHECK(lattice[i].alpha > lattice[i + 1].alpha);
      }
      std::sort(brute.begin(), brute.end(), std::greater<>());
      for (std::size_t i = 0; i < brute.size(); ++i) {
        for (std::size_t j = 0; j < m; ++j) {
          CHECK(lattice[i].alpha[j] == doctest::Approx(brute[i][j]).epsilon(1e-12));
        }
        CHECK_NOTHROW(lattice[i].validate());
      }
    }
  }
  CHECK_THROWS_AS(simplex_lattice(0, 0.1), Error);
  CHECK_THROWS_AS(simplex_lattice(2, 0.3), Error);
}

TEST_CASE("grid search examples") {
  Rng rng(82);
  auto single = random_table(rng, 1, 30);
  CHECK(grid_search(single).weights.alpha == std::vector<double>{1.0});

  // Model 1 perfect, model 2 random.
  ScoreTable t = random_table(rng, 2, 60);
  for (auto& r : t.rows) r.scores[0] = r.gold ? 0.9 : 0.1;
  auto best = grid_search(t);
  CHECK(best.weights.alpha == std::vector<double>{1.0, 0.0});
  CHECK(best.dev_f1 == 1.0);
  CHECK(best.lattice_size == 11);

  // Oracle: score every lattice point, first maximum wins.
  auto t3 = random_table(rng, 3, 80);
  double oracle_best = -1.0;
  CombinationWeights oracle_w;
  for (const auto& w : simplex_lattice(3, 0.1)) {
    const double f = combined_f1(t3, w);
    if (f > oracle_best) {
      oracle_best = f;
      oracle_w = w;
    }
  }
  auto found = grid_search(t3);
  CHECK(found.lattice_size == 66);
  CHECK(found.dev_f1 == oracle_best);
  CHECK(found.weights == oracle_w);

  ScoreTable empty;
  empty.models = {"a", "b"};
  CHECK_THROWS_AS(grid_search(empty), Error);
}

TEST_CASE("property: grid-searched dev F1 dominates every member") {
  Rng rng(83);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t m = 1 + rng.below(3);
    auto t = random_table(rng, m, 5 + rng.below(40));
    auto best = grid_search(t);
    for (std::size_t c = 0; c < m; ++c) CHECK(best.dev_f1 >= column_f1(t, c));
  }
}

TEST_CASE("weight histogram") {
  std::map<std::string, CombinationWeights> per_slot;
  for (int i = 0; i < 24; ++i) {
    per_slot["s" + std::to_string(i)] = {{1.0, 0.0}, 0.1};
  }
  auto h = weight_histogram({"svm", "cnn"}, per_slot);
  CHECK(h.at("cnn").at(0.0) == 24);
  CHECK(h.at("svm").at(1.0) == 24);

  Rng rng(84);
  auto lattice = simplex_lattice(3, 0.1);
  std::map<std::string, CombinationWeights> mixed;
  for (int i = 0; i < 17; ++i) mixed["s" + std::to_string(i)] = lattice[rng.below(lattice.size())];
  auto hm = weight_histogram({"a", "b", "c"}, mixed);
  for (const auto& [model, counts] : hm) {
    std::size_t total = 0;
    for (const auto& [w, n] : counts) total += n;
    CHECK(total == 17);
  }
  CHECK_THROWS_AS(weight_histogram({"a", "b"}, mixed), Error);
}

TEST_CASE("score tables parse, serialize and merge") {
  const char* text = "slot\tgold\tsvm\nper:age\t1\t0.75\nper:age\t0\t0.25\norg:x\t1\t1\n";
  auto t = parse_score_table(text);
  CHECK(t.models == std::vector<std::string>{"svm"});
  REQUIRE(t.rows.size() == 3);
  CHECK(t.rows[0].gold);
  CHECK(t.rows[1].scores[0] == 0.25);
  CHECK(parse_score_table(serialize_score_table(t)).rows.size() == 3);
  CHECK(serialize_score_table(parse_score_table(serialize_score_table(t))) ==
        serialize_score_table(t));
  CHECK(t.slots() == std::vector<std::string>{"org:x", "per:age"});
  CHECK(t.for_slot("per:age").rows.size() == 2);

  auto u = parse_score_table("slot\tgold\tcnn\nper:age\t1\t0.5\nper:age\t0\t0.5\norg:x\t1\t0\n");
  std::vector<ScoreTable> both = {t, u};
  auto merged = ScoreTable::merge(both);
  CHECK(merged.models == std::vector<std::string>{"svm", "cnn"});
  CHECK(merged.rows[2].scores == std::vector<double>{1.0, 0.0});

  auto v = parse_score_table("slot\tgold\tcnn\nper:age\t0\t0.5\nper:age\t0\t0.5\norg:x\t1\t0\n");
  std::vector<ScoreTable> clash = {t, v};
  CHECK_THROWS_WITH_AS(ScoreTable::merge(clash), doctest::Contains("mismatch"), Error);
  auto w = parse_score_table("slot\tgold\tcnn\nper:age\t1\t0.5\n");
  std::vector<ScoreTable> short_tables = {t, w};
  CHECK_THROWS_WITH_AS(ScoreTable::merge(short_tables), doctest::Contains("mismatch"), Error);

  CHECK_THROWS_AS(parse_score_table("slot\tlabel\tsvm\n"), ParseError);
  CHECK_THROWS_AS(parse_score_table("slot\tgold\tsvm\ns\t2\t0.5\n"), ParseError);
  CHECK_THROWS_AS(parse_score_table("slot\tgold\tsvm\ns\t1\t1.5\n"), Error);
  CHECK_THROWS_AS(parse_score_table("slot\tgold\tsvm\ns\t1\n"), ParseError);
}
