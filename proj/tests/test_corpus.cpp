#include <doctest.h>

#include <cmath>
#include <set>

#include "helpers.hpp"
#include "relclass/corpus.hpp"

using namespace relclass;
using testutil::make_instance;

TEST_CASE("derive_seed is stable and name-sensitive") {
  CHECK(derive_seed(42, "per:children") == derive_seed(42, "per:children"));
  CHECK(derive_seed(42, "per:children") != derive_seed(42, "per:spouse"));
  CHECK(derive_seed(42, "a") != derive_seed(43, "a"));
}

TEST_CASE("Rng streams repeat under the same seed") {
  Rng a(5), b(5);
  for (int i = 0; i < 100; ++i) CHECK(a.next() == b.next());
  Rng r(9);
  for (int i = 0; i < 1000; ++i) {
    const double u = r.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    CHECK(r.below(7) < 7);
  }
  CHECK_THROWS_AS(r.below(0), Error);
}

TEST_CASE("shortest decimal formatting round-trips exactly") {
  Rng r(3);
  for (int i = 0; i < 2000; ++i) {
    const double v = (r.uniform() - 0.5) * std::pow(10.0, static_cast<double>(r.below(40)) - 20.0);
    CHECK(parse_double(format_double(v)) == v);
    CHECK(parse_double(format_hex(v)) == v);
  }
  CHECK(format_double(0.1) == "0.1");
  CHECK(parse_double("0x1.8p+1") == 3.0);
  CHECK_THROWS_AS(parse_double("1.5x"), Error);
  CHECK_THROWS_AS(parse_double(""), Error);
}

TEST_CASE("parse_instances maps fields directly") {
  auto insts = parse_instances(
      "per:children\t1\tnews\tdev\tJohn Doe|0,2\tJane Doe|4,6\tJohn Doe welcomed daughter "
      "Jane Doe yesterday\n");
  REQUIRE(insts.size() == 1);
  const auto& inst = insts[0];
  CHECK(inst.slot == "per:children");
  CHECK(inst.positive);
  CHECK(inst.genre == Genre::news);
  CHECK(inst.split == Split::dev);
  CHECK(inst.order() == Order::name_first);
  auto ctx = split_contexts(inst);
  CHECK(ctx.middle == std::vector<std::string>{"welcomed", "daughter"});
  CHECK(ctx.left.empty());
  CHECK(ctx.right == std::vector<std::string>{"yesterday"});
}

TEST_CASE("filler before name gives filler-first order") {
  auto insts = parse_instances(
      "# comment\nper:spouse\t0\tweb\ttrain\tBob|4,5\tAnn|0,1\tAnn is married to Bob\n");
  REQUIRE(insts.size() == 1);
  CHECK(insts[0].order() == Order::filler_first);
  auto ctx = split_contexts(insts[0]);
  CHECK(ctx.order == Order::filler_first);
  CHECK(ctx.middle == std::vector<std::string>{"is", "married", "to"});
}

TEST_CASE("malformed instance lines report their line number") {
  const std::string good = "s\t1\tnews\ttrain\tA|0,1\tB|2,3\tA x B\n";
  auto line_of = [](const std::string& text) -> std::size_t {
    try {
      parse_instances(text, "f.tsv");
    } catch (const ParseError& e) {
      CHECK(std::string(e.what()).rfind("f.tsv:", 0) == 0);
      return e.line();
    }
    return 0;
  };
  CHECK(line_of(good + "s\t1\tnews\ttrain\tA|0,2\tB|1,3\tA x B\n") == 2);  // overlap
  CHECK(line_of(good + good + "s\t1\tnews\ttrain\tA|0,1\tA x B\n") == 3);   // field count
  CHECK(line_of("s\t1\tnews\ttrain\tA|0,1\tB|2,9\tA x B\n") == 1);          // out of bounds
  CHECK(line_of("s\t1\tblog\ttrain\tA|0,1\tB|2,3\tA x B\n") == 1);          // genre
  CHECK(line_of("s\t1\tnews\ttest\tA|0,1\tB|2,3\tA x B\n") == 1);           // split
  CHECK(line_of("s\t1\tnews\ttrain\tA|1,1\tB|2,3\tA x B\n") == 1);          // empty span
  CHECK(line_of("s\t2\tnews\ttrain\tA|0,1\tB|2,3\tA x B\n") == 1);          // label
}

TEST_CASE("split_contexts examples") {
  auto a = make_instance("Steve Jobs founded Apple in 1976", {0, 2}, {3, 4});
  auto ca = split_contexts(a);
  CHECK(ca.left.empty());
  CHECK(ca.middle == std::vector<std::string>{"founded"});
  CHECK(ca.right == std::vector<std::string>{"in", "1976"});
  CHECK(ca.order == Order::name_first);

  auto b = make_instance("Ann Bob met", {0, 1}, {1, 2});
  CHECK(split_contexts(b).middle.empty());

  auto c = make_instance("yes Apple was founded by Steve Jobs today", {5, 7}, {1, 2});
  auto cc = split_contexts(c);
  CHECK(cc.order == Order::filler_first);
  CHECK(cc.left == std::vector<std::string>{"yes"});
  CHECK(cc.middle == std::vector<std::string>{"was", "founded", "by"});
  CHECK(cc.right == std::vector<std::string>{"today"});
}

TEST_CASE("property: contexts plus mentions reconstruct the sentence") {
  Rng rng(11);
  for (int i = 0; i < 500; ++i) {
    auto inst = testutil::random_instance(rng);
    validate(inst);
    auto ctx = split_contexts(inst);
    std::vector<std::string> rebuilt = ctx.left;
    const auto& e = inst.earlier();
    const auto& l = inst.later();
    rebuilt.insert(rebuilt.end(), inst.tokens.begin() + e.begin, inst.tokens.begin() + e.end);
    rebuilt.insert(rebuilt.end(), ctx.middle.begin(), ctx.middle.end());
    rebuilt.insert(rebuilt.end(), inst.tokens.begin() + l.begin, inst.tokens.begin() + l.end);
    rebuilt.insert(rebuilt.end(), ctx.right.begin(), ctx.right.end());
    CHECK(rebuilt == inst.tokens);
  }
}

TEST_CASE("property: serialize then parse is the identity") {
  Rng rng(12);
  std::vector<RelationInstance> insts;
  for (int i = 0; i < 200; ++i) insts.push_back(testutil::random_instance(rng));
  const auto text = serialize_instances(insts);
  auto back = parse_instances(text);
  CHECK(back == insts);
  CHECK(serialize_instances(back) == text);
}

TEST_CASE("surface strings may contain the separator character") {
  auto inst = make_instance("a|b said hi", {0, 1}, {2, 3});
  auto back = parse_instances(serialize_instance(inst));
  REQUIRE(back.size() == 1);
  CHECK(back[0].name_surface == "a|b");
}

TEST_CASE("vocabulary reserves PAD and UNK") {
  Vocabulary v;
  CHECK(v.size() == 2);
  CHECK(v.token(Vocabulary::kPad) == "<PAD>");
  CHECK(v.token(Vocabulary::kUnk) == "<UNK>");
  CHECK(v.add("apple") == 2);
  CHECK(v.add("apple") == 2);
  CHECK(v.index_of("pear") == Vocabulary::kUnk);
  CHECK(v.add("<PAD>") == Vocabulary::kPad);
  auto w = Vocabulary::parse(v.serialize());
  CHECK(w.size() == v.size());
  CHECK(w.hash() == v.hash());
  CHECK(w.index_of("apple") == 2);
  Vocabulary other;
  other.add("pear");
  CHECK(other.hash() != v.hash());
}

TEST_CASE("embedding loader") {
  Vocabulary v;
  v.add("king");
  v.add("queen");
  const std::string file = "2 3\nking 0.5 -1 2\nzebra 1 1 1\n";
  auto t = load_embeddings(file, v, 7);
  CHECK(t.rows() == v.size());
  CHECK(t.dim() == 3);
  CHECK(t.row(v.index_of("king"))[0] == 0.5);
  CHECK(t.row(v.index_of("king"))[1] == -1.0);
  CHECK(t.row(v.index_of("king"))[2] == 2.0);
  for (double x : t.row(Vocabulary::kPad)) CHECK(x == 0.0);
  for (double x : t.row(v.index_of("queen"))) {
    CHECK(x >= -kOovInitRange);
    CHECK(x <= kOovInitRange);
  }
  CHECK(load_embeddings(file, v, 7) == t);
  CHECK(load_embeddings(file, v, 8) != t);
}

TEST_CASE("embedding loader errors") {
  Vocabulary v;
  std::string row49 = "1 50\nword";
  for (int i = 0; i < 49; ++i) row49 += " 0.1";
  CHECK_THROWS_WITH_AS(load_embeddings(row49 + "\n", v, 1, "e.txt"),
                       doctest::Contains("dimension mismatch"), ParseError);
  CHECK_THROWS_AS(load_embeddings("1 2\nword 0.1 abc\n", v, 1), ParseError);
  CHECK_THROWS_AS(load_embeddings("", v, 1), ParseError);
}

TEST_CASE("random embeddings stay in range with a zero PAD row") {
  Vocabulary v;
  for (int i = 0; i < 20; ++i) v.add("w" + std::to_string(i));
  auto t = random_embeddings(v, 50, 3);
  for (std::size_t r = 0; r < t.rows(); ++r) {
    for (double x : t.row(r)) {
      if (r == Vocabulary::kPad) {
        CHECK(x == 0.0);
      } else {
        CHECK(std::abs(x) <= kOovInitRange);
      }
    }
  }
}
