#include <doctest.h>

#include <algorithm>
#include <map>
#include <set>

#include "helpers.hpp"
#include "relclass/distsup.hpp"

using namespace relclass;

namespace {

const char* kKb =
    "# subject\trelation\tobject\ttype\n"
    "Ann Lee\tper:spouse\tBo Chan\tPER\n"
    "Cy Diaz\tper:spouse\tDee Ford\tPER\n"
    "Eve Gray\tper:spouse\tFinn Hale\tPER\n"
    "Ann Lee\tper:date_of_birth\t3 May 1950\tDATE\n"
    "Cy Diaz\tper:date_of_birth\t9 June 1961\tDATE\n"
    "Eve Gray\tper:date_of_birth\t1 July 1977\tDATE\n"
    "Ann Lee\tper:city_of_birth\tOslo\tLOC\n"
    "Cy Diaz\tper:city_of_birth\tLima\tLOC\n"
    "Eve Gray\tper:country_of_birth\tPeru\tLOC\n"
    "Ann Lee\tper:country_of_birth\tNorway\tLOC\n";

const char* kTemplates =
    "per:spouse\tnews\t{SUBJ} married {OBJ} in a quiet ceremony .\n"
    "per:spouse\tweb\tlol {SUBJ} got hitched to {OBJ} !!\n"
    "per:date_of_birth\tnews\t{SUBJ} was born on {OBJ} .\n"
    "per:date_of_birth\tweb\t{SUBJ} bday is {OBJ} yay\n"
    "per:city_of_birth\tnews\t{SUBJ} , a native of {OBJ} , spoke .\n"
    "per:country_of_birth\tnews\t{SUBJ} hails from {DIST} near {OBJ} .\n"
    "*\tnews\t{SUBJ} met {OBJ} at the summit .\n"
    "*\tweb\t{SUBJ} and {OBJ} lol\n";

GeneratorConfig base_config(std::uint64_t seed = 11) {
  GeneratorConfig c;
  c.templates = parse_templates(kTemplates);
  c.train_positives = 40;
  c.dev_positives = 10;
  c.eval_positives = 12;
  c.seed = seed;
  return c;
}

struct Counts {
  std::size_t pos = 0;
  std::size_t neg = 0;
  std::size_t noisy = 0;
};

}  // namespace

TEST_CASE("kb and template parsing") {
  auto kb = parse_kb(kKb);
  CHECK(kb.size() == 10);
  CHECK(kb[3].object == "3 May 1950");
  CHECK(kb[3].object_type == NeType::DATE);
  CHECK_THROWS_AS(parse_kb("a\tb\tc\n"), ParseError);
  CHECK_THROWS_AS(parse_kb("a\tb\tc\tPLANET\n"), Error);
  auto t = parse_templates(kTemplates);
  CHECK(t.size() == 8);
  CHECK(trigger_phrase(t[0]) == "married");
  CHECK(trigger_phrase(t[5]) == "hails from * near");
  CHECK(trigger_phrase(t[4]) == ", a native of");
  CHECK_THROWS_AS(parse_templates("per:spouse\tnews\t{SUBJ} loves him\n"), Error);
}

TEST_CASE("one negative ratio per slot and split; noise in training positives only") {
  auto kb = parse_kb(kKb);
  auto cfg = base_config();
  auto corpus = generate_corpus(kb, cfg);
  REQUIRE(corpus.noisy.size() == corpus.instances.size());
  std::map<std::pair<std::string, Split>, Counts> counts;
  for (std::size_t i = 0; i < corpus.instances.size(); ++i) {
    const auto& inst = corpus.instances[i];
    CHECK_NOTHROW(validate(inst));
    auto& c = counts[{inst.slot, inst.split}];
    (inst.positive ? c.pos : c.neg)++;
    if (corpus.noisy[i]) {
      CHECK(inst.positive);
      ++c.noisy;
    }
  }
  CHECK(counts.size() == 4 * 3);
  for (const auto& [key, c] : counts) {
    const std::size_t expected_pos =
        key.second == Split::train ? 40 : (key.second == Split::dev ? 10 : 12);
    CHECK(c.pos == expected_pos);
    CHECK(c.neg == 4 * expected_pos);
    CHECK(c.noisy == (key.second == Split::train ? 6u : 0u));
  }
}

TEST_CASE("negatives never carry the gold object and keep its entity type") {
  auto kb = parse_kb(kKb);
  auto corpus = generate_corpus(kb, base_config());
  std::set<std::tuple<std::string, std::string, std::string>> gold;
  std::map<std::string, std::set<std::string>> by_type;
  std::map<std::string, NeType> slot_type;
  for (const auto& t : kb) {
    gold.insert({t.subject, t.relation, t.object});
    by_type[std::string(to_string(t.object_type))].insert(t.object);
    slot_type[t.relation] = t.object_type;
  }
  for (const auto& inst : corpus.instances) {
    const auto& type_pool = by_type[std::string(to_string(slot_type[inst.slot]))];
    CHECK(type_pool.count(inst.filler_surface) == 1);
    const bool is_gold = gold.count({inst.name_surface, inst.slot, inst.filler_surface}) > 0;
    CHECK(is_gold == inst.positive);
    std::vector<std::string> filler_tokens(inst.tokens.begin() + inst.filler.begin,
                                           inst.tokens.begin() + inst.filler.end);
    CHECK(join(filler_tokens, " ") == inst.filler_surface);
  }
}

TEST_CASE("without noise every positive realizes its own relation") {
  auto kb = parse_kb(kKb);
  auto cfg = base_config();
  cfg.noise_rate = 0.0;
  auto corpus = generate_corpus(kb, cfg);
  auto patterns = trigger_patterns(cfg.templates);
  CHECK(std::none_of(corpus.noisy.begin(), corpus.noisy.end(), [](bool b) { return b; }));
  for (const auto& inst : corpus.instances) {
    // Triggers are disjoint across slots, so the slot's own patterns decide.
    CHECK(classify_pattern(patterns, inst).positive() == inst.positive);
  }

  cfg.noise_rate = 1.0;
  auto noisy = generate_corpus(kb, cfg);
  for (std::size_t i = 0; i < noisy.instances.size(); ++i) {
    const auto& inst = noisy.instances[i];
    if (inst.split == Split::train && inst.positive) {
      CHECK(noisy.noisy[i]);
      CHECK_FALSE(classify_pattern(patterns, inst).positive());
    }
  }
}

TEST_CASE("genre proportions follow the configured mix") {
  auto kb = parse_kb(kKb);
  auto cfg = base_config();
  cfg.train_positives = 400;
  cfg.eval_positives = 400;
  auto corpus = generate_corpus(kb, cfg);
  std::map<Split, std::pair<double, double>> web;  // web, total
  for (const auto& inst : corpus.instances) {
    auto& w = web[inst.split];
    w.second += 1;
    if (inst.genre == Genre::web) w.first += 1;
  }
  CHECK(web[Split::train].first / web[Split::train].second == doctest::Approx(0.125).epsilon(0.2));
  CHECK(web[Split::eval].first / web[Split::eval].second == doctest::Approx(0.266).epsilon(0.2));
}

TEST_CASE("generation is deterministic under the seed") {
  auto kb = parse_kb(kKb);
  auto a = generate_corpus(kb, base_config(5));
  auto b = generate_corpus(kb, base_config(5));
  auto c = generate_corpus(kb, base_config(6));
  CHECK(serialize_instances(a.instances) == serialize_instances(b.instances));
  CHECK(a.noisy == b.noisy);
  CHECK(serialize_instances(a.instances) != serialize_instances(c.instances));
}

TEST_CASE("generator errors") {
  auto kb = parse_kb(kKb);
  auto cfg = base_config();
  cfg.templates.erase(std::remove_if(cfg.templates.begin(), cfg.templates.end(),
                                     [](const SentenceTemplate& t) {
                                       return t.slot == "per:date_of_birth";
                                     }),
                      cfg.templates.end());
  CHECK_THROWS_WITH_AS(generate_corpus(kb, cfg), doctest::Contains("per:date_of_birth"), Error);

  auto lonely = parse_kb("Ann Lee\tper:age\t42\tNUM\n");
  auto cfg2 = base_config();
  cfg2.templates.push_back(parse_templates("per:age\tnews\t{SUBJ} , {OBJ} , said\n")[0]);
  CHECK_THROWS_WITH_AS(generate_corpus(lonely, cfg2), doctest::Contains("distractor"), Error);

  auto bad = base_config();
  bad.dev_era = {0.5, 0.6};
  CHECK_THROWS_AS(generate_corpus(kb, bad), Error);
  bad = base_config();
  bad.neg_ratio = -1;
  CHECK_THROWS_AS(generate_corpus(kb, bad), Error);
}

TEST_CASE("self_train_filter keeps exactly the agreeing subset") {
  Rng rng(61);
  std::vector<RelationInstance> insts;
  for (int i = 0; i < 200; ++i) insts.push_back(testutil::random_instance(rng));

  auto agree = [](const RelationInstance& x) { return x.positive ? 0.9 : 0.1; };
  auto disagree = [](const RelationInstance& x) { return x.positive ? 0.1 : 0.9; };
  CHECK(self_train_filter(insts, agree) == insts);
  CHECK(self_train_filter(insts, disagree).empty());

  auto mixed = [](const RelationInstance& x) { return x.tokens.size() % 3 == 0 ? 0.7 : 0.2; };
  auto kept = self_train_filter(insts, mixed);
  std::vector<RelationInstance> oracle;
  for (const auto& x : insts) {
    if ((mixed(x) >= 0.5) == x.positive) oracle.push_back(x);
  }
  CHECK(kept == oracle);
  CHECK(self_train_filter(kept, mixed) == kept);

  // Threshold is inclusive.
  auto half = [](const RelationInstance&) { return 0.5; };
  for (const auto& x : self_train_filter(insts, half)) CHECK(x.positive);
}

TEST_CASE("chunked self-training retrains on clean data plus filtered chunks") {
  Rng rng(62);
  std::vector<RelationInstance> clean, noisy;
  for (int i = 0; i < 3; ++i) clean.push_back(testutil::random_instance(rng));
  for (int i = 0; i < 10; ++i) noisy.push_back(testutil::random_instance(rng));

  std::vector<std::size_t> pool_sizes;
  Trainer keep_all = [&](std::span<const RelationInstance> pool, std::uint64_t) -> Predictor {
    pool_sizes.push_back(pool.size());
    return [](const RelationInstance& x) { return x.positive ? 1.0 : 0.0; };
  };
  auto out = self_train_chunked(noisy, clean, keep_all, {2, 2}, 1);
  CHECK(out == noisy);
  CHECK(pool_sizes == std::vector<std::size_t>{3, 8, 8, 8});

  // Rejecting everything empties each chunk on its first pass.
  pool_sizes.clear();
  Trainer reject = [&](std::span<const RelationInstance> pool, std::uint64_t) -> Predictor {
    pool_sizes.push_back(pool.size());
    return [](const RelationInstance& x) { return x.positive ? 0.0 : 1.0; };
  };
  CHECK(self_train_chunked(noisy, clean, reject, {3, 1}, 1).empty());
  CHECK(pool_sizes == std::vector<std::size_t>{3, 3, 3});
  CHECK_THROWS_AS(self_train_chunked(noisy, clean, reject, {0, 1}, 1), Error);
}

TEST_CASE("location slot merging") {
  CHECK(merge_location_slot("per:city_of_birth") == "per:location_of_birth");
  CHECK(merge_location_slot("per:country_of_birth") == "per:location_of_birth");
  CHECK(merge_location_slot("per:stateorprovince_of_death") == "per:location_of_death");
  CHECK(merge_location_slot("per:countries_of_residence") == "per:locations_of_residence");
  CHECK(merge_location_slot("org:city_of_headquarters") == "org:location_of_headquarters");
  CHECK(merge_location_slot("per:title") == "per:title");
  CHECK(merge_location_slot("per:spouse") == "per:spouse");

  auto corpus = generate_corpus(parse_kb(kKb), base_config());
  auto once = merge_location_slots(corpus.instances);
  CHECK(merge_location_slots(once) == once);
  REQUIRE(once.size() == corpus.instances.size());
  for (std::size_t i = 0; i < once.size(); ++i) {
    auto expected = corpus.instances[i];
    expected.slot = merge_location_slot(expected.slot);
    CHECK(once[i] == expected);
  }
}
