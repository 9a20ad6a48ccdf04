#include "relclass/distsup.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <tuple>

namespace relclass {

std::string_view to_string(NeType type) {
  switch (type) {
    case NeType::PER: return "PER";
    case NeType::ORG: return "ORG";
    case NeType::LOC: return "LOC";
    case NeType::DATE: return "DATE";
    case NeType::NUM: return "NUM";
    case NeType::MISC: return "MISC";
  }
  return "?";
}

NeType parse_ne_type(std::string_view text) {
  for (NeType t : {NeType::PER, NeType::ORG, NeType::LOC, NeType::DATE, NeType::NUM,
                   NeType::MISC}) {
    if (text == to_string(t)) return t;
  }
  throw Error("unknown NE type '" + std::string(text) + "'");
}

std::vector<KBTuple> parse_kb(std::string_view text, std::string_view source) {
  std::vector<KBTuple> kb;
  LineReader reader(text);
  std::string_view line;
  while (reader.next(line)) {
    if (trim(line).empty() || line.front() == '#') continue;
    auto fields = split(line, '\t');
    if (fields.size() != 4) {
      throw ParseError(source, reader.line_number(),
                       "expected 'subject<TAB>relation<TAB>object<TAB>TYPE'");
    }
    KBTuple t;
    t.subject = std::string(trim(fields[0]));
    t.relation = std::string(trim(fields[1]));
    t.object = std::string(trim(fields[2]));
    if (t.subject.empty() || t.relation.empty() || t.object.empty()) {
      throw ParseError(source, reader.line_number(), "empty KB field");
    }
    try {
      t.object_type = parse_ne_type(trim(fields[3]));
    } catch (const Error& e) {
      throw ParseError(source, reader.line_number(), e.what());
    }
    kb.push_back(std::move(t));
  }
  return kb;
}

std::vector<SentenceTemplate> parse_templates(std::string_view text, std::string_view source) {
  std::vector<SentenceTemplate> out;
  LineReader reader(text);
  std::string_view line;
  while (reader.next(line)) {
    if (trim(line).empty() || line.front() == '#') continue;
    auto fields = split(line, '\t');
    if (fields.size() != 3) {
      throw ParseError(source, reader.line_number(),
                       "expected 'slot<TAB>genre<TAB>template'");
    }
    SentenceTemplate t;
    t.slot = std::string(trim(fields[0]));
    try {
      t.genre = parse_genre(trim(fields[1]));
    } catch (const Error& e) {
      throw ParseError(source, reader.line_number(), e.what());
    }
    t.tokens = split_whitespace(fields[2]);
    auto subj = std::count(t.tokens.begin(), t.tokens.end(), "{SUBJ}");
    auto obj = std::count(t.tokens.begin(), t.tokens.end(), "{OBJ}");
    if (subj != 1 || obj != 1) {
      throw ParseError(source, reader.line_number(),
                       "template needs exactly one {SUBJ} and one {OBJ}");
    }
    out.push_back(std::move(t));
  }
  return out;
}

std::string trigger_phrase(const SentenceTemplate& tmpl) {
  auto subj = std::find(tmpl.tokens.begin(), tmpl.tokens.end(), "{SUBJ}");
  auto obj = std::find(tmpl.tokens.begin(), tmpl.tokens.end(), "{OBJ}");
  auto first = std::min(subj, obj);
  auto last = std::max(subj, obj);
  std::vector<std::string> parts;
  for (auto it = first + 1; it < last; ++it) {
    if (*it == "{DIST}") {
      if (parts.empty() || parts.back() != "*") parts.emplace_back("*");
    } else {
      parts.push_back(*it);
    }
  }
  return join(parts, " ");
}

PatternSet trigger_patterns(std::span<const SentenceTemplate> templates) {
  PatternSet set;
  std::set<std::pair<std::string, std::string>> seen;
  for (const auto& t : templates) {
    if (t.slot == kGenericSlot) continue;
    auto phrase = trigger_phrase(t);
    if (phrase.empty() || !seen.insert({t.slot, lowercase(phrase)}).second) continue;
    try {
      set.add(Pattern::parse(t.slot, phrase));
    } catch (const Error&) {
      // Wildcard-only middles carry no trigger.
    }
  }
  return set;
}

void GeneratorConfig::validate() const {
  if (!(neg_ratio >= 0.0)) throw Error("neg_ratio must be non-negative");
  if (!(noise_rate >= 0.0 && noise_rate <= 1.0)) throw Error("noise_rate must be in [0,1]");
  for (const auto* mix : {&dev_era, &eval_era}) {
    if (mix->news < 0.0 || mix->web < 0.0 || std::abs(mix->news + mix->web - 1.0) > 1e-9) {
      throw Error("genre proportions must be non-negative and sum to 1");
    }
  }
}

namespace {

const std::vector<std::string> kWebInterjections = {"lol", "btw", "imo", "!!", "omg", "tbh"};

class Realizer {
 public:
  Realizer(std::span<const KBTuple> kb, const GeneratorConfig& config)
      : kb_(kb), config_(config) {
    for (const auto& t : kb) {
      by_type_[t.object_type].insert(t.object);
      known_.insert({t.subject, t.relation, t.object});
    }
    for (const auto& t : config.templates) {
      if (t.slot != kGenericSlot) slots_with_templates_.insert(t.slot);
    }
  }

  void check_slot(const std::string& slot) const {
    if (!slots_with_templates_.count(slot)) {
      throw Error("no template for slot '" + slot + "'");
    }
  }

  // Entities of `type` that are not a known object of (subject, relation).
  std::vector<std::string> distractors(const KBTuple& tuple) const {
    std::vector<std::string> out;
    auto it = by_type_.find(tuple.object_type);
    if (it != by_type_.end()) {
      for (const auto& e : it->second) {
        if (e == tuple.subject || e == tuple.object) continue;
        if (known_.count({tuple.subject, tuple.relation, e})) continue;
        out.push_back(e);
      }
    }
    if (out.empty()) {
      throw Error("no distractor of type " + std::string(to_string(tuple.object_type)) +
                  " for slot '" + tuple.relation + "'");
    }
    return out;
  }

  // Templates of the slot (related = true) or of any unrelated slot, preferring
  // the requested genre. Sets `adapt` when a news template stands in for web.
  const SentenceTemplate& pick_template(const std::string& slot, bool related, Genre genre,
                                        Rng& rng, bool& adapt) const {
    std::vector<const SentenceTemplate*> exact;
    std::vector<const SentenceTemplate*> any;
    const auto merged = merge_location_slot(slot);
    for (const auto& t : config_.templates) {
      const bool same = t.slot == slot;
      if (same != related) continue;
      // Sibling location slots share triggers once merged.
      if (!related && t.slot != kGenericSlot && merge_location_slot(t.slot) == merged) continue;
      any.push_back(&t);
      if (genre_group(t.genre) == genre) exact.push_back(&t);
    }
    if (any.empty()) {
      throw Error(related ? "no template for slot '" + slot + "'"
                          : "no negative templates available for slot '" + slot + "'");
    }
    adapt = exact.empty() && genre == Genre::web;
    const auto& pool = exact.empty() ? any : exact;
    return *pool[rng.below(pool.size())];
  }

  RelationInstance realize(const SentenceTemplate& tmpl, const KBTuple& tuple,
                           const std::string& filler, const std::vector<std::string>& pool,
                           bool adapt_web, Rng& rng) const {
    RelationInstance inst;
    inst.slot = tuple.relation;
    inst.name_surface = tuple.subject;
    inst.filler_surface = filler;
    for (const auto& tok : tmpl.tokens) {
      if (tok == "{SUBJ}") {
        auto words = split_whitespace(tuple.subject);
        inst.name = {inst.tokens.size(), inst.tokens.size() + words.size()};
        inst.tokens.insert(inst.tokens.end(), words.begin(), words.end());
      } else if (tok == "{OBJ}") {
        auto words = split_whitespace(filler);
        inst.filler = {inst.tokens.size(), inst.tokens.size() + words.size()};
        inst.tokens.insert(inst.tokens.end(), words.begin(), words.end());
      } else if (tok == "{DIST}") {
        std::vector<const std::string*> others;
        for (const auto& e : pool) {
          if (e != filler) others.push_back(&e);
        }
        if (others.empty()) throw Error("no entity left for a {DIST} placeholder");
        auto words = split_whitespace(*others[rng.below(others.size())]);
        inst.tokens.insert(inst.tokens.end(), words.begin(), words.end());
      } else {
        inst.tokens.push_back(tok);
      }
    }
    if (adapt_web) {
      const auto& word = kWebInterjections[rng.below(kWebInterjections.size())];
      if (rng.below(2) == 0) {
        inst.tokens.insert(inst.tokens.begin(), word);
        inst.name = {inst.name.begin + 1, inst.name.end + 1};
        inst.filler = {inst.filler.begin + 1, inst.filler.end + 1};
      } else {
        inst.tokens.push_back(word);
      }
    }
    validate(inst);
    return inst;
  }

 private:
  std::span<const KBTuple> kb_;
  const GeneratorConfig& config_;
  std::map<NeType, std::set<std::string>> by_type_;
  std::set<std::tuple<std::string, std::string, std::string>> known_;
  std::set<std::string> slots_with_templates_;
};

Genre draw_genre(const GenreMix& mix, Rng& rng) {
  return rng.uniform() < mix.news ? Genre::news : Genre::web;
}

}  // namespace

GeneratedCorpus generate_corpus(std::span<const KBTuple> kb, const GeneratorConfig& config) {
  config.validate();
  Realizer realizer(kb, config);

  std::map<std::string, std::vector<const KBTuple*>> by_slot;
  for (const auto& t : kb) by_slot[t.relation].push_back(&t);
  for (const auto& [slot, _] : by_slot) realizer.check_slot(slot);

  GeneratedCorpus corpus;
  struct Plan {
    Split split;
    std::size_t positives;
    const GenreMix* mix;
  };
  const Plan plans[] = {{Split::train, config.train_positives, &config.dev_era},
                        {Split::dev, config.dev_positives, &config.dev_era},
                        {Split::eval, config.eval_positives, &config.eval_era}};

  for (const auto& plan : plans) {
    for (const auto& [slot, tuples] : by_slot) {
      Rng rng(derive_seed(config.seed, std::string(to_string(plan.split)) + "/" + slot));
      const std::size_t n_pos = plan.positives;
      const auto n_neg =
          static_cast<std::size_t>(std::llround(config.neg_ratio * static_cast<double>(n_pos)));
      const std::size_t n_noisy =
          plan.split == Split::train
              ? static_cast<std::size_t>(std::llround(config.noise_rate * static_cast<double>(n_pos)))
              : 0;
      std::vector<bool> noisy_flag(n_pos, false);
      std::fill(noisy_flag.begin(), noisy_flag.begin() + static_cast<std::ptrdiff_t>(n_noisy), true);
      rng.shuffle(noisy_flag);

      std::vector<std::pair<RelationInstance, bool>> batch;
      for (std::size_t i = 0; i < n_pos + n_neg; ++i) {
        const bool positive = i < n_pos;
        const bool noisy = positive && noisy_flag[i];
        const KBTuple& tuple = *tuples[rng.below(tuples.size())];
        const Genre genre = draw_genre(*plan.mix, rng);
        const auto pool = realizer.distractors(tuple);
        bool adapt = false;
        const auto& tmpl = realizer.pick_template(slot, positive && !noisy, genre, rng, adapt);
        const std::string filler = positive ? tuple.object : pool[rng.below(pool.size())];
        auto inst = realizer.realize(tmpl, tuple, filler, pool, adapt, rng);
        inst.positive = positive;
        inst.genre = genre;
        inst.split = plan.split;
        batch.emplace_back(std::move(inst), noisy);
      }
      rng.shuffle(batch);
      for (auto& [inst, noisy] : batch) {
        corpus.instances.push_back(std::move(inst));
        corpus.noisy.push_back(noisy);
      }
    }
  }
  return corpus;
}

std::vector<RelationInstance> self_train_filter(std::span<const RelationInstance> noisy,
                                                const Predictor& clean_model,
                                                double threshold) {
  std::vector<RelationInstance> kept;
  for (const auto& inst : noisy) {
    if ((clean_model(inst) >= threshold) == inst.positive) kept.push_back(inst);
  }
  return kept;
}

std::vector<RelationInstance> self_train_chunked(std::span<const RelationInstance> noisy,
                                                 std::span<const RelationInstance> clean,
                                                 const Trainer& trainer,
                                                 const ChunkSchedule& schedule,
                                                 std::uint64_t seed) {
  if (schedule.n_chunks == 0) throw Error("self-training needs at least one chunk");
  std::vector<std::vector<RelationInstance>> chunks(schedule.n_chunks);
  for (std::size_t i = 0; i < noisy.size(); ++i) {
    chunks[i * schedule.n_chunks / std::max<std::size_t>(noisy.size(), 1)].push_back(noisy[i]);
  }
  std::vector<bool> filtered(chunks.size(), false);
  for (std::size_t it = 0; it < schedule.n_iterations; ++it) {
    for (std::size_t c = 0; c < chunks.size(); ++c) {
      std::vector<RelationInstance> pool(clean.begin(), clean.end());
      for (std::size_t o = 0; o < chunks.size(); ++o) {
        if (o != c && filtered[o]) pool.insert(pool.end(), chunks[o].begin(), chunks[o].end());
      }
      auto model = trainer(pool, derive_seed(seed, "self-train/" + std::to_string(it) + "/" +
                                                       std::to_string(c)));
      chunks[c] = self_train_filter(chunks[c], model);
      filtered[c] = true;
    }
  }
  std::vector<RelationInstance> out;
  for (auto& chunk : chunks) out.insert(out.end(), chunk.begin(), chunk.end());
  return out;
}

std::string merge_location_slot(std::string_view slot) {
  auto colon = slot.find(':');
  std::string_view prefix = colon == std::string_view::npos ? "" : slot.substr(0, colon + 1);
  std::string_view name = colon == std::string_view::npos ? slot : slot.substr(colon + 1);
  static const std::pair<std::string_view, std::string_view> kRules[] = {
      {"city_of_", "location_of_"},
      {"stateorprovince_of_", "location_of_"},
      {"state_or_province_of_", "location_of_"},
      {"country_of_", "location_of_"},
      {"cities_of_", "locations_of_"},
      {"statesorprovinces_of_", "locations_of_"},
      {"states_or_provinces_of_", "locations_of_"},
      {"countries_of_", "locations_of_"},
  };
  for (const auto& [from, to] : kRules) {
    if (name.substr(0, from.size()) == from) {
      return std::string(prefix) + std::string(to) + std::string(name.substr(from.size()));
    }
  }
  return std::string(slot);
}

std::vector<RelationInstance> merge_location_slots(std::span<const RelationInstance> instances) {
  std::vector<RelationInstance> out(instances.begin(), instances.end());
  for (auto& inst : out) inst.slot = merge_location_slot(inst.slot);
  return out;
}

}  // namespace relclass
