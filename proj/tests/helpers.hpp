#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "relclass/common.hpp"
#include "relclass/corpus.hpp"

namespace testutil {

inline relclass::RelationInstance make_instance(const std::string& sentence, relclass::Span name,
                                                relclass::Span filler,
                                                const std::string& slot = "per:children",
                                                bool positive = true,
                                                relclass::Genre genre = relclass::Genre::news,
                                                relclass::Split split = relclass::Split::train) {
  relclass::RelationInstance inst;
  inst.slot = slot;
  inst.positive = positive;
  inst.genre = genre;
  inst.split = split;
  inst.tokens = relclass::split_whitespace(sentence);
  inst.name = name;
  inst.filler = filler;
  std::vector<std::string> n(inst.tokens.begin() + name.begin, inst.tokens.begin() + name.end);
  std::vector<std::string> f(inst.tokens.begin() + filler.begin, inst.tokens.begin() + filler.end);
  inst.name_surface = relclass::join(n, " ");
  inst.filler_surface = relclass::join(f, " ");
  return inst;
}

// Random valid instance over a small vocabulary; both spans non-empty and disjoint.
inline relclass::RelationInstance random_instance(relclass::Rng& rng,
                                                  const std::string& slot = "per:children") {
  static const std::vector<std::string> words = {"the", "of",  "founded", "married", "son",
                                                 "in",  "was", "born",    "and",     "Acme",
                                                 "Jo",  ",",   "daughter", "city",   "x"};
  const std::size_t len = 2 + rng.below(14);
  std::vector<std::string> toks;
  for (std::size_t i = 0; i < len; ++i) toks.push_back(words[rng.below(words.size())]);
  // Cut points a < b <= c < d, spans [a,b) and [c,d).
  std::size_t a, b, c, d;
  do {
    a = rng.below(len);
    b = a + 1 + rng.below(std::min<std::size_t>(3, len - a));
    c = b + rng.below(len - b + 1);
    if (c >= len) continue;
    d = c + 1 + rng.below(std::min<std::size_t>(3, len - c));
    break;
  } while (true);
  relclass::Span first{a, b}, second{c, d};
  const bool name_first = rng.below(2) == 0;
  return make_instance(relclass::join(toks, " "), name_first ? first : second,
                       name_first ? second : first, slot, rng.below(2) == 0);
}

}  // namespace testutil
