#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "relclass/common.hpp"
#include "relclass/corpus.hpp"

namespace relclass {

inline constexpr std::size_t kDefaultGapLimit = 3;

// A trigger phrase: literal tokens (stored lowercased) and `*` wildcards.
struct Pattern {
  struct Element {
    bool wildcard = false;
    std::string literal;
    bool operator==(const Element&) const = default;
  };

  std::string slot;
  std::vector<Element> elements;

  // Parses "token token * token"; throws Error on invariant violations
  // (no literal, adjacent wildcards).
  static Pattern parse(std::string_view slot, std::string_view text);
  std::string to_string() const;
  bool operator==(const Pattern&) const = default;
};

struct MatchOptions {
  std::size_t max_gap = kDefaultGapLimit;
  // Match against the whole sentence instead of the middle context.
  bool whole_sentence = false;
};

// True iff the pattern aligns with a contiguous sub-span of `context`, each
// literal matching one token case-insensitively and each wildcard absorbing
// 0..max_gap tokens.
bool match(const Pattern& pattern, std::span<const std::string> context,
           std::size_t max_gap = kDefaultGapLimit);

class PatternSet {
 public:
  void add(Pattern pattern);
  const std::vector<Pattern>& for_slot(std::string_view slot) const;
  std::vector<std::string> slots() const;
  std::size_t size() const;
  bool empty() const { return size() == 0; }
  std::string serialize() const;

 private:
  std::map<std::string, std::vector<Pattern>, std::less<>> by_slot_;
};

PatternSet parse_patterns(std::string_view text, std::string_view source = "<patterns>");
PatternSet load_patterns(const std::filesystem::path& path);

// 1.0 if any pattern of the instance's slot matches, else 0.0.
ModelScore classify_pattern(const PatternSet& patterns,
                            const RelationInstance& instance,
                            const MatchOptions& options = {});

}  // namespace relclass
