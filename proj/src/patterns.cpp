#include "relclass/patterns.hpp"

#include <cctype>

namespace relclass {

Pattern Pattern::parse(std::string_view slot, std::string_view text) {
  Pattern pattern;
  pattern.slot = std::string(slot);
  bool has_literal = false;
  for (auto& tok : split_whitespace(text)) {
    if (tok == "*") {
      if (!pattern.elements.empty() && pattern.elements.back().wildcard) {
        throw Error("adjacent wildcards in pattern '" + std::string(text) + "'");
      }
      pattern.elements.push_back({true, {}});
    } else {
      pattern.elements.push_back({false, lowercase(tok)});
      has_literal = true;
    }
  }
  if (!has_literal) {
    throw Error("pattern has no literal token: '" + std::string(text) + "'");
  }
  return pattern;
}

std::string Pattern::to_string() const {
  std::string out;
  for (const auto& el : elements) {
    if (!out.empty()) out += ' ';
    out += el.wildcard ? std::string("*") : el.literal;
  }
  return out;
}

namespace {

bool token_equals(std::string_view literal, std::string_view token) {
  if (literal.size() != token.size()) return false;
  for (std::size_t i = 0; i < token.size(); ++i) {
    if (literal[i] != std::tolower(static_cast<unsigned char>(token[i])))
      return false;
  }
  return true;
}

// Does elements[e..] align starting exactly at context[pos]?
bool match_from(const std::vector<Pattern::Element>& elements, std::size_t e,
                std::span<const std::string> context, std::size_t pos,
                std::size_t max_gap) {
  if (e == elements.size()) return true;
  const auto& el = elements[e];
  if (el.wildcard) {
    for (std::size_t gap = 0; gap <= max_gap && pos + gap <= context.size(); ++gap) {
      if (match_from(elements, e + 1, context, pos + gap, max_gap)) return true;
    }
    return false;
  }
  if (pos >= context.size() || !token_equals(el.literal, context[pos])) return false;
  return match_from(elements, e + 1, context, pos + 1, max_gap);
}

}  // namespace

bool match(const Pattern& pattern, std::span<const std::string> context,
           std::size_t max_gap) {
  for (std::size_t start = 0; start <= context.size(); ++start) {
    if (match_from(pattern.elements, 0, context, start, max_gap)) return true;
  }
  return false;
}

void PatternSet::add(Pattern pattern) {
  auto& list = by_slot_[pattern.slot];
  list.push_back(std::move(pattern));
}

const std::vector<Pattern>& PatternSet::for_slot(std::string_view slot) const {
  static const std::vector<Pattern> kNone;
  auto it = by_slot_.find(slot);
  return it == by_slot_.end() ? kNone : it->second;
}

std::vector<std::string> PatternSet::slots() const {
  std::vector<std::string> out;
  for (const auto& [slot, _] : by_slot_) out.push_back(slot);
  return out;
}

std::size_t PatternSet::size() const {
  std::size_t n = 0;
  for (const auto& [_, list] : by_slot_) n += list.size();
  return n;
}

std::string PatternSet::serialize() const {
  std::string out;
  for (const auto& [slot, list] : by_slot_) {
    for (const auto& p : list) out += slot + "\t" + p.to_string() + "\n";
  }
  return out;
}

PatternSet parse_patterns(std::string_view text, std::string_view source) {
  PatternSet set;
  LineReader reader(text);
  std::string_view line;
  while (reader.next(line)) {
    if (trim(line).empty() || line.front() == '#') continue;
    auto tab = line.find('\t');
    if (tab == std::string_view::npos) {
      throw ParseError(source, reader.line_number(), "expected 'slot<TAB>pattern'");
    }
    auto slot = trim(line.substr(0, tab));
    if (slot.empty()) throw ParseError(source, reader.line_number(), "empty slot");
    try {
      set.add(Pattern::parse(slot, line.substr(tab + 1)));
    } catch (const Error& e) {
      throw ParseError(source, reader.line_number(), e.what());
    }
  }
  return set;
}

PatternSet load_patterns(const std::filesystem::path& path) {
  return parse_patterns(read_file(path), path.string());
}

ModelScore classify_pattern(const PatternSet& patterns,
                            const RelationInstance& instance,
                            const MatchOptions& options) {
  const auto& list = patterns.for_slot(instance.slot);
  if (list.empty()) return ModelScore(0.0);
  std::vector<std::string> middle;
  std::span<const std::string> context;
  if (options.whole_sentence) {
    context = instance.tokens;
  } else {
    middle = split_contexts(instance).middle;
    context = middle;
  }
  for (const auto& p : list) {
    if (match(p, context, options.max_gap)) return ModelScore(1.0);
  }
  return ModelScore(0.0);
}

}  // namespace relclass
