#include "relclass/corpus.hpp"

#include <algorithm>

namespace relclass {

std::string_view to_string(Genre genre) {
  switch (genre) {
    case Genre::news: return "news";
    case Genre::web: return "web";
    case Genre::forum: return "forum";
  }
  return "?";
}

std::string_view to_string(Split split) {
  switch (split) {
    case Split::train: return "train";
    case Split::dev: return "dev";
    case Split::eval: return "eval";
  }
  return "?";
}

std::string_view to_string(Order order) {
  return order == Order::name_first ? "name-first" : "filler-first";
}

Genre parse_genre(std::string_view text) {
  if (text == "news") return Genre::news;
  if (text == "web") return Genre::web;
  if (text == "forum") return Genre::forum;
  throw Error("unknown genre '" + std::string(text) + "'");
}

Split parse_split(std::string_view text) {
  if (text == "train") return Split::train;
  if (text == "dev") return Split::dev;
  if (text == "eval") return Split::eval;
  throw Error("unknown split '" + std::string(text) + "'");
}

void validate(const RelationInstance& instance) {
  const auto n = instance.tokens.size();
  if (instance.slot.empty()) throw Error("empty slot id");
  if (instance.name.empty()) throw Error("empty name span");
  if (instance.filler.empty()) throw Error("empty filler span");
  if (instance.name.end > n) throw Error("name span out of bounds");
  if (instance.filler.end > n) throw Error("filler span out of bounds");
  if (instance.name.overlaps(instance.filler)) throw Error("overlapping spans");
}

SplitContexts split_contexts(const RelationInstance& instance) {
  const auto& tokens = instance.tokens;
  const Span& first = instance.earlier();
  const Span& second = instance.later();
  SplitContexts out;
  out.order = instance.order();
  out.left.assign(tokens.begin(), tokens.begin() + first.begin);
  out.middle.assign(tokens.begin() + first.end, tokens.begin() + second.begin);
  out.right.assign(tokens.begin() + second.end, tokens.end());
  return out;
}

namespace {

struct Mention {
  std::string surface;
  Span span;
};

Mention parse_mention(std::string_view field) {
  auto bar = field.rfind('|');
  if (bar == std::string_view::npos) throw Error("mention lacks '|start,end'");
  auto range = field.substr(bar + 1);
  auto comma = range.find(',');
  if (comma == std::string_view::npos) throw Error("mention range lacks ','");
  auto begin = parse_int(range.substr(0, comma));
  auto end = parse_int(range.substr(comma + 1));
  if (begin < 0 || end < 0) throw Error("negative span index");
  return {std::string(field.substr(0, bar)),
          {static_cast<std::size_t>(begin), static_cast<std::size_t>(end)}};
}

}  // namespace

std::vector<RelationInstance> parse_instances(std::string_view text,
                                              std::string_view source) {
  std::vector<RelationInstance> out;
  LineReader reader(text);
  std::string_view line;
  while (reader.next(line)) {
    if (trim(line).empty() || line.front() == '#') continue;
    const auto line_no = reader.line_number();
    auto fields = split(line, '\t');
    if (fields.size() != 7) {
      throw ParseError(source, line_no,
                       "expected 7 tab-separated fields, got " +
                           std::to_string(fields.size()));
    }
    try {
      RelationInstance inst;
      inst.slot = std::string(fields[0]);
      if (fields[1] == "1") {
        inst.positive = true;
      } else if (fields[1] == "0") {
        inst.positive = false;
      } else {
        throw Error("label must be 0 or 1");
      }
      inst.genre = parse_genre(fields[2]);
      inst.split = parse_split(fields[3]);
      auto name = parse_mention(fields[4]);
      auto filler = parse_mention(fields[5]);
      inst.name_surface = std::move(name.surface);
      inst.name = name.span;
      inst.filler_surface = std::move(filler.surface);
      inst.filler = filler.span;
      inst.tokens = split_whitespace(fields[6]);
      validate(inst);
      out.push_back(std::move(inst));
    } catch (const ParseError&) {
      throw;
    } catch (const Error& e) {
      throw ParseError(source, line_no, e.what());
    }
  }
  return out;
}

std::string serialize_instance(const RelationInstance& inst) {
  std::string out;
  out += inst.slot;
  out += '\t';
  out += inst.positive ? '1' : '0';
  out += '\t';
  out += to_string(inst.genre);
  out += '\t';
  out += to_string(inst.split);
  out += '\t';
  out += inst.name_surface + "|" + std::to_string(inst.name.begin) + "," +
         std::to_string(inst.name.end);
  out += '\t';
  out += inst.filler_surface + "|" + std::to_string(inst.filler.begin) + "," +
         std::to_string(inst.filler.end);
  out += '\t';
  out += join(inst.tokens, " ");
  return out;
}

std::string serialize_instances(std::span<const RelationInstance> instances) {
  std::string out;
  for (const auto& inst : instances) {
    out += serialize_instance(inst);
    out += '\n';
  }
  return out;
}

std::vector<RelationInstance> load_instances(const std::filesystem::path& path) {
  return parse_instances(read_file(path), path.string());
}

void save_instances(const std::filesystem::path& path,
                    std::span<const RelationInstance> instances) {
  write_file(path, serialize_instances(instances));
}

Vocabulary::Vocabulary() {
  add(kPadToken);
  add(kUnkToken);
}

Vocabulary Vocabulary::build(std::span<const RelationInstance> instances) {
  Vocabulary vocab;
  for (const auto& inst : instances) {
    for (const auto& tok : inst.tokens) vocab.add(tok);
  }
  return vocab;
}

Vocabulary Vocabulary::parse(std::string_view text, std::string_view source) {
  Vocabulary vocab;
  LineReader reader(text);
  std::string_view line;
  std::size_t expected = 0;
  while (reader.next(line)) {
    if (line.empty()) continue;
    if (expected < 2) {
      auto reserved = expected == 0 ? kPadToken : kUnkToken;
      if (line != reserved) {
        throw ParseError(source, reader.line_number(),
                         "expected reserved token " + std::string(reserved));
      }
    } else if (vocab.add(line) != expected) {
      throw ParseError(source, reader.line_number(),
                       "duplicate token '" + std::string(line) + "'");
    }
    ++expected;
  }
  return vocab;
}

std::size_t Vocabulary::add(std::string_view token) {
  auto it = index_.find(std::string(token));
  if (it != index_.end()) return it->second;
  auto idx = tokens_.size();
  tokens_.emplace_back(token);
  index_.emplace(tokens_.back(), idx);
  return idx;
}

std::size_t Vocabulary::index_of(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? kUnk : it->second;
}

bool Vocabulary::contains(std::string_view token) const {
  return index_.count(std::string(token)) != 0;
}

std::uint64_t Vocabulary::hash() const { return fnv1a(serialize()); }

std::string Vocabulary::serialize() const {
  std::string out;
  for (const auto& tok : tokens_) {
    out += tok;
    out += '\n';
  }
  return out;
}

EmbeddingTable random_embeddings(const Vocabulary& vocab, std::size_t dim,
                                 std::uint64_t seed) {
  EmbeddingTable table(vocab.size(), dim);
  Rng rng(seed);
  for (std::size_t r = 0; r < vocab.size(); ++r) {
    auto row = table.row(r);
    for (auto& v : row) {
      // Draw even for PAD so row r's values do not depend on PAD handling.
      v = rng.uniform(-kOovInitRange, kOovInitRange);
    }
    if (r == Vocabulary::kPad) std::fill(row.begin(), row.end(), 0.0);
  }
  return table;
}

EmbeddingTable load_embeddings(std::string_view text, const Vocabulary& vocab,
                               std::uint64_t seed, std::string_view source) {
  LineReader reader(text);
  std::string_view line;
  if (!reader.next(line)) throw ParseError(source, 1, "empty embedding file");
  auto header = split_whitespace(line);
  if (header.size() != 2) {
    throw ParseError(source, 1, "header must be '<vocab_count> <dim>'");
  }
  long long count = 0;
  long long dim = 0;
  try {
    count = parse_int(header[0]);
    dim = parse_int(header[1]);
  } catch (const Error& e) {
    throw ParseError(source, 1, e.what());
  }
  if (count < 0 || dim <= 0) throw ParseError(source, 1, "invalid header values");

  auto table = random_embeddings(vocab, static_cast<std::size_t>(dim), seed);
  while (reader.next(line)) {
    if (trim(line).empty()) continue;
    auto parts = split_whitespace(line);
    if (parts.size() != static_cast<std::size_t>(dim) + 1) {
      throw ParseError(source, reader.line_number(),
                       "dimension mismatch: expected " + std::to_string(dim) +
                           " values, got " + std::to_string(parts.size() - 1));
    }
    std::vector<double> values(static_cast<std::size_t>(dim));
    for (std::size_t i = 0; i < values.size(); ++i) {
      try {
        values[i] = parse_double(parts[i + 1]);
      } catch (const Error& e) {
        throw ParseError(source, reader.line_number(), e.what());
      }
    }
    if (!vocab.contains(parts[0])) continue;
    auto idx = vocab.index_of(parts[0]);
    if (idx == Vocabulary::kPad) continue;
    std::copy(values.begin(), values.end(), table.row(idx).begin());
  }
  return table;
}

}  // namespace relclass
