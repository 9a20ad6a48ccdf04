#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "relclass/common.hpp"

namespace relclass {

enum class Genre { news, web, forum };
enum class Split { train, dev, eval };
enum class Order { name_first, filler_first };

std::string_view to_string(Genre genre);
std::string_view to_string(Split split);
std::string_view to_string(Order order);
Genre parse_genre(std::string_view text);
Split parse_split(std::string_view text);

// Forum data is evaluated together with web data.
inline Genre genre_group(Genre genre) {
  return genre == Genre::forum ? Genre::web : genre;
}

// Half-open token range.
struct Span {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const { return end - begin; }
  bool empty() const { return end <= begin; }
  bool overlaps(const Span& other) const {
    return begin < other.end && other.begin < end;
  }
  bool operator==(const Span&) const = default;
};

struct RelationInstance {
  std::string slot;
  bool positive = false;
  Genre genre = Genre::news;
  Split split = Split::train;
  std::string name_surface;
  Span name;
  std::string filler_surface;
  Span filler;
  std::vector<std::string> tokens;

  Order order() const {
    return name.begin < filler.begin ? Order::name_first : Order::filler_first;
  }
  const Span& earlier() const {
    return order() == Order::name_first ? name : filler;
  }
  const Span& later() const {
    return order() == Order::name_first ? filler : name;
  }
  bool operator==(const RelationInstance&) const = default;
};

// Throws Error describing the first violated invariant.
void validate(const RelationInstance& instance);

struct SplitContexts {
  std::vector<std::string> left;
  std::vector<std::string> middle;
  std::vector<std::string> right;
  Order order = Order::name_first;
};

// Mention tokens are excluded from all three contexts.
SplitContexts split_contexts(const RelationInstance& instance);

std::vector<RelationInstance> parse_instances(std::string_view text,
                                              std::string_view source = "<input>");
std::string serialize_instance(const RelationInstance& instance);
std::string serialize_instances(std::span<const RelationInstance> instances);
std::vector<RelationInstance> load_instances(const std::filesystem::path& path);
void save_instances(const std::filesystem::path& path,
                    std::span<const RelationInstance> instances);

// Token <-> index map. Index 0 is PAD and 1 is UNK.
class Vocabulary {
 public:
  static constexpr std::size_t kPad = 0;
  static constexpr std::size_t kUnk = 1;
  static constexpr std::string_view kPadToken = "<PAD>";
  static constexpr std::string_view kUnkToken = "<UNK>";

  Vocabulary();

  static Vocabulary build(std::span<const RelationInstance> instances);
  static Vocabulary parse(std::string_view text, std::string_view source = "<vocab>");

  // Returns the existing index if the token is already present.
  std::size_t add(std::string_view token);
  std::size_t index_of(std::string_view token) const;
  bool contains(std::string_view token) const;
  const std::string& token(std::size_t index) const { return tokens_.at(index); }
  std::size_t size() const { return tokens_.size(); }
  std::uint64_t hash() const;
  // One token per line in index order.
  std::string serialize() const;

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::size_t> index_;
};

// |V| x dim row-major matrix; the PAD row stays zero.
class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  EmbeddingTable(std::size_t rows, std::size_t dim)
      : rows_(rows), dim_(dim), data_(rows * dim, 0.0) {}

  std::size_t rows() const { return rows_; }
  std::size_t dim() const { return dim_; }
  std::span<double> row(std::size_t r) { return {data_.data() + r * dim_, dim_}; }
  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * dim_, dim_};
  }
  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }
  bool operator==(const EmbeddingTable&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t dim_ = 0;
  std::vector<double> data_;
};

inline constexpr double kOovInitRange = 0.25;

// Every non-PAD row uniform in [-0.25, 0.25].
EmbeddingTable random_embeddings(const Vocabulary& vocab, std::size_t dim,
                                 std::uint64_t seed);

// File rows override random rows; tokens absent from the file keep their
// seeded random initialization.
EmbeddingTable load_embeddings(std::string_view text, const Vocabulary& vocab,
                               std::uint64_t seed,
                               std::string_view source = "<embeddings>");

}  // namespace relclass
