#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "relclass/corpus.hpp"
#include "relclass/evalkit.hpp"
#include "relclass/patterns.hpp"

namespace relclass {

enum class NeType { PER, ORG, LOC, DATE, NUM, MISC };

std::string_view to_string(NeType type);
NeType parse_ne_type(std::string_view text);

struct KBTuple {
  std::string subject;
  std::string relation;
  std::string object;
  NeType object_type = NeType::MISC;
};

// "subject<TAB>relation<TAB>object<TAB>TYPE" per line; '#' comments.
std::vector<KBTuple> parse_kb(std::string_view text, std::string_view source = "<kb>");

// Whitespace-tokenized sentence with exactly one {SUBJ} and one {OBJ} token and
// optional {DIST} tokens (filled with an unrelated entity of the object type).
// Slot "*" marks a generic template used only for negatives.
struct SentenceTemplate {
  std::string slot;
  Genre genre = Genre::news;
  std::vector<std::string> tokens;
};

inline constexpr std::string_view kGenericSlot = "*";

// "slot<TAB>genre<TAB>template" per line; '#' comments.
std::vector<SentenceTemplate> parse_templates(std::string_view text,
                                              std::string_view source = "<templates>");

// Tokens between the two argument placeholders, {DIST} as a wildcard. Empty
// when the placeholders are adjacent.
std::string trigger_phrase(const SentenceTemplate& tmpl);

// One pattern per distinct trigger phrase of every slot-specific template.
PatternSet trigger_patterns(std::span<const SentenceTemplate> templates);

struct GenreMix {
  double news = 0.875;
  double web = 0.125;
};

struct GeneratorConfig {
  std::vector<SentenceTemplate> templates;
  double neg_ratio = 4.0;
  // Fraction of training positives realized from a non-relation template
  // while keeping the distant label 1.
  double noise_rate = 0.15;
  GenreMix dev_era{0.875, 0.125};   // train and dev
  GenreMix eval_era{0.734, 0.266};  // eval
  std::size_t train_positives = 200;
  std::size_t dev_positives = 50;
  std::size_t eval_positives = 50;
  std::uint64_t seed = 0;

  void validate() const;
};

struct GeneratedCorpus {
  std::vector<RelationInstance> instances;
  // True where the distant label disagrees with the sentence's content.
  std::vector<bool> noisy;
};

GeneratedCorpus generate_corpus(std::span<const KBTuple> kb, const GeneratorConfig& config);

// Keeps exactly the instances whose thresholded prediction equals their label.
std::vector<RelationInstance> self_train_filter(std::span<const RelationInstance> noisy,
                                                const Predictor& clean_model,
                                                double threshold = 0.5);

struct ChunkSchedule {
  std::size_t n_chunks = 1;
  std::size_t n_iterations = 1;
};

// Each iteration walks the chunks in order; before filtering a chunk the model
// is retrained on the clean set plus the other chunks filtered so far.
std::vector<RelationInstance> self_train_chunked(std::span<const RelationInstance> noisy,
                                                 std::span<const RelationInstance> clean,
                                                 const Trainer& trainer,
                                                 const ChunkSchedule& schedule,
                                                 std::uint64_t seed);

// per:city_of_birth -> per:location_of_birth, per:countries_of_residence ->
// per:locations_of_residence; other slots unchanged.
std::string merge_location_slot(std::string_view slot);
std::vector<RelationInstance> merge_location_slots(std::span<const RelationInstance> instances);

}  // namespace relclass
