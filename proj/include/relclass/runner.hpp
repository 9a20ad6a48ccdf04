#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "relclass/corpus.hpp"
#include "relclass/evalkit.hpp"
#include "relclass/features.hpp"
#include "relclass/neural.hpp"
#include "relclass/patterns.hpp"
#include "relclass/svm.hpp"

namespace relclass {

// key = value settings. Later calls to set() override earlier ones, so flags
// applied after load_file() take precedence over the file.
class RunConfig {
 public:
  void set(std::string_view key, std::string_view value);
  void load_file(const std::filesystem::path& path);
  void merge_text(std::string_view text, std::string_view source);

  bool has(std::string_view key) const;
  std::string get(std::string_view key, std::string_view fallback = {}) const;
  double get_double(std::string_view key, double fallback) const;
  long long get_int(std::string_view key, long long fallback) const;
  bool get_bool(std::string_view key, bool fallback) const;
  std::vector<double> get_doubles(std::string_view key, std::vector<double> fallback) const;
  std::uint64_t seed() const;

  // Sorted "key = value" lines.
  std::string serialize() const;
  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

enum class ModelKind { pat, svm_bow, svm_skip, cnn_context, cnn_piece, cnn_piece_ext };

std::string_view to_string(ModelKind kind);
ModelKind parse_model_kind(std::string_view text);

// Scores instances of one slot.
class SlotScorer {
 public:
  virtual ~SlotScorer() = default;
  virtual double score(const RelationInstance& instance) const = 0;
};

struct SvmSlotModel : SlotScorer {
  FeatureSpace space;
  SvmModel model;
  Weighting weighting = Weighting::l2_counts;

  double score(const RelationInstance& instance) const override;
};

struct CnnSlotModel : SlotScorer {
  CnnModel model;

  double score(const RelationInstance& instance) const override;
};

struct PatternSlotModel : SlotScorer {
  PatternSet patterns;
  MatchOptions options;

  double score(const RelationInstance& instance) const override;
};

SvmConfig svm_config_from(const RunConfig& config, std::uint64_t seed);
CnnConfig cnn_config_from(const RunConfig& config, ModelKind kind, std::uint64_t seed);

// Training log of one slot: "slot<TAB>stage<TAB>step<TAB>value" lines.
struct SlotLog {
  std::string slot;
  std::string text;
  std::vector<std::string> warnings;

  void add(std::string_view stage, std::string_view step, double value);
};

// Trains one slot's model. `train` and `dev` hold that slot's instances only;
// an SVM tunes C on `dev` unless the config pins C.
std::unique_ptr<SlotScorer> fit_slot(ModelKind kind, std::string_view slot,
                                     std::span<const RelationInstance> train,
                                     std::span<const RelationInstance> dev,
                                     const RunConfig& config, std::uint64_t seed,
                                     SlotLog& log);

// Trains one model per slot present in `train` and returns a dispatching
// predictor (0 for slots without a model).
Predictor train_predictor(ModelKind kind, std::span<const RelationInstance> train,
                          const RunConfig& config, std::uint64_t seed);

struct RunReport {
  bool ok = true;
  std::vector<std::string> errors;
  std::vector<std::string> warnings;
  // Command-specific scalar result (the correlation for `correlate`).
  double value = 0.0;
};

// Each command writes its outputs, run_config.txt, and manifest.json into
// `out`. Failures are reported in the RunReport and the manifest, not thrown.
RunReport run_gen_data(const RunConfig& config, const std::filesystem::path& kb,
                       const std::filesystem::path& templates,
                       const std::filesystem::path& out);
RunReport run_train(const RunConfig& config, std::string_view model,
                    const std::filesystem::path& data, const std::filesystem::path& out);
RunReport run_eval(const RunConfig& config, const std::filesystem::path& models,
                   const std::filesystem::path& data, const std::filesystem::path& out);
RunReport run_combine(const RunConfig& config,
                      std::span<const std::filesystem::path> score_dirs,
                      const std::filesystem::path& out);
RunReport run_tune(const RunConfig& config, std::string_view model,
                   const std::filesystem::path& data, const std::filesystem::path& grid,
                   const std::filesystem::path& out);
RunReport run_genre_matrix(const RunConfig& config, const std::filesystem::path& data,
                           std::span<const std::string> models,
                           const std::filesystem::path& out);
RunReport run_correlate(const RunConfig& config,
                        std::span<const std::filesystem::path> reports,
                        const std::filesystem::path& end_to_end,
                        const std::filesystem::path& out);

// File-name-safe form of a slot id (per:children -> per_children).
std::string slot_file_stem(std::string_view slot);

// Grid file: "key = v1, v2, ..." lines; points enumerate with the first key
// outermost.
std::vector<std::map<std::string, std::string>> parse_grid(std::string_view text,
                                                           std::string_view source = "<grid>");

}  // namespace relclass
