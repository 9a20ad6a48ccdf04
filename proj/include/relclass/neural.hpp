#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "relclass/common.hpp"
#include "relclass/corpus.hpp"

namespace relclass {

enum class CnnVariant { contextwise, piecewise, piecewise_ext };
enum class Activation { tanh, identity };

std::string_view to_string(CnnVariant variant);
CnnVariant parse_variant(std::string_view text);
std::string_view to_string(Activation activation);
Activation parse_activation(std::string_view text);

struct CnnConfig {
  CnnVariant variant = CnnVariant::contextwise;
  std::size_t n_filters = 50;
  std::size_t width = 3;
  std::size_t k = 3;
  std::size_t hidden = 50;
  std::size_t dim = 50;
  double learning_rate = 0.05;
  int epochs = 10;
  std::size_t batch_size = 16;
  std::uint64_t seed = 0;
  bool finetune_embeddings = true;
  Activation activation = Activation::tanh;

  void validate() const;
  bool has_hidden() const { return variant != CnnVariant::piecewise; }
  // Values kept per filter and region: 1 for the plain piecewise model.
  std::size_t pool_k() const { return variant == CnnVariant::piecewise ? 1 : k; }
  // 3 regions x pool_k x n_filters, plus the order flag.
  std::size_t pooled_size() const { return 3 * pool_k() * n_filters + 1; }
  bool operator==(const CnnConfig&) const = default;
};

// Dense row-major matrix.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}
  double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  std::span<double> row(std::size_t r) { return {data.data() + r * cols, cols}; }
  std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }
  bool operator==(const Matrix&) const = default;
};

struct CnnParams {
  EmbeddingTable embeddings;
  Matrix filters;  // n_filters x (width * dim); row f holds window offsets in order
  std::vector<double> conv_bias;
  Matrix hidden;  // hidden x pooled_size; empty for the plain piecewise model
  std::vector<double> hidden_bias;
  Matrix output;  // 2 x (hidden or pooled_size); row 1 is the positive class
  std::vector<double> output_bias;
  bool operator==(const CnnParams&) const = default;
};

struct CnnModel {
  std::string slot;
  CnnConfig config;
  Vocabulary vocab;
  CnnParams params;
};

// Exact trainable parameter count excluding embeddings.
std::size_t param_count(const CnnConfig& config);

// Wide convolution: the (len x d) context is framed by (w-1) zero rows on each
// side, giving len+w-1 positions per filter. Returns n_filters x positions.
Matrix convolve(const Matrix& context, const Matrix& filters,
                std::span<const double> conv_bias,
                Activation activation = Activation::tanh);

// Positions of the k largest values in ascending position order; ties go to
// the earlier position. Fewer than k positions when the input is shorter.
std::vector<std::size_t> kmax_positions(std::span<const double> values, std::size_t k);

// The k largest values in original order, right-padded with zeros.
std::vector<double> kmax_pool(std::span<const double> values, std::size_t k);

struct EncodedInstance {
  std::vector<std::size_t> ids;
  Span name;
  Span filler;
  bool positive = false;

  const Span& earlier() const { return name.begin < filler.begin ? name : filler; }
  const Span& later() const { return name.begin < filler.begin ? filler : name; }
  bool name_first() const { return name.begin < filler.begin; }
};

EncodedInstance encode(const Vocabulary& vocab, const RelationInstance& instance);

inline constexpr std::size_t kNoPosition = std::numeric_limits<std::size_t>::max();

// Intermediate values of one forward pass, kept for backprop and analysis.
struct ForwardTrace {
  struct Input {
    std::vector<std::size_t> ids;
    // Sentence index of ids[0]; windows map back to sentence positions.
    std::size_t offset = 0;
    Matrix activations;  // n_filters x (len + w - 1)
  };
  struct Region {
    std::size_t input = 0;
    std::vector<std::size_t> positions;  // activation positions pooled together
  };

  std::vector<Input> inputs;
  std::vector<Region> regions;
  // [region][filter][slot] -> activation position, or kNoPosition for padding.
  std::vector<std::size_t> selected;
  std::vector<double> pooled;
  std::vector<double> hidden;
  double logits[2] = {0.0, 0.0};
  double probs[2] = {0.5, 0.5};
};

ForwardTrace forward_trace(const CnnModel& model, const EncodedInstance& instance);
ModelScore forward(const CnnModel& model, const RelationInstance& instance);

enum class Objective {
  cross_entropy,  // -log p(gold)
  margin,         // z_positive - z_negative; linear in each parameter for identity activations
};

struct CnnGrads {
  std::map<std::size_t, std::vector<double>> embeddings;  // sparse rows
  Matrix filters;
  std::vector<double> conv_bias;
  Matrix hidden;
  std::vector<double> hidden_bias;
  Matrix output;
  std::vector<double> output_bias;

  explicit CnnGrads(const CnnModel& model);
  void clear();
};

// Returns the loss and accumulates its gradient into `grads`.
double backward(const CnnModel& model, const EncodedInstance& instance,
                const ForwardTrace& trace, CnnGrads& grads,
                Objective objective = Objective::cross_entropy);

double loss(const CnnModel& model, const EncodedInstance& instance,
            Objective objective = Objective::cross_entropy);

// Weights initialized from config.seed; embeddings copied from `embeddings`.
CnnModel init_cnn(const CnnConfig& config, const Vocabulary& vocab,
                  const EmbeddingTable& embeddings, std::string_view slot = {});

struct CnnTrainLog {
  std::vector<double> epoch_loss;  // mean training loss per epoch
};

// Mini-batch SGD on mean cross-entropy. Deterministic under config.seed.
CnnModel train_cnn(std::span<const RelationInstance> instances, const CnnConfig& config,
                   const Vocabulary& vocab, const EmbeddingTable& embeddings,
                   CnnTrainLog* log = nullptr);

struct GradCheckOptions {
  double epsilon = 1e-4;
  Objective objective = Objective::cross_entropy;
  // Check at most this many parameters (random subsample beyond it, >= 500).
  std::size_t max_params = 20000;
  std::uint64_t seed = 0;
};

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::size_t checked = 0;
  // Parameters whose +-epsilon perturbation changed a k-max selection.
  std::size_t skipped = 0;
};

// Compares backprop against central finite differences. Embedding rows are
// limited to the non-PAD rows the instance touches.
GradCheckResult grad_check(const CnnModel& model, const RelationInstance& instance,
                           const GradCheckOptions& options = {});

struct FilterAttribution {
  // Pearson r between each filter's max pooled activation and the positive
  // score; NaN where undefined.
  std::vector<double> correlation;
  std::vector<std::size_t> top_filters;
  // Per sentence token: how often a window centred there was kept by k-max
  // pooling of a top filter.
  std::vector<std::size_t> position_counts;
};

FilterAttribution explain_top_filters(const CnnModel& model,
                                      std::span<const RelationInstance> instances,
                                      const RelationInstance& target,
                                      std::size_t top_n = 5);

std::string serialize_cnn(const CnnModel& model);
// `vocab` must hash to the value recorded in the file.
CnnModel parse_cnn(std::string_view text, const Vocabulary& vocab,
                   std::string_view source = "<cnn>");

}  // namespace relclass
