#include "relclass/neural.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "relclass/evalkit.hpp"

namespace relclass {

std::string_view to_string(CnnVariant variant) {
  switch (variant) {
    case CnnVariant::contextwise: return "contextwise";
    case CnnVariant::piecewise: return "piecewise";
    case CnnVariant::piecewise_ext: return "piecewise_ext";
  }
  return "?";
}

CnnVariant parse_variant(std::string_view text) {
  if (text == "contextwise") return CnnVariant::contextwise;
  if (text == "piecewise") return CnnVariant::piecewise;
  if (text == "piecewise_ext") return CnnVariant::piecewise_ext;
  throw Error("unknown CNN variant '" + std::string(text) + "'");
}

std::string_view to_string(Activation activation) {
  return activation == Activation::tanh ? "tanh" : "identity";
}

Activation parse_activation(std::string_view text) {
  if (text == "tanh") return Activation::tanh;
  if (text == "identity") return Activation::identity;
  throw Error("unknown activation '" + std::string(text) + "'");
}

void CnnConfig::validate() const {
  if (n_filters == 0 || width == 0 || k == 0 || dim == 0 || batch_size == 0) {
    throw Error("CNN sizes must be positive");
  }
  if (has_hidden() && hidden == 0) throw Error("CNN hidden size must be positive");
  if (!(learning_rate > 0.0)) throw Error("CNN learning rate must be positive");
  if (epochs < 0) throw Error("CNN epochs must be non-negative");
}

std::size_t param_count(const CnnConfig& config) {
  const std::size_t conv = config.n_filters * config.width * config.dim + config.n_filters;
  const std::size_t pooled = config.pooled_size();
  if (!config.has_hidden()) return conv + 2 * pooled + 2;
  return conv + config.hidden * pooled + config.hidden + 2 * config.hidden + 2;
}

namespace {

inline double activate(Activation a, double x) {
  return a == Activation::tanh ? std::tanh(x) : x;
}

// Derivative expressed through the activation's output.
inline double activate_grad(Activation a, double y) {
  return a == Activation::tanh ? 1.0 - y * y : 1.0;
}

// Offset from a window's last position back to its centre.
inline std::size_t centre_shift(std::size_t width) {
  return (width - 1) - (width - 1) / 2;
}

Matrix context_matrix(const EmbeddingTable& table, std::span<const std::size_t> ids) {
  Matrix m(ids.size(), table.dim());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    auto src = table.row(ids[i]);
    std::copy(src.begin(), src.end(), m.row(i).begin());
  }
  return m;
}

void fill_uniform(std::vector<double>& values, double range, Rng& rng) {
  for (auto& v : values) v = rng.uniform(-range, range);
}

}  // namespace

Matrix convolve(const Matrix& context, const Matrix& filters,
                std::span<const double> conv_bias, Activation activation) {
  const std::size_t d = context.cols;
  if (d == 0 || filters.cols % d != 0) throw Error("filter width does not match embedding dim");
  const std::size_t w = filters.cols / d;
  const std::size_t len = context.rows;
  const std::size_t positions = len + w - 1;
  Matrix out(filters.rows, positions);
  std::vector<double> window(w * d);
  for (std::size_t t = 0; t < positions; ++t) {
    for (std::size_t o = 0; o < w; ++o) {
      // Context row under window offset o, or zero padding.
      const long long r = static_cast<long long>(t + o) - static_cast<long long>(w - 1);
      auto dst = window.begin() + static_cast<std::ptrdiff_t>(o * d);
      if (r >= 0 && r < static_cast<long long>(len)) {
        auto src = context.row(static_cast<std::size_t>(r));
        std::copy(src.begin(), src.end(), dst);
      } else {
        std::fill(dst, dst + static_cast<std::ptrdiff_t>(d), 0.0);
      }
    }
    for (std::size_t f = 0; f < filters.rows; ++f) {
      auto wf = filters.row(f);
      double s = conv_bias[f];
      for (std::size_t i = 0; i < window.size(); ++i) s += wf[i] * window[i];
      out.at(f, t) = activate(activation, s);
    }
  }
  return out;
}

std::vector<std::size_t> kmax_positions(std::span<const double> values, std::size_t k) {
  std::vector<std::size_t> idx(values.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  const std::size_t take = std::min(k, idx.size());
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(take), idx.end(),
                    [&](std::size_t a, std::size_t b) {
                      if (values[a] != values[b]) return values[a] > values[b];
                      return a < b;
                    });
  idx.resize(take);
  std::sort(idx.begin(), idx.end());
  return idx;
}

std::vector<double> kmax_pool(std::span<const double> values, std::size_t k) {
  if (k == 0) throw Error("k-max pooling requires k >= 1");
  std::vector<double> out(k, 0.0);
  auto pos = kmax_positions(values, k);
  for (std::size_t i = 0; i < pos.size(); ++i) out[i] = values[pos[i]];
  return out;
}

EncodedInstance encode(const Vocabulary& vocab, const RelationInstance& instance) {
  EncodedInstance enc;
  enc.ids.reserve(instance.tokens.size());
  for (const auto& tok : instance.tokens) enc.ids.push_back(vocab.index_of(tok));
  enc.name = instance.name;
  enc.filler = instance.filler;
  enc.positive = instance.positive;
  return enc;
}

ForwardTrace forward_trace(const CnnModel& model, const EncodedInstance& inst) {
  const auto& cfg = model.config;
  const auto& p = model.params;
  const std::size_t F = cfg.n_filters;
  const std::size_t kk = cfg.pool_k();
  ForwardTrace tr;

  auto add_input = [&](std::size_t begin, std::size_t end) {
    ForwardTrace::Input in;
    in.offset = begin;
    in.ids.assign(inst.ids.begin() + static_cast<std::ptrdiff_t>(begin),
                  inst.ids.begin() + static_cast<std::ptrdiff_t>(end));
    in.activations = convolve(context_matrix(p.embeddings, in.ids), p.filters,
                              p.conv_bias, cfg.activation);
    tr.inputs.push_back(std::move(in));
  };

  const Span& first = inst.earlier();
  const Span& second = inst.later();
  if (cfg.variant == CnnVariant::contextwise) {
    add_input(0, first.begin);
    add_input(first.end, second.begin);
    add_input(second.end, inst.ids.size());
    for (std::size_t r = 0; r < 3; ++r) {
      ForwardTrace::Region region;
      region.input = r;
      region.positions.resize(tr.inputs[r].activations.cols);
      std::iota(region.positions.begin(), region.positions.end(), std::size_t{0});
      tr.regions.push_back(std::move(region));
    }
  } else {
    add_input(0, inst.ids.size());
    tr.regions.resize(3);
    const auto shift = static_cast<long long>(centre_shift(cfg.width));
    const std::size_t positions = tr.inputs[0].activations.cols;
    for (std::size_t t = 0; t < positions; ++t) {
      const long long centre = static_cast<long long>(t) - shift;
      std::size_t r = 1;
      if (centre < static_cast<long long>(first.begin)) r = 0;
      else if (centre >= static_cast<long long>(second.end)) r = 2;
      tr.regions[r].positions.push_back(t);
    }
  }

  tr.selected.assign(3 * F * kk, kNoPosition);
  tr.pooled.assign(cfg.pooled_size(), 0.0);
  std::vector<double> values;
  for (std::size_t r = 0; r < 3; ++r) {
    const auto& region = tr.regions[r];
    const auto& act = tr.inputs[region.input].activations;
    for (std::size_t f = 0; f < F; ++f) {
      values.clear();
      for (auto pos : region.positions) values.push_back(act.at(f, pos));
      auto keep = kmax_positions(values, kk);
      for (std::size_t s = 0; s < keep.size(); ++s) {
        const std::size_t slot = (r * F + f) * kk + s;
        tr.selected[slot] = region.positions[keep[s]];
        tr.pooled[slot] = values[keep[s]];
      }
    }
  }
  tr.pooled.back() = inst.name_first() ? 1.0 : 0.0;

  const std::vector<double>* top = &tr.pooled;
  if (cfg.has_hidden()) {
    tr.hidden.resize(cfg.hidden);
    for (std::size_t h = 0; h < cfg.hidden; ++h) {
      auto row = p.hidden.row(h);
      double s = p.hidden_bias[h];
      for (std::size_t i = 0; i < row.size(); ++i) s += row[i] * tr.pooled[i];
      tr.hidden[h] = activate(cfg.activation, s);
    }
    top = &tr.hidden;
  }
  for (std::size_t c = 0; c < 2; ++c) {
    auto row = p.output.row(c);
    double s = p.output_bias[c];
    for (std::size_t i = 0; i < row.size(); ++i) s += row[i] * (*top)[i];
    tr.logits[c] = s;
  }
  const double m = std::max(tr.logits[0], tr.logits[1]);
  const double e0 = std::exp(tr.logits[0] - m);
  const double e1 = std::exp(tr.logits[1] - m);
  tr.probs[0] = e0 / (e0 + e1);
  tr.probs[1] = e1 / (e0 + e1);
  return tr;
}

ModelScore forward(const CnnModel& model, const RelationInstance& instance) {
  auto tr = forward_trace(model, encode(model.vocab, instance));
  return ModelScore(tr.probs[1]);
}

CnnGrads::CnnGrads(const CnnModel& model)
    : filters(model.params.filters.rows, model.params.filters.cols),
      conv_bias(model.params.conv_bias.size(), 0.0),
      hidden(model.params.hidden.rows, model.params.hidden.cols),
      hidden_bias(model.params.hidden_bias.size(), 0.0),
      output(model.params.output.rows, model.params.output.cols),
      output_bias(model.params.output_bias.size(), 0.0) {}

void CnnGrads::clear() {
  embeddings.clear();
  std::fill(filters.data.begin(), filters.data.end(), 0.0);
  std::fill(conv_bias.begin(), conv_bias.end(), 0.0);
  std::fill(hidden.data.begin(), hidden.data.end(), 0.0);
  std::fill(hidden_bias.begin(), hidden_bias.end(), 0.0);
  std::fill(output.data.begin(), output.data.end(), 0.0);
  std::fill(output_bias.begin(), output_bias.end(), 0.0);
}

namespace {

double objective_value(const ForwardTrace& tr, bool positive, Objective objective) {
  if (objective == Objective::margin) return tr.logits[1] - tr.logits[0];
  return -std::log(tr.probs[positive ? 1 : 0]);
}

}  // namespace

double backward(const CnnModel& model, const EncodedInstance& inst,
                const ForwardTrace& tr, CnnGrads& g, Objective objective) {
  const auto& cfg = model.config;
  const auto& p = model.params;
  const std::size_t F = cfg.n_filters;
  const std::size_t kk = cfg.pool_k();
  const std::size_t d = cfg.dim;
  const std::size_t w = cfg.width;

  double dz[2];
  if (objective == Objective::margin) {
    dz[0] = -1.0;
    dz[1] = 1.0;
  } else {
    dz[0] = tr.probs[0] - (inst.positive ? 0.0 : 1.0);
    dz[1] = tr.probs[1] - (inst.positive ? 1.0 : 0.0);
  }

  const std::vector<double>& top = cfg.has_hidden() ? tr.hidden : tr.pooled;
  std::vector<double> dtop(top.size(), 0.0);
  for (std::size_t c = 0; c < 2; ++c) {
    g.output_bias[c] += dz[c];
    auto grow = g.output.row(c);
    auto prow = p.output.row(c);
    for (std::size_t i = 0; i < top.size(); ++i) {
      grow[i] += dz[c] * top[i];
      dtop[i] += dz[c] * prow[i];
    }
  }

  std::vector<double> dpooled;
  if (cfg.has_hidden()) {
    dpooled.assign(tr.pooled.size(), 0.0);
    for (std::size_t h = 0; h < cfg.hidden; ++h) {
      const double dpre = dtop[h] * activate_grad(cfg.activation, tr.hidden[h]);
      if (dpre == 0.0) continue;
      g.hidden_bias[h] += dpre;
      auto grow = g.hidden.row(h);
      auto prow = p.hidden.row(h);
      for (std::size_t i = 0; i < tr.pooled.size(); ++i) {
        grow[i] += dpre * tr.pooled[i];
        dpooled[i] += dpre * prow[i];
      }
    }
  } else {
    dpooled = std::move(dtop);
  }

  // Route pooled gradients back to the selected activation positions.
  std::vector<Matrix> dpre;
  dpre.reserve(tr.inputs.size());
  for (const auto& in : tr.inputs) dpre.emplace_back(F, in.activations.cols);
  for (std::size_t r = 0; r < 3; ++r) {
    const auto input = tr.regions[r].input;
    for (std::size_t f = 0; f < F; ++f) {
      for (std::size_t s = 0; s < kk; ++s) {
        const std::size_t slot = (r * F + f) * kk + s;
        const auto pos = tr.selected[slot];
        if (pos == kNoPosition) continue;
        dpre[input].at(f, pos) += dpooled[slot];
      }
    }
  }

  for (std::size_t ii = 0; ii < tr.inputs.size(); ++ii) {
    const auto& in = tr.inputs[ii];
    auto& dp = dpre[ii];
    const std::size_t len = in.ids.size();
    for (std::size_t f = 0; f < F; ++f) {
      auto wrow = p.filters.row(f);
      auto gwrow = g.filters.row(f);
      for (std::size_t t = 0; t < dp.cols; ++t) {
        double delta = dp.at(f, t);
        if (delta == 0.0) continue;
        delta *= activate_grad(cfg.activation, in.activations.at(f, t));
        g.conv_bias[f] += delta;
        for (std::size_t o = 0; o < w; ++o) {
          const long long r = static_cast<long long>(t + o) - static_cast<long long>(w - 1);
          if (r < 0 || r >= static_cast<long long>(len)) continue;
          const std::size_t id = in.ids[static_cast<std::size_t>(r)];
          auto emb = p.embeddings.row(id);
          for (std::size_t c = 0; c < d; ++c) gwrow[o * d + c] += delta * emb[c];
          if (id == Vocabulary::kPad) continue;
          auto& gemb = g.embeddings[id];
          if (gemb.empty()) gemb.assign(d, 0.0);
          for (std::size_t c = 0; c < d; ++c) gemb[c] += delta * wrow[o * d + c];
        }
      }
    }
  }
  return objective_value(tr, inst.positive, objective);
}

double loss(const CnnModel& model, const EncodedInstance& instance, Objective objective) {
  return objective_value(forward_trace(model, instance), instance.positive, objective);
}

CnnModel init_cnn(const CnnConfig& config, const Vocabulary& vocab,
                  const EmbeddingTable& embeddings, std::string_view slot) {
  config.validate();
  if (embeddings.rows() != vocab.size()) {
    throw Error("embedding rows (" + std::to_string(embeddings.rows()) +
                ") do not match vocabulary size (" + std::to_string(vocab.size()) + ")");
  }
  if (embeddings.dim() != config.dim) {
    throw Error("embedding dim " + std::to_string(embeddings.dim()) +
                " does not match config dim " + std::to_string(config.dim));
  }
  CnnModel model;
  model.slot = std::string(slot);
  model.config = config;
  model.vocab = vocab;
  auto& p = model.params;
  p.embeddings = embeddings;
  auto pad = p.embeddings.row(Vocabulary::kPad);
  std::fill(pad.begin(), pad.end(), 0.0);

  Rng rng(derive_seed(config.seed, "cnn-init"));
  const std::size_t F = config.n_filters;
  const std::size_t fan_in = config.width * config.dim;
  p.filters = Matrix(F, fan_in);
  fill_uniform(p.filters.data, std::sqrt(6.0 / static_cast<double>(fan_in + F)), rng);
  p.conv_bias.assign(F, 0.0);

  const std::size_t pooled = config.pooled_size();
  std::size_t top = pooled;
  if (config.has_hidden()) {
    p.hidden = Matrix(config.hidden, pooled);
    fill_uniform(p.hidden.data,
                 std::sqrt(6.0 / static_cast<double>(pooled + config.hidden)), rng);
    p.hidden_bias.assign(config.hidden, 0.0);
    top = config.hidden;
  }
  p.output = Matrix(2, top);
  fill_uniform(p.output.data, std::sqrt(6.0 / static_cast<double>(top + 2)), rng);
  p.output_bias.assign(2, 0.0);
  return model;
}

namespace {

void apply_update(CnnModel& model, const CnnGrads& g, double scale) {
  auto& p = model.params;
  auto step = [scale](std::vector<double>& param, const std::vector<double>& grad) {
    for (std::size_t i = 0; i < param.size(); ++i) param[i] -= scale * grad[i];
  };
  step(p.filters.data, g.filters.data);
  step(p.conv_bias, g.conv_bias);
  step(p.hidden.data, g.hidden.data);
  step(p.hidden_bias, g.hidden_bias);
  step(p.output.data, g.output.data);
  step(p.output_bias, g.output_bias);
  if (model.config.finetune_embeddings) {
    for (const auto& [id, grad] : g.embeddings) {
      auto row = p.embeddings.row(id);
      for (std::size_t c = 0; c < row.size(); ++c) row[c] -= scale * grad[c];
    }
  }
}

}  // namespace

CnnModel train_cnn(std::span<const RelationInstance> instances, const CnnConfig& config,
                   const Vocabulary& vocab, const EmbeddingTable& embeddings,
                   CnnTrainLog* log) {
  if (instances.empty()) throw Error("empty CNN training set");
  const std::string& slot = instances.front().slot;
  for (const auto& inst : instances) {
    if (inst.slot != slot) throw Error("CNN training set mixes slots");
  }
  CnnModel model = init_cnn(config, vocab, embeddings, slot);

  std::vector<EncodedInstance> data;
  data.reserve(instances.size());
  for (const auto& inst : instances) data.push_back(encode(vocab, inst));

  Rng rng(derive_seed(config.seed, "cnn-shuffle"));
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  CnnGrads grads(model);
  std::size_t batch_index = 0;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(order);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      grads.clear();
      double batch_loss = 0.0;
      for (std::size_t b = start; b < end; ++b) {
        const auto& inst = data[order[b]];
        auto tr = forward_trace(model, inst);
        batch_loss += backward(model, inst, tr, grads);
      }
      if (!std::isfinite(batch_loss)) {
        throw Error("non-finite CNN loss in batch " + std::to_string(batch_index) +
                    " (epoch " + std::to_string(epoch) + ")");
      }
      epoch_loss += batch_loss;
      apply_update(model, grads, config.learning_rate / static_cast<double>(end - start));
      ++batch_index;
    }
    if (log) log->epoch_loss.push_back(epoch_loss / static_cast<double>(data.size()));
  }
  return model;
}

namespace {

struct ParamRef {
  double* value;
  double analytic;
};

}  // namespace

GradCheckResult grad_check(const CnnModel& model_in, const RelationInstance& instance,
                           const GradCheckOptions& options) {
  CnnModel model = model_in;
  const auto enc = encode(model.vocab, instance);
  const auto base = forward_trace(model, enc);
  CnnGrads g(model);
  backward(model, enc, base, g, options.objective);

  auto& p = model.params;
  std::vector<ParamRef> refs;
  std::set<std::size_t> rows(enc.ids.begin(), enc.ids.end());
  rows.erase(Vocabulary::kPad);
  for (auto id : rows) {
    auto row = p.embeddings.row(id);
    auto it = g.embeddings.find(id);
    for (std::size_t c = 0; c < row.size(); ++c) {
      refs.push_back({&row[c], it == g.embeddings.end() ? 0.0 : it->second[c]});
    }
  }
  auto add_block = [&](std::vector<double>& values, const std::vector<double>& grads) {
    for (std::size_t i = 0; i < values.size(); ++i) refs.push_back({&values[i], grads[i]});
  };
  add_block(p.filters.data, g.filters.data);
  add_block(p.conv_bias, g.conv_bias);
  add_block(p.hidden.data, g.hidden.data);
  add_block(p.hidden_bias, g.hidden_bias);
  add_block(p.output.data, g.output.data);
  add_block(p.output_bias, g.output_bias);

  const std::size_t limit = std::max<std::size_t>(options.max_params, 500);
  if (refs.size() > limit) {
    Rng rng(options.seed);
    rng.shuffle(refs);
    refs.resize(limit);
  }

  GradCheckResult result;
  const double eps = options.epsilon;
  for (auto& ref : refs) {
    const double saved = *ref.value;
    *ref.value = saved + eps;
    auto plus = forward_trace(model, enc);
    *ref.value = saved - eps;
    auto minus = forward_trace(model, enc);
    *ref.value = saved;
    if (plus.selected != base.selected || minus.selected != base.selected) {
      ++result.skipped;
      continue;
    }
    const double numeric = (objective_value(plus, enc.positive, options.objective) -
                            objective_value(minus, enc.positive, options.objective)) /
                           (2.0 * eps);
    const double err = std::abs(ref.analytic - numeric) /
                       std::max(std::abs(ref.analytic) + std::abs(numeric), 1e-8);
    result.max_relative_error = std::max(result.max_relative_error, err);
    ++result.checked;
  }
  return result;
}

FilterAttribution explain_top_filters(const CnnModel& model,
                                      std::span<const RelationInstance> instances,
                                      const RelationInstance& target, std::size_t top_n) {
  if (instances.empty()) throw Error("filter attribution needs instances");
  const auto& cfg = model.config;
  const std::size_t F = cfg.n_filters;
  const std::size_t kk = cfg.pool_k();

  std::vector<std::vector<double>> max_act(F);
  std::vector<double> scores;
  for (const auto& inst : instances) {
    auto tr = forward_trace(model, encode(model.vocab, inst));
    scores.push_back(tr.probs[1]);
    for (std::size_t f = 0; f < F; ++f) {
      double best = -std::numeric_limits<double>::infinity();
      for (std::size_t r = 0; r < 3; ++r) {
        for (std::size_t s = 0; s < kk; ++s) {
          const std::size_t slot = (r * F + f) * kk + s;
          if (tr.selected[slot] != kNoPosition) best = std::max(best, tr.pooled[slot]);
        }
      }
      max_act[f].push_back(best);
    }
  }

  FilterAttribution out;
  out.correlation.assign(F, std::numeric_limits<double>::quiet_NaN());
  for (std::size_t f = 0; f < F; ++f) {
    try {
      out.correlation[f] = pearson(max_act[f], scores);
    } catch (const Error&) {
      // Constant activation: correlation undefined, ranked last.
    }
  }
  std::vector<std::size_t> order(F);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const bool na = std::isnan(out.correlation[a]);
    const bool nb = std::isnan(out.correlation[b]);
    if (na != nb) return nb;
    if (na) return false;
    return out.correlation[a] > out.correlation[b];
  });
  order.resize(std::min(top_n, F));
  out.top_filters = order;

  auto tr = forward_trace(model, encode(model.vocab, target));
  out.position_counts.assign(target.tokens.size(), 0);
  const auto shift = static_cast<long long>(centre_shift(cfg.width));
  for (std::size_t r = 0; r < 3; ++r) {
    const auto& input = tr.inputs[tr.regions[r].input];
    for (auto f : out.top_filters) {
      for (std::size_t s = 0; s < kk; ++s) {
        const auto pos = tr.selected[(r * F + f) * kk + s];
        if (pos == kNoPosition) continue;
        const long long centre = static_cast<long long>(pos) - shift;
        if (centre < 0 || centre >= static_cast<long long>(input.ids.size())) continue;
        ++out.position_counts[input.offset + static_cast<std::size_t>(centre)];
      }
    }
  }
  return out;
}

namespace {

void write_tensor(std::string& out, std::string_view name, std::size_t rows,
                  std::size_t cols, const std::vector<double>& data) {
  out += "tensor " + std::string(name) + " " + std::to_string(rows) + " " +
         std::to_string(cols) + "\n";
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      if (c) out += ' ';
      out += format_double(data[r * cols + c]);
    }
    out += '\n';
  }
}

}  // namespace

std::string serialize_cnn(const CnnModel& model) {
  const auto& c = model.config;
  const auto& p = model.params;
  std::string out = "relclass-cnn 1\n";
  out += "slot " + model.slot + "\n";
  out += "variant " + std::string(to_string(c.variant)) + "\n";
  out += "n_filters " + std::to_string(c.n_filters) + "\n";
  out += "width " + std::to_string(c.width) + "\n";
  out += "k " + std::to_string(c.k) + "\n";
  out += "hidden " + std::to_string(c.hidden) + "\n";
  out += "dim " + std::to_string(c.dim) + "\n";
  out += "learning_rate " + format_double(c.learning_rate) + "\n";
  out += "epochs " + std::to_string(c.epochs) + "\n";
  out += "batch_size " + std::to_string(c.batch_size) + "\n";
  out += "seed " + std::to_string(c.seed) + "\n";
  out += "finetune_embeddings " + std::string(c.finetune_embeddings ? "1" : "0") + "\n";
  out += "activation " + std::string(to_string(c.activation)) + "\n";
  out += "vocab_hash " + std::to_string(model.vocab.hash()) + "\n";
  out += "vocab_size " + std::to_string(model.vocab.size()) + "\n";
  write_tensor(out, "embeddings", p.embeddings.rows(), p.embeddings.dim(), p.embeddings.data());
  write_tensor(out, "filters", p.filters.rows, p.filters.cols, p.filters.data);
  write_tensor(out, "conv_bias", 1, p.conv_bias.size(), p.conv_bias);
  write_tensor(out, "hidden", p.hidden.rows, p.hidden.cols, p.hidden.data);
  write_tensor(out, "hidden_bias", 1, p.hidden_bias.size(), p.hidden_bias);
  write_tensor(out, "output", p.output.rows, p.output.cols, p.output.data);
  write_tensor(out, "output_bias", 1, p.output_bias.size(), p.output_bias);
  return out;
}

CnnModel parse_cnn(std::string_view text, const Vocabulary& vocab, std::string_view source) {
  LineReader reader(text);
  std::string_view line;
  auto value_of = [&](std::string_view key) -> std::string {
    if (!reader.next(line)) throw Error("missing '" + std::string(key) + "'");
    auto space = line.find(' ');
    if (space == std::string_view::npos || line.substr(0, space) != key) {
      throw Error("expected '" + std::string(key) + "'");
    }
    return std::string(line.substr(space + 1));
  };
  auto size_of = [&](std::string_view key) {
    auto v = parse_int(value_of(key));
    if (v < 0) throw Error("negative value for '" + std::string(key) + "'");
    return static_cast<std::size_t>(v);
  };
  auto read_tensor = [&](std::string_view name, std::size_t& rows, std::size_t& cols) {
    if (!reader.next(line)) throw Error("missing tensor " + std::string(name));
    auto parts = split(line, ' ');
    if (parts.size() != 4 || parts[0] != "tensor" || parts[1] != name) {
      throw Error("expected tensor " + std::string(name));
    }
    rows = static_cast<std::size_t>(parse_int(parts[2]));
    cols = static_cast<std::size_t>(parse_int(parts[3]));
    std::vector<double> data;
    data.reserve(rows * cols);
    for (std::size_t r = 0; r < rows; ++r) {
      if (!reader.next(line)) throw Error("truncated tensor " + std::string(name));
      auto vals = split_whitespace(line);
      if (vals.size() != cols) throw Error("tensor row width mismatch in " + std::string(name));
      for (const auto& v : vals) data.push_back(parse_double(v));
    }
    return data;
  };

  try {
    if (value_of("relclass-cnn") != "1") throw Error("unsupported CNN model version");
    CnnModel model;
    model.slot = value_of("slot");
    auto& c = model.config;
    c.variant = parse_variant(value_of("variant"));
    c.n_filters = size_of("n_filters");
    c.width = size_of("width");
    c.k = size_of("k");
    c.hidden = size_of("hidden");
    c.dim = size_of("dim");
    c.learning_rate = parse_double(value_of("learning_rate"));
    c.epochs = static_cast<int>(parse_int(value_of("epochs")));
    c.batch_size = size_of("batch_size");
    c.seed = static_cast<std::uint64_t>(std::stoull(value_of("seed")));
    c.finetune_embeddings = value_of("finetune_embeddings") == "1";
    c.activation = parse_activation(value_of("activation"));
    c.validate();
    auto hash = static_cast<std::uint64_t>(std::stoull(value_of("vocab_hash")));
    auto vocab_size = size_of("vocab_size");
    if (hash != vocab.hash() || vocab_size != vocab.size()) {
      throw Error("vocabulary hash mismatch: model was trained with a different vocabulary");
    }
    model.vocab = vocab;

    auto& p = model.params;
    std::size_t rows = 0;
    std::size_t cols = 0;
    auto emb = read_tensor("embeddings", rows, cols);
    if (rows != vocab.size() || cols != c.dim) throw Error("embedding tensor shape mismatch");
    p.embeddings = EmbeddingTable(rows, cols);
    p.embeddings.data() = std::move(emb);
    auto expect_shape = [&](std::size_t r, std::size_t cc, std::string_view name) {
      if (rows != r || cols != cc) throw Error("tensor shape mismatch: " + std::string(name));
    };
    p.filters.data = read_tensor("filters", rows, cols);
    expect_shape(c.n_filters, c.width * c.dim, "filters");
    p.filters.rows = rows;
    p.filters.cols = cols;
    p.conv_bias = read_tensor("conv_bias", rows, cols);
    expect_shape(1, c.n_filters, "conv_bias");
    p.hidden.data = read_tensor("hidden", rows, cols);
    if (c.has_hidden()) expect_shape(c.hidden, c.pooled_size(), "hidden");
    else expect_shape(0, 0, "hidden");
    p.hidden.rows = rows;
    p.hidden.cols = cols;
    p.hidden_bias = read_tensor("hidden_bias", rows, cols);
    expect_shape(1, c.has_hidden() ? c.hidden : 0, "hidden_bias");
    p.output.data = read_tensor("output", rows, cols);
    expect_shape(2, c.has_hidden() ? c.hidden : c.pooled_size(), "output");
    p.output.rows = rows;
    p.output.cols = cols;
    p.output_bias = read_tensor("output_bias", rows, cols);
    expect_shape(1, 2, "output_bias");
    return model;
  } catch (const std::exception& e) {
    throw ParseError(source, reader.line_number(), e.what());
  }
}

}  // namespace relclass
