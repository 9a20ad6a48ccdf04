#include "relclass/svm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <list>

#include "relclass/evalkit.hpp"

namespace relclass {

void SvmConfig::validate() const {
  if (!(C > 0.0)) throw Error("SVM C must be positive");
  if (!(tolerance > 0.0)) throw Error("SVM tolerance must be positive");
  if (max_epochs < 0) throw Error("SVM max_epochs must be non-negative");
}

namespace {

constexpr double kTau = 1e-12;
constexpr double kInf = std::numeric_limits<double>::infinity();
// Column cache budget in doubles (64 MiB).
constexpr std::size_t kCacheBudget = std::size_t{8} << 20;

// Columns of Q_ij = y_i y_j x_i.x_j, computed on demand through a dense
// scatter of x_i and kept in an LRU cache.
class QColumns {
 public:
  QColumns(const SvmDataset& data)
      : data_(data), n_(data.size()), columns_(n_), scratch_(data.dim, 0.0) {
    max_cached_ = std::max<std::size_t>(2, kCacheBudget / std::max<std::size_t>(n_, 1));
    diag_.resize(n_);
    for (std::size_t i = 0; i < n_; ++i) diag_[i] = data.vectors[i].squared_norm();
  }

  double diag(std::size_t i) const { return diag_[i]; }

  const std::vector<double>& column(std::size_t i) {
    auto& col = columns_[i];
    if (!col.values.empty() || n_ == 0) {
      lru_.splice(lru_.end(), lru_, col.where);
      return col.values;
    }
    if (lru_.size() >= max_cached_) {
      auto victim = lru_.front();
      lru_.pop_front();
      std::vector<double>().swap(columns_[victim].values);
    }
    const auto& xi = data_.vectors[i];
    for (const auto& [idx, v] : xi.entries()) scratch_[idx] = v;
    col.values.resize(n_);
    const double yi = data_.labels[i];
    for (std::size_t t = 0; t < n_; ++t) {
      col.values[t] = yi * data_.labels[t] * data_.vectors[t].dot(scratch_);
    }
    for (const auto& [idx, v] : xi.entries()) scratch_[idx] = 0.0;
    lru_.push_back(i);
    col.where = std::prev(lru_.end());
    return col.values;
  }

 private:
  struct Column {
    std::vector<double> values;
    std::list<std::size_t>::iterator where;
  };

  const SvmDataset& data_;
  std::size_t n_;
  std::vector<Column> columns_;
  std::vector<double> diag_;
  std::vector<double> scratch_;
  std::list<std::size_t> lru_;
  std::size_t max_cached_;
};

}  // namespace

double logistic(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  double e = std::exp(z);
  return e / (1.0 + e);
}

double primal_objective(const SvmModel& model, const SvmDataset& data) {
  double reg = 0.0;
  for (double w : model.weights) reg += w * w;
  double loss = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    loss += std::max(0.0, 1.0 - data.labels[i] * model.margin(data.vectors[i]));
  }
  return 0.5 * reg + model.C * loss;
}

SvmTrainResult train_svm(const SvmDataset& data, const SvmConfig& config,
                         std::string_view slot, FeatureKind kind) {
  config.validate();
  const std::size_t n = data.size();
  if (n == 0) throw Error("empty training set");
  if (data.labels.size() != n) throw Error("label count mismatch");

  SvmTrainResult result;
  SvmModel& model = result.model;
  model.slot = std::string(slot);
  model.feature_kind = kind;
  model.C = config.C;
  model.seed = config.seed;
  model.weights.assign(data.dim, 0.0);

  std::size_t n_pos = 0;
  for (int y : data.labels) {
    if (y != 1 && y != -1) throw Error("labels must be +1 or -1");
    n_pos += y == 1;
  }
  if (n_pos == 0 || n_pos == n) {
    // Only alpha = 0 satisfies sum(y a) = 0; any bias with the class sign and
    // |b| >= 1 is optimal.
    model.bias = n_pos == n ? 1.0 : -1.0;
    result.converged = true;
    result.warnings.push_back("single-class training set for slot '" +
                              model.slot + "': constant " +
                              (n_pos == n ? "positive" : "negative") +
                              " classifier");
    result.primal_objective = primal_objective(model, data);
    return result;
  }

  const double C = config.C;
  const auto& y = data.labels;
  std::vector<double> alpha(n, 0.0);
  std::vector<double> grad(n, -1.0);
  QColumns Q(data);

  auto at_upper = [&](std::size_t t) { return alpha[t] >= C; };
  auto at_lower = [&](std::size_t t) { return alpha[t] <= 0.0; };
  auto dual = [&] {
    double f = 0.0;
    for (std::size_t t = 0; t < n; ++t) f += alpha[t] * (grad[t] - 1.0);
    return 0.5 * f;
  };

  const std::size_t max_iter = static_cast<std::size_t>(config.max_epochs) * n;
  std::size_t iter = 0;
  while (true) {
    // Working set: i maximizes -y G over I_up, j by second-order gain.
    double gmax = -kInf;
    double gmax2 = -kInf;
    std::size_t i = n;
    for (std::size_t t = 0; t < n; ++t) {
      if (y[t] == 1) {
        if (!at_upper(t) && -grad[t] >= gmax) {
          gmax = -grad[t];
          i = t;
        }
      } else if (!at_lower(t) && grad[t] >= gmax) {
        gmax = grad[t];
        i = t;
      }
    }
    std::size_t j = n;
    if (i != n) {
      const auto& Qi = Q.column(i);
      double best = kInf;
      for (std::size_t t = 0; t < n; ++t) {
        double diff = 0.0;
        double quad = 0.0;
        if (y[t] == 1) {
          if (at_lower(t)) continue;
          gmax2 = std::max(gmax2, grad[t]);
          diff = gmax + grad[t];
          quad = Q.diag(i) + Q.diag(t) - 2.0 * y[i] * Qi[t];
        } else {
          if (at_upper(t)) continue;
          gmax2 = std::max(gmax2, -grad[t]);
          diff = gmax - grad[t];
          quad = Q.diag(i) + Q.diag(t) + 2.0 * y[i] * Qi[t];
        }
        if (diff <= 0) continue;
        double obj = -(diff * diff) / (quad > 0 ? quad : kTau);
        if (obj <= best) {
          best = obj;
          j = t;
        }
      }
    }
    if (i == n || j == n || gmax + gmax2 < config.tolerance) {
      result.converged = true;
      break;
    }
    if (iter >= max_iter) break;

    const auto Qi = Q.column(i);  // copy: fetching j may evict i
    const auto& Qj = Q.column(j);
    const double old_i = alpha[i];
    const double old_j = alpha[j];
    if (y[i] != y[j]) {
      double quad = Q.diag(i) + Q.diag(j) + 2.0 * Qi[j];
      if (quad <= 0) quad = kTau;
      double delta = (-grad[i] - grad[j]) / quad;
      double diff = alpha[i] - alpha[j];
      alpha[i] += delta;
      alpha[j] += delta;
      if (diff > 0) {
        if (alpha[j] < 0) {
          alpha[j] = 0;
          alpha[i] = diff;
        }
      } else if (alpha[i] < 0) {
        alpha[i] = 0;
        alpha[j] = -diff;
      }
      if (diff > 0) {
        if (alpha[i] > C) {
          alpha[i] = C;
          alpha[j] = C - diff;
        }
      } else if (alpha[j] > C) {
        alpha[j] = C;
        alpha[i] = C + diff;
      }
    } else {
      double quad = Q.diag(i) + Q.diag(j) - 2.0 * Qi[j];
      if (quad <= 0) quad = kTau;
      double delta = (grad[i] - grad[j]) / quad;
      double sum = alpha[i] + alpha[j];
      alpha[i] -= delta;
      alpha[j] += delta;
      if (sum > C) {
        if (alpha[i] > C) {
          alpha[i] = C;
          alpha[j] = sum - C;
        }
        if (alpha[j] > C) {
          alpha[j] = C;
          alpha[i] = sum - C;
        }
      } else {
        if (alpha[j] < 0) {
          alpha[j] = 0;
          alpha[i] = sum;
        }
        if (alpha[i] < 0) {
          alpha[i] = 0;
          alpha[j] = sum;
        }
      }
    }
    const double di = alpha[i] - old_i;
    const double dj = alpha[j] - old_j;
    for (std::size_t t = 0; t < n; ++t) grad[t] += Qi[t] * di + Qj[t] * dj;

    ++iter;
    if (iter % n == 0) result.dual_objective.push_back(dual());
  }
  if (iter % n != 0 || result.dual_objective.empty()) {
    result.dual_objective.push_back(dual());
  }
  result.epochs = static_cast<int>((iter + n - 1) / n);
  if (!result.converged) {
    result.warnings.push_back("SVM for slot '" + model.slot +
                              "' stopped at max_epochs before reaching tolerance");
  }

  // Bias from the KKT conditions.
  double ub = kInf;
  double lb = -kInf;
  double sum_free = 0.0;
  std::size_t n_free = 0;
  for (std::size_t t = 0; t < n; ++t) {
    double yg = y[t] * grad[t];
    if (at_upper(t)) {
      if (y[t] == -1) ub = std::min(ub, yg);
      else lb = std::max(lb, yg);
    } else if (at_lower(t)) {
      if (y[t] == 1) ub = std::min(ub, yg);
      else lb = std::max(lb, yg);
    } else {
      ++n_free;
      sum_free += yg;
    }
  }
  double rho = n_free > 0 ? sum_free / static_cast<double>(n_free) : (ub + lb) / 2;
  model.bias = -rho;

  for (std::size_t t = 0; t < n; ++t) {
    if (alpha[t] == 0.0) continue;
    const double coef = alpha[t] * y[t];
    for (const auto& [idx, v] : data.vectors[t].entries()) model.weights[idx] += coef * v;
  }
  result.primal_objective = primal_objective(model, data);
  return result;
}

ModelScore svm_score(const SvmModel& model, const SparseVector& x) {
  return ModelScore(logistic(model.margin(x)));
}

double svm_f1(const SvmModel& model, const SvmDataset& data) {
  SlotMetrics m;
  for (std::size_t i = 0; i < data.size(); ++i) {
    m.add(model.margin(data.vectors[i]) >= 0.0, data.labels[i] == 1);
  }
  return m.f1();
}

TuneCResult tune_C(const SvmDataset& train, const SvmDataset& dev,
                   std::span<const double> grid, const SvmConfig& base) {
  if (grid.empty()) throw Error("empty C grid");
  if (dev.size() == 0) throw Error("empty dev set");
  TuneCResult out;
  bool have = false;
  for (double c : grid) {
    SvmConfig cfg = base;
    cfg.C = c;
    auto trained = train_svm(train, cfg);
    double f1 = svm_f1(trained.model, dev);
    out.log.emplace_back(c, f1);
    if (!have || f1 > out.dev_f1 || (f1 == out.dev_f1 && c < out.C)) {
      out.C = c;
      out.dev_f1 = f1;
      have = true;
    }
  }
  return out;
}

std::string serialize_svm(const SvmModel& model) {
  std::string out = "relclass-svm 1\n";
  out += "slot " + model.slot + "\n";
  out += "feature_kind " + std::string(to_string(model.feature_kind)) + "\n";
  out += "dim " + std::to_string(model.weights.size()) + "\n";
  out += "C " + format_double(model.C) + "\n";
  out += "seed " + std::to_string(model.seed) + "\n";
  out += "bias " + format_double(model.bias) + "\n";
  std::size_t nnz = 0;
  for (double w : model.weights) nnz += w != 0.0;
  out += "nnz " + std::to_string(nnz) + "\n";
  for (std::size_t i = 0; i < model.weights.size(); ++i) {
    if (model.weights[i] != 0.0) {
      out += std::to_string(i) + " " + format_double(model.weights[i]) + "\n";
    }
  }
  return out;
}

SvmModel parse_svm(std::string_view text, std::string_view source) {
  LineReader reader(text);
  std::string_view line;
  auto expect = [&](std::string_view key) -> std::string {
    if (!reader.next(line)) {
      throw ParseError(source, reader.line_number() + 1, "missing '" + std::string(key) + "'");
    }
    auto space = line.find(' ');
    if (space == std::string_view::npos || line.substr(0, space) != key) {
      throw ParseError(source, reader.line_number(), "expected '" + std::string(key) + "'");
    }
    return std::string(line.substr(space + 1));
  };
  try {
    if (expect("relclass-svm") != "1") {
      throw ParseError(source, reader.line_number(), "unsupported SVM model version");
    }
    SvmModel model;
    model.slot = expect("slot");
    model.feature_kind = parse_feature_kind(expect("feature_kind"));
    auto dim = parse_int(expect("dim"));
    if (dim < 0) throw Error("negative dim");
    model.weights.assign(static_cast<std::size_t>(dim), 0.0);
    model.C = parse_double(expect("C"));
    model.seed = static_cast<std::uint64_t>(std::stoull(expect("seed")));
    model.bias = parse_double(expect("bias"));
    auto nnz = parse_int(expect("nnz"));
    for (long long k = 0; k < nnz; ++k) {
      if (!reader.next(line)) throw Error("truncated weight list");
      auto parts = split(line, ' ');
      if (parts.size() != 2) throw Error("malformed weight entry");
      auto idx = parse_int(parts[0]);
      if (idx < 0 || idx >= dim) throw Error("weight index out of range");
      model.weights[static_cast<std::size_t>(idx)] = parse_double(parts[1]);
    }
    return model;
  } catch (const ParseError&) {
    throw;
  } catch (const std::exception& e) {
    throw ParseError(source, reader.line_number(), e.what());
  }
}

}  // namespace relclass
