#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "relclass/common.hpp"
#include "relclass/features.hpp"

namespace relclass {

struct SvmConfig {
  double C = 1.0;
  double tolerance = 1e-4;
  int max_epochs = 200;
  std::uint64_t seed = 0;

  void validate() const;
};

// Vectors with labels in {+1, -1}, all drawn from one frozen feature space.
struct SvmDataset {
  std::vector<SparseVector> vectors;
  std::vector<int> labels;
  std::size_t dim = 0;

  std::size_t size() const { return vectors.size(); }
  void add(SparseVector x, bool positive) {
    vectors.push_back(std::move(x));
    labels.push_back(positive ? 1 : -1);
  }
};

struct SvmModel {
  std::string slot;
  FeatureKind feature_kind = FeatureKind::bow;
  double C = 1.0;
  std::uint64_t seed = 0;
  std::vector<double> weights;
  double bias = 0.0;

  double margin(const SparseVector& x) const { return x.dot(weights) + bias; }
  bool operator==(const SvmModel&) const = default;
};

struct SvmTrainResult {
  SvmModel model;
  // Dual objective 1/2 a'Qa - e'a after each epoch (n pair updates).
  std::vector<double> dual_objective;
  // Primal objective 1/2|w|^2 + C sum hinge at the final iterate.
  double primal_objective = 0.0;
  int epochs = 0;
  bool converged = false;
  std::vector<std::string> warnings;
};

// Minimizes 1/2|w|^2 + C sum_i max(0, 1 - y_i (w.x_i + b)) with an
// unregularized bias, by SMO on the dual (maximal-violating pair with
// second-order working set selection).
SvmTrainResult train_svm(const SvmDataset& data, const SvmConfig& config,
                         std::string_view slot = {},
                         FeatureKind kind = FeatureKind::bow);

double primal_objective(const SvmModel& model, const SvmDataset& data);

double logistic(double z);

// sigma(w.x + b).
ModelScore svm_score(const SvmModel& model, const SparseVector& x);

struct TuneCResult {
  double C = 0.0;
  double dev_f1 = 0.0;
  // (C, dev F1) per grid point, in grid order.
  std::vector<std::pair<double, double>> log;
};

inline const std::vector<double> kDefaultCGrid = {0.01, 0.1, 1.0, 10.0};

// Best dev F1 at threshold 0.5; ties go to the smaller C.
TuneCResult tune_C(const SvmDataset& train, const SvmDataset& dev,
                   std::span<const double> grid, const SvmConfig& base = {});

// Binary F1 of sign(margin) against the dataset labels.
double svm_f1(const SvmModel& model, const SvmDataset& data);

std::string serialize_svm(const SvmModel& model);
SvmModel parse_svm(std::string_view text, std::string_view source = "<svm>");

}  // namespace relclass
