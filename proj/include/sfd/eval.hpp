// Copyright 2026 The sfd Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "sfd/backend.hpp"
#include "sfd/corpus.hpp"

namespace sfd {

struct ConfusionCounts {
  long tp = 0, fp = 0, tn = 0, fn = 0;

  friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

/// Rates are NaN when their denominator is zero.
struct RateResult {
  double tpr = 0.0;
  double fpr = 0.0;
  ConfusionCounts counts;
};

/// Predicts positive iff score >= threshold.
RateResult tpr_fpr_at_threshold(std::span<const double> scores, std::span<const int> labels,
                                double threshold = 0.5);

/// Mann-Whitney form with half credit for ties, via average ranks.
/// Throws "AUC undefined" when either class is absent.
double roc_auc(std::span<const double> scores, std::span<const int> labels);

struct ClassReport {
  double tpr = 0.0, fpr = 0.0, auc = 0.0;  // NaN when undefined
  ConfusionCounts counts;
};

struct EvalReport {
  std::array<ClassReport, kNumClasses> classes;  // smoke, fire
  double threshold = 0.5;
  std::size_t evaluated = 0;
  std::vector<std::string> skipped;

  nlohmann::json to_json() const;
  /// Fixed-width row: Smoke TPR, Fire TPR, Smoke FPR, Fire FPR, Smoke AUC, Fire AUC.
  std::string table(const std::string& method = "model") const;
};

/// Scores per class from already-computed probabilities.
EvalReport make_report(std::span<const std::array<double, kNumClasses>> probs,
                       std::span<const LabelVector> labels, double threshold = 0.5);

/// Test-time pass: decode, resize to the model input, normalize, predict.
/// No augmentation. Undecodable images are skipped and listed.
EvalReport evaluate(const Model<float>& model, const Manifest& dataset,
                    const NormalizationSpec& norm = {}, double threshold = 0.5);

}  // namespace sfd
