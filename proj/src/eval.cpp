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

#include "sfd/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iomanip>
#include <iostream>
#include <limits>
#include <numeric>
#include <sstream>

#include "sfd/error.hpp"
#include "sfd/image_io.hpp"

namespace sfd {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

nlohmann::json num_or_null(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

}  // namespace

RateResult tpr_fpr_at_threshold(std::span<const double> scores, std::span<const int> labels,
                                double threshold) {
  if (scores.size() != labels.size())
    fail(ErrorKind::InvalidArgument, "tpr_fpr: " + std::to_string(scores.size()) + " scores vs " +
                                         std::to_string(labels.size()) + " labels");
  RateResult r;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool pred = scores[i] >= threshold;
    if (labels[i]) (pred ? r.counts.tp : r.counts.fn)++;
    else (pred ? r.counts.fp : r.counts.tn)++;
  }
  const long pos = r.counts.tp + r.counts.fn, neg = r.counts.fp + r.counts.tn;
  r.tpr = pos > 0 ? static_cast<double>(r.counts.tp) / static_cast<double>(pos) : kNaN;
  r.fpr = neg > 0 ? static_cast<double>(r.counts.fp) / static_cast<double>(neg) : kNaN;
  return r;
}

double roc_auc(std::span<const double> scores, std::span<const int> labels) {
  require(scores.size() == labels.size(), "roc_auc: scores/labels size mismatch");
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  double pos_rank_sum = 0.0;
  double P = 0.0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    // 1-based ranks i+1..j share their average.
    const double avg = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k)
      if (labels[order[k]]) {
        pos_rank_sum += avg;
        P += 1.0;
      }
    i = j;
  }
  const double N = static_cast<double>(n) - P;
  if (P == 0.0 || N == 0.0) fail(ErrorKind::InvalidArgument, "AUC undefined: need both positive and negative labels");
  return (pos_rank_sum - P * (P + 1.0) / 2.0) / (P * N);
}

nlohmann::json EvalReport::to_json() const {
  nlohmann::json j;
  const char* names[kNumClasses] = {"smoke", "fire"};
  for (int c = 0; c < kNumClasses; ++c) {
    const auto& r = classes[c];
    j[names[c]] = {{"tpr", num_or_null(r.tpr)},
                   {"fpr", num_or_null(r.fpr)},
                   {"auc", num_or_null(r.auc)},
                   {"tp", r.counts.tp},
                   {"fp", r.counts.fp},
                   {"tn", r.counts.tn},
                   {"fn", r.counts.fn}};
  }
  j["threshold"] = threshold;
  j["evaluated"] = evaluated;
  j["skipped"] = skipped;
  return j;
}

std::string EvalReport::table(const std::string& method) const {
  std::ostringstream os;
  auto cell = [&](double v) {
    os << std::setw(11);
    if (std::isfinite(v)) os << std::fixed << std::setprecision(3) << v;
    else os << "-";
  };
  os << std::left << std::setw(16) << "Method" << std::right;
  for (const char* h : {"Smoke TPR", "Fire TPR", "Smoke FPR", "Fire FPR", "Smoke AUC", "Fire AUC"})
    os << std::setw(11) << h;
  os << '\n' << std::left << std::setw(16) << method << std::right;
  cell(classes[0].tpr), cell(classes[1].tpr), cell(classes[0].fpr), cell(classes[1].fpr);
  cell(classes[0].auc), cell(classes[1].auc);
  os << '\n';
  return os.str();
}

EvalReport make_report(std::span<const std::array<double, kNumClasses>> probs,
                       std::span<const LabelVector> labels, double threshold) {
  require(probs.size() == labels.size(), "make_report: size mismatch");
  EvalReport rep;
  rep.threshold = threshold;
  rep.evaluated = probs.size();
  for (int c = 0; c < kNumClasses; ++c) {
    std::vector<double> s(probs.size());
    std::vector<int> y(probs.size());
    for (std::size_t i = 0; i < probs.size(); ++i) {
      s[i] = probs[i][c];
      y[i] = labels[i][c] ? 1 : 0;
    }
    const RateResult rr = tpr_fpr_at_threshold(s, y, threshold);
    auto& out = rep.classes[c];
    out.tpr = rr.tpr;
    out.fpr = rr.fpr;
    out.counts = rr.counts;
    const bool defined = rr.counts.tp + rr.counts.fn > 0 && rr.counts.fp + rr.counts.tn > 0;
    out.auc = defined ? roc_auc(s, y) : kNaN;
  }
  return rep;
}

EvalReport evaluate(const Model<float>& model, const Manifest& dataset,
                    const NormalizationSpec& norm, double threshold) {
  if (dataset.empty()) fail(ErrorKind::InvalidArgument, "evaluate: empty dataset");
  std::vector<std::array<double, kNumClasses>> probs;
  std::vector<LabelVector> labels;
  std::vector<std::string> skipped;
  for (const auto& s : dataset.samples()) {
    Image img;
    try {
      img = read_image(s.image_path);
    } catch (const Error& e) {
      std::cerr << "evaluate: skipping '" << s.id << "': " << e.what() << '\n';
      skipped.push_back(s.id);
      continue;
    }
    probs.push_back(model.predict_proba(prepare_input<float>(img, model.arch(), norm)));
    labels.push_back(s.label);
  }
  if (probs.empty()) fail(ErrorKind::InvalidArgument, "evaluate: no decodable images");
  EvalReport rep = make_report(probs, labels, threshold);
  rep.skipped = std::move(skipped);
  return rep;
}

}  // namespace sfd
