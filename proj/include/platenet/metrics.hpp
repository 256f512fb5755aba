#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "platenet/tensor.hpp"

namespace platenet {

// Binary confusion counts. Class ok=0 is negative, bad=1 positive; rows are
// actual, columns predicted.
struct ConfusionMatrix {
  int64_t tn = 0;
  int64_t fp = 0;
  int64_t fn = 0;
  int64_t tp = 0;

  int64_t total() const { return tn + fp + fn + tp; }
};

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  int64_t support = 0;
  bool zero_division = false;  // a denominator was 0 and the metric forced to 0
};

struct ClassificationReport {
  ClassMetrics per_class[2];  // indexed by class label
  double accuracy = 0.0;
  ClassMetrics macro;     // unweighted mean over classes
  ClassMetrics weighted;  // support-weighted mean
  int64_t total = 0;
  bool zero_division = false;
};

// label 1 iff p >= threshold (inclusive at the threshold).
std::vector<int> threshold_predict(const Tensor& probabilities, float threshold = 0.5f);

ConfusionMatrix confusion(std::span<const int> y_true, std::span<const int> y_pred);

ClassificationReport report(const ConfusionMatrix& cm);

// Fixed-width text table (per-class rows, accuracy, macro avg, weighted
// avg) with values rounded half-even to 4 decimals.
std::string render_report(const ClassificationReport& rep);

// Same fields, tab-separated.
std::string render_report_tsv(const ClassificationReport& rep);

std::string render_confusion(const ConfusionMatrix& cm);

}  // namespace platenet
