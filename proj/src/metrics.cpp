#include "platenet/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

namespace platenet {

namespace {

// Round half-even at 4 decimals, then print with trailing zeros kept.
std::string fmt4(double v) {
  const double scaled = std::nearbyint(v * 10000.0);  // FE_TONEAREST ties-to-even
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", scaled / 10000.0);
  return buf;
}

std::string pad_left(const std::string& s, size_t width) {
  return s.size() >= width ? s : std::string(width - s.size(), ' ') + s;
}

void divide(double num, double den, double& out, bool& flag) {
  if (den == 0.0) {
    out = 0.0;
    flag = true;
  } else {
    out = num / den;
  }
}

}  // namespace

std::vector<int> threshold_predict(const Tensor& probabilities, float threshold) {
  if (threshold < 0.0f || threshold > 1.0f) {
    throw ArgumentError("threshold must be in [0,1], got " + std::to_string(threshold));
  }
  std::vector<int> labels;
  labels.reserve(probabilities.size());
  for (float p : probabilities.values()) {
    labels.push_back(p >= threshold ? 1 : 0);
  }
  return labels;
}

ConfusionMatrix confusion(std::span<const int> y_true, std::span<const int> y_pred) {
  if (y_true.size() != y_pred.size()) {
    throw ShapeError("confusion length mismatch: " + std::to_string(y_true.size()) +
                     " vs " + std::to_string(y_pred.size()));
  }
  ConfusionMatrix cm;
  for (size_t i = 0; i < y_true.size(); ++i) {
    const int t = y_true[i];
    const int p = y_pred[i];
    if ((t != 0 && t != 1) || (p != 0 && p != 1)) {
      throw ArgumentError("confusion expects binary labels");
    }
    if (t == 0) {
      (p == 0 ? cm.tn : cm.fp) += 1;
    } else {
      (p == 1 ? cm.tp : cm.fn) += 1;
    }
  }
  return cm;
}

ClassificationReport report(const ConfusionMatrix& cm) {
  if (cm.total() == 0) throw ArgumentError("report needs at least one example");
  ClassificationReport rep;
  rep.total = cm.total();

  ClassMetrics& c0 = rep.per_class[0];
  ClassMetrics& c1 = rep.per_class[1];
  c0.support = cm.tn + cm.fp;
  c1.support = cm.tp + cm.fn;
  divide(static_cast<double>(cm.tn), static_cast<double>(cm.tn + cm.fn), c0.precision,
         c0.zero_division);
  divide(static_cast<double>(cm.tn), static_cast<double>(cm.tn + cm.fp), c0.recall,
         c0.zero_division);
  divide(static_cast<double>(cm.tp), static_cast<double>(cm.tp + cm.fp), c1.precision,
         c1.zero_division);
  divide(static_cast<double>(cm.tp), static_cast<double>(cm.tp + cm.fn), c1.recall,
         c1.zero_division);
  for (ClassMetrics* c : {&c0, &c1}) {
    divide(2.0 * c->precision * c->recall, c->precision + c->recall, c->f1,
           c->zero_division);
  }

  rep.accuracy = static_cast<double>(cm.tn + cm.tp) / static_cast<double>(rep.total);

  rep.macro.precision = (c0.precision + c1.precision) / 2.0;
  rep.macro.recall = (c0.recall + c1.recall) / 2.0;
  rep.macro.f1 = (c0.f1 + c1.f1) / 2.0;
  rep.macro.support = rep.total;

  const double total = static_cast<double>(rep.total);
  rep.weighted.precision =
      (c0.support * c0.precision + c1.support * c1.precision) / total;
  rep.weighted.recall = (c0.support * c0.recall + c1.support * c1.recall) / total;
  rep.weighted.f1 = (c0.support * c0.f1 + c1.support * c1.f1) / total;
  rep.weighted.support = rep.total;

  rep.zero_division = c0.zero_division || c1.zero_division;
  return rep;
}

std::string render_report(const ClassificationReport& rep) {
  std::ostringstream os;
  os << pad_left("", 13) << pad_left("precision", 10) << pad_left("recall", 10)
     << pad_left("f1-score", 10) << pad_left("support", 10) << "\n\n";
  for (int c = 0; c < 2; ++c) {
    const ClassMetrics& m = rep.per_class[c];
    os << pad_left(std::to_string(c), 13) << pad_left(fmt4(m.precision), 10)
       << pad_left(fmt4(m.recall), 10) << pad_left(fmt4(m.f1), 10)
       << pad_left(std::to_string(m.support), 10) << "\n";
  }
  os << "\n";
  os << pad_left("accuracy", 13) << pad_left("", 10) << pad_left("", 10)
     << pad_left(fmt4(rep.accuracy), 10) << pad_left(std::to_string(rep.total), 10)
     << "\n";
  os << pad_left("macro avg", 13) << pad_left(fmt4(rep.macro.precision), 10)
     << pad_left(fmt4(rep.macro.recall), 10) << pad_left(fmt4(rep.macro.f1), 10)
     << pad_left(std::to_string(rep.macro.support), 10) << "\n";
  os << pad_left("weighted avg", 13) << pad_left(fmt4(rep.weighted.precision), 10)
     << pad_left(fmt4(rep.weighted.recall), 10) << pad_left(fmt4(rep.weighted.f1), 10)
     << pad_left(std::to_string(rep.weighted.support), 10) << "\n";
  return os.str();
}

std::string render_report_tsv(const ClassificationReport& rep) {
  std::ostringstream os;
  os << "row\tprecision\trecall\tf1-score\tsupport\n";
  for (int c = 0; c < 2; ++c) {
    const ClassMetrics& m = rep.per_class[c];
    os << c << "\t" << fmt4(m.precision) << "\t" << fmt4(m.recall) << "\t" << fmt4(m.f1)
       << "\t" << m.support << "\n";
  }
  os << "accuracy\t\t\t" << fmt4(rep.accuracy) << "\t" << rep.total << "\n";
  os << "macro avg\t" << fmt4(rep.macro.precision) << "\t" << fmt4(rep.macro.recall)
     << "\t" << fmt4(rep.macro.f1) << "\t" << rep.macro.support << "\n";
  os << "weighted avg\t" << fmt4(rep.weighted.precision) << "\t"
     << fmt4(rep.weighted.recall) << "\t" << fmt4(rep.weighted.f1) << "\t"
     << rep.weighted.support << "\n";
  return os.str();
}

std::string render_confusion(const ConfusionMatrix& cm) {
  std::ostringstream os;
  os << pad_left("", 11) << pad_left("Predicted", 20) << "\n";
  os << pad_left("", 11) << pad_left("ok", 10) << pad_left("bad", 10) << "\n";
  os << pad_left("Actual ok", 11) << pad_left(std::to_string(cm.tn), 10)
     << pad_left(std::to_string(cm.fp), 10) << "\n";
  os << pad_left("Actual bad", 11) << pad_left(std::to_string(cm.fn), 10)
     << pad_left(std::to_string(cm.tp), 10) << "\n";
  return os.str();
}

}  // namespace platenet
