#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "malimg/common/error.hpp"

namespace malimg::metrics {

struct ConfusionMatrix {
  int num_classes = 0;
  std::vector<int64_t> counts;  // row = true class, col = predicted

  explicit ConfusionMatrix(int c) : num_classes(c), counts(static_cast<size_t>(c) * c, 0) {}

  int64_t& at(int truth, int pred) { return counts[static_cast<size_t>(truth) * num_classes + pred]; }
  int64_t at(int truth, int pred) const { return counts[static_cast<size_t>(truth) * num_classes + pred]; }
  int64_t total() const;

  void merge(const ConfusionMatrix& other);
};

ConfusionMatrix confusion(std::span<const int> preds, std::span<const int> truths, int num_classes);

// Per-class precision/recall/F1 with the 0/0 -> 0 convention, plus their
// macro means over all classes.
struct PrfResult {
  std::vector<double> precision, recall, f1;
  double p_macro = 0, r_macro = 0, f1_macro = 0;
};

PrfResult macro_prf(const ConfusionMatrix& cm);

// One-vs-rest AUC via midrank Mann-Whitney statistics. Classes without both
// a positive and a negative are excluded from the macro mean (contributes[c]
// is false and auc[c] is NaN). Throws DegenerateLabels when no class
// contributes.
struct AucResult {
  std::vector<double> auc;
  std::vector<bool> contributes;
  double auc_macro = 0;
  int num_contributing = 0;
};

AucResult macro_auc(std::span<const double> scores, std::span<const int> truths, int num_classes);

// Checkpoint-selection rule: argmax of validation F1-macro, ties broken by
// lower validation loss, remaining ties by earliest epoch.
struct EpochStat {
  int epoch = 0;
  double val_f1_macro = 0;
  double val_loss = 0;
};

int select_checkpoint(std::span<const EpochStat> history);

struct MetricsReport {
  int num_classes = 0;
  std::vector<double> precision, recall, f1, auc;
  std::vector<bool> auc_contributes;
  double p_macro = 0, r_macro = 0, f1_macro = 0, auc_macro = 0;
  double mean_loss = 0;
  int64_t example_count = 0;

  nlohmann::json to_json() const;
  static MetricsReport from_json(const nlohmann::json& j);
};

MetricsReport make_report(const ConfusionMatrix& cm, const AucResult& auc, double mean_loss,
                          int64_t example_count);

// Ablation-table serialization: 13 columns, flags first, metrics last.
struct RunTag {
  std::string id, pt, fpn, in, ta, mu, opt, loss;
};

std::string table_csv_header();
std::string table_csv_row(const RunTag& tag, const MetricsReport& r);
std::string table_csv_failed_row(const RunTag& tag, const std::string& reason);

}  // namespace malimg::metrics
