#include "malimg/metrics/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

namespace malimg::metrics {

int64_t ConfusionMatrix::total() const {
  return std::accumulate(counts.begin(), counts.end(), static_cast<int64_t>(0));
}

void ConfusionMatrix::merge(const ConfusionMatrix& other) {
  require(other.num_classes == num_classes, Errc::ShapeError, "confusion matrix size mismatch");
  for (size_t i = 0; i < counts.size(); ++i) counts[i] += other.counts[i];
}

ConfusionMatrix confusion(std::span<const int> preds, std::span<const int> truths, int num_classes) {
  require(preds.size() == truths.size(), Errc::ShapeError, "pred/truth length mismatch");
  require(num_classes > 0, Errc::ConfigError, "num_classes must be positive");
  ConfusionMatrix cm(num_classes);
  for (size_t i = 0; i < preds.size(); ++i) {
    require(preds[i] >= 0 && preds[i] < num_classes, Errc::IndexOutOfRange,
            "prediction " + std::to_string(preds[i]) + " out of range");
    require(truths[i] >= 0 && truths[i] < num_classes, Errc::IndexOutOfRange,
            "truth " + std::to_string(truths[i]) + " out of range");
    ++cm.at(truths[i], preds[i]);
  }
  return cm;
}

PrfResult macro_prf(const ConfusionMatrix& cm) {
  const int C = cm.num_classes;
  PrfResult r;
  r.precision.resize(static_cast<size_t>(C));
  r.recall.resize(static_cast<size_t>(C));
  r.f1.resize(static_cast<size_t>(C));
  for (int c = 0; c < C; ++c) {
    const int64_t tp = cm.at(c, c);
    int64_t fp = 0, fn = 0;
    for (int k = 0; k < C; ++k) {
      if (k != c) {
        fp += cm.at(k, c);
        fn += cm.at(c, k);
      }
    }
    const double p = (tp + fp) > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
    const double q = (tp + fn) > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
    const double f = (p + q) > 0 ? 2.0 * p * q / (p + q) : 0.0;
    r.precision[static_cast<size_t>(c)] = p;
    r.recall[static_cast<size_t>(c)] = q;
    r.f1[static_cast<size_t>(c)] = f;
  }
  r.p_macro = std::accumulate(r.precision.begin(), r.precision.end(), 0.0) / C;
  r.r_macro = std::accumulate(r.recall.begin(), r.recall.end(), 0.0) / C;
  r.f1_macro = std::accumulate(r.f1.begin(), r.f1.end(), 0.0) / C;
  return r;
}

AucResult macro_auc(std::span<const double> scores, std::span<const int> truths, int num_classes) {
  const size_t n = truths.size();
  require(n >= 1, Errc::ShapeError, "macro_auc needs at least one example");
  require(scores.size() == n * static_cast<size_t>(num_classes), Errc::ShapeError,
          "scores must be N x C row-major");

  AucResult res;
  res.auc.assign(static_cast<size_t>(num_classes), std::numeric_limits<double>::quiet_NaN());
  res.contributes.assign(static_cast<size_t>(num_classes), false);

  std::vector<size_t> order(n);
  std::vector<double> col(n), rank(n);
  double total = 0;
  for (int c = 0; c < num_classes; ++c) {
    int64_t pos = 0;
    for (size_t i = 0; i < n; ++i) {
      require(truths[i] >= 0 && truths[i] < num_classes, Errc::IndexOutOfRange, "truth label out of range");
      col[i] = scores[i * static_cast<size_t>(num_classes) + static_cast<size_t>(c)];
      if (truths[i] == c) ++pos;
    }
    const int64_t neg = static_cast<int64_t>(n) - pos;
    if (pos == 0 || neg == 0) continue;

    // Midranks: tied scores share the average of their 1-based rank span.
    std::iota(order.begin(), order.end(), size_t{0});
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) { return col[a] < col[b]; });
    size_t i = 0;
    while (i < n) {
      size_t j = i;
      while (j + 1 < n && col[order[j + 1]] == col[order[i]]) ++j;
      const double mid = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
      for (size_t k = i; k <= j; ++k) rank[order[k]] = mid;
      i = j + 1;
    }

    double rank_sum = 0;
    for (size_t k = 0; k < n; ++k) {
      if (truths[k] == c) rank_sum += rank[k];
    }
    const double auc = (rank_sum - static_cast<double>(pos) * (static_cast<double>(pos) + 1.0) / 2.0) /
                       (static_cast<double>(pos) * static_cast<double>(neg));
    res.auc[static_cast<size_t>(c)] = auc;
    res.contributes[static_cast<size_t>(c)] = true;
    ++res.num_contributing;
    total += auc;
  }
  require(res.num_contributing > 0, Errc::DegenerateLabels,
          "no class has both positive and negative examples");
  res.auc_macro = total / res.num_contributing;
  return res;
}

int select_checkpoint(std::span<const EpochStat> history) {
  require(!history.empty(), Errc::EmptyHistory, "empty training history");
  const EpochStat* best = &history[0];
  for (const auto& e : history.subspan(1)) {
    if (e.val_f1_macro > best->val_f1_macro ||
        (e.val_f1_macro == best->val_f1_macro && e.val_loss < best->val_loss)) {
      best = &e;
    }
  }
  return best->epoch;
}

MetricsReport make_report(const ConfusionMatrix& cm, const AucResult& auc, double mean_loss,
                          int64_t example_count) {
  const PrfResult prf = macro_prf(cm);
  MetricsReport r;
  r.num_classes = cm.num_classes;
  r.precision = prf.precision;
  r.recall = prf.recall;
  r.f1 = prf.f1;
  r.auc = auc.auc;
  r.auc_contributes = auc.contributes;
  r.p_macro = prf.p_macro;
  r.r_macro = prf.r_macro;
  r.f1_macro = prf.f1_macro;
  r.auc_macro = auc.auc_macro;
  r.mean_loss = mean_loss;
  r.example_count = example_count;
  return r;
}

namespace {

nlohmann::json nan_safe(const std::vector<double>& v) {
  nlohmann::json arr = nlohmann::json::array();
  for (double x : v) {
    if (std::isnan(x)) {
      arr.push_back(nullptr);
    } else {
      arr.push_back(x);
    }
  }
  return arr;
}

std::vector<double> from_nan_safe(const nlohmann::json& arr) {
  std::vector<double> v;
  for (const auto& x : arr) {
    v.push_back(x.is_null() ? std::numeric_limits<double>::quiet_NaN() : x.get<double>());
  }
  return v;
}

}  // namespace

nlohmann::json MetricsReport::to_json() const {
  nlohmann::json j;
  j["num_classes"] = num_classes;
  j["per_class"] = {{"precision", precision},
                    {"recall", recall},
                    {"f1", f1},
                    {"auc", nan_safe(auc)},
                    {"auc_contributes", auc_contributes}};
  j["p_macro"] = p_macro;
  j["r_macro"] = r_macro;
  j["f1_macro"] = f1_macro;
  j["auc_macro"] = auc_macro;
  j["mean_loss"] = mean_loss;
  j["example_count"] = example_count;
  return j;
}

MetricsReport MetricsReport::from_json(const nlohmann::json& j) {
  MetricsReport r;
  r.num_classes = j.at("num_classes").get<int>();
  const auto& pc = j.at("per_class");
  r.precision = pc.at("precision").get<std::vector<double>>();
  r.recall = pc.at("recall").get<std::vector<double>>();
  r.f1 = pc.at("f1").get<std::vector<double>>();
  r.auc = from_nan_safe(pc.at("auc"));
  r.auc_contributes = pc.at("auc_contributes").get<std::vector<bool>>();
  r.p_macro = j.at("p_macro").get<double>();
  r.r_macro = j.at("r_macro").get<double>();
  r.f1_macro = j.at("f1_macro").get<double>();
  r.auc_macro = j.at("auc_macro").get<double>();
  r.mean_loss = j.at("mean_loss").get<double>();
  r.example_count = j.at("example_count").get<int64_t>();
  return r;
}

namespace {

std::string fmt6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

std::string tag_prefix(const RunTag& tag) {
  return tag.id + "," + tag.pt + "," + tag.fpn + "," + tag.in + "," + tag.ta + "," + tag.mu + "," +
         tag.opt + "," + tag.loss;
}

}  // namespace

std::string table_csv_header() { return "id,pt,fpn,in,ta,mu,opt,loss,p_macro,r_macro,f1_macro,auc_macro,l_test"; }

std::string table_csv_row(const RunTag& tag, const MetricsReport& r) {
  return tag_prefix(tag) + "," + fmt6(r.p_macro) + "," + fmt6(r.r_macro) + "," + fmt6(r.f1_macro) + "," +
         fmt6(r.auc_macro) + "," + fmt6(r.mean_loss);
}

std::string table_csv_failed_row(const RunTag& tag, const std::string& reason) {
  std::string clean = reason;
  for (auto& ch : clean) {
    if (ch == ',' || ch == '\n') ch = ';';
  }
  return tag_prefix(tag) + ",FAILED(" + clean + "),,,,";
}

}  // namespace malimg::metrics
