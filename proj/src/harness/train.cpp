#include "malimg/harness/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "malimg/aug/rng.hpp"
#include "malimg/nn/loss.hpp"
#include "malimg/nn/ops.hpp"
#include "malimg/opt/adamw.hpp"
#include "malimg/opt/schedule_free.hpp"

namespace fs = std::filesystem;

namespace malimg::harness {

namespace {

// Everything the best-epoch checkpoint needs, captured as plain vectors so
// training can keep moving after the snapshot.
struct OptSnapshot {
  bool af = true;
  std::vector<double> x;     // model parameters (the averaged iterate for AF)
  std::vector<double> z, v;  // AF fast iterate / second moment
  std::vector<double> m;     // AW first moment (v doubles as its second)
  long t = 0;
  double S = 0;  // running sum of squared step sizes
};

std::vector<nn::CheckpointTensor> snapshot_tensors(const nn::NamedParams& params,
                                                   const OptSnapshot& snap) {
  std::vector<nn::CheckpointTensor> out;
  size_t off = 0;
  for (const auto& [name, t] : params) {
    nn::CheckpointTensor ct;
    ct.name = name;
    ct.shape = t.shape();
    const size_t n = static_cast<size_t>(t.numel());
    ct.values.resize(n);
    for (size_t i = 0; i < n; ++i) ct.values[i] = static_cast<float>(snap.x[off + i]);
    off += n;
    out.push_back(std::move(ct));
  }
  require(off == snap.x.size(), Errc::ShapeError, "parameter snapshot size mismatch");
  out.push_back(nn::vec_to_f32("opt/x", snap.x));
  if (snap.af) {
    out.push_back(nn::vec_to_f32("opt/z", snap.z));
    out.push_back(nn::vec_to_f32("opt/v", snap.v));
  } else {
    out.push_back(nn::vec_to_f32("opt/m", snap.m));
    out.push_back(nn::vec_to_f32("opt/v", snap.v));
  }
  return out;
}

void save_run_checkpoint(const std::string& path, const RunConfig& cfg, int epoch,
                         const nn::NamedParams& params, const OptSnapshot& snap,
                         const nlohmann::json& extra = {}) {
  nlohmann::json meta{
      {"format", "malimg-run"},
      {"config", cfg.to_json()},
      {"epoch", epoch},
      {"seed", cfg.seed},
      {"opt",
       snap.af ? nlohmann::json{{"kind", "AF"}, {"t", snap.t}, {"S", snap.S}}
               : nlohmann::json{{"kind", "AW"}, {"t", snap.t}}},
  };
  if (!extra.is_null() && !extra.empty()) meta["diagnostic"] = extra;
  nn::save_checkpoint(path, meta.dump(), snapshot_tensors(params, snap));
}

void copy_tensor_values(const nn::CheckpointTensor& src, nn::Tensor& dst) {
  auto& data = dst.vec();
  for (size_t i = 0; i < data.size(); ++i) data[i] = static_cast<double>(src.values[i]);
}

bool nonfinite_code(Errc c) {
  return c == Errc::NonFinite || c == Errc::NonFiniteGradient || c == Errc::NonFiniteState;
}

}  // namespace

metrics::MetricsReport evaluate_model(const nn::Model& model, const SplitCache& cache,
                                      int num_classes, int batch_size) {
  const size_t n = cache.size();
  require(n > 0, Errc::DataError, "cannot evaluate an empty split");
  require(batch_size >= 1, Errc::ConfigError, "eval batch size must be positive");

  std::vector<int> preds(n), truths(n);
  std::vector<double> scores(n * static_cast<size_t>(num_classes));
  double loss_sum = 0;

  std::vector<size_t> rows;
  for (size_t start = 0; start < n; start += static_cast<size_t>(batch_size)) {
    const size_t cnt = std::min(static_cast<size_t>(batch_size), n - start);
    rows.resize(cnt);
    std::iota(rows.begin(), rows.end(), start);
    const aug::LabeledBatch batch = make_batch(cache, rows, num_classes);

    const nn::Tensor logits = model.forward(batch.images);
    const std::vector<double> probs = nn::softmax_rows(logits);
    const double* lg = logits.data();
    for (size_t b = 0; b < cnt; ++b) {
      const double* row = lg + b * static_cast<size_t>(num_classes);
      double mx = row[0];
      int arg = 0;
      for (int c = 1; c < num_classes; ++c) {
        if (row[c] > mx) {
          mx = row[c];
          arg = c;
        }
      }
      double lse = 0;
      for (int c = 0; c < num_classes; ++c) lse += std::exp(row[c] - mx);
      lse = mx + std::log(lse);

      const size_t i = start + b;
      const int y = cache.label(i);
      loss_sum += lse - row[y];
      preds[i] = arg;
      truths[i] = y;
      std::copy(probs.begin() + static_cast<long>(b) * num_classes,
                probs.begin() + static_cast<long>(b + 1) * num_classes,
                scores.begin() + static_cast<long>(i) * num_classes);
    }
  }

  const auto cm = metrics::confusion(preds, truths, num_classes);
  const auto auc = metrics::macro_auc(scores, truths, num_classes);
  if (auc.num_contributing < num_classes) {
    std::fprintf(stderr, "warning: %d class(es) lack both positives and negatives; excluded from macro AUC\n",
                 num_classes - auc.num_contributing);
  }
  return metrics::make_report(cm, auc, loss_sum / static_cast<double>(n),
                              static_cast<int64_t>(n));
}

nn::Model model_from_checkpoint(const nn::CheckpointFile& ck, RunConfig* cfg_out) {
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(ck.meta_json);
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::ConfigMismatch, std::string("checkpoint meta is not JSON: ") + e.what());
  }
  require(meta.value("format", "") == "malimg-run", Errc::ConfigMismatch,
          "checkpoint was not written by a training run");
  const RunConfig cfg = RunConfig::from_json(meta.at("config"));

  nn::Model model(cfg.model_config(), aug::split_seed(cfg.seed, aug::kInitStream));
  for (auto& [name, t] : model.params()) {
    const nn::CheckpointTensor* ct = ck.find(name);
    require(ct != nullptr, Errc::ConfigMismatch, "checkpoint is missing tensor " + name);
    require(ct->shape == t.shape(), Errc::ConfigMismatch,
            "checkpoint tensor " + name + " has shape " + nn::shape_str(ct->shape) +
                ", model expects " + nn::shape_str(t.shape()));
    copy_tensor_values(*ct, t);
  }
  if (cfg_out) *cfg_out = cfg;
  return model;
}

int load_init_params(nn::Model& model, const std::string& ckpt_path) {
  const nn::CheckpointFile ck = nn::load_checkpoint(ckpt_path);
  int loaded = 0, skipped = 0;
  for (auto& [name, t] : model.params()) {
    const nn::CheckpointTensor* ct = ck.find(name);
    if (ct == nullptr || ct->shape != t.shape()) {
      ++skipped;
      continue;
    }
    copy_tensor_values(*ct, t);
    ++loaded;
  }
  require(loaded > 0, Errc::ConfigMismatch,
          "no compatible tensors in init checkpoint " + ckpt_path);
  if (skipped > 0) {
    std::fprintf(stderr, "warning: init checkpoint %s: %d tensor(s) skipped (absent or shape mismatch)\n",
                 ckpt_path.c_str(), skipped);
  }
  return loaded;
}

metrics::MetricsReport evaluate_checkpoint(const std::string& ckpt_path, const DatasetIndex& index,
                                           const std::string& split, RunConfig* cfg_out) {
  const nn::CheckpointFile ck = nn::load_checkpoint(ckpt_path);
  RunConfig cfg;
  const nn::Model model = model_from_checkpoint(ck, &cfg);
  require(cfg.num_classes == static_cast<int>(index.class_names.size()), Errc::ConfigMismatch,
          "checkpoint expects " + std::to_string(cfg.num_classes) + " classes, index has " +
              std::to_string(index.class_names.size()));
  const SplitCache cache(index.split(split), cfg.in_channels, cfg.image_size);
  if (cfg_out) *cfg_out = cfg;
  return evaluate_model(model, cache, cfg.num_classes);
}

TrainResult train_run(const RunConfig& cfg, const DatasetIndex& index,
                      const std::string& out_dir) {
  cfg.validate();
  require(cfg.num_classes == static_cast<int>(index.class_names.size()), Errc::ConfigMismatch,
          "config num_classes=" + std::to_string(cfg.num_classes) + " but index has " +
              std::to_string(index.class_names.size()) + " classes");
  fs::create_directories(out_dir);

  {
    std::ofstream cfg_out(fs::path(out_dir) / "config.json");
    require(cfg_out.good(), Errc::IoError, "cannot write config.json under " + out_dir);
    cfg_out << cfg.to_json().dump(2) << '\n';
  }

  const SplitCache train_cache(index.train, cfg.in_channels, cfg.image_size);
  const SplitCache val_cache(index.val, cfg.in_channels, cfg.image_size);
  if (train_cache.adapted_count() + val_cache.adapted_count() > 0) {
    std::fprintf(stderr, "warning: %d image(s) adapted to %d channel(s) at load\n",
                 train_cache.adapted_count() + val_cache.adapted_count(), cfg.in_channels);
  }

  const size_t n_train = train_cache.size();
  const size_t B = static_cast<size_t>(cfg.batch_size);
  require(n_train >= B, Errc::ConfigError, "batch_size exceeds the training split");
  const size_t steps_per_epoch = n_train / B;  // trailing remainder is reshuffled next epoch

  nn::Model model(cfg.model_config(), aug::split_seed(cfg.seed, aug::kInitStream));
  if (!cfg.pt.empty()) load_init_params(model, cfg.pt);

  const std::vector<double> flat0 = model.flatten_params();
  const bool use_af = cfg.opt == OptKind::AF;
  const opt::SfHyper sfh = cfg.optim;
  const opt::AdamWHyper awh = cfg.adamw_hyper();
  opt::SfState sf;
  opt::AdamWState aw;
  std::vector<double> aw_params;
  if (use_af) {
    sf = opt::sf_init(flat0);
  } else {
    aw = opt::adamw_init(flat0.size());
    aw_params = flat0;
  }

  const nn::ClassWeights weights = cfg.loss == LossKind::WCE
                                       ? nn::ClassWeights::from_counts(index.train_counts)
                                       : nn::ClassWeights::uniform(cfg.num_classes);

  TrainResult result;
  result.history_path = (fs::path(out_dir) / "history.jsonl").string();
  result.checkpoint_path = (fs::path(out_dir) / "checkpoint_best.mifw").string();
  std::ofstream hist(result.history_path);
  require(hist.good(), Errc::IoError, "cannot write " + result.history_path);

  std::vector<size_t> order(n_train);
  std::iota(order.begin(), order.end(), size_t{0});
  std::vector<double> y(flat0.size());

  std::vector<metrics::EpochStat> stats;
  OptSnapshot best;
  int best_epoch = -1;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    auto shuffle_rng = aug::make_rng(aug::split_seed(cfg.seed, aug::kShuffleStream),
                                     static_cast<uint64_t>(epoch));
    auto ta_rng = aug::make_rng(aug::split_seed(cfg.seed, aug::kTaStream),
                                static_cast<uint64_t>(epoch));
    auto mix_rng = aug::make_rng(aug::split_seed(cfg.seed, aug::kMixupStream),
                                 static_cast<uint64_t>(epoch));
    std::shuffle(order.begin(), order.end(), shuffle_rng);

    double loss_sum = 0;
    for (size_t step = 0; step < steps_per_epoch; ++step) {
      aug::LabeledBatch batch =
          make_batch(train_cache, {order.data() + step * B, B}, cfg.num_classes);
      if (cfg.ta.enabled) batch.images = aug::trivial_augment(batch.images, cfg.ta, ta_rng);
      if (cfg.mixup.enabled) batch = aug::mixup(batch, cfg.mixup, mix_rng);

      if (use_af) {
        opt::sf_eval_point(sf, sfh, y);
        model.load_flat_params(y);
      } else {
        model.load_flat_params(aw_params);
      }
      model.zero_grads();

      double step_loss = 0;
      try {
        const nn::Tensor logits = model.forward(batch.images);
        const nn::Tensor loss = nn::cross_entropy(logits, batch.labels, weights.w);
        step_loss = loss.item();
        require(std::isfinite(step_loss), Errc::NonFinite, "loss is not finite");
        nn::backward(loss);
        const std::vector<double> g = model.flatten_grads();
        if (use_af) {
          opt::sf_step(sf, g, sfh);
        } else {
          opt::adamw_step(aw, aw_params, g, awh);
        }
      } catch (const Error& e) {
        if (!nonfinite_code(e.code())) throw;
        OptSnapshot dump;
        dump.af = use_af;
        if (use_af) {
          dump.x = sf.x;
          dump.z = sf.z;
          dump.v = sf.v;
          dump.t = sf.step_count;
          dump.S = sf.lr_sq_sum;
        } else {
          dump.x = aw_params;
          dump.m = aw.m;
          dump.v = aw.v;
          dump.t = aw.step_count;
        }
        const std::string dump_path = (fs::path(out_dir) / "nonfinite_dump.mifw").string();
        save_run_checkpoint(dump_path, cfg, epoch, model.params(), dump,
                            nlohmann::json{{"error", e.what()},
                                           {"epoch", epoch},
                                           {"step", static_cast<long>(step)}});
        fail(Errc::NonFiniteLoss, std::string(e.what()) + " at epoch " + std::to_string(epoch) +
                                      " step " + std::to_string(step) + "; state dumped to " +
                                      dump_path);
      }
      loss_sum += step_loss;
    }

    model.load_flat_params(use_af ? sf.x : aw_params);
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(steps_per_epoch);
    rec.opt_steps = use_af ? sf.step_count : aw.step_count;
    rec.val = evaluate_model(model, val_cache, cfg.num_classes);

    hist << nlohmann::json{{"epoch", rec.epoch},
                           {"seed", cfg.seed},
                           {"train_loss", rec.train_loss},
                           {"opt_steps", rec.opt_steps},
                           {"val", rec.val.to_json()}}
                .dump()
         << '\n';

    stats.push_back({epoch, rec.val.f1_macro, rec.val.mean_loss});
    if (metrics::select_checkpoint(stats) == epoch) {
      best_epoch = epoch;
      best.af = use_af;
      if (use_af) {
        best.x = sf.x;
        best.z = sf.z;
        best.v = sf.v;
        best.t = sf.step_count;
        best.S = sf.lr_sq_sum;
      } else {
        best.x = aw_params;
        best.m = aw.m;
        best.v = aw.v;
        best.t = aw.step_count;
      }
    }
    result.history.push_back(std::move(rec));
  }

  save_run_checkpoint(result.checkpoint_path, cfg, best_epoch, model.params(), best);
  result.best_epoch = best_epoch;
  result.best_val = result.history[static_cast<size_t>(best_epoch - 1)].val;
  return result;
}

}  // namespace malimg::harness
