#pragma once

#include <string>
#include <vector>

#include "malimg/harness/config.hpp"
#include "malimg/harness/dataset.hpp"
#include "malimg/metrics/metrics.hpp"
#include "malimg/nn/checkpoint.hpp"
#include "malimg/nn/model.hpp"

namespace malimg::harness {

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0;  // mean over the epoch's optimizer steps
  long opt_steps = 0;     // cumulative t after the epoch
  metrics::MetricsReport val;
};

struct TrainResult {
  std::vector<EpochRecord> history;
  int best_epoch = 0;
  metrics::MetricsReport best_val;
  std::string checkpoint_path;  // <out_dir>/checkpoint_best.mifw
  std::string history_path;     // <out_dir>/history.jsonl
};

// Full training run: per-epoch shuffle, augmentation per flags, gradients at
// the optimizer's designated evaluation point, epoch validation on the
// averaged parameters, best checkpoint by validation F1 (ties: lower loss).
// Artifacts written under out_dir: config.json, history.jsonl,
// checkpoint_best.mifw. A non-finite loss aborts with a diagnostic dump
// (nonfinite_dump.mifw) and throws NonFiniteLoss.
TrainResult train_run(const RunConfig& cfg, const DatasetIndex& index, const std::string& out_dir);

// Augmentation-free deterministic evaluation. The unweighted cross-entropy
// mean is reported regardless of the training loss flag so loss columns stay
// comparable across rows.
metrics::MetricsReport evaluate_model(const nn::Model& model, const SplitCache& cache,
                                      int num_classes, int batch_size = 64);

// Evaluate a saved checkpoint on one split of the index. The model is
// rebuilt from the checkpoint's embedded config; ConfigMismatch when the
// class count disagrees with the index.
metrics::MetricsReport evaluate_checkpoint(const std::string& ckpt_path, const DatasetIndex& index,
                                           const std::string& split,
                                           RunConfig* cfg_out = nullptr);

// Strict reconstruction from a run checkpoint: every model parameter must be
// present with a matching shape.
nn::Model model_from_checkpoint(const nn::CheckpointFile& ck, RunConfig* cfg_out = nullptr);

// Lenient init loading for the PT axis: parameters are copied where name and
// shape match (a 3-channel stem cannot seed a 1-channel run, a pyramid head
// cannot seed a plain one). Returns the number of tensors loaded.
int load_init_params(nn::Model& model, const std::string& ckpt_path);

}  // namespace malimg::harness
