#pragma once

#include <array>
#include <cstdint>
#include <string>

#include <nlohmann/json.hpp>

#include "malimg/aug/mixup.hpp"
#include "malimg/aug/trivial.hpp"
#include "malimg/metrics/metrics.hpp"
#include "malimg/nn/model.hpp"
#include "malimg/opt/adamw.hpp"
#include "malimg/opt/schedule_free.hpp"

namespace malimg::harness {

enum class OptKind { AF, AW };    // AF = schedule-free AdamW, AW = AdamW
enum class LossKind { CE, WCE };  // plain vs class-weighted cross-entropy

std::string opt_name(OptKind k);
std::string loss_name(LossKind k);
OptKind parse_opt(const std::string& s);
LossKind parse_loss(const std::string& s);

// One run of the ablation grid. JSON config schema (strict, unknown keys are
// rejected; every key except num_classes has the default shown):
//
//   id            string              row label in reports ("run")
//   data_root     string              dataset tree or manifest file ("")
//   num_classes   int >= 2            required
//   image_size    int, multiple of 32 input side length fed to the net (256)
//   in_channels   1 | 3               grayscale vs section-colored (1)
//   pt            string              init checkpoint path, "" = from scratch
//   fpn           bool                pyramid fusion head (false)
//   ta            object              { enabled: bool, ops: [names] }
//   mixup         object              { enabled: bool, alpha: float > 0 }
//   opt           "AF" | "AW"         optimizer ("AF")
//   loss          "CE" | "WCE"        training loss ("CE")
//   optim         object              { lr, weight_decay, warmup_steps,
//                                       beta1, beta2, eps }; warmup_steps
//                                       only applies to AF
//   batch_size    int >= 1            >= 2 when mixup is enabled (128)
//   epochs        int >= 1            (10)
//   seed          unsigned            master RNG seed (1)
//   stage_widths  [int x4]            backbone channels C2..C5 ([16,32,64,128])
//   fpn_width     int                 pyramid channel width (64)
//
// ta.ops entries are names from the default catalog; omitting "ops" selects
// the whole catalog.
struct RunConfig {
  std::string id = "run";
  std::string data_root;
  int num_classes = 0;
  int image_size = 256;
  int in_channels = 1;
  std::string pt;
  bool fpn = false;
  aug::TaConfig ta = aug::TaConfig::defaults(false);
  aug::MixupConfig mixup;
  OptKind opt = OptKind::AF;
  LossKind loss = LossKind::CE;
  opt::SfHyper optim;
  int batch_size = 128;
  int epochs = 10;
  uint64_t seed = 1;
  std::array<int, 4> stage_widths{16, 32, 64, 128};
  int fpn_width = 64;

  void validate() const;

  nlohmann::json to_json() const;
  static RunConfig from_json(const nlohmann::json& j);
  static RunConfig from_file(const std::string& path);

  nn::ModelConfig model_config() const;
  opt::AdamWHyper adamw_hyper() const;
  metrics::RunTag tag() const;
};

// Strict-schema helper: every key of `j` must appear in `allowed`.
void check_keys(const nlohmann::json& j, std::initializer_list<const char*> allowed,
                const char* where);

}  // namespace malimg::harness
