// malimg command line: convert | synth | train | eval | ablate | report.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "malimg/binimg/convert.hpp"
#include "malimg/binimg/png_io.hpp"
#include "malimg/harness/ablate.hpp"
#include "malimg/harness/config.hpp"
#include "malimg/harness/dataset.hpp"
#include "malimg/harness/synth.hpp"
#include "malimg/harness/train.hpp"

namespace fs = std::filesystem;
using malimg::Errc;
using malimg::Error;
namespace binimg = malimg::binimg;
namespace harness = malimg::harness;

namespace {

std::vector<uint8_t> read_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  malimg::require(in.good(), Errc::IoError, "cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Width-table config: {"thresholds": [[max_size, width], ...], "fallback_width": w}
binimg::WidthRule load_width_rule(const std::string& path) {
  std::ifstream in(path);
  malimg::require(in.good(), Errc::IoError, "cannot open width table " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    malimg::fail(Errc::ConfigError, path + " is not valid JSON: " + e.what());
  }
  harness::check_keys(j, {"thresholds", "fallback_width"}, "width table");
  binimg::WidthRule rule;
  rule.thresholds.clear();
  try {
    for (const auto& t : j.at("thresholds")) {
      malimg::require(t.is_array() && t.size() == 2, Errc::ConfigError,
                      "width table thresholds must be [max_size, width] pairs");
      rule.thresholds.emplace_back(t.at(0).get<uint64_t>(), t.at(1).get<int>());
    }
    if (j.contains("fallback_width")) rule.fallback_width = j.at("fallback_width").get<int>();
  } catch (const nlohmann::json::exception& e) {
    malimg::fail(Errc::ConfigError, std::string("bad width table value: ") + e.what());
  }
  rule.validate();
  return rule;
}

int cmd_convert(const std::string& input, int channels, const std::string& out_dir,
                const std::string& width_table, int size) {
  const binimg::WidthRule rule =
      width_table.empty() ? binimg::WidthRule::standard() : load_width_rule(width_table);
  std::vector<fs::path> files;
  if (fs::is_directory(input)) {
    for (const auto& e : fs::directory_iterator(input)) {
      if (e.is_regular_file()) files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
  } else {
    files.emplace_back(input);
  }
  malimg::require(!files.empty(), Errc::EmptyInput, "no input files under " + input);
  fs::create_directories(out_dir);

  for (const auto& f : files) {
    const auto bytes = read_bytes(f.string());
    const binimg::ConvertResult result = binimg::convert(bytes, channels, rule, size);
    const std::string stem = f.stem().string();
    const fs::path png = fs::path(out_dir) / (stem + ".png");
    const fs::path sidecar = fs::path(out_dir) / (stem + ".json");
    binimg::write_png(png.string(), result.image);
    std::ofstream side(sidecar);
    malimg::require(side.good(), Errc::IoError, "cannot write " + sidecar.string());
    side << binimg::sidecar_json(result) << '\n';
    std::printf("%s -> %s (%dx%dx%d, width %d%s)\n", f.string().c_str(), png.string().c_str(),
                result.image.channels, result.image.height, result.image.width,
                result.grid_width, result.dex_fallback ? ", non-DEX fallback" : "");
  }
  return 0;
}

harness::RunConfig load_run_config(const std::string& config_path, uint64_t* seed_override,
                                   const std::string& data_override) {
  harness::RunConfig cfg = harness::RunConfig::from_file(config_path);
  if (seed_override) cfg.seed = *seed_override;
  if (!data_override.empty()) cfg.data_root = data_override;
  malimg::require(!cfg.data_root.empty(), Errc::ConfigError,
                  "no dataset: set data_root in the config or pass --data");
  return cfg;
}

void print_report(const malimg::metrics::MetricsReport& r, const char* label) {
  std::printf("%s: P=%.4f R=%.4f F1=%.4f AUC=%.4f loss=%.4f (n=%lld)\n", label, r.p_macro,
              r.r_macro, r.f1_macro, r.auc_macro, r.mean_loss,
              static_cast<long long>(r.example_count));
}

int cmd_train(const std::string& config_path, uint64_t* seed_override,
              const std::string& data_override, const std::string& out_dir) {
  const harness::RunConfig cfg = load_run_config(config_path, seed_override, data_override);
  const harness::DatasetIndex index = harness::ingest(cfg.data_root);
  const harness::TrainResult tr = harness::train_run(cfg, index, out_dir);
  std::printf("best epoch %d of %d -> %s\n", tr.best_epoch, cfg.epochs,
              tr.checkpoint_path.c_str());
  print_report(tr.best_val, "val");
  return 0;
}

int cmd_eval(const std::string& ckpt, const std::string& data_root, const std::string& split,
             const std::string& out_dir) {
  const harness::DatasetIndex index = harness::ingest(data_root);
  harness::RunConfig cfg;
  const auto report = harness::evaluate_checkpoint(ckpt, index, split, &cfg);
  print_report(report, split.c_str());

  const malimg::metrics::RunTag tag = cfg.tag();
  nlohmann::json j{{"id", tag.id},
                   {"tag",
                    {{"pt", tag.pt},
                     {"fpn", tag.fpn},
                     {"in", tag.in},
                     {"ta", tag.ta},
                     {"mu", tag.mu},
                     {"opt", tag.opt},
                     {"loss", tag.loss}}},
                   {"seed", cfg.seed},
                   {"split", split},
                   {"ok", true},
                   {"metrics", report.to_json()}};
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    std::ofstream out(fs::path(out_dir) / "report.json");
    malimg::require(out.good(), Errc::IoError, "cannot write report.json under " + out_dir);
    out << j.dump(2) << '\n';
  } else {
    std::cout << j.dump(2) << '\n';
  }
  return 0;
}

int cmd_ablate(const std::string& config_path, uint64_t* seed_override,
               const std::string& data_override, const std::string& grid_file,
               const std::string& out_dir) {
  const harness::RunConfig base = load_run_config(config_path, seed_override, data_override);
  std::vector<harness::RunConfig> grid;
  if (grid_file.empty()) {
    grid = harness::table3_grid(base);
  } else {
    std::ifstream in(grid_file);
    malimg::require(in.good(), Errc::IoError, "cannot open grid file " + grid_file);
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      malimg::fail(Errc::ConfigError, grid_file + " is not valid JSON: " + e.what());
    }
    malimg::require(j.is_array(), Errc::ConfigError, "grid file must be a JSON array of configs");
    for (const auto& item : j) grid.push_back(harness::RunConfig::from_json(item));
  }

  const harness::DatasetIndex index = harness::ingest(base.data_root);
  const harness::AblateResult result = harness::ablate(grid, index, out_dir);
  int failed = 0;
  for (const auto& row : result.rows) failed += row.ok ? 0 : 1;
  std::printf("%zu runs (%d failed) -> %s\n", result.rows.size(), failed,
              result.table_path.c_str());
  return failed == 0 ? 0 : 1;
}

int cmd_report(const std::string& runs_dir, std::vector<std::string> files,
               const std::string& out_path) {
  if (!runs_dir.empty()) {
    for (const auto& e : fs::directory_iterator(runs_dir)) {
      if (e.is_directory() && e.path().filename().string().rfind("run_", 0) == 0) {
        const fs::path rep = e.path() / "report.json";
        if (fs::is_regular_file(rep)) files.push_back(rep.string());
      }
    }
  }
  const std::string csv = harness::merge_report_files(files);
  if (out_path.empty()) {
    std::cout << csv;
  } else {
    std::ofstream out(out_path, std::ios::binary);
    malimg::require(out.good(), Errc::IoError, "cannot write " + out_path);
    out << csv;
    std::printf("%zu rows -> %s\n", files.size(), out_path.c_str());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Malware-image conversion, training and ablation toolkit"};
  app.require_subcommand(1);

  // convert
  std::string cv_input, cv_out, cv_width_table;
  int cv_channels = 1, cv_size = 256;
  auto* convert = app.add_subcommand("convert", "Convert binaries to PNG images");
  convert->add_option("--input", cv_input, "Input file or directory")->required();
  convert->add_option("--channels", cv_channels, "1 = grayscale, 3 = DEX section colors")
      ->check(CLI::IsMember({1, 3}));
  convert->add_option("--out", cv_out, "Output directory")->required();
  convert->add_option("--width-table", cv_width_table, "Width-rule JSON file");
  convert->add_option("--size", cv_size, "Output side length")->check(CLI::PositiveNumber);

  // synth
  harness::SynthSpec sy;
  std::string sy_out;
  auto* synth = app.add_subcommand("synth", "Generate the synthetic corpus");
  synth->add_option("--out", sy_out, "Corpus directory")->required();
  synth->add_option("--classes", sy.num_classes, "Number of classes");
  synth->add_option("--train", sy.train_per_class, "Training images per class");
  synth->add_option("--val", sy.val_per_class, "Validation images per class");
  synth->add_option("--test", sy.test_per_class, "Test images per class");
  synth->add_option("--size", sy.image_size, "Image side length");
  synth->add_option("--channels", sy.channels, "1 or 3")->check(CLI::IsMember({1, 3}));
  synth->add_option("--seed", sy.seed, "Corpus seed");

  // shared train/eval/ablate options
  std::string tr_config, tr_out, tr_data;
  uint64_t seed_value = 0;
  bool seed_set = false;
  auto add_seed = [&](CLI::App* cmd) {
    cmd->add_option_function<uint64_t>(
        "--seed",
        [&](const uint64_t& v) {
          seed_value = v;
          seed_set = true;
        },
        "Override the config seed");
  };

  auto* train = app.add_subcommand("train", "Train one configuration");
  train->add_option("--config", tr_config, "Run config JSON")->required();
  train->add_option("--out-dir", tr_out, "Artifact directory")->required();
  train->add_option("--data", tr_data, "Override data_root");
  add_seed(train);

  std::string ev_ckpt, ev_data, ev_split = "test", ev_out;
  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint");
  eval->add_option("--checkpoint", ev_ckpt, "Checkpoint file")->required();
  eval->add_option("--data", ev_data, "Dataset root or manifest")->required();
  eval->add_option("--split", ev_split, "train, val or test");
  eval->add_option("--out-dir", ev_out, "Write report.json here (default: stdout)");

  std::string ab_config, ab_out, ab_data, ab_grid;
  auto* ablate = app.add_subcommand("ablate", "Run the ablation grid");
  ablate->add_option("--config", ab_config, "Base run config JSON")->required();
  ablate->add_option("--out-dir", ab_out, "Grid artifact directory")->required();
  ablate->add_option("--data", ab_data, "Override data_root");
  ablate->add_option("--grid-file", ab_grid, "Explicit JSON array of run configs");
  add_seed(ablate);

  std::string rp_runs, rp_out;
  std::vector<std::string> rp_files;
  auto* report = app.add_subcommand("report", "Merge run reports into a table");
  report->add_option("--runs", rp_runs, "Directory containing run_* subdirectories");
  report->add_option("--out", rp_out, "Output CSV path (default: stdout)");
  report->add_option("files", rp_files, "Explicit report.json files");

  CLI11_PARSE(app, argc, argv);

  try {
    uint64_t* seed = seed_set ? &seed_value : nullptr;
    if (convert->parsed()) return cmd_convert(cv_input, cv_channels, cv_out, cv_width_table, cv_size);
    if (synth->parsed()) {
      const int n = harness::generate_corpus(sy, sy_out);
      std::printf("%d images -> %s\n", n, sy_out.c_str());
      return 0;
    }
    if (train->parsed()) return cmd_train(tr_config, seed, tr_data, tr_out);
    if (eval->parsed()) return cmd_eval(ev_ckpt, ev_data, ev_split, ev_out);
    if (ablate->parsed()) return cmd_ablate(ab_config, seed, ab_data, ab_grid, ab_out);
    if (report->parsed()) return cmd_report(rp_runs, rp_files, rp_out);
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
