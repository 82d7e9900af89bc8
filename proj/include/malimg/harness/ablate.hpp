#pragma once

#include <string>
#include <vector>

#include "malimg/harness/config.hpp"
#include "malimg/harness/dataset.hpp"
#include "malimg/metrics/metrics.hpp"

namespace malimg::harness {

// The published 15-row flag grid (PT/FPN/In/TA/MU/Opt/Loss). Rows sharing
// identical flags differ by learning rate, drawn from the documented hyper
// grid {0.01, 0.001, 0.005}. Everything else (data, seed, widths, epochs)
// comes from `base`. PT rows require base.pt to point at an init checkpoint.
std::vector<RunConfig> table3_grid(const RunConfig& base);

struct RunOutcome {
  RunConfig cfg;
  std::string run_dir;
  bool ok = false;
  std::string error;              // set when !ok
  metrics::MetricsReport test;    // valid when ok
};

struct AblateResult {
  std::vector<RunOutcome> rows;
  std::string table_path;   // <out_dir>/table.csv
  std::string report_path;  // <out_dir>/report.json
};

// Runs every config in grid order (train + test evaluation), one CSV row per
// config. A failing run marks its row FAILED and the grid continues.
AblateResult ablate(const std::vector<RunConfig>& grid, const DatasetIndex& index,
                    const std::string& out_dir);

// CSV assembly, exposed for the report subcommand and tests.
std::string table_csv(const std::vector<RunOutcome>& rows);

// Merge per-run report.json files (as written by ablate/eval) back into a
// table; rows are ordered by numeric id when possible, else lexically.
std::string merge_report_files(const std::vector<std::string>& report_paths);

}  // namespace malimg::harness
