#include "malimg/harness/ablate.hpp"

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>

#include "malimg/harness/train.hpp"

namespace fs = std::filesystem;

namespace malimg::harness {

std::vector<RunConfig> table3_grid(const RunConfig& base) {
  struct Row {
    bool pt, fpn;
    int in;
    bool ta, mu;
    OptKind opt;
    LossKind loss;
    double lr;  // 0 = keep base.optim.lr
  };
  const auto AF = OptKind::AF, AW = OptKind::AW;
  const auto CE = LossKind::CE, WCE = LossKind::WCE;
  // Rows 3/4/6 share every flag; they sweep the learning rate instead.
  const Row rows[15] = {
      {false, false, 1, false, false, AF, WCE, 0},
      {true, false, 3, false, false, AW, CE, 0},
      {false, false, 1, false, false, AF, CE, 0.01},
      {false, false, 1, false, false, AF, CE, 0.001},
      {false, false, 1, false, false, AW, WCE, 0},
      {false, false, 1, false, false, AF, CE, 0.005},
      {true, false, 3, false, false, AW, CE, 0},
      {true, true, 3, false, false, AF, CE, 0},
      {true, false, 1, false, false, AF, CE, 0},
      {true, false, 3, false, true, AF, CE, 0},
      {true, false, 1, false, true, AF, CE, 0},
      {false, true, 3, true, true, AF, CE, 0},
      {true, false, 3, true, false, AF, CE, 0},
      {true, false, 3, true, true, AF, CE, 0},
      {true, true, 3, true, true, AF, CE, 0},
  };

  const bool any_pt = std::any_of(std::begin(rows), std::end(rows),
                                  [](const Row& r) { return r.pt; });
  require(!any_pt || !base.pt.empty(), Errc::ConfigError,
          "the grid contains pretrained rows; base config must supply pt");

  std::vector<RunConfig> grid;
  for (int i = 0; i < 15; ++i) {
    const Row& r = rows[i];
    RunConfig c = base;
    c.id = std::to_string(i + 1);
    c.pt = r.pt ? base.pt : "";
    c.fpn = r.fpn;
    c.in_channels = r.in;
    c.ta.enabled = r.ta;
    c.mixup.enabled = r.mu;
    c.opt = r.opt;
    c.loss = r.loss;
    if (r.lr != 0) c.optim.lr = r.lr;
    c.validate();
    grid.push_back(std::move(c));
  }
  return grid;
}

std::string table_csv(const std::vector<RunOutcome>& rows) {
  std::string out = metrics::table_csv_header() + "\n";
  for (const auto& row : rows) {
    out += row.ok ? metrics::table_csv_row(row.cfg.tag(), row.test)
                  : metrics::table_csv_failed_row(row.cfg.tag(), row.error);
    out += '\n';
  }
  return out;
}

namespace {

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), Errc::IoError, "cannot write " + path);
  out << content;
}

nlohmann::json run_report_json(const RunOutcome& row) {
  const metrics::RunTag tag = row.cfg.tag();
  nlohmann::json j{
      {"id", tag.id},
      {"tag",
       {{"pt", tag.pt},
        {"fpn", tag.fpn},
        {"in", tag.in},
        {"ta", tag.ta},
        {"mu", tag.mu},
        {"opt", tag.opt},
        {"loss", tag.loss}}},
      {"seed", row.cfg.seed},
      {"split", "test"},
      {"ok", row.ok},
  };
  if (row.ok) {
    j["metrics"] = row.test.to_json();
  } else {
    j["error"] = row.error;
  }
  return j;
}

}  // namespace

AblateResult ablate(const std::vector<RunConfig>& grid, const DatasetIndex& index,
                    const std::string& out_dir) {
  require(!grid.empty(), Errc::ConfigError, "ablation grid is empty");
  fs::create_directories(out_dir);

  AblateResult result;
  for (const RunConfig& cfg : grid) {
    RunOutcome row;
    row.cfg = cfg;
    row.run_dir = (fs::path(out_dir) / ("run_" + cfg.id)).string();
    try {
      const TrainResult tr = train_run(cfg, index, row.run_dir);
      row.test = evaluate_checkpoint(tr.checkpoint_path, index, "test");
      row.ok = true;
    } catch (const Error& e) {
      row.ok = false;
      row.error = e.what();
    }
    write_file((fs::path(row.run_dir) / "report.json").string(),
               run_report_json(row).dump(2) + "\n");
    result.rows.push_back(std::move(row));
  }

  result.table_path = (fs::path(out_dir) / "table.csv").string();
  result.report_path = (fs::path(out_dir) / "report.json").string();
  write_file(result.table_path, table_csv(result.rows));

  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : result.rows) rows.push_back(run_report_json(row));
  write_file(result.report_path, rows.dump(2) + "\n");
  return result;
}

std::string merge_report_files(const std::vector<std::string>& report_paths) {
  require(!report_paths.empty(), Errc::ConfigError, "no report files given");

  struct Entry {
    std::string id;
    metrics::RunTag tag;
    bool ok = false;
    std::string error;
    metrics::MetricsReport metrics;
  };
  std::vector<Entry> entries;
  for (const std::string& path : report_paths) {
    std::ifstream in(path);
    require(in.good(), Errc::IoError, "cannot open " + path);
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      fail(Errc::DataError, path + " is not valid JSON: " + e.what());
    }
    Entry entry;
    try {
      entry.id = j.at("id").get<std::string>();
      const auto& t = j.at("tag");
      entry.tag = {entry.id,
                   t.at("pt").get<std::string>(),
                   t.at("fpn").get<std::string>(),
                   t.at("in").get<std::string>(),
                   t.at("ta").get<std::string>(),
                   t.at("mu").get<std::string>(),
                   t.at("opt").get<std::string>(),
                   t.at("loss").get<std::string>()};
      entry.ok = j.at("ok").get<bool>();
      if (entry.ok) {
        entry.metrics = metrics::MetricsReport::from_json(j.at("metrics"));
      } else {
        entry.error = j.value("error", "failed");
      }
    } catch (const nlohmann::json::exception& e) {
      fail(Errc::DataError, path + " is not a run report: " + e.what());
    }
    entries.push_back(std::move(entry));
  }

  const bool numeric = std::all_of(entries.begin(), entries.end(), [](const Entry& e) {
    return !e.id.empty() && std::all_of(e.id.begin(), e.id.end(),
                                        [](unsigned char c) { return std::isdigit(c); });
  });
  std::sort(entries.begin(), entries.end(), [&](const Entry& a, const Entry& b) {
    if (numeric) return std::stol(a.id) < std::stol(b.id);
    return a.id < b.id;
  });

  std::string out = metrics::table_csv_header() + "\n";
  for (const auto& e : entries) {
    out += e.ok ? metrics::table_csv_row(e.tag, e.metrics)
                : metrics::table_csv_failed_row(e.tag, e.error);
    out += '\n';
  }
  return out;
}

}  // namespace malimg::harness
