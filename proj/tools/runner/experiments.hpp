#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "flatten/error.hpp"
#include "json.hpp"
#include "runner/config.hpp"

namespace flatten::runner {

enum class Experiment {
  kFourierScan,
  kTsujiiScan,
  kFlatteningReport,
  kFrostmanScan,
  kNonconcentrationSweep,
  kLiftVerify,
  kConsistencyCheck,
};

const std::vector<Experiment>& all_experiments();
std::string experiment_name(Experiment e);
std::optional<Experiment> experiment_from_name(const std::string& name);
std::string experiment_summary(Experiment e);

struct CsvTable {
  std::string name;  // file stem
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

/// Two-column plot series; written as `<experiment>__<name>.dat`.
struct PlotSeries {
  std::string name;
  std::string x_label;
  std::string y_label;
  std::vector<std::pair<double, double>> points;
};

/// Resource use, summed over a whole run.
struct BudgetUse {
  std::size_t atoms_peak = 0;
  double grid_cells = 0.0;
  double pairs_streamed = 0.0;
};

struct Report {
  Experiment kind = Experiment::kFourierScan;
  std::vector<CsvTable> tables;
  std::vector<PlotSeries> series;
  nlohmann::ordered_json results = nlohmann::ordered_json::object();
  BudgetUse budget;
};

struct RunOptions {
  std::filesystem::path out_dir = "flatten-out";
  unsigned threads = 0;                  // 0: hardware concurrency
  std::optional<std::uint64_t> seed;     // overrides the `seed` key
};

struct RunSummary {
  Report report;
  std::vector<std::filesystem::path> files;
  nlohmann::ordered_json manifest;
};

/// Computes the report without touching the filesystem.
Report compute_report(Experiment kind, const Config& config);

/// Computes, then writes CSVs, plot data and `manifest.json` into out_dir.
RunSummary run_experiment(Experiment kind, Config config, const RunOptions& options);

/// CSV text of a table: header line then rows, comma-separated.
std::string csv_text(const CsvTable& table);

/// Writes one file per series; an empty report writes nothing.
std::vector<std::filesystem::path> emit_plotdata(const Report& report, const std::filesystem::path& dir);

/// Process exit status for a library error: 2 config, 3 budget, 4 numeric.
int exit_code_for(const Error& e);

/// Documentation of every config key, for --help.
std::string config_reference();

}  // namespace flatten::runner
