#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "awdf/cascade.hpp"
#include "awdf/eval.hpp"

namespace awdf {

/// Exit codes shared by the experiment runner and the CLI.
enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,
  kExitBadSpec = 2,
  kExitDatasetLoad = 3,
  kExitPartialFailure = 4,
};

class SpecError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct DatasetEntry {
  std::string name;
  std::filesystem::path path;
  std::string label_column = "last";
  bool has_header = true;
  /// Shape checks applied after loading.
  std::optional<std::size_t> expected_rows;
  std::optional<std::size_t> expected_features;
  std::optional<int> expected_classes;
};

/// One configuration of the grid, run once per tree count.
struct GridEntry {
  std::optional<WeightScheme> scheme;
  Strategy strategy = Strategy::baseline;
  std::optional<double> eta;
  std::vector<std::size_t> trees;

  /// "gcF" for the plain cascade, otherwise the scheme and strategy names;
  /// "@eta=<value>" is appended when screening is on.
  std::string label() const;
  CascadeConfig apply(CascadeConfig base) const;
};

struct ExperimentSpec {
  std::vector<DatasetEntry> datasets;
  std::vector<GridEntry> grid;
  std::size_t repetitions = 50;
  std::uint64_t base_seed = 0;
  std::filesystem::path output_dir = "awdf-out";
  /// Shared cascade settings; grid entries override scheme, strategy, eta, T.
  CascadeConfig cascade;
  /// Grid cells run concurrently up to this limit.
  std::size_t jobs = 1;
};

/// Parses the JSON experiment description. Relative paths resolve against
/// base_dir. Throws SpecError on schema violations.
ExperimentSpec parse_experiment_spec(const nlohmann::json& doc, const std::filesystem::path& base_dir);
ExperimentSpec load_experiment_spec(const std::filesystem::path& path);

/// Loads and shape-checks one dataset entry; throws LoadError.
Dataset load_dataset(const DatasetEntry& entry);

struct CellResult {
  std::size_t dataset = 0;
  std::size_t grid = 0;
  std::size_t trees = 0;
  std::optional<RunResult> result;
  std::string error;
};

struct ExperimentReport {
  std::vector<std::string> dataset_names;
  std::vector<std::string> config_labels;
  std::vector<CellResult> cells;
};

/// Writes one row per (cell, repetition):
/// dataset,scheme,strategy,eta,trees,repetition,seed,accuracy,fit_seconds,levels
void write_results_csv(std::ostream& out, const ExperimentSpec& spec, const ExperimentReport& report);

/// Means, standard deviations, max-over-T summaries and paired t-tests of
/// every weighted configuration (and of the best one per dataset) against
/// the plain cascade.
nlohmann::json summary_json(const ExperimentSpec& spec, const ExperimentReport& report);

/// Text table: one row per dataset, one column per configuration, holding
/// the max-over-T mean accuracy in percent; the best cell of each row is
/// marked with '*'.
std::string summary_table(const ExperimentReport& report);

/// Level count, per-level training counts, monitored accuracies, stop reason
/// and the configuration.
nlohmann::json model_summary(const CascadeModel& model);
nlohmann::json config_json(const CascadeConfig& cfg);

/// Evaluates every (dataset, grid entry, tree count) cell; datasets[i]
/// belongs to spec.datasets[i]. A failing cell records its error and the
/// others still run.
ExperimentReport run_grid(const ExperimentSpec& spec, const std::vector<Dataset>& datasets, std::ostream& log);

/// Writes results.csv, summary.json and table.txt to spec.output_dir and
/// prints the table to log.
void write_reports(const ExperimentSpec& spec, const ExperimentReport& report, std::ostream& log);

/// Loads the datasets, runs the grid and writes the reports. Returns an
/// ExitCode.
int run_experiment(const ExperimentSpec& spec, std::ostream& log);

}  // namespace awdf
