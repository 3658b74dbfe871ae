#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "qipf/csv.hpp"
#include "qipf/eval.hpp"
#include "qipf/modes.hpp"
#include "qipf/nn.hpp"
#include "qipf/svg.hpp"
#include "qipf/uq.hpp"
#include "qipf_cli/recipe.hpp"

namespace qipf::cli {

struct Dataset {
    std::vector<std::vector<double>> inputs;
    std::vector<std::vector<double>> targets;
    std::vector<std::string> header;

    std::size_t size() const noexcept { return inputs.size(); }
    std::size_t num_features() const noexcept { return inputs.empty() ? 0 : inputs.front().size(); }
};

struct DataSplit {
    Dataset train;
    Dataset test;
};

/// Features first, then `target_columns` target columns.
Dataset read_dataset(const std::filesystem::path& path, std::size_t target_columns);
void write_dataset(const std::filesystem::path& path, const Dataset& data);
Dataset from_series(const eval::LabeledSeries& series);

DataSplit load_train(const DataSpec& spec);
DataSplit load_split(const DataSpec& spec);

nn::OutputMode output_mode(Pipeline p);
nn::TrainResult train_model(const ExperimentRecipe& recipe, const Dataset& train, nn::OutputMode mode);

std::vector<double> grid_points(double lo, double hi, double step);
std::vector<double> make_signal(const SignalSpec& spec, const std::string& name);

// -- grid study ----------------------------------------------------------------

/// Summary of one mode matrix over a 1-D grid. Mode indices are 1-based.
struct GridTrend {
    std::size_t dominant_at_center = 0;  ///< argmax mode at the grid point nearest 0
    std::size_t dominant_at_tails = 0;   ///< most frequent argmax over |x| >= tail
    double spearman = 0.0;               ///< mode order vs mean |x| of each mode's minima
    std::vector<double> minima_abs_x;    ///< per mode
};

GridTrend grid_trend(const ModeMatrix& modes, double tail = 5.0);

struct GridStudyEntry {
    std::string signal;
    double sigma = 0.0;
    ModeMatrix modes;
    GridTrend trend;
};

std::vector<GridStudyEntry> grid_study(const ExperimentRecipe& recipe);

// -- dominance -----------------------------------------------------------------

struct DominanceEntry {
    std::string signal;
    std::vector<std::size_t> counts;
    double entropy = 0.0;
    std::size_t modes_95 = 0;  ///< modes covering 95% of the points
};

std::vector<DominanceEntry> dominance_study(const ExperimentRecipe& recipe);

// -- uncertainty ---------------------------------------------------------------

/// Test-set predictions and uncertainty reports. A report is empty when its
/// method is disabled in the recipe.
struct UqRun {
    Dataset test;
    std::vector<std::vector<double>> predictions;  ///< deterministic forward pass
    uq::UncertaintyReport qipf;
    uq::UncertaintyReport mc_dropout;
};

UqRun run_uq(const ExperimentRecipe& recipe, const Dataset& test, const nn::MlpModel& model);

std::vector<double> abs_errors(const std::vector<std::vector<double>>& predictions,
                               const std::vector<std::vector<double>>& targets);
/// 1 where the predicted class (argmax) differs from the one-hot label.
std::vector<int> misclassified(const std::vector<std::vector<double>>& predictions,
                               const std::vector<std::vector<double>>& targets);

struct RegressionMetrics {
    double qipf_rmse = 0.0;
    double mc_dropout_rmse = 0.0;
    double qipf_pearson = 0.0;
    double mc_dropout_pearson = 0.0;
    double qipf_inside = 0.0;   ///< mean uncertainty inside the training input range
    double qipf_outside = 0.0;  ///< mean uncertainty outside it
};

RegressionMetrics regression_metrics(const UqRun& run, double train_lo, double train_hi);

struct ClassificationMetrics {
    eval::RocCurve qipf;
    eval::RocCurve mc_dropout;
    std::size_t errors = 0;
};

ClassificationMetrics classification_metrics(const UqRun& run);

// -- calibration table ---------------------------------------------------------

struct CalibrationRow {
    std::string dataset;
    std::size_t n = 0;
    std::size_t q = 0;
    std::vector<double> mc_dropout;  ///< one RMSE per split
    std::vector<double> qipf;
};

CalibrationRow calibration_study(const ExperimentRecipe& recipe, const Dataset& data, const std::string& name);

/// "0.xxx +- 0.yyy" (mean and population std); "n/a" when empty.
std::string format_cell(std::span<const double> values);
std::string format_table(const std::vector<CalibrationRow>& rows);

// -- charts ----------------------------------------------------------------------

/// Min-max normalized modes with the IPF dashed on top.
io::Chart modes_chart(const io::CsvTable& modes_csv, const std::string& title);
/// First column against every other column.
io::Chart table_chart(const io::CsvTable& table, const std::string& title);
/// Prediction (first output) with a +-uncertainty band, against x_values
/// when given (one per entry) and the report index otherwise.
io::Chart report_chart(const uq::UncertaintyReport& report, const std::string& title,
                       std::span<const double> x_values = {});
io::Chart roc_chart(const ClassificationMetrics& metrics);

// -- orchestration ---------------------------------------------------------------

struct RunResult {
    std::vector<std::filesystem::path> files;
    std::string summary;
};

/// Train on the recipe's training set; writes model.json and loss.csv.
RunResult train_stage(const ExperimentRecipe& recipe, const std::filesystem::path& out);
/// Run the enabled UQ methods over the test set with a saved model; writes
/// predictions.csv and one JSON-lines report per method.
RunResult uq_stage(const ExperimentRecipe& recipe, const std::filesystem::path& out,
                   const std::filesystem::path& model_path);
/// Metrics over the files written by uq_stage (or the full split study for
/// calibration-table); writes table.csv in the dataset, N, Q, baseline, QIPF
/// layout.
RunResult evaluate_stage(const ExperimentRecipe& recipe, const std::filesystem::path& out);
RunResult run_pipeline(const ExperimentRecipe& recipe, const std::filesystem::path& out);

}  // namespace qipf::cli
