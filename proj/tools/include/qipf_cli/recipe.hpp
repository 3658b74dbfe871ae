#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "qipf/config.hpp"
#include "qipf/error.hpp"
#include "qipf/nn.hpp"
#include "qipf/uq.hpp"

namespace qipf::cli {

/// Bad command line or recipe usage; maps to exit code 2.
class UsageError : public Error {
public:
    using Error::Error;
};

enum class Pipeline { grid_study, dominance, regression_uq, classification_uq, calibration_table };

std::string_view to_string(Pipeline p);
Pipeline parse_pipeline(std::string_view s);

/// Where the train and test sets come from. `kind` is a generator name
/// (xsinx, twosine, blobs) or "file".
struct DataSpec {
    std::string kind = "xsinx";
    std::string name;
    std::size_t train_n = 60;
    double train_lo = -5.0;
    double train_hi = 5.0;
    std::size_t test_n = 120;
    double test_lo = -15.0;
    double test_hi = 15.0;
    std::uint64_t train_seed = 1;
    std::uint64_t test_seed = 2;
    double noise_sd = 0.03;
    std::size_t per_class = 100;
    double blob_sd = 0.7;
    std::vector<double> blob_means{-1.0, 0.0, 1.0, 0.0, 0.0, 1.5};  // x,y pairs
    std::string train_file;
    std::string test_file;
    std::size_t target_columns = 1;

    bool operator==(const DataSpec&) const = default;
};

/// Signals for grid-study and dominance.
struct SignalSpec {
    std::vector<std::string> signals{"sine"};  // sine, twotone, lorenz
    std::vector<double> freqs{50.0};
    std::vector<double> twotone_freqs{150.0, 250.0};
    double fs = 6000.0;
    std::size_t n = 3000;
    double lorenz_dt = 0.01;
    std::vector<double> sigmas{0.6, 1.2};
    int modes = 6;
    double grid_lo = -6.0;
    double grid_hi = 6.0;
    double grid_step = 0.1;
    std::size_t warmup = 2;

    bool operator==(const SignalSpec&) const = default;
};

struct ModelSpec {
    std::vector<std::size_t> hidden{20, 20, 20};
    nn::Activation activation = nn::Activation::relu;
    std::uint64_t seed = 1;

    bool operator==(const ModelSpec&) const = default;
};

struct CalibrationSpec {
    std::string data_file;
    std::size_t splits = 20;
    double test_fraction = 0.1;
    std::uint64_t seed = 0;

    bool operator==(const CalibrationSpec&) const = default;
};

struct ExperimentRecipe {
    Pipeline pipeline = Pipeline::regression_uq;
    std::string output_dir;
    DataSpec data;
    SignalSpec signal;
    ModelSpec model;
    nn::TrainConfig train;
    uq::SurrogateConfig surrogate;
    uq::McDropoutConfig mc_dropout;
    CalibrationSpec calibration;
    bool run_qipf = true;
    bool run_mc_dropout = true;

    static ExperimentRecipe from_config(const io::Config& cfg);
    static ExperimentRecipe load(const std::filesystem::path& path);
    io::Config to_config() const;
    void validate() const;
    bool operator==(const ExperimentRecipe&) const = default;
};

/// Output directory used when neither a flag nor a recipe names one.
std::filesystem::path default_output_dir();

/// Recipe output directory, falling back to default_output_dir().
std::filesystem::path output_dir(const ExperimentRecipe& recipe);

}  // namespace qipf::cli
