#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qipf/kernel_field.hpp"
#include "qipf/modes.hpp"
#include "qipf/nn.hpp"
#include "qipf/random.hpp"

namespace qipf::uq {

enum class CenterSource { activations, pooled_weights };

/// Domain of the minimum that fixes E_k for the surrogate modes.
enum class EigenMode {
    batch,   ///< minimum over the whole test set (two passes, offline)
    running  ///< minimum over the test points processed so far (causal)
};

std::string_view to_string(CenterSource s);
std::string_view to_string(EigenMode m);
CenterSource parse_center_source(std::string_view s);
EigenMode parse_eigen_mode(std::string_view s);

struct SurrogateConfig {
    /// Hidden layer indices for activation centers, or layer indices whose
    /// incoming weights are pooled (any layer but the output one).
    std::vector<std::size_t> layers{0};
    int num_modes = 5;
    /// Each multiplier scales the Silverman width of the centers; the mode
    /// values are averaged across multipliers.
    std::vector<double> bandwidth_multipliers{20.0};
    /// When set, the multipliers scale this width instead of the Silverman
    /// width, and centers need not have spread.
    std::optional<double> reference_width;
    CenterSource center_source = CenterSource::activations;
    std::size_t pooling_window = 1;
    EigenMode eigen_mode = EigenMode::batch;
    double psi_floor = kDefaultPsiFloor;

    void validate(const nn::MlpModel& model) const;
    bool operator==(const SurrogateConfig&) const = default;
};

/// One test point of an uncertainty report.
struct UncertaintyEntry {
    std::size_t index = 0;
    std::vector<double> prediction;
    double eval_point = 0.0;      ///< scalar query of the cross field (cross-QIPF only)
    std::vector<double> modes;    ///< pooled mode values, K per selected layer group
    double uncertainty = 0.0;     ///< aggregate scalar used by the metrics
    double predictive_std = 0.0;  ///< MC dropout only: includes the 1/tau term
    bool near_node = false;
    std::uint64_t forward_passes = 0;
};

struct ReportMetadata {
    std::string method;
    std::map<std::string, std::string> config;
    std::uint64_t seed = 0;
    double elapsed_seconds = 0.0;
};

struct UncertaintyReport {
    std::vector<UncertaintyEntry> entries;
    ReportMetadata meta;

    std::vector<double> uncertainties() const;
};

/// Scalar center populations derived from a trained model's weights: the
/// selected layers' weights flattened row-major and averaged over
/// non-overlapping windows (a trailing partial window is averaged over its
/// own length).
SampleSet weight_centers(const nn::MlpModel& model, std::size_t pooling_window,
                         std::span<const std::size_t> layers = {});

/// Scalar evaluation point of the cross field: mean last-layer
/// pre-activation for regression, the predicted class logit for
/// classification.
double evaluation_point(const nn::MlpModel& model, const nn::ActivationTrace& trace);

/// Streaming cross-QIPF estimator. Each call performs exactly one
/// deterministic forward pass. With EigenMode::running the offsets come from
/// the running minimum over the inputs seen so far; with EigenMode::batch
/// they are left at zero here and applied by cross_qipf_report.
class CrossQipfEstimator {
public:
    CrossQipfEstimator(const nn::MlpModel& model, SurrogateConfig config);

    UncertaintyEntry evaluate(std::span<const double> input);

    /// Raw ratios of the last evaluated input, indexed [group][multiplier][mode].
    const std::vector<std::vector<std::vector<double>>>& last_ratios() const noexcept { return last_ratios_; }

    const nn::PassCounter& passes() const noexcept { return passes_; }
    const SurrogateConfig& config() const noexcept { return config_; }
    std::size_t num_groups() const noexcept;

    /// Offset, average across multipliers and pool ratios given minima laid
    /// out like last_ratios().
    std::vector<double> pool(const std::vector<std::vector<std::vector<double>>>& ratios,
                             const std::vector<std::vector<std::vector<double>>>& minima) const;

private:
    const nn::MlpModel& model_;
    SurrogateConfig config_;
    std::vector<SampleSet> weight_groups_;
    std::vector<std::vector<std::vector<double>>> running_min_;
    std::vector<std::vector<std::vector<double>>> last_ratios_;
    nn::PassCounter passes_;
    std::size_t processed_ = 0;
};

/// Cross-QIPF surrogate over a test set. Batch mode evaluates every input
/// once, then offsets each mode by its minimum over the whole set.
UncertaintyReport cross_qipf_report(const nn::MlpModel& model, const std::vector<std::vector<double>>& inputs,
                                    const SurrogateConfig& config);

struct McDropoutResult {
    std::vector<double> mean;
    std::vector<double> predictive_std;  ///< sqrt(1/tau + E[y^2] - E[y]^2)
    std::vector<double> epistemic_std;   ///< spread of the T passes alone
    bool degenerate = false;             ///< rate == 0: passes are identical
};

McDropoutResult mc_dropout_uncertainty(const nn::MlpModel& model, std::span<const double> input, int passes,
                                       double rate, double tau, Rng& rng, nn::PassCounter* counter = nullptr);

struct McDropoutConfig {
    int passes = 100;
    double rate = 0.2;
    double tau = 1e-2;
    std::uint64_t seed = 0;

    bool operator==(const McDropoutConfig&) const = default;
};

/// MC dropout over a test set. The per-point scalar is the epistemic std of
/// the regression output (or of the predicted class probability).
UncertaintyReport mc_dropout_report(const nn::MlpModel& model, const std::vector<std::vector<double>>& inputs,
                                    const McDropoutConfig& config);

}  // namespace qipf::uq
