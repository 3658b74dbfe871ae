#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace qipf::eval {

/// Paired inputs and targets plus a record of how they were generated.
struct LabeledSeries {
    std::vector<std::vector<double>> inputs;
    std::vector<std::vector<double>> targets;
    std::string name;
    std::map<std::string, std::string> params;
    std::uint64_t seed = 0;

    std::size_t size() const noexcept { return inputs.size(); }
    void validate() const;
};

// -- generators ---------------------------------------------------------------

/// y = x sin x with x uniform on (lo, hi); noise free.
LabeledSeries gen_xsinx(std::size_t n, double lo, double hi, std::uint64_t seed);

/// Noisy two-tone regression set y = x + sin(a(x+w)) + sin(b(x+w)) + w with
/// w ~ N(0, noise_sd^2). Inputs come from two uniform regions, leaving a gap.
struct TwoSineParams {
    std::size_t n_left = 40;
    std::size_t n_right = 10;
    double left_lo = -1.0;
    double left_hi = 0.2;
    double right_lo = 0.7;
    double right_hi = 1.0;
    double alpha = 4.0;
    double beta = 13.0;
    double noise_sd = 0.03;
    std::uint64_t seed = 0;
};
LabeledSeries gen_twosine(const TwoSineParams& params);
/// Noise-free two-tone target at one input.
double twosine_target(double x, double noise, double alpha = 4.0, double beta = 13.0);

enum class LorenzComponent { x, y, z };

/// One classical RK4 step of the Lorenz system.
std::array<double, 3> lorenz_step(const std::array<double, 3>& state, double dt);

/// Raw RK4 trajectory of the Lorenz system (sigma 10, rho 28, beta 8/3)
/// from (0, 1, 1.05); one row per sample.
std::vector<std::array<double, 3>> lorenz_trajectory(std::size_t n, double dt);

/// One z-normalized component of the Lorenz trajectory.
std::vector<double> gen_lorenz(std::size_t n, double dt = 0.01, LorenzComponent component = LorenzComponent::x);

/// Sum of unit sines sampled at fs, z-normalized.
std::vector<double> gen_sine(std::span<const double> freqs, double fs, std::size_t n);

/// Isotropic Gaussian blobs for a toy classifier; targets are one-hot.
LabeledSeries gen_blobs(std::size_t n_per_class, std::span<const std::array<double, 2>> means, double sd,
                        std::uint64_t seed);

// -- normalization ------------------------------------------------------------

/// Zero mean, unit population standard deviation. A series with zero
/// variance is returned unchanged.
std::vector<double> z_normalize(std::span<const double> series);

/// Per-column affine normalization fitted on one set and applied to others.
struct Normalizer {
    std::vector<double> mean;
    std::vector<double> scale;

    static Normalizer fit(const std::vector<std::vector<double>>& rows);
    std::vector<double> apply(std::span<const double> row) const;
    std::vector<double> invert(std::span<const double> row) const;
};

// -- metrics ------------------------------------------------------------------

/// RMSE between the two series after each is divided by its own maximum.
/// A side whose maximum is zero is left unscaled.
double calibration_rmse(std::span<const double> uncertainty, std::span<const double> abs_errors);

struct RocPoint {
    double fpr = 0.0;
    double tpr = 0.0;
};

struct RocCurve {
    std::vector<RocPoint> points;  ///< from (0,0) to (1,1), non-decreasing
    double auc = 0.0;
};

/// ROC over every distinct score threshold (higher score = positive call),
/// ties grouped, AUC by the trapezoid rule.
RocCurve roc_auc(std::span<const double> scores, std::span<const int> labels);

struct Split {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
};

/// Seeded random train/test partitions; the test side holds
/// round(n * test_fraction) rows.
std::vector<Split> split_k(std::size_t n, std::size_t n_splits, double test_fraction, std::uint64_t seed);

/// Shannon entropy (nats) of a count histogram.
double dominance_entropy(std::span<const std::size_t> counts);

/// Smallest number of bins that together hold at least `mass` of the counts.
std::size_t modes_covering(std::span<const std::size_t> counts, double mass);

double pearson(std::span<const double> a, std::span<const double> b);
/// Pearson correlation of average ranks.
double spearman(std::span<const double> a, std::span<const double> b);

double mean(std::span<const double> v);
/// Population (n) standard deviation.
double stddev(std::span<const double> v);

}  // namespace qipf::eval
