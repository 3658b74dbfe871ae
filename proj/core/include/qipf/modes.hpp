#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "qipf/kernel_field.hpp"

namespace qipf {

/// Default clamp on |psi_k| in the mode-ratio denominator.
inline constexpr double kDefaultPsiFloor = 1e-12;

/// Settings for the Hermite mode decomposition. Modes are indexed k = 1..K;
/// order 0 is constant and carries no information.
struct ModeConfig {
    int num_modes = 6;
    Bandwidth sigma{1.0};
    double psi_floor = kDefaultPsiFloor;

    void validate() const;
};

/// Unshifted mode ratios (sigma^2/2) lap(psi_k) / psi_k at one point.
struct ModeRatios {
    std::vector<double> ratios;  ///< length K, entry k-1 is mode k
    bool near_node = false;      ///< some |psi_k| fell below psi_floor
    bool far_field = false;      ///< the IPF underflowed at this point
    double psi = 0.0;            ///< wave function value sqrt(IPF)
};

/// K x P matrix of uncertainty modes V^k at P evaluation points together with
/// the per-mode offsets E_k.
class ModeMatrix {
public:
    ModeMatrix(std::size_t num_modes, SampleSet eval_points);

    std::size_t num_modes() const noexcept { return num_modes_; }
    std::size_t num_points() const noexcept { return eval_points_.size(); }

    double& at(std::size_t mode, std::size_t point) { return values_[mode * num_points() + point]; }
    double at(std::size_t mode, std::size_t point) const { return values_[mode * num_points() + point]; }

    /// Row of mode index `mode` (0-based, i.e. V^{mode+1}) across points.
    std::span<const double> mode_row(std::size_t mode) const {
        return {values_.data() + mode * num_points(), num_points()};
    }
    /// All K mode values at one point.
    std::vector<double> point_column(std::size_t point) const;

    std::vector<double>& eigenvalues() noexcept { return eigenvalues_; }
    const std::vector<double>& eigenvalues() const noexcept { return eigenvalues_; }
    const SampleSet& eval_points() const noexcept { return eval_points_; }

    std::vector<bool>& near_node() noexcept { return near_node_; }
    const std::vector<bool>& near_node() const noexcept { return near_node_; }
    std::vector<bool>& far_field() noexcept { return far_field_; }
    const std::vector<bool>& far_field() const noexcept { return far_field_; }
    /// Wave function value at each point, kept for plotting the IPF (psi^2).
    std::vector<double>& psi() noexcept { return psi_; }
    const std::vector<double>& psi() const noexcept { return psi_; }

private:
    std::size_t num_modes_;
    SampleSet eval_points_;
    std::vector<double> values_;
    std::vector<double> eigenvalues_;
    std::vector<bool> near_node_;
    std::vector<bool> far_field_;
    std::vector<double> psi_;
};

/// Mode ratios at `x` for the field built on `centers`. This is the shared
/// kernel of every decomposition path (grid, time series, model surrogate).
ModeRatios mode_ratios(const SampleSet& centers, const ModeConfig& config, std::span<const double> x);

/// Mode ratios from a precomputed wave-function evaluation.
ModeRatios mode_ratios(const FieldEvaluation& wave, const ModeConfig& config);

/// Full decomposition over a set of evaluation points. E_k is the negated
/// minimum ratio over the supplied points, so every mode row has minimum 0.
ModeMatrix qipf_modes(const SampleSet& centers, const ModeConfig& config, const SampleSet& eval_points);

/// Sample-by-sample decomposition of a scalar series: the sample at time t is
/// evaluated in the field of samples 0..t-1. E_k is the running minimum of
/// the ratio over evaluated times, so the result is causal. Columns cover
/// t = warmup .. n-1.
ModeMatrix timeseries_qipf(std::span<const double> signal, const ModeConfig& config, std::size_t warmup);

/// Count of points at which each mode holds the strict maximum; ties go to
/// the lowest mode index.
std::vector<std::size_t> dominance_histogram(const ModeMatrix& modes);

/// Population standard deviation of the K mode values at one point.
double mode_std(const ModeMatrix& modes, std::size_t point_index);
double mode_std(std::span<const double> values);

}  // namespace qipf
