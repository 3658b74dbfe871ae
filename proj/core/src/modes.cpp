#include "qipf/modes.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "qipf/error.hpp"
#include "qipf/hermite.hpp"

namespace qipf {

void ModeConfig::validate() const {
    if (num_modes < 1) throw InvalidArgument("number of modes must be at least 1");
    if (num_modes > kMaxHermiteOrder) {
        throw InvalidArgument("number of modes exceeds the Hermite order bound " + std::to_string(kMaxHermiteOrder));
    }
    if (!(psi_floor > 0.0) || !std::isfinite(psi_floor)) throw InvalidArgument("psi_floor must be positive and finite");
}

ModeMatrix::ModeMatrix(std::size_t num_modes, SampleSet eval_points)
    : num_modes_(num_modes),
      eval_points_(std::move(eval_points)),
      values_(num_modes * eval_points_.size(), 0.0),
      eigenvalues_(num_modes, 0.0),
      near_node_(eval_points_.size(), false),
      far_field_(eval_points_.size(), false),
      psi_(eval_points_.size(), 0.0) {}

std::vector<double> ModeMatrix::point_column(std::size_t point) const {
    std::vector<double> col(num_modes_);
    for (std::size_t k = 0; k < num_modes_; ++k) col[k] = at(k, point);
    return col;
}

ModeRatios mode_ratios(const FieldEvaluation& wave, const ModeConfig& config) {
    config.validate();
    const double half_s2 = 0.5 * config.sigma.value() * config.sigma.value();
    double grad_sq = 0.0;
    for (double g : wave.gradient) grad_sq += g * g;

    ModeRatios out;
    out.psi = wave.value;
    out.far_field = wave.far_field;
    out.ratios.resize(static_cast<std::size_t>(config.num_modes));
    for (int k = 1; k <= config.num_modes; ++k) {
        const HermiteValue h = normalized_hermite_derivs(HermiteOrder(k), wave.value);
        // Laplacian of H*_k(psi(x)) by the chain rule
        const double lap = h.second * grad_sq + h.first * wave.laplacian;
        double denom = h.value;
        if (std::abs(denom) < config.psi_floor) {
            denom = std::signbit(denom) ? -config.psi_floor : config.psi_floor;
            out.near_node = true;
        }
        out.ratios[static_cast<std::size_t>(k - 1)] = half_s2 * lap / denom;
    }
    return out;
}

ModeRatios mode_ratios(const SampleSet& centers, const ModeConfig& config, std::span<const double> x) {
    return mode_ratios(wavefunction_derivatives(centers, config.sigma, x), config);
}

ModeMatrix qipf_modes(const SampleSet& centers, const ModeConfig& config, const SampleSet& eval_points) {
    config.validate();
    if (centers.dim() != eval_points.dim()) throw DimensionMismatch("centers and evaluation points differ in dimension");
    if (eval_points.size() < 2) throw InvalidArgument("mode decomposition needs at least two evaluation points");

    const std::size_t K = static_cast<std::size_t>(config.num_modes);
    const std::size_t P = eval_points.size();
    ModeMatrix out(K, eval_points);

    // pass 1: raw ratios
    for (std::size_t p = 0; p < P; ++p) {
        const ModeRatios r = mode_ratios(centers, config, eval_points.point(p));
        for (std::size_t k = 0; k < K; ++k) out.at(k, p) = r.ratios[k];
        out.near_node()[p] = r.near_node;
        out.far_field()[p] = r.far_field;
        out.psi()[p] = r.psi;
    }
    // pass 2: offsets
    for (std::size_t k = 0; k < K; ++k) {
        const auto row = out.mode_row(k);
        const double lowest = *std::min_element(row.begin(), row.end());
        if (!std::isfinite(lowest)) throw NumericalError("mode " + std::to_string(k + 1) + " produced a non-finite ratio");
        out.eigenvalues()[k] = -lowest;
        for (std::size_t p = 0; p < P; ++p) out.at(k, p) -= lowest;
    }
    return out;
}

ModeMatrix timeseries_qipf(std::span<const double> signal, const ModeConfig& config, std::size_t warmup) {
    config.validate();
    if (warmup < 2) throw InvalidArgument("warmup must be at least 2");
    if (signal.size() <= warmup) throw InvalidArgument("signal must be longer than the warmup");
    for (double v : signal) detail::require_finite(v, "signal sample");

    const std::size_t K = static_cast<std::size_t>(config.num_modes);
    const std::size_t P = signal.size() - warmup;
    const SampleSet all = SampleSet::scalars(std::vector<double>(signal.begin(), signal.end()));
    ModeMatrix out(K, SampleSet::scalars(std::vector<double>(signal.begin() + static_cast<std::ptrdiff_t>(warmup), signal.end())));

    std::vector<double> running_min(K, std::numeric_limits<double>::infinity());
    for (std::size_t p = 0; p < P; ++p) {
        const std::size_t t = warmup + p;
        const SampleSet history = all.prefix(t);
        const ModeRatios r = mode_ratios(history, config, all.point(t));
        for (std::size_t k = 0; k < K; ++k) {
            if (!std::isfinite(r.ratios[k])) throw NumericalError("non-finite mode ratio at t=" + std::to_string(t));
            running_min[k] = std::min(running_min[k], r.ratios[k]);
            out.at(k, p) = r.ratios[k] - running_min[k];
        }
        out.near_node()[p] = r.near_node;
        out.far_field()[p] = r.far_field;
        out.psi()[p] = r.psi;
    }
    for (std::size_t k = 0; k < K; ++k) out.eigenvalues()[k] = -running_min[k];
    return out;
}

std::vector<std::size_t> dominance_histogram(const ModeMatrix& modes) {
    std::vector<std::size_t> counts(modes.num_modes(), 0);
    for (std::size_t p = 0; p < modes.num_points(); ++p) {
        std::size_t best = 0;
        for (std::size_t k = 1; k < modes.num_modes(); ++k) {
            if (modes.at(k, p) > modes.at(best, p)) best = k;
        }
        ++counts[best];
    }
    return counts;
}

double mode_std(std::span<const double> values) {
    if (values.size() < 2) throw InvalidArgument("mode standard deviation needs at least two modes");
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(values.size());
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    return std::sqrt(ss / static_cast<double>(values.size()));
}

double mode_std(const ModeMatrix& modes, std::size_t point_index) {
    if (point_index >= modes.num_points()) throw InvalidArgument("point index out of range");
    const auto col = modes.point_column(point_index);
    return mode_std(col);
}

}  // namespace qipf
