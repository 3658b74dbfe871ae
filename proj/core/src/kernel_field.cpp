#include "qipf/kernel_field.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "qipf/error.hpp"

namespace qipf {

namespace {

void check_query(const SampleSet& centers, std::span<const double> x) {
    if (x.size() != centers.dim()) {
        throw DimensionMismatch("query has dimension " + std::to_string(x.size()) +
                                " but centers have dimension " + std::to_string(centers.dim()));
    }
    for (double v : x) detail::require_finite(v, "query coordinate");
}

double squared_distance(std::span<const double> u, std::span<const double> v) {
    double s = 0.0;
    for (std::size_t j = 0; j < u.size(); ++j) {
        const double d = u[j] - v[j];
        s += d * d;
    }
    return s;
}

}  // namespace

SampleSet::SampleSet(std::vector<double> values, std::size_t dim) : data_(std::move(values)), dim_(dim) {
    if (dim_ == 0) throw InvalidArgument("sample dimension must be positive");
    if (data_.empty()) throw InvalidArgument("sample set must not be empty");
    if (data_.size() % dim_ != 0) throw DimensionMismatch("flat sample storage is not a multiple of the dimension");
    for (double v : data_) detail::require_finite(v, "sample coordinate");
}

SampleSet::SampleSet(const std::vector<std::vector<double>>& points) : dim_(0) {
    if (points.empty()) throw InvalidArgument("sample set must not be empty");
    dim_ = points.front().size();
    if (dim_ == 0) throw InvalidArgument("sample dimension must be positive");
    data_.reserve(points.size() * dim_);
    for (const auto& p : points) {
        if (p.size() != dim_) throw DimensionMismatch("all points in a sample set must share one dimension");
        for (double v : p) {
            detail::require_finite(v, "sample coordinate");
            data_.push_back(v);
        }
    }
}

SampleSet SampleSet::scalars(std::vector<double> values) { return SampleSet(std::move(values), 1); }

SampleSet SampleSet::prefix(std::size_t n) const {
    if (n == 0 || n > size()) throw InvalidArgument("prefix length out of range");
    return SampleSet(std::vector<double>(data_.begin(), data_.begin() + static_cast<std::ptrdiff_t>(n * dim_)), dim_);
}

Bandwidth::Bandwidth(double sigma) : sigma_(sigma) {
    if (!std::isfinite(sigma) || sigma <= 0.0) {
        throw InvalidArgument("bandwidth must be positive and finite, got " + std::to_string(sigma));
    }
}

double gaussian_kernel(std::span<const double> u, std::span<const double> v, Bandwidth sigma) {
    if (u.size() != v.size()) throw DimensionMismatch("kernel arguments differ in dimension");
    for (double a : u) detail::require_finite(a, "kernel argument");
    for (double a : v) detail::require_finite(a, "kernel argument");
    const double s = sigma.value();
    return std::exp(-squared_distance(u, v) / (2.0 * s * s));
}

double ipf(const SampleSet& centers, Bandwidth sigma, std::span<const double> x) {
    check_query(centers, x);
    const double inv = 1.0 / (2.0 * sigma.value() * sigma.value());
    double sum = 0.0;
    for (std::size_t i = 0; i < centers.size(); ++i) sum += std::exp(-squared_distance(x, centers.point(i)) * inv);
    return sum / static_cast<double>(centers.size());
}

FieldEvaluation ipf_derivatives(const SampleSet& centers, Bandwidth sigma, std::span<const double> x) {
    check_query(centers, x);
    const std::size_t d = centers.dim();
    const double s2 = sigma.value() * sigma.value();
    const double inv_s2 = 1.0 / s2;
    const double inv_s4 = inv_s2 * inv_s2;

    FieldEvaluation out;
    out.gradient.assign(d, 0.0);
    double value = 0.0;
    double lap = 0.0;
    for (std::size_t i = 0; i < centers.size(); ++i) {
        const auto c = centers.point(i);
        const double r2 = squared_distance(x, c);
        const double g = std::exp(-0.5 * r2 * inv_s2);
        value += g;
        for (std::size_t j = 0; j < d; ++j) out.gradient[j] -= (x[j] - c[j]) * inv_s2 * g;
        lap += (r2 * inv_s4 - static_cast<double>(d) * inv_s2) * g;
    }
    const double n = static_cast<double>(centers.size());
    out.value = value / n;
    for (double& gj : out.gradient) gj /= n;
    out.laplacian = lap / n;
    return out;
}

FieldEvaluation wavefunction_derivatives(const SampleSet& centers, Bandwidth sigma, std::span<const double> x,
                                         double floor) {
    if (!(floor > 0.0)) throw InvalidArgument("ipf floor must be positive");
    FieldEvaluation p = ipf_derivatives(centers, sigma, x);
    FieldEvaluation out;
    if (p.value < floor) {
        // clamped field is locally constant
        out.value = std::sqrt(floor);
        out.gradient.assign(p.gradient.size(), 0.0);
        out.laplacian = 0.0;
        out.far_field = true;
        return out;
    }
    const double root = std::sqrt(p.value);
    double grad_sq = 0.0;
    out.gradient.resize(p.gradient.size());
    for (std::size_t j = 0; j < p.gradient.size(); ++j) {
        out.gradient[j] = p.gradient[j] / (2.0 * root);
        grad_sq += out.gradient[j] * out.gradient[j];
    }
    out.value = root;
    out.laplacian = p.laplacian / (2.0 * root) - grad_sq / root;
    return out;
}

double cip(const SampleSet& centers, Bandwidth sigma, std::span<const double> l2) { return ipf(centers, sigma, l2); }

double cip(const SampleSet& centers, Bandwidth sigma, double l2) {
    return ipf(centers, sigma, std::span<const double>(&l2, 1));
}

double information_potential(const SampleSet& samples, Bandwidth sigma) {
    const Bandwidth wide(std::numbers::sqrt2 * sigma.value());
    const double inv = 1.0 / (2.0 * wide.value() * wide.value());
    const std::size_t n = samples.size();
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) sum += std::exp(-squared_distance(samples.point(i), samples.point(j)) * inv);
    }
    return sum / static_cast<double>(n * n);
}

Bandwidth silverman_bandwidth(const SampleSet& samples) {
    if (samples.dim() != 1) throw DimensionMismatch("Silverman's rule is applied to scalar sets only");
    const std::size_t n = samples.size();
    if (n < 2) throw DegenerateInput("Silverman's rule needs at least two samples");
    const auto v = samples.flat();
    double mean = 0.0;
    for (double a : v) mean += a;
    mean /= static_cast<double>(n);
    double ss = 0.0;
    double max_abs = 0.0;
    for (double a : v) {
        ss += (a - mean) * (a - mean);
        max_abs = std::max(max_abs, std::abs(a));
    }
    const double sd = std::sqrt(ss / static_cast<double>(n - 1));
    // rounding in the mean leaves a residue of order eps * |x| for equal values
    if (!(sd > 1e-12 * max_abs)) throw DegenerateInput("degenerate center set: zero sample variance");
    return Bandwidth(1.06 * sd * std::pow(static_cast<double>(n), -0.2));
}

}  // namespace qipf
