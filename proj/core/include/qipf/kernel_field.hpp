#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace qipf {

/// Ordered, non-empty collection of d-dimensional points stored row-major.
/// Serves as the set of kernel centers for every field in the library.
class SampleSet {
public:
    /// Flat row-major storage; `values.size()` must be a positive multiple of `dim`.
    SampleSet(std::vector<double> values, std::size_t dim);
    explicit SampleSet(const std::vector<std::vector<double>>& points);

    /// One-dimensional set from scalars.
    static SampleSet scalars(std::vector<double> values);

    std::size_t size() const noexcept { return data_.size() / dim_; }
    std::size_t dim() const noexcept { return dim_; }

    std::span<const double> point(std::size_t i) const {
        return {data_.data() + i * dim_, dim_};
    }
    std::span<const double> flat() const noexcept { return data_; }

    /// First `n` points as a new set.
    SampleSet prefix(std::size_t n) const;

private:
    std::vector<double> data_;
    std::size_t dim_;
};

/// Kernel width of the Gaussian; strictly positive and finite.
class Bandwidth {
public:
    explicit Bandwidth(double sigma);
    double value() const noexcept { return sigma_; }

private:
    double sigma_;
};

/// Value, gradient and Laplacian of a scalar field at one point.
struct FieldEvaluation {
    double value = 0.0;
    std::vector<double> gradient;
    double laplacian = 0.0;
    /// Set when the field underflowed and was clamped to the floor.
    bool far_field = false;
};

/// Default clamp for the information potential field before taking its square root.
inline constexpr double kDefaultIpfFloor = 1e-300;

/// exp(-|u - v|^2 / (2 sigma^2)); unnormalized, so the peak value is 1.
double gaussian_kernel(std::span<const double> u, std::span<const double> v, Bandwidth sigma);

/// Information potential field: mean Gaussian kernel between `x` and every center.
double ipf(const SampleSet& centers, Bandwidth sigma, std::span<const double> x);

/// Analytic value, gradient and Laplacian of the IPF at `x`.
FieldEvaluation ipf_derivatives(const SampleSet& centers, Bandwidth sigma, std::span<const double> x);

/// Derivatives of the wave function sqrt(IPF). When the IPF falls below
/// `floor` it is clamped there and the result is flagged far-field.
FieldEvaluation wavefunction_derivatives(const SampleSet& centers, Bandwidth sigma,
                                         std::span<const double> x,
                                         double floor = kDefaultIpfFloor);

/// Cross information potential: the IPF of one population (e.g. a layer's
/// activations) evaluated at a point drawn from another.
double cip(const SampleSet& centers, Bandwidth sigma, std::span<const double> l2);
double cip(const SampleSet& centers, Bandwidth sigma, double l2);

/// Mean pairwise kernel (1/N^2) sum_ij G(x_i - x_j) at width sqrt(2) sigma,
/// i.e. the integral of the squared Parzen estimate up to a constant.
double information_potential(const SampleSet& samples, Bandwidth sigma);

/// Silverman's rule 1.06 * std * N^(-1/5) for a scalar set; std uses N - 1.
Bandwidth silverman_bandwidth(const SampleSet& samples);

}  // namespace qipf
