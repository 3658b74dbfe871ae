#include <cmath>
#include <numbers>
#include <string>

#include <fmt/format.h>

#include "qipf/error.hpp"
#include "qipf/eval.hpp"
#include "qipf/random.hpp"

namespace qipf::eval {

void LabeledSeries::validate() const {
    if (inputs.size() != targets.size()) throw DimensionMismatch("inputs and targets differ in length");
    for (const auto& row : inputs)
        for (double v : row) detail::require_finite(v, "input value");
    for (const auto& row : targets)
        for (double v : row) detail::require_finite(v, "target value");
}

LabeledSeries gen_xsinx(std::size_t n, double lo, double hi, std::uint64_t seed) {
    if (n < 1) throw InvalidArgument("need at least one sample");
    if (!(lo < hi) || !std::isfinite(lo) || !std::isfinite(hi)) throw InvalidArgument("invalid input range");
    Rng rng(seed);
    LabeledSeries out;
    out.name = "xsinx";
    out.seed = seed;
    out.params = {{"n", std::to_string(n)}, {"lo", fmt::format("{}", lo)}, {"hi", fmt::format("{}", hi)}};
    for (std::size_t i = 0; i < n; ++i) {
        const double x = rng.uniform(lo, hi);
        out.inputs.push_back({x});
        out.targets.push_back({x * std::sin(x)});
    }
    return out;
}

double twosine_target(double x, double noise, double alpha, double beta) {
    return x + std::sin(alpha * (x + noise)) + std::sin(beta * (x + noise)) + noise;
}

LabeledSeries gen_twosine(const TwoSineParams& p) {
    if (!(p.noise_sd >= 0.0)) throw InvalidArgument("noise standard deviation must be non-negative");
    if (!(p.left_lo < p.left_hi) || !(p.right_lo < p.right_hi)) throw InvalidArgument("invalid sampling region");
    Rng rng(p.seed);
    LabeledSeries out;
    out.name = "twosine";
    out.seed = p.seed;
    out.params = {{"n_left", std::to_string(p.n_left)},
                  {"n_right", std::to_string(p.n_right)},
                  {"noise_sd", fmt::format("{}", p.noise_sd)},
                  {"alpha", fmt::format("{}", p.alpha)},
                  {"beta", fmt::format("{}", p.beta)}};
    auto draw = [&](std::size_t count, double lo, double hi) {
        for (std::size_t i = 0; i < count; ++i) {
            const double x = rng.uniform(lo, hi);
            const double w = p.noise_sd > 0.0 ? rng.normal(0.0, p.noise_sd) : 0.0;
            out.inputs.push_back({x});
            out.targets.push_back({twosine_target(x, w, p.alpha, p.beta)});
        }
    };
    draw(p.n_left, p.left_lo, p.left_hi);
    draw(p.n_right, p.right_lo, p.right_hi);
    return out;
}

std::array<double, 3> lorenz_step(const std::array<double, 3>& st, double dt) {
    constexpr double s = 10.0;
    constexpr double r = 28.0;
    constexpr double b = 8.0 / 3.0;
    using State = std::array<double, 3>;
    auto f = [](const State& v) -> State {
        return {s * (v[1] - v[0]), v[0] * (r - v[2]) - v[1], v[0] * v[1] - b * v[2]};
    };
    auto axpy = [](const State& v, double h, const State& k) -> State {
        return {v[0] + h * k[0], v[1] + h * k[1], v[2] + h * k[2]};
    };
    const State k1 = f(st);
    const State k2 = f(axpy(st, dt / 2, k1));
    const State k3 = f(axpy(st, dt / 2, k2));
    const State k4 = f(axpy(st, dt, k3));
    State next = st;
    for (int j = 0; j < 3; ++j) next[j] += dt / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
    return next;
}

std::vector<std::array<double, 3>> lorenz_trajectory(std::size_t n, double dt) {
    if (n < 1) throw InvalidArgument("need at least one sample");
    if (!(dt > 0.0) || !std::isfinite(dt)) throw InvalidArgument("time step must be positive");
    std::vector<std::array<double, 3>> out;
    out.reserve(n);
    std::array<double, 3> st{0.0, 1.0, 1.05};
    out.push_back(st);
    for (std::size_t i = 1; i < n; ++i) {
        st = lorenz_step(st, dt);
        for (double v : st) {
            if (!std::isfinite(v)) throw NumericalError(fmt::format("Lorenz state became non-finite at step {}", i));
        }
        out.push_back(st);
    }
    return out;
}

std::vector<double> gen_lorenz(std::size_t n, double dt, LorenzComponent component) {
    const auto traj = lorenz_trajectory(n, dt);
    const auto j = static_cast<std::size_t>(component);
    std::vector<double> series;
    series.reserve(n);
    for (const auto& st : traj) series.push_back(st[j]);
    return z_normalize(series);
}

std::vector<double> gen_sine(std::span<const double> freqs, double fs, std::size_t n) {
    if (n == 0) throw InvalidArgument("sine length must be positive");
    if (freqs.empty()) throw InvalidArgument("at least one frequency is required");
    if (!(fs > 0.0)) throw InvalidArgument("sampling rate must be positive");
    for (double f : freqs) {
        if (!(f > 0.0) || !std::isfinite(f)) throw InvalidArgument("frequencies must be positive");
        if (!(fs > 2.0 * f)) throw InvalidArgument(fmt::format("sampling rate {} violates Nyquist for {} Hz", fs, f));
    }
    std::vector<double> y(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) / fs;
        for (double f : freqs) y[i] += std::sin(2.0 * std::numbers::pi * f * t);
    }
    return z_normalize(y);
}

LabeledSeries gen_blobs(std::size_t n_per_class, std::span<const std::array<double, 2>> means, double sd,
                        std::uint64_t seed) {
    if (means.size() < 2) throw InvalidArgument("need at least two classes");
    if (n_per_class < 1) throw InvalidArgument("need at least one sample per class");
    if (!(sd > 0.0)) throw InvalidArgument("blob spread must be positive");
    Rng rng(seed);
    LabeledSeries out;
    out.name = "blobs";
    out.seed = seed;
    out.params = {{"n_per_class", std::to_string(n_per_class)}, {"classes", std::to_string(means.size())},
                  {"sd", fmt::format("{}", sd)}};
    // interleave classes so a prefix of the set is balanced
    for (std::size_t i = 0; i < n_per_class; ++i) {
        for (std::size_t c = 0; c < means.size(); ++c) {
            out.inputs.push_back({rng.normal(means[c][0], sd), rng.normal(means[c][1], sd)});
            std::vector<double> onehot(means.size(), 0.0);
            onehot[c] = 1.0;
            out.targets.push_back(std::move(onehot));
        }
    }
    return out;
}

std::vector<double> z_normalize(std::span<const double> series) {
    std::vector<double> out(series.begin(), series.end());
    if (out.empty()) return out;
    const double m = mean(series);
    const double sd = stddev(series);
    if (!(sd > 0.0)) return out;
    for (double& v : out) v = (v - m) / sd;
    return out;
}

}  // namespace qipf::eval
