#include "qipf/uq.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "qipf/error.hpp"

namespace qipf::uq {

std::string_view to_string(CenterSource s) { return s == CenterSource::activations ? "activations" : "pooled-weights"; }
std::string_view to_string(EigenMode m) { return m == EigenMode::batch ? "batch" : "running"; }

CenterSource parse_center_source(std::string_view s) {
    if (s == "activations") return CenterSource::activations;
    if (s == "pooled-weights" || s == "pooled_weights" || s == "weights") return CenterSource::pooled_weights;
    throw InvalidArgument("unknown center source '" + std::string(s) + "'");
}

EigenMode parse_eigen_mode(std::string_view s) {
    if (s == "batch") return EigenMode::batch;
    if (s == "running") return EigenMode::running;
    throw InvalidArgument("unknown eigenvalue mode '" + std::string(s) + "'");
}

void SurrogateConfig::validate(const nn::MlpModel& model) const {
    if (layers.empty()) throw InvalidArgument("surrogate layer selection must not be empty");
    if (num_modes < 2) throw InvalidArgument("the surrogate aggregates with a standard deviation and needs at least 2 modes");
    ModeConfig{num_modes, Bandwidth(1.0), psi_floor}.validate();
    if (bandwidth_multipliers.empty()) throw InvalidArgument("at least one bandwidth multiplier is required");
    for (double m : bandwidth_multipliers) {
        if (!(m > 0.0) || !std::isfinite(m)) throw InvalidArgument("bandwidth multipliers must be positive");
    }
    if (reference_width && !(*reference_width > 0.0 && std::isfinite(*reference_width))) {
        throw InvalidArgument("reference width must be positive");
    }
    if (pooling_window < 1) throw InvalidArgument("pooling window must be at least 1");
    for (std::size_t l : layers) {
        if (l >= model.num_hidden()) {
            throw InvalidArgument(fmt::format("layer {} is not a hidden layer (model has {} hidden layers)", l, model.num_hidden()));
        }
    }
}

std::vector<double> UncertaintyReport::uncertainties() const {
    std::vector<double> out;
    out.reserve(entries.size());
    for (const auto& e : entries) out.push_back(e.uncertainty);
    return out;
}

SampleSet weight_centers(const nn::MlpModel& model, std::size_t pooling_window, std::span<const std::size_t> layers) {
    if (pooling_window < 1) throw InvalidArgument("pooling window must be at least 1");
    std::vector<std::size_t> selected(layers.begin(), layers.end());
    if (selected.empty()) {
        for (std::size_t l = 0; l < model.layers().size(); ++l) selected.push_back(l);
    }
    std::vector<double> flat;
    for (std::size_t l : selected) {
        if (l >= model.layers().size()) throw InvalidArgument(fmt::format("layer {} does not exist", l));
        const auto& w = model.layers()[l].weights;
        flat.insert(flat.end(), w.begin(), w.end());
    }
    if (pooling_window > flat.size()) {
        throw InvalidArgument(fmt::format("pooling window {} exceeds the {} selected weights", pooling_window, flat.size()));
    }
    std::vector<double> pooled;
    pooled.reserve((flat.size() + pooling_window - 1) / pooling_window);
    for (std::size_t start = 0; start < flat.size(); start += pooling_window) {
        const std::size_t stop = std::min(start + pooling_window, flat.size());
        double s = 0.0;
        for (std::size_t i = start; i < stop; ++i) s += flat[i];
        pooled.push_back(s / static_cast<double>(stop - start));
    }
    return SampleSet::scalars(std::move(pooled));
}

double evaluation_point(const nn::MlpModel& model, const nn::ActivationTrace& trace) {
    const auto& z = trace.last_pre_activation;
    if (model.output_mode() == nn::OutputMode::softmax_classification) {
        return *std::max_element(z.begin(), z.end());
    }
    double s = 0.0;
    for (double v : z) s += v;
    return s / static_cast<double>(z.size());
}

CrossQipfEstimator::CrossQipfEstimator(const nn::MlpModel& model, SurrogateConfig config)
    : model_(model), config_(std::move(config)) {
    config_.validate(model_);
    if (config_.center_source == CenterSource::pooled_weights) {
        weight_groups_.push_back(weight_centers(model_, config_.pooling_window, config_.layers));
    }
    const std::size_t groups = num_groups();
    const std::size_t mults = config_.bandwidth_multipliers.size();
    const std::size_t K = static_cast<std::size_t>(config_.num_modes);
    running_min_.assign(groups, std::vector<std::vector<double>>(mults, std::vector<double>(K, std::numeric_limits<double>::infinity())));
    last_ratios_.assign(groups, std::vector<std::vector<double>>(mults, std::vector<double>(K, 0.0)));
}

std::size_t CrossQipfEstimator::num_groups() const noexcept {
    return config_.center_source == CenterSource::activations ? config_.layers.size() : 1;
}

std::vector<double> CrossQipfEstimator::pool(const std::vector<std::vector<std::vector<double>>>& ratios,
                                             const std::vector<std::vector<std::vector<double>>>& minima) const {
    const std::size_t K = static_cast<std::size_t>(config_.num_modes);
    const double inv_m = 1.0 / static_cast<double>(config_.bandwidth_multipliers.size());
    std::vector<double> pooled;
    pooled.reserve(ratios.size() * K);
    for (std::size_t g = 0; g < ratios.size(); ++g) {
        for (std::size_t k = 0; k < K; ++k) {
            double s = 0.0;
            for (std::size_t m = 0; m < ratios[g].size(); ++m) s += ratios[g][m][k] - minima[g][m][k];
            pooled.push_back(s * inv_m);
        }
    }
    return pooled;
}

UncertaintyEntry CrossQipfEstimator::evaluate(std::span<const double> input) {
    const nn::ForwardResult fwd = nn::forward_capture(model_, input, &passes_);
    const double l2 = evaluation_point(model_, fwd.trace);

    UncertaintyEntry entry;
    entry.index = processed_++;
    entry.prediction = fwd.output;
    entry.eval_point = l2;
    entry.forward_passes = 1;

    for (std::size_t g = 0; g < num_groups(); ++g) {
        const SampleSet centers = config_.center_source == CenterSource::activations
                                      ? SampleSet::scalars(fwd.trace.hidden[config_.layers[g]])
                                      : weight_groups_[0];
        Bandwidth base(config_.reference_width.value_or(1.0));
        if (!config_.reference_width) {
            try {
                base = silverman_bandwidth(centers);
            } catch (const DegenerateInput&) {
                const std::string name = config_.center_source == CenterSource::activations
                                             ? fmt::format("hidden layer {}", config_.layers[g])
                                             : std::string("pooled weights");
                throw DegenerateInput("degenerate centers in " + name + ": zero variance");
            }
        }
        for (std::size_t m = 0; m < config_.bandwidth_multipliers.size(); ++m) {
            const ModeConfig mc{config_.num_modes, Bandwidth(config_.bandwidth_multipliers[m] * base.value()), config_.psi_floor};
            const ModeRatios r = mode_ratios(centers, mc, std::span<const double>(&l2, 1));
            entry.near_node = entry.near_node || r.near_node;
            last_ratios_[g][m] = r.ratios;
            for (std::size_t k = 0; k < r.ratios.size(); ++k) {
                if (!std::isfinite(r.ratios[k])) throw NumericalError("non-finite cross-QIPF ratio");
                running_min_[g][m][k] = std::min(running_min_[g][m][k], r.ratios[k]);
            }
        }
    }

    if (config_.eigen_mode == EigenMode::running) {
        entry.modes = pool(last_ratios_, running_min_);
        entry.uncertainty = mode_std(entry.modes);
    }
    return entry;
}

UncertaintyReport cross_qipf_report(const nn::MlpModel& model, const std::vector<std::vector<double>>& inputs,
                                    const SurrogateConfig& config) {
    const auto t0 = std::chrono::steady_clock::now();
    CrossQipfEstimator est(model, config);
    UncertaintyReport report;
    report.entries.reserve(inputs.size());
    std::vector<std::vector<std::vector<std::vector<double>>>> all_ratios;
    for (const auto& x : inputs) {
        report.entries.push_back(est.evaluate(x));
        if (config.eigen_mode == EigenMode::batch) all_ratios.push_back(est.last_ratios());
    }
    if (config.eigen_mode == EigenMode::batch && !inputs.empty()) {
        // minimum of each (group, multiplier, mode) over the full set
        auto minima = all_ratios.front();
        for (const auto& r : all_ratios) {
            for (std::size_t g = 0; g < r.size(); ++g)
                for (std::size_t m = 0; m < r[g].size(); ++m)
                    for (std::size_t k = 0; k < r[g][m].size(); ++k) minima[g][m][k] = std::min(minima[g][m][k], r[g][m][k]);
        }
        for (std::size_t i = 0; i < all_ratios.size(); ++i) {
            report.entries[i].modes = est.pool(all_ratios[i], minima);
            report.entries[i].uncertainty = mode_std(report.entries[i].modes);
        }
    }
    report.meta.method = "cross-qipf";
    std::string layers;
    for (std::size_t l : config.layers) layers += (layers.empty() ? "" : ",") + std::to_string(l);
    std::string mults;
    for (double m : config.bandwidth_multipliers) mults += (mults.empty() ? "" : ",") + fmt::format("{}", m);
    report.meta.config = {{"layers", layers},
                          {"modes", std::to_string(config.num_modes)},
                          {"multipliers", mults},
                          {"centers", std::string(to_string(config.center_source))},
                          {"pooling_window", std::to_string(config.pooling_window)},
                          {"eigen", std::string(to_string(config.eigen_mode))},
                          {"psi_floor", fmt::format("{}", config.psi_floor)}};
    if (config.reference_width) report.meta.config["reference_width"] = fmt::format("{}", *config.reference_width);
    report.meta.elapsed_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return report;
}

McDropoutResult mc_dropout_uncertainty(const nn::MlpModel& model, std::span<const double> input, int passes,
                                       double rate, double tau, Rng& rng, nn::PassCounter* counter) {
    if (passes < 2) throw InvalidArgument("MC dropout needs at least two passes");
    if (!(rate >= 0.0 && rate < 1.0)) throw InvalidArgument("dropout rate must lie in [0, 1)");
    if (!(tau > 0.0) || !std::isfinite(tau)) throw InvalidArgument("model precision tau must be positive");

    const std::size_t D = model.output_dim();
    std::vector<std::vector<double>> samples;
    samples.reserve(static_cast<std::size_t>(passes));
    std::vector<double> sum(D, 0.0);
    for (int t = 0; t < passes; ++t) {
        samples.push_back(nn::dropout_forward(model, input, rate, rng, counter));
        for (std::size_t i = 0; i < D; ++i) sum[i] += samples.back()[i];
    }
    McDropoutResult out;
    out.degenerate = rate == 0.0;
    out.mean.resize(D);
    out.predictive_std.resize(D);
    out.epistemic_std.resize(D);
    const double T = static_cast<double>(passes);
    for (std::size_t i = 0; i < D; ++i) {
        const double mean = sum[i] / T;
        // two-pass, so identical passes give exactly zero spread
        double ss = 0.0;
        for (const auto& y : samples) ss += (y[i] - mean) * (y[i] - mean);
        const double var = ss / T;
        out.mean[i] = mean;
        out.epistemic_std[i] = std::sqrt(var);
        out.predictive_std[i] = std::sqrt(1.0 / tau + var);
    }
    return out;
}

UncertaintyReport mc_dropout_report(const nn::MlpModel& model, const std::vector<std::vector<double>>& inputs,
                                    const McDropoutConfig& config) {
    const auto t0 = std::chrono::steady_clock::now();
    Rng rng(config.seed);
    UncertaintyReport report;
    report.entries.reserve(inputs.size());
    const bool classify = model.output_mode() == nn::OutputMode::softmax_classification;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        nn::PassCounter counter;
        const McDropoutResult r = mc_dropout_uncertainty(model, inputs[i], config.passes, config.rate, config.tau, rng, &counter);
        std::size_t idx = 0;
        if (classify) idx = static_cast<std::size_t>(std::max_element(r.mean.begin(), r.mean.end()) - r.mean.begin());
        UncertaintyEntry e;
        e.index = i;
        e.prediction = r.mean;
        e.uncertainty = r.epistemic_std[idx];
        e.predictive_std = r.predictive_std[idx];
        e.forward_passes = counter.count();
        report.entries.push_back(std::move(e));
    }
    report.meta.method = "mc-dropout";
    report.meta.seed = config.seed;
    report.meta.config = {{"passes", std::to_string(config.passes)},
                          {"rate", fmt::format("{}", config.rate)},
                          {"tau", fmt::format("{}", config.tau)}};
    report.meta.elapsed_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return report;
}

}  // namespace qipf::uq
