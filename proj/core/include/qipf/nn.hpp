#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qipf/random.hpp"

namespace qipf::nn {

enum class Activation { relu, identity };
enum class OutputMode { regression, softmax_classification };

std::string_view to_string(Activation a);
std::string_view to_string(OutputMode m);
Activation parse_activation(std::string_view s);
OutputMode parse_output_mode(std::string_view s);

/// Fully connected layer; `weights` is out x in, row-major.
struct Layer {
    std::size_t in = 0;
    std::size_t out = 0;
    std::vector<double> weights;
    std::vector<double> bias;
    Activation activation = Activation::identity;

    double weight(std::size_t row, std::size_t col) const { return weights[row * in + col]; }
};

/// Feed-forward network. Every layer but the last is hidden; the last layer
/// produces regression outputs or class logits depending on the output mode.
class MlpModel {
public:
    MlpModel(std::vector<Layer> layers, OutputMode mode);

    /// He-style uniform init, U(-sqrt(6/fan_in), sqrt(6/fan_in)), zero biases.
    /// `widths` lists input, hidden..., output sizes. The output layer is identity.
    static MlpModel create(std::span<const std::size_t> widths, Activation hidden, OutputMode mode, std::uint64_t seed);

    const std::vector<Layer>& layers() const noexcept { return layers_; }
    std::vector<Layer>& mutable_layers() noexcept { return layers_; }
    OutputMode output_mode() const noexcept { return mode_; }

    std::size_t input_dim() const { return layers_.front().in; }
    std::size_t output_dim() const { return layers_.back().out; }
    std::size_t num_hidden() const { return layers_.size() - 1; }
    std::size_t parameter_count() const;

    /// Re-checks dimension chaining and finiteness.
    void validate() const;

private:
    std::vector<Layer> layers_;
    OutputMode mode_;
};

bool parameters_equal(const MlpModel& a, const MlpModel& b);

/// Post-activation vector of every hidden layer plus the last layer's
/// pre-activation (regression output or class logits).
struct ActivationTrace {
    std::vector<std::vector<double>> hidden;
    std::vector<double> last_pre_activation;
};

struct ForwardResult {
    std::vector<double> output;  ///< regression values or softmax probabilities
    ActivationTrace trace;
};

/// Counts forward passes through a model. Thread-safe.
class PassCounter {
public:
    void add(std::uint64_t n = 1) noexcept { count_.fetch_add(n, std::memory_order_relaxed); }
    std::uint64_t count() const noexcept { return count_.load(std::memory_order_relaxed); }
    void reset() noexcept { count_.store(0, std::memory_order_relaxed); }

private:
    std::atomic<std::uint64_t> count_{0};
};

ForwardResult forward_capture(const MlpModel& model, std::span<const double> input, PassCounter* counter = nullptr);

/// One stochastic pass with fresh inverted-dropout masks on every hidden layer.
std::vector<double> dropout_forward(const MlpModel& model, std::span<const double> input, double rate, Rng& rng,
                                    PassCounter* counter = nullptr);

/// Rows of inputs and targets. For classification the targets are one-hot.
struct Dataset {
    std::vector<std::vector<double>> inputs;
    std::vector<std::vector<double>> targets;

    std::size_t size() const noexcept { return inputs.size(); }
};

struct TrainConfig {
    int epochs = 100;
    std::size_t batch_size = 0;  ///< 0 means full batch
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    double dropout_rate = 0.0;
    std::uint64_t seed = 0;

    void validate() const;
    bool operator==(const TrainConfig&) const = default;
};

struct TrainResult {
    MlpModel model;
    std::vector<double> loss_history;  ///< mean training loss per epoch
};

/// Adam on MSE (regression) or softmax cross-entropy (classification).
/// Deterministic for a fixed seed.
TrainResult train(MlpModel model, const Dataset& data, const TrainConfig& config);

/// Gradients laid out like the model: one weight and one bias vector per layer.
struct Gradients {
    std::vector<std::vector<double>> weights;
    std::vector<std::vector<double>> bias;
};

/// Mean loss over `data` and its exact gradient, without dropout.
double loss_and_gradients(const MlpModel& model, const Dataset& data, Gradients& grads);
double loss(const MlpModel& model, const Dataset& data);

/// JSON encoding with a format-version field; doubles round-trip exactly.
std::string model_to_json(const MlpModel& model);
MlpModel model_from_json(std::string_view text);
void save_model(const MlpModel& model, const std::filesystem::path& path);
MlpModel load_model(const std::filesystem::path& path);

inline constexpr int kModelFormatVersion = 1;

}  // namespace qipf::nn
