#include "qipf/nn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "qipf/error.hpp"

namespace qipf::nn {

std::string_view to_string(Activation a) { return a == Activation::relu ? "relu" : "identity"; }

std::string_view to_string(OutputMode m) {
    return m == OutputMode::regression ? "regression" : "softmax-classification";
}

Activation parse_activation(std::string_view s) {
    if (s == "relu") return Activation::relu;
    if (s == "identity") return Activation::identity;
    throw InvalidArgument("unknown activation '" + std::string(s) + "'");
}

OutputMode parse_output_mode(std::string_view s) {
    if (s == "regression") return OutputMode::regression;
    if (s == "softmax-classification" || s == "classification") return OutputMode::softmax_classification;
    throw InvalidArgument("unknown output mode '" + std::string(s) + "'");
}

MlpModel::MlpModel(std::vector<Layer> layers, OutputMode mode) : layers_(std::move(layers)), mode_(mode) { validate(); }

void MlpModel::validate() const {
    if (layers_.empty()) throw InvalidArgument("model must have at least one layer");
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        const Layer& layer = layers_[l];
        const std::string where = "layer " + std::to_string(l);
        if (layer.in == 0 || layer.out == 0) throw InvalidArgument(where + " has a zero dimension");
        if (layer.weights.size() != layer.in * layer.out) throw DimensionMismatch(where + " weight matrix size mismatch");
        if (layer.bias.size() != layer.out) throw DimensionMismatch(where + " bias size mismatch");
        if (l > 0 && layers_[l - 1].out != layer.in) throw DimensionMismatch(where + " input does not chain with previous layer");
        for (double w : layer.weights) detail::require_finite(w, "weight");
        for (double b : layer.bias) detail::require_finite(b, "bias");
    }
    if (mode_ == OutputMode::softmax_classification && output_dim() < 2) {
        throw InvalidArgument("classification needs at least two outputs");
    }
}

MlpModel MlpModel::create(std::span<const std::size_t> widths, Activation hidden, OutputMode mode, std::uint64_t seed) {
    if (widths.size() < 2) throw InvalidArgument("need at least input and output widths");
    Rng rng(seed);
    std::vector<Layer> layers;
    for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
        Layer layer;
        layer.in = widths[l];
        layer.out = widths[l + 1];
        if (layer.in == 0 || layer.out == 0) throw InvalidArgument("layer widths must be positive");
        layer.activation = (l + 2 == widths.size()) ? Activation::identity : hidden;
        const double limit = std::sqrt(6.0 / static_cast<double>(layer.in));
        layer.weights.resize(layer.in * layer.out);
        for (double& w : layer.weights) w = rng.uniform(-limit, limit);
        layer.bias.assign(layer.out, 0.0);
        layers.push_back(std::move(layer));
    }
    return MlpModel(std::move(layers), mode);
}

std::size_t MlpModel::parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers_) n += l.weights.size() + l.bias.size();
    return n;
}

bool parameters_equal(const MlpModel& a, const MlpModel& b) {
    if (a.output_mode() != b.output_mode() || a.layers().size() != b.layers().size()) return false;
    for (std::size_t l = 0; l < a.layers().size(); ++l) {
        const Layer& x = a.layers()[l];
        const Layer& y = b.layers()[l];
        if (x.in != y.in || x.out != y.out || x.activation != y.activation) return false;
        if (x.weights != y.weights || x.bias != y.bias) return false;
    }
    return true;
}

namespace {

double activate(Activation a, double z) { return a == Activation::relu ? std::max(z, 0.0) : z; }
double activate_grad(Activation a, double z) { return a == Activation::relu ? (z > 0.0 ? 1.0 : 0.0) : 1.0; }

void affine(const Layer& layer, std::span<const double> x, std::vector<double>& z) {
    z.resize(layer.out);
    for (std::size_t r = 0; r < layer.out; ++r) {
        double s = layer.bias[r];
        const double* row = layer.weights.data() + r * layer.in;
        for (std::size_t c = 0; c < layer.in; ++c) s += row[c] * x[c];
        z[r] = s;
    }
}

std::vector<double> softmax(std::span<const double> logits) {
    const double top = *std::max_element(logits.begin(), logits.end());
    std::vector<double> p(logits.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        p[i] = std::exp(logits[i] - top);
        sum += p[i];
    }
    for (double& v : p) v /= sum;
    return p;
}

void check_input(const MlpModel& model, std::span<const double> input) {
    if (input.size() != model.input_dim()) {
        throw DimensionMismatch("input has " + std::to_string(input.size()) + " features but the model expects " +
                                std::to_string(model.input_dim()));
    }
}

void check_rate(double rate) {
    if (!(rate >= 0.0 && rate < 1.0)) throw InvalidArgument("dropout rate must lie in [0, 1)");
}

// Per-sample forward state kept for backprop.
struct Tape {
    std::vector<std::vector<double>> pre;   // z_l
    std::vector<std::vector<double>> post;  // a_l after activation and mask
    std::vector<std::vector<double>> mask;  // scaled keep mask per hidden layer (empty when no dropout)
};

void run_tape(const MlpModel& model, std::span<const double> input, double rate, Rng* rng, Tape& tape) {
    const auto& layers = model.layers();
    tape.pre.resize(layers.size());
    tape.post.resize(layers.size());
    tape.mask.assign(layers.size(), {});
    std::span<const double> x = input;
    for (std::size_t l = 0; l < layers.size(); ++l) {
        affine(layers[l], x, tape.pre[l]);
        auto& a = tape.post[l];
        a.resize(layers[l].out);
        for (std::size_t i = 0; i < a.size(); ++i) a[i] = activate(layers[l].activation, tape.pre[l][i]);
        const bool hidden = l + 1 < layers.size();
        if (hidden && rate > 0.0 && rng != nullptr) {
            const double keep_scale = 1.0 / (1.0 - rate);
            auto& m = tape.mask[l];
            m.resize(a.size());
            for (std::size_t i = 0; i < a.size(); ++i) {
                m[i] = rng->bernoulli(rate) ? 0.0 : keep_scale;
                a[i] *= m[i];
            }
        }
        x = a;
    }
}

// Loss for one sample and dL/d(output of last layer) written into `dout`.
double sample_loss(OutputMode mode, std::span<const double> out, std::span<const double> target, std::vector<double>& dout) {
    dout.resize(out.size());
    if (mode == OutputMode::regression) {
        const double m = static_cast<double>(out.size());
        double l = 0.0;
        for (std::size_t i = 0; i < out.size(); ++i) {
            const double e = out[i] - target[i];
            l += e * e / m;
            dout[i] = 2.0 * e / m;
        }
        return l;
    }
    const auto p = softmax(out);
    const double top = *std::max_element(out.begin(), out.end());
    double lse = 0.0;
    for (double v : out) lse += std::exp(v - top);
    lse = top + std::log(lse);
    double l = 0.0;
    for (std::size_t i = 0; i < out.size(); ++i) {
        l -= target[i] * (out[i] - lse);
        dout[i] = p[i] - target[i];
    }
    return l;
}

void zero_like(const MlpModel& model, Gradients& g) {
    const auto& layers = model.layers();
    g.weights.resize(layers.size());
    g.bias.resize(layers.size());
    for (std::size_t l = 0; l < layers.size(); ++l) {
        g.weights[l].assign(layers[l].weights.size(), 0.0);
        g.bias[l].assign(layers[l].bias.size(), 0.0);
    }
}

// Accumulates the gradient of one sample's loss; returns the loss.
double accumulate(const MlpModel& model, std::span<const double> input, std::span<const double> target, double rate,
                  Rng* rng, Tape& tape, Gradients& g) {
    run_tape(model, input, rate, rng, tape);
    const auto& layers = model.layers();
    std::vector<double> delta;
    const double l = sample_loss(model.output_mode(), tape.post.back(), target, delta);
    for (std::size_t li = layers.size(); li-- > 0;) {
        const Layer& layer = layers[li];
        for (std::size_t i = 0; i < layer.out; ++i) {
            delta[i] *= activate_grad(layer.activation, tape.pre[li][i]);
            if (!tape.mask[li].empty()) delta[i] *= tape.mask[li][i];
        }
        std::span<const double> x = li == 0 ? input : std::span<const double>(tape.post[li - 1]);
        for (std::size_t r = 0; r < layer.out; ++r) {
            double* grow = g.weights[li].data() + r * layer.in;
            for (std::size_t c = 0; c < layer.in; ++c) grow[c] += delta[r] * x[c];
            g.bias[li][r] += delta[r];
        }
        if (li == 0) break;
        std::vector<double> prev(layer.in, 0.0);
        for (std::size_t r = 0; r < layer.out; ++r) {
            const double* row = layer.weights.data() + r * layer.in;
            for (std::size_t c = 0; c < layer.in; ++c) prev[c] += row[c] * delta[r];
        }
        delta = std::move(prev);
    }
    return l;
}

void check_dataset(const MlpModel& model, const Dataset& data) {
    if (data.inputs.empty()) throw InvalidArgument("dataset is empty");
    if (data.inputs.size() != data.targets.size()) throw DimensionMismatch("dataset inputs and targets differ in length");
    for (std::size_t i = 0; i < data.size(); ++i) {
        if (data.inputs[i].size() != model.input_dim()) throw DimensionMismatch("row " + std::to_string(i) + " input width mismatch");
        if (data.targets[i].size() != model.output_dim()) throw DimensionMismatch("row " + std::to_string(i) + " target width mismatch");
    }
}

}  // namespace

ForwardResult forward_capture(const MlpModel& model, std::span<const double> input, PassCounter* counter) {
    check_input(model, input);
    if (counter != nullptr) counter->add();
    Tape tape;
    run_tape(model, input, 0.0, nullptr, tape);
    ForwardResult out;
    const std::size_t L = model.layers().size();
    out.trace.hidden.assign(tape.post.begin(), tape.post.begin() + static_cast<std::ptrdiff_t>(L - 1));
    out.trace.last_pre_activation = tape.pre.back();
    out.output = model.output_mode() == OutputMode::softmax_classification ? softmax(tape.post.back()) : tape.post.back();
    return out;
}

std::vector<double> dropout_forward(const MlpModel& model, std::span<const double> input, double rate, Rng& rng,
                                    PassCounter* counter) {
    check_input(model, input);
    check_rate(rate);
    if (counter != nullptr) counter->add();
    Tape tape;
    run_tape(model, input, rate, &rng, tape);
    if (model.output_mode() == OutputMode::softmax_classification) return softmax(tape.post.back());
    return tape.post.back();
}

void TrainConfig::validate() const {
    if (epochs < 1) throw InvalidArgument("epochs must be at least 1");
    check_rate(dropout_rate);
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw InvalidArgument("learning rate must be positive");
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) throw InvalidArgument("Adam betas must lie in [0, 1)");
    if (!(epsilon > 0.0)) throw InvalidArgument("Adam epsilon must be positive");
}

double loss_and_gradients(const MlpModel& model, const Dataset& data, Gradients& grads) {
    check_dataset(model, data);
    zero_like(model, grads);
    Tape tape;
    double total = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) total += accumulate(model, data.inputs[i], data.targets[i], 0.0, nullptr, tape, grads);
    const double inv = 1.0 / static_cast<double>(data.size());
    for (auto& v : grads.weights) for (double& x : v) x *= inv;
    for (auto& v : grads.bias) for (double& x : v) x *= inv;
    return total * inv;
}

double loss(const MlpModel& model, const Dataset& data) {
    check_dataset(model, data);
    Tape tape;
    std::vector<double> dout;
    double total = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        run_tape(model, data.inputs[i], 0.0, nullptr, tape);
        total += sample_loss(model.output_mode(), tape.post.back(), data.targets[i], dout);
    }
    return total / static_cast<double>(data.size());
}

TrainResult train(MlpModel model, const Dataset& data, const TrainConfig& config) {
    config.validate();
    check_dataset(model, data);
    Rng rng(config.seed);
    const std::size_t n = data.size();
    const std::size_t batch = config.batch_size == 0 ? n : std::min(config.batch_size, n);

    Gradients g;
    Gradients m;
    Gradients v;
    zero_like(model, m);
    zero_like(model, v);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Tape tape;
    std::vector<double> history;
    history.reserve(static_cast<std::size_t>(config.epochs));
    std::uint64_t step = 0;

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        // Fisher-Yates with the seeded source
        for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.index(i)]);
        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < n; start += batch) {
            const std::size_t stop = std::min(start + batch, n);
            zero_like(model, g);
            double batch_loss = 0.0;
            for (std::size_t i = start; i < stop; ++i) {
                const std::size_t idx = order[i];
                batch_loss += accumulate(model, data.inputs[idx], data.targets[idx], config.dropout_rate, &rng, tape, g);
            }
            const double inv = 1.0 / static_cast<double>(stop - start);
            epoch_loss += batch_loss;
            if (!std::isfinite(batch_loss)) {
                throw NumericalError("non-finite training loss at epoch " + std::to_string(epoch) + ", sample offset " +
                                     std::to_string(start));
            }

            ++step;
            const double bc1 = 1.0 - std::pow(config.beta1, static_cast<double>(step));
            const double bc2 = 1.0 - std::pow(config.beta2, static_cast<double>(step));
            auto& layers = model.mutable_layers();
            auto update = [&](std::vector<double>& param, std::vector<double>& grad, std::vector<double>& m1,
                              std::vector<double>& m2) {
                for (std::size_t i = 0; i < param.size(); ++i) {
                    const double gi = grad[i] * inv;
                    m1[i] = config.beta1 * m1[i] + (1.0 - config.beta1) * gi;
                    m2[i] = config.beta2 * m2[i] + (1.0 - config.beta2) * gi * gi;
                    const double mh = m1[i] / bc1;
                    const double vh = m2[i] / bc2;
                    param[i] -= config.learning_rate * mh / (std::sqrt(vh) + config.epsilon);
                }
            };
            for (std::size_t l = 0; l < layers.size(); ++l) {
                update(layers[l].weights, g.weights[l], m.weights[l], v.weights[l]);
                update(layers[l].bias, g.bias[l], m.bias[l], v.bias[l]);
            }
        }
        history.push_back(epoch_loss / static_cast<double>(n));
    }
    return {std::move(model), std::move(history)};
}

}  // namespace qipf::nn
