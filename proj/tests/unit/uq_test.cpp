#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "oracles.hpp"
#include "qipf/error.hpp"
#include "qipf/hermite.hpp"
#include "qipf/eval.hpp"
#include "qipf/modes.hpp"
#include "qipf/uq.hpp"

using namespace qipf;
using namespace qipf::uq;

namespace {

nn::MlpModel net(std::vector<std::size_t> widths, std::uint64_t seed,
                 nn::OutputMode mode = nn::OutputMode::regression) {
    return nn::MlpModel::create(widths, nn::Activation::relu, mode, seed);
}

std::vector<std::vector<double>> inputs_1d(double lo, double hi, std::size_t n) {
    std::vector<std::vector<double>> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back({lo + (hi - lo) * i / (n - 1)});
    return out;
}

nn::Layer layer(std::size_t in, std::size_t out, std::vector<double> w, std::vector<double> b, nn::Activation a) {
    nn::Layer l;
    l.in = in;
    l.out = out;
    l.weights = std::move(w);
    l.bias = std::move(b);
    l.activation = a;
    return l;
}

}  // namespace

TEST_CASE("surrogate config validation") {
    auto m = net({1, 6, 6, 1}, 1);
    SurrogateConfig c;
    CHECK_NOTHROW(c.validate(m));
    c.num_modes = 1;
    CHECK_THROWS(c.validate(m));
    c.num_modes = 5;
    c.layers = {};
    CHECK_THROWS(c.validate(m));
    c.layers = {2};
    CHECK_THROWS(c.validate(m));
    c.layers = {0, 1};
    c.bandwidth_multipliers = {20, -1};
    CHECK_THROWS(c.validate(m));
    c.bandwidth_multipliers = {};
    CHECK_THROWS(c.validate(m));
    c.bandwidth_multipliers = {20};
    c.reference_width = 0.0;
    CHECK_THROWS(c.validate(m));
    CHECK(parse_center_source("pooled-weights") == CenterSource::pooled_weights);
    CHECK(parse_eigen_mode("running") == EigenMode::running);
    CHECK_THROWS(parse_eigen_mode("online"));
}

TEST_CASE("weight_centers pooling") {
    nn::MlpModel m({layer(2, 2, {1, 2, 3, 4}, {0, 0}, nn::Activation::relu),
                    layer(2, 1, {5, 6}, {0}, nn::Activation::identity)},
                   nn::OutputMode::regression);
    std::vector<std::size_t> first{0};
    auto w1 = weight_centers(m, 1, first);
    CHECK(std::vector<double>(w1.flat().begin(), w1.flat().end()) == std::vector<double>{1, 2, 3, 4});
    auto w2 = weight_centers(m, 2, first);
    CHECK(std::vector<double>(w2.flat().begin(), w2.flat().end()) == std::vector<double>{1.5, 3.5});
    auto all = weight_centers(m, 4);
    CHECK(std::vector<double>(all.flat().begin(), all.flat().end()) == std::vector<double>{2.5, 5.5});
    CHECK_THROWS(weight_centers(m, 7));
    CHECK_THROWS(weight_centers(m, 0));

    auto big = net({3, 9, 7, 2}, 12);
    std::vector<std::size_t> sel{0, 1};
    auto pooled = weight_centers(big, 5, sel);
    std::vector<double> flat;
    for (std::size_t l : sel) flat.insert(flat.end(), big.layers()[l].weights.begin(), big.layers()[l].weights.end());
    std::vector<double> brute;
    for (std::size_t s = 0; s < flat.size(); s += 5) {
        const std::size_t e = std::min(s + 5, flat.size());
        double sum = 0;
        for (std::size_t i = s; i < e; ++i) sum += flat[i];
        brute.push_back(sum / (e - s));
    }
    REQUIRE(pooled.size() == brute.size());
    for (std::size_t i = 0; i < brute.size(); ++i) CHECK(pooled.flat()[i] == doctest::Approx(brute[i]).epsilon(1e-15));
}

TEST_CASE("evaluation point") {
    auto reg = net({1, 4, 3}, 2);
    auto r = nn::forward_capture(reg, std::vector<double>{0.5});
    const auto& z = r.trace.last_pre_activation;
    CHECK(evaluation_point(reg, r.trace) == doctest::Approx((z[0] + z[1] + z[2]) / 3));
    auto cls = net({1, 4, 3}, 2, nn::OutputMode::softmax_classification);
    auto c = nn::forward_capture(cls, std::vector<double>{0.5});
    CHECK(evaluation_point(cls, c.trace) == *std::max_element(c.trace.last_pre_activation.begin(),
                                                              c.trace.last_pre_activation.end()));
}

TEST_CASE("cross-QIPF ratios equal the mode machinery on the layer activations") {
    auto m = net({1, 12, 12, 1}, 3);
    SurrogateConfig c;
    c.layers = {0, 1};
    c.num_modes = 4;
    c.bandwidth_multipliers = {2, 5};
    c.eigen_mode = EigenMode::running;
    CrossQipfEstimator est(m, c);
    std::vector<double> x{0.8};
    auto e = est.evaluate(x);
    auto fwd = nn::forward_capture(m, x);
    const double l2 = evaluation_point(m, fwd.trace);
    CHECK(e.eval_point == l2);
    for (std::size_t g = 0; g < 2; ++g) {
        auto centers = SampleSet::scalars(fwd.trace.hidden[g]);
        const double h = silverman_bandwidth(centers).value();
        for (std::size_t mi = 0; mi < 2; ++mi) {
            ModeConfig mc{4, Bandwidth(c.bandwidth_multipliers[mi] * h), c.psi_floor};
            auto r = mode_ratios(centers, mc, std::vector<double>{l2});
            for (std::size_t k = 0; k < 4; ++k) CHECK(est.last_ratios()[g][mi][k] == r.ratios[k]);
        }
    }
    // First point of a running stream: every offset equals its own ratio.
    REQUIRE(e.modes.size() == 8);
    for (double v : e.modes) CHECK(v == 0.0);
    CHECK(e.uncertainty == 0.0);
}

TEST_CASE("symmetric activations about the evaluation point kill the gradient term") {
    // Hidden layer emits {1+x, 1-x}-like symmetric pairs around l2 = 1.
    nn::MlpModel m({layer(1, 2, {1, -1}, {1, 1}, nn::Activation::identity),
                    layer(2, 1, {0.5, 0.5}, {0}, nn::Activation::identity)},
                   nn::OutputMode::regression);
    auto fwd = nn::forward_capture(m, std::vector<double>{0.4});
    const double l2 = evaluation_point(m, fwd.trace);
    CHECK(l2 == doctest::Approx(1.0));
    auto w = wavefunction_derivatives(SampleSet::scalars(fwd.trace.hidden[0]), Bandwidth(1.0), std::vector<double>{l2});
    CHECK(std::abs(w.gradient[0]) <= 1e-15);
    ModeConfig mc{3, Bandwidth(1.0), kDefaultPsiFloor};
    auto r = mode_ratios(SampleSet::scalars(fwd.trace.hidden[0]), mc, std::vector<double>{l2});
    for (int k = 1; k <= 3; ++k) {
        auto h = normalized_hermite_derivs(HermiteOrder(k), w.value);
        CHECK(r.ratios[k - 1] == doctest::Approx(0.5 * h.first * w.laplacian / h.value).epsilon(1e-12));
    }
}

TEST_CASE("batch offsets use the minimum over the whole set") {
    auto m = net({1, 10, 10, 1}, 4);
    SurrogateConfig c;
    c.layers = {0, 1};
    c.num_modes = 5;
    auto xs = inputs_1d(-3, 3, 24);
    auto report = cross_qipf_report(m, xs, c);
    REQUIRE(report.entries.size() == 24);
    for (std::size_t k = 0; k < 10; ++k) {
        double mn = INFINITY;
        for (const auto& e : report.entries) mn = std::min(mn, e.modes[k]);
        CHECK(std::abs(mn) <= 1e-12);
    }
    for (const auto& e : report.entries) {
        CHECK(e.uncertainty == doctest::Approx(mode_std(e.modes)));
        CHECK(e.uncertainty >= 0.0);
        CHECK(e.forward_passes == 1);
    }
    CHECK(report.meta.method == "cross-qipf");
}

TEST_CASE("running offsets are causal") {
    auto m = net({1, 10, 1}, 5);
    SurrogateConfig c;
    c.eigen_mode = EigenMode::running;
    auto xs = inputs_1d(-2, 2, 14);
    auto full = cross_qipf_report(m, xs, c);
    std::vector<std::vector<double>> prefix(xs.begin(), xs.begin() + 7);
    auto part = cross_qipf_report(m, prefix, c);
    for (std::size_t i = 0; i < 7; ++i) CHECK(part.entries[i].modes == full.entries[i].modes);
    for (const auto& e : full.entries)
        for (double v : e.modes) CHECK(v >= 0.0);
}

TEST_CASE("adding a layer never shrinks the pooled mode vector") {
    auto m = net({1, 8, 8, 8, 1}, 6);
    auto xs = inputs_1d(0.3, 2.1, 5);
    std::size_t last = 0;
    for (std::vector<std::size_t> sel : {std::vector<std::size_t>{0}, {0, 1}, {0, 1, 2}}) {
        SurrogateConfig c;
        c.layers = sel;
        auto r = cross_qipf_report(m, xs, c);
        CHECK(r.entries[0].modes.size() >= last);
        CHECK(r.entries[0].modes.size() == sel.size() * 5);
        last = r.entries[0].modes.size();
    }
}

TEST_CASE("multipliers are averaged") {
    auto m = net({1, 10, 1}, 7);
    auto xs = inputs_1d(0.2, 2.2, 9);
    SurrogateConfig a;
    a.bandwidth_multipliers = {10};
    SurrogateConfig b = a;
    b.bandwidth_multipliers = {30};
    SurrogateConfig ab = a;
    ab.bandwidth_multipliers = {10, 30};
    auto ra = cross_qipf_report(m, xs, a);
    auto rb = cross_qipf_report(m, xs, b);
    auto rab = cross_qipf_report(m, xs, ab);
    for (std::size_t i = 0; i < xs.size(); ++i)
        for (std::size_t k = 0; k < 5; ++k)
            CHECK(rab.entries[i].modes[k] ==
                  doctest::Approx(0.5 * (ra.entries[i].modes[k] + rb.entries[i].modes[k])).epsilon(1e-12));
}

TEST_CASE("reference width replaces the Silverman width") {
    auto m = net({1, 10, 1}, 8);
    auto xs = inputs_1d(-2, 2, 5);
    SurrogateConfig c;
    c.reference_width = 0.5;
    c.bandwidth_multipliers = {2};
    CrossQipfEstimator est(m, c);
    est.evaluate(xs[1]);
    auto fwd = nn::forward_capture(m, xs[1]);
    ModeConfig mc{5, Bandwidth(1.0), c.psi_floor};
    auto r = mode_ratios(SampleSet::scalars(fwd.trace.hidden[0]), mc,
                         std::vector<double>{evaluation_point(m, fwd.trace)});
    for (std::size_t k = 0; k < 5; ++k) CHECK(est.last_ratios()[0][0][k] == r.ratios[k]);
}

TEST_CASE("degenerate activations name the layer") {
    nn::MlpModel dead({layer(1, 3, {0, 0, 0}, {0, 0, 0}, nn::Activation::relu),
                       layer(3, 1, {1, 1, 1}, {0}, nn::Activation::identity)},
                      nn::OutputMode::regression);
    SurrogateConfig c;
    try {
        cross_qipf_report(dead, inputs_1d(0, 1, 3), c);
        FAIL("expected a degenerate-input error");
    } catch (const DegenerateInput& e) {
        CHECK(std::string(e.what()).find("hidden layer 0") != std::string::npos);
    }
}

TEST_CASE("pooled weight centers") {
    auto m = net({2, 16, 16, 3}, 9, nn::OutputMode::softmax_classification);
    SurrogateConfig c;
    c.center_source = CenterSource::pooled_weights;
    c.layers = {0, 1};
    c.pooling_window = 4;
    std::vector<std::vector<double>> xs{{0, 0}, {1, 2}, {-1, 0.5}};
    auto r = cross_qipf_report(m, xs, c);
    CHECK(r.entries[0].modes.size() == 5);
    CHECK(r.meta.config.at("centers") == "pooled-weights");
    CHECK(parse_center_source(to_string(CenterSource::pooled_weights)) == CenterSource::pooled_weights);
}

TEST_CASE("single-shot pass counts") {
    auto m = net({1, 10, 1}, 10);
    auto xs = inputs_1d(-1, 1, 12);
    SurrogateConfig c;
    CrossQipfEstimator est(m, c);
    for (const auto& x : xs) est.evaluate(x);
    CHECK(est.passes().count() == xs.size());

    nn::PassCounter counter;
    Rng rng(1);
    mc_dropout_uncertainty(m, xs[0], 37, 0.2, 1e-2, rng, &counter);
    CHECK(counter.count() == 37);
    McDropoutConfig mc;
    auto rep = mc_dropout_report(m, xs, mc);
    for (const auto& e : rep.entries) CHECK(e.forward_passes == 100);
}

TEST_CASE("MC dropout moments") {
    nn::MlpModel zero({layer(1, 4, {0, 0, 0, 0}, {0, 0, 0, 0}, nn::Activation::relu),
                       layer(4, 1, {0, 0, 0, 0}, {0}, nn::Activation::identity)},
                      nn::OutputMode::regression);
    Rng rng(2);
    auto r = mc_dropout_uncertainty(zero, std::vector<double>{1.0}, 50, 0.5, 1e-2, rng);
    CHECK(r.mean[0] == 0.0);
    CHECK(r.epistemic_std[0] == 0.0);
    CHECK(r.predictive_std[0] == doctest::Approx(std::sqrt(1.0 / 1e-2)));

    auto m = net({1, 10, 1}, 11);
    auto d = mc_dropout_uncertainty(m, std::vector<double>{0.3}, 10, 0.0, 1e-2, rng);
    CHECK(d.degenerate);
    CHECK(d.epistemic_std[0] == 0.0);
    CHECK_THROWS(mc_dropout_uncertainty(m, std::vector<double>{0.3}, 1, 0.2, 1e-2, rng));
    CHECK_THROWS(mc_dropout_uncertainty(m, std::vector<double>{0.3}, 10, 1.0, 1e-2, rng));
    CHECK_THROWS(mc_dropout_uncertainty(m, std::vector<double>{0.3}, 10, 0.2, 0.0, rng));

    auto lin = nn::MlpModel::create(std::vector<std::size_t>{2, 16, 1}, nn::Activation::identity,
                                    nn::OutputMode::regression, 12);
    std::vector<double> x{0.4, -0.9};
    const double target = nn::forward_capture(lin, x).output[0];
    auto big = mc_dropout_uncertainty(lin, x, 20000, 0.2, 1e-2, rng);
    CHECK(std::abs(big.mean[0] - target) <= 3 * big.epistemic_std[0] / std::sqrt(20000.0));
    CHECK(big.predictive_std[0] * big.predictive_std[0] ==
          doctest::Approx(100.0 + big.epistemic_std[0] * big.epistemic_std[0]).epsilon(1e-9));
}

TEST_CASE("reports are reproducible") {
    auto m = net({1, 10, 10, 1}, 13);
    auto xs = inputs_1d(-4, 4, 20);
    SurrogateConfig c;
    c.layers = {0, 1};
    auto a = cross_qipf_report(m, xs, c);
    auto b = cross_qipf_report(m, xs, c);
    for (std::size_t i = 0; i < xs.size(); ++i) CHECK(a.entries[i].modes == b.entries[i].modes);
    McDropoutConfig mc;
    mc.seed = 4;
    auto ma = mc_dropout_report(m, xs, mc);
    auto mb = mc_dropout_report(m, xs, mc);
    CHECK(ma.uncertainties() == mb.uncertainties());
}

TEST_CASE("MC dropout spread is invariant to relabeling hidden neurons") {
    auto m = net({1, 6, 1}, 14);
    // Reverse the hidden units: rows of layer 0 and columns of layer 1.
    auto p = m;
    auto& l0 = p.mutable_layers()[0];
    auto& l1 = p.mutable_layers()[1];
    std::reverse(l0.weights.begin(), l0.weights.end());
    std::reverse(l0.bias.begin(), l0.bias.end());
    std::reverse(l1.weights.begin(), l1.weights.end());
    std::vector<double> x{0.7};
    CHECK(nn::forward_capture(p, x).output[0] == doctest::Approx(nn::forward_capture(m, x).output[0]));
    Rng ra(5);
    Rng rb(6);
    auto a = mc_dropout_uncertainty(m, x, 40000, 0.3, 1e-2, ra);
    auto b = mc_dropout_uncertainty(p, x, 40000, 0.3, 1e-2, rb);
    // Equal in distribution: the two std estimates agree within sampling error.
    CHECK(a.epistemic_std[0] == doctest::Approx(b.epistemic_std[0]).epsilon(0.03));
    CHECK(std::abs(a.mean[0] - b.mean[0]) <= 4 * a.epistemic_std[0] / std::sqrt(40000.0) * std::sqrt(2.0));
}
