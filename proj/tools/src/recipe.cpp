#include "qipf_cli/recipe.hpp"

#include <algorithm>
#include <cstdlib>
#include <type_traits>

#include <fmt/format.h>

#include "qipf/csv.hpp"

namespace qipf::cli {

namespace {

const std::vector<std::pair<Pipeline, std::string_view>> kPipelines = {
    {Pipeline::grid_study, "grid-study"},
    {Pipeline::dominance, "dominance"},
    {Pipeline::regression_uq, "regression-uq"},
    {Pipeline::classification_uq, "classification-uq"},
    {Pipeline::calibration_table, "calibration-table"},
};

std::string join(const std::vector<double>& v) {
    std::string out;
    for (double x : v) out += (out.empty() ? "" : ",") + io::format_number(x);
    return out;
}

template <typename Int>
std::string join_ints(const std::vector<Int>& v) {
    std::string out;
    for (auto x : v) out += (out.empty() ? "" : ",") + std::to_string(x);
    return out;
}

std::string join_strings(const std::vector<std::string>& v) {
    std::string out;
    for (const auto& x : v) out += (out.empty() ? "" : ",") + x;
    return out;
}

std::vector<std::string> split_strings(const std::string& raw) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= raw.size()) {
        const std::size_t comma = raw.find(',', start);
        std::string item = raw.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
        const auto b = item.find_first_not_of(" \t");
        const auto e = item.find_last_not_of(" \t");
        if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return out;
}

// Typed readers that keep the current value when the key is absent.
struct Reader {
    const io::Config& cfg;
    std::string section;

    std::string path(std::string_view key) const { return section + "." + std::string(key); }

    void str(std::string_view key, std::string& out) const { out = cfg.get_string(section, key, out); }
    void real(std::string_view key, double& out) const { out = cfg.get_double(section, key, out); }
    void reals(std::string_view key, std::vector<double>& out) const {
        if (cfg.has(section, key)) out = cfg.get_doubles(section, key);
    }
    void strings(std::string_view key, std::vector<std::string>& out) const {
        if (cfg.has(section, key)) out = split_strings(cfg.get_string(section, key));
    }
    template <typename Int>
    void integer(std::string_view key, Int& out) const {
        const long long v = cfg.get_int(section, key, static_cast<long long>(out));
        if (v < 0 && std::is_unsigned_v<Int>) throw ParseError(path(key), "must not be negative");
        out = static_cast<Int>(v);
    }
    void sizes(std::string_view key, std::vector<std::size_t>& out) const {
        if (!cfg.has(section, key)) return;
        out.clear();
        for (long long v : cfg.get_ints(section, key)) {
            if (v < 0) throw ParseError(path(key), "must not be negative");
            out.push_back(static_cast<std::size_t>(v));
        }
    }
    template <typename Fn>
    void parsed(std::string_view key, Fn&& fn) const {
        if (!cfg.has(section, key)) return;
        try {
            fn(cfg.get_string(section, key));
        } catch (const ParseError&) {
            throw;
        } catch (const Error& e) {
            throw ParseError(path(key), e.what());
        }
    }
    void check_keys(const std::vector<std::string>& allowed) const {
        const auto unknown = cfg.unknown_keys(section, allowed);
        if (!unknown.empty()) throw ParseError(unknown.front(), "unknown key");
    }
};

const std::vector<std::string> kSections = {"experiment", "data",       "signal",     "model",
                                            "train",      "surrogate", "mc_dropout", "calibration"};

}  // namespace

std::string_view to_string(Pipeline p) {
    for (const auto& [v, name] : kPipelines) {
        if (v == p) return name;
    }
    return "unknown";
}

Pipeline parse_pipeline(std::string_view s) {
    for (const auto& [v, name] : kPipelines) {
        if (name == s) return v;
    }
    throw InvalidArgument(fmt::format("unknown pipeline '{}'", s));
}

ExperimentRecipe ExperimentRecipe::from_config(const io::Config& cfg) {
    for (const auto& name : cfg.section_names()) {
        if (std::find(kSections.begin(), kSections.end(), name) == kSections.end()) {
            throw ParseError(name, "unknown section");
        }
    }
    ExperimentRecipe r;

    const Reader ex{cfg, "experiment"};
    ex.check_keys({"pipeline", "output_dir", "methods"});
    if (!cfg.has("experiment", "pipeline")) throw ParseError("experiment.pipeline", "required");
    ex.parsed("pipeline", [&](const std::string& v) { r.pipeline = parse_pipeline(v); });
    ex.str("output_dir", r.output_dir);
    ex.parsed("methods", [&](const std::string& v) {
        r.run_qipf = r.run_mc_dropout = false;
        for (const auto& m : split_strings(v)) {
            if (m == "qipf") {
                r.run_qipf = true;
            } else if (m == "mc-dropout") {
                r.run_mc_dropout = true;
            } else {
                throw InvalidArgument(fmt::format("unknown method '{}' (expected qipf or mc-dropout)", m));
            }
        }
    });

    const Reader d{cfg, "data"};
    d.check_keys({"kind", "name", "train_n", "train_lo", "train_hi", "test_n", "test_lo", "test_hi", "train_seed",
                  "test_seed", "noise_sd", "per_class", "blob_sd", "blob_means", "train_file", "test_file",
                  "target_columns"});
    d.str("kind", r.data.kind);
    d.str("name", r.data.name);
    d.integer("train_n", r.data.train_n);
    d.real("train_lo", r.data.train_lo);
    d.real("train_hi", r.data.train_hi);
    d.integer("test_n", r.data.test_n);
    d.real("test_lo", r.data.test_lo);
    d.real("test_hi", r.data.test_hi);
    d.integer("train_seed", r.data.train_seed);
    d.integer("test_seed", r.data.test_seed);
    d.real("noise_sd", r.data.noise_sd);
    d.integer("per_class", r.data.per_class);
    d.real("blob_sd", r.data.blob_sd);
    d.reals("blob_means", r.data.blob_means);
    d.str("train_file", r.data.train_file);
    d.str("test_file", r.data.test_file);
    d.integer("target_columns", r.data.target_columns);

    const Reader s{cfg, "signal"};
    s.check_keys({"signals", "freqs", "twotone_freqs", "fs", "n", "lorenz_dt", "sigmas", "modes", "grid", "warmup"});
    s.strings("signals", r.signal.signals);
    s.reals("freqs", r.signal.freqs);
    s.reals("twotone_freqs", r.signal.twotone_freqs);
    s.real("fs", r.signal.fs);
    s.integer("n", r.signal.n);
    s.real("lorenz_dt", r.signal.lorenz_dt);
    s.reals("sigmas", r.signal.sigmas);
    s.integer("modes", r.signal.modes);
    if (cfg.has("signal", "grid")) {
        const auto g = cfg.get_doubles("signal", "grid");
        if (g.size() != 3) throw ParseError("signal.grid", "expected lo,hi,step");
        r.signal.grid_lo = g[0];
        r.signal.grid_hi = g[1];
        r.signal.grid_step = g[2];
    }
    s.integer("warmup", r.signal.warmup);

    const Reader m{cfg, "model"};
    m.check_keys({"hidden", "activation", "seed"});
    m.sizes("hidden", r.model.hidden);
    m.parsed("activation", [&](const std::string& v) { r.model.activation = nn::parse_activation(v); });
    m.integer("seed", r.model.seed);

    const Reader t{cfg, "train"};
    t.check_keys({"epochs", "batch_size", "learning_rate", "beta1", "beta2", "epsilon", "dropout_rate", "seed"});
    t.integer("epochs", r.train.epochs);
    t.integer("batch_size", r.train.batch_size);
    t.real("learning_rate", r.train.learning_rate);
    t.real("beta1", r.train.beta1);
    t.real("beta2", r.train.beta2);
    t.real("epsilon", r.train.epsilon);
    t.real("dropout_rate", r.train.dropout_rate);
    t.integer("seed", r.train.seed);

    const Reader q{cfg, "surrogate"};
    q.check_keys({"layers", "modes", "multipliers", "reference_width", "centers", "pooling_window", "eigen",
                  "psi_floor"});
    q.sizes("layers", r.surrogate.layers);
    q.integer("modes", r.surrogate.num_modes);
    q.reals("multipliers", r.surrogate.bandwidth_multipliers);
    if (cfg.has("surrogate", "reference_width")) {
        r.surrogate.reference_width = cfg.get_double("surrogate", "reference_width");
    }
    q.parsed("centers", [&](const std::string& v) { r.surrogate.center_source = uq::parse_center_source(v); });
    q.integer("pooling_window", r.surrogate.pooling_window);
    q.parsed("eigen", [&](const std::string& v) { r.surrogate.eigen_mode = uq::parse_eigen_mode(v); });
    q.real("psi_floor", r.surrogate.psi_floor);

    const Reader mc{cfg, "mc_dropout"};
    mc.check_keys({"passes", "rate", "tau", "seed"});
    mc.integer("passes", r.mc_dropout.passes);
    mc.real("rate", r.mc_dropout.rate);
    mc.real("tau", r.mc_dropout.tau);
    mc.integer("seed", r.mc_dropout.seed);

    const Reader c{cfg, "calibration"};
    c.check_keys({"data_file", "splits", "test_fraction", "seed"});
    c.str("data_file", r.calibration.data_file);
    c.integer("splits", r.calibration.splits);
    c.real("test_fraction", r.calibration.test_fraction);
    c.integer("seed", r.calibration.seed);

    r.validate();
    return r;
}

ExperimentRecipe ExperimentRecipe::load(const std::filesystem::path& path) {
    ExperimentRecipe r = from_config(io::Config::load(path));
    const auto base = path.parent_path();
    for (std::string* p : {&r.data.train_file, &r.data.test_file, &r.calibration.data_file}) {
        if (!p->empty() && std::filesystem::path(*p).is_relative()) *p = (base / *p).lexically_normal().string();
    }
    return r;
}

io::Config ExperimentRecipe::to_config() const {
    io::Config c;
    const auto num = [](double v) { return io::format_number(v); };
    c.set("experiment", "pipeline", std::string(to_string(pipeline)));
    c.set("experiment", "output_dir", output_dir);
    std::vector<std::string> methods;
    if (run_qipf) methods.emplace_back("qipf");
    if (run_mc_dropout) methods.emplace_back("mc-dropout");
    c.set("experiment", "methods", join_strings(methods));

    c.set("data", "kind", data.kind);
    c.set("data", "name", data.name);
    c.set("data", "train_n", std::to_string(data.train_n));
    c.set("data", "train_lo", num(data.train_lo));
    c.set("data", "train_hi", num(data.train_hi));
    c.set("data", "test_n", std::to_string(data.test_n));
    c.set("data", "test_lo", num(data.test_lo));
    c.set("data", "test_hi", num(data.test_hi));
    c.set("data", "train_seed", std::to_string(data.train_seed));
    c.set("data", "test_seed", std::to_string(data.test_seed));
    c.set("data", "noise_sd", num(data.noise_sd));
    c.set("data", "per_class", std::to_string(data.per_class));
    c.set("data", "blob_sd", num(data.blob_sd));
    c.set("data", "blob_means", join(data.blob_means));
    c.set("data", "train_file", data.train_file);
    c.set("data", "test_file", data.test_file);
    c.set("data", "target_columns", std::to_string(data.target_columns));

    c.set("signal", "signals", join_strings(signal.signals));
    c.set("signal", "freqs", join(signal.freqs));
    c.set("signal", "twotone_freqs", join(signal.twotone_freqs));
    c.set("signal", "fs", num(signal.fs));
    c.set("signal", "n", std::to_string(signal.n));
    c.set("signal", "lorenz_dt", num(signal.lorenz_dt));
    c.set("signal", "sigmas", join(signal.sigmas));
    c.set("signal", "modes", std::to_string(signal.modes));
    c.set("signal", "grid", join({signal.grid_lo, signal.grid_hi, signal.grid_step}));
    c.set("signal", "warmup", std::to_string(signal.warmup));

    c.set("model", "hidden", join_ints(model.hidden));
    c.set("model", "activation", std::string(nn::to_string(model.activation)));
    c.set("model", "seed", std::to_string(model.seed));

    c.set("train", "epochs", std::to_string(train.epochs));
    c.set("train", "batch_size", std::to_string(train.batch_size));
    c.set("train", "learning_rate", num(train.learning_rate));
    c.set("train", "beta1", num(train.beta1));
    c.set("train", "beta2", num(train.beta2));
    c.set("train", "epsilon", num(train.epsilon));
    c.set("train", "dropout_rate", num(train.dropout_rate));
    c.set("train", "seed", std::to_string(train.seed));

    c.set("surrogate", "layers", join_ints(surrogate.layers));
    c.set("surrogate", "modes", std::to_string(surrogate.num_modes));
    c.set("surrogate", "multipliers", join(surrogate.bandwidth_multipliers));
    if (surrogate.reference_width) c.set("surrogate", "reference_width", num(*surrogate.reference_width));
    c.set("surrogate", "centers", std::string(uq::to_string(surrogate.center_source)));
    c.set("surrogate", "pooling_window", std::to_string(surrogate.pooling_window));
    c.set("surrogate", "eigen", std::string(uq::to_string(surrogate.eigen_mode)));
    c.set("surrogate", "psi_floor", num(surrogate.psi_floor));

    c.set("mc_dropout", "passes", std::to_string(mc_dropout.passes));
    c.set("mc_dropout", "rate", num(mc_dropout.rate));
    c.set("mc_dropout", "tau", num(mc_dropout.tau));
    c.set("mc_dropout", "seed", std::to_string(mc_dropout.seed));

    c.set("calibration", "data_file", calibration.data_file);
    c.set("calibration", "splits", std::to_string(calibration.splits));
    c.set("calibration", "test_fraction", num(calibration.test_fraction));
    c.set("calibration", "seed", std::to_string(calibration.seed));
    return c;
}

void ExperimentRecipe::validate() const {
    const auto fail = [](const char* where, const std::string& what) { throw ParseError(where, what); };
    if (!run_qipf && !run_mc_dropout) fail("experiment.methods", "at least one method is required");
    static const std::vector<std::string> kinds = {"xsinx", "twosine", "blobs", "file"};
    if (std::find(kinds.begin(), kinds.end(), data.kind) == kinds.end()) {
        fail("data.kind", fmt::format("unknown kind '{}' (expected xsinx, twosine, blobs or file)", data.kind));
    }
    if (data.blob_means.size() < 4 || data.blob_means.size() % 2 != 0) {
        fail("data.blob_means", "expected at least two x,y pairs");
    }
    if (data.target_columns < 1) fail("data.target_columns", "must be at least 1");
    for (const auto& s : signal.signals) {
        if (s != "sine" && s != "twotone" && s != "lorenz") {
            fail("signal.signals", fmt::format("unknown signal '{}' (expected sine, twotone or lorenz)", s));
        }
    }
    if (signal.signals.empty()) fail("signal.signals", "must not be empty");
    if (signal.sigmas.empty()) fail("signal.sigmas", "must not be empty");
    for (double s : signal.sigmas) {
        if (!(s > 0.0)) fail("signal.sigmas", "must be positive");
    }
    if (signal.modes < 1) fail("signal.modes", "must be at least 1");
    if (!(signal.grid_step > 0.0)) fail("signal.grid", "step must be positive");
    if (!(signal.grid_hi >= signal.grid_lo)) fail("signal.grid", "hi must not be below lo");
    if (model.hidden.empty()) fail("model.hidden", "at least one hidden layer is required");
    for (std::size_t w : model.hidden) {
        if (w == 0) fail("model.hidden", "layer widths must be positive");
    }
    if (train.epochs < 1) fail("train.epochs", "must be at least 1");
    if (!(train.learning_rate > 0.0)) fail("train.learning_rate", "must be positive");
    if (!(train.beta1 >= 0.0 && train.beta1 < 1.0)) fail("train.beta1", "must lie in [0, 1)");
    if (!(train.beta2 >= 0.0 && train.beta2 < 1.0)) fail("train.beta2", "must lie in [0, 1)");
    if (!(train.epsilon > 0.0)) fail("train.epsilon", "must be positive");
    if (!(train.dropout_rate >= 0.0 && train.dropout_rate < 1.0)) fail("train.dropout_rate", "must lie in [0, 1)");
    try {
        train.validate();
    } catch (const InvalidArgument& e) {
        fail("train", e.what());
    }
    if (surrogate.layers.empty()) fail("surrogate.layers", "must not be empty");
    if (surrogate.num_modes < 2) fail("surrogate.modes", "must be at least 2");
    if (surrogate.bandwidth_multipliers.empty()) fail("surrogate.multipliers", "must not be empty");
    for (double m : surrogate.bandwidth_multipliers) {
        if (!(m > 0.0)) fail("surrogate.multipliers", "must be positive");
    }
    if (surrogate.reference_width && !(*surrogate.reference_width > 0.0)) {
        fail("surrogate.reference_width", "must be positive");
    }
    if (surrogate.pooling_window < 1) fail("surrogate.pooling_window", "must be at least 1");
    if (mc_dropout.passes < 2) fail("mc_dropout.passes", "must be at least 2");
    if (!(mc_dropout.rate > 0.0 && mc_dropout.rate < 1.0)) fail("mc_dropout.rate", "must lie in (0, 1)");
    if (!(mc_dropout.tau > 0.0)) fail("mc_dropout.tau", "must be positive");
    if (calibration.splits < 1) fail("calibration.splits", "must be at least 1");
    if (!(calibration.test_fraction > 0.0 && calibration.test_fraction < 1.0)) {
        fail("calibration.test_fraction", "must lie in (0, 1)");
    }
}

std::filesystem::path default_output_dir() {
    if (const char* env = std::getenv("QIPF_OUTPUT_DIR"); env != nullptr && *env != '\0') return env;
    return "qipf-out";
}

std::filesystem::path output_dir(const ExperimentRecipe& recipe) {
    return recipe.output_dir.empty() ? default_output_dir() : std::filesystem::path(recipe.output_dir);
}

}  // namespace qipf::cli
