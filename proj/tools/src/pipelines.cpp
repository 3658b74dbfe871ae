#include "qipf_cli/pipelines.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>

#include <fmt/format.h>

#include "qipf/random.hpp"
#include "qipf/serialize.hpp"

namespace qipf::cli {

namespace fs = std::filesystem;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::vector<std::string> column_names(const std::string& stem, std::size_t n) {
    if (n == 1) return {stem};
    std::vector<std::string> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back(stem + std::to_string(i + 1));
    return out;
}

std::size_t argmax(std::span<const double> v) {
    return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

std::string sigma_tag(double sigma) {
    std::string s = io::format_number(sigma);
    std::replace(s.begin(), s.end(), '.', 'p');
    return s;
}

std::string num(double v) { return std::isnan(v) ? std::string("n/a") : fmt::format("{:.6g}", v); }

io::CsvTable predictions_table(const UqRun& run) {
    io::CsvTable t;
    t.header = column_names("x", run.test.num_features());
    const std::size_t outs = run.predictions.empty() ? 0 : run.predictions.front().size();
    for (const auto& h : column_names("target", run.test.targets.front().size())) t.header.push_back(h);
    for (const auto& h : column_names("prediction", outs)) t.header.push_back(h);
    for (std::size_t i = 0; i < run.test.size(); ++i) {
        std::vector<double> row = run.test.inputs[i];
        row.insert(row.end(), run.test.targets[i].begin(), run.test.targets[i].end());
        row.insert(row.end(), run.predictions[i].begin(), run.predictions[i].end());
        t.rows.push_back(std::move(row));
    }
    return t;
}

std::vector<std::vector<double>> read_predictions(const fs::path& path, std::size_t features, std::size_t targets) {
    const io::CsvTable t = io::read_csv(path);
    std::vector<std::vector<double>> out;
    for (const auto& row : t.rows) {
        if (row.size() <= features + targets) throw ParseError(path.string(), "no prediction columns");
        out.emplace_back(row.begin() + static_cast<std::ptrdiff_t>(features + targets), row.end());
    }
    return out;
}

void write(RunResult& result, const fs::path& path, std::string_view text) {
    io::write_text(path, text);
    result.files.push_back(path);
}

void write(RunResult& result, const fs::path& path, const io::CsvTable& table) {
    io::write_csv(path, table);
    result.files.push_back(path);
}

std::string dataset_name(const ExperimentRecipe& recipe) {
    if (!recipe.data.name.empty()) return recipe.data.name;
    if (recipe.data.kind != "file") return recipe.data.kind;
    const std::string& src = recipe.pipeline == Pipeline::calibration_table ? recipe.calibration.data_file
                                                                            : recipe.data.train_file;
    return fs::path(src).stem().string();
}

}  // namespace

// -- data ------------------------------------------------------------------------

Dataset read_dataset(const fs::path& path, std::size_t target_columns) {
    const io::CsvTable t = io::read_csv(path);
    if (t.header.size() <= target_columns) {
        throw ParseError(path.string(), fmt::format("expected at least one feature column before {} target column(s)",
                                                    target_columns));
    }
    if (t.rows.empty()) throw ParseError(path.string(), "no data rows");
    Dataset d;
    d.header = t.header;
    const std::size_t features = t.header.size() - target_columns;
    for (const auto& row : t.rows) {
        d.inputs.emplace_back(row.begin(), row.begin() + static_cast<std::ptrdiff_t>(features));
        d.targets.emplace_back(row.begin() + static_cast<std::ptrdiff_t>(features), row.end());
    }
    return d;
}

void write_dataset(const fs::path& path, const Dataset& data) {
    io::CsvTable t;
    t.header = data.header;
    for (std::size_t i = 0; i < data.size(); ++i) {
        std::vector<double> row = data.inputs[i];
        row.insert(row.end(), data.targets[i].begin(), data.targets[i].end());
        t.rows.push_back(std::move(row));
    }
    io::write_csv(path, t);
}

Dataset from_series(const eval::LabeledSeries& series) {
    Dataset d;
    d.inputs = series.inputs;
    d.targets = series.targets;
    d.header = column_names("x", series.inputs.front().size());
    for (const auto& h : column_names("y", series.targets.front().size())) d.header.push_back(h);
    return d;
}

namespace {

std::vector<std::array<double, 2>> blob_means(const DataSpec& spec) {
    std::vector<std::array<double, 2>> means;
    for (std::size_t i = 0; i + 1 < spec.blob_means.size(); i += 2) {
        means.push_back({spec.blob_means[i], spec.blob_means[i + 1]});
    }
    return means;
}

Dataset generated(const DataSpec& spec, bool test) {
    const std::uint64_t seed = test ? spec.test_seed : spec.train_seed;
    if (spec.kind == "xsinx") {
        return test ? from_series(eval::gen_xsinx(spec.test_n, spec.test_lo, spec.test_hi, seed))
                    : from_series(eval::gen_xsinx(spec.train_n, spec.train_lo, spec.train_hi, seed));
    }
    if (spec.kind == "twosine") {
        if (!test) {
            eval::TwoSineParams p;
            p.noise_sd = spec.noise_sd;
            p.seed = seed;
            return from_series(eval::gen_twosine(p));
        }
        // errors are measured against the noise-free generating function
        eval::LabeledSeries s;
        Rng rng(seed);
        for (std::size_t i = 0; i < spec.test_n; ++i) {
            const double x = rng.uniform(spec.test_lo, spec.test_hi);
            s.inputs.push_back({x});
            s.targets.push_back({eval::twosine_target(x, 0.0)});
        }
        return from_series(s);
    }
    const auto means = blob_means(spec);
    return from_series(eval::gen_blobs(spec.per_class, means, spec.blob_sd, seed));
}

}  // namespace

DataSplit load_train(const DataSpec& spec) {
    DataSplit out;
    if (spec.kind == "file") {
        if (spec.train_file.empty()) throw ParseError("data.train_file", "required when data.kind is file");
        out.train = read_dataset(spec.train_file, spec.target_columns);
    } else {
        out.train = generated(spec, false);
    }
    return out;
}

DataSplit load_split(const DataSpec& spec) {
    DataSplit out = load_train(spec);
    if (spec.kind == "file") {
        if (spec.test_file.empty()) throw ParseError("data.test_file", "required: the recipe names no test file");
        out.test = read_dataset(spec.test_file, spec.target_columns);
        if (out.test.num_features() != out.train.num_features()) {
            throw DimensionMismatch(fmt::format("test file has {} feature columns, training file has {}",
                                                out.test.num_features(), out.train.num_features()));
        }
    } else {
        out.test = generated(spec, true);
    }
    return out;
}

nn::OutputMode output_mode(Pipeline p) {
    return p == Pipeline::classification_uq ? nn::OutputMode::softmax_classification : nn::OutputMode::regression;
}

nn::TrainResult train_model(const ExperimentRecipe& recipe, const Dataset& train, nn::OutputMode mode) {
    std::vector<std::size_t> widths{train.num_features()};
    widths.insert(widths.end(), recipe.model.hidden.begin(), recipe.model.hidden.end());
    widths.push_back(train.targets.front().size());
    auto model = nn::MlpModel::create(widths, recipe.model.activation, mode, recipe.model.seed);
    return nn::train(std::move(model), nn::Dataset{train.inputs, train.targets}, recipe.train);
}

std::vector<double> grid_points(double lo, double hi, double step) {
    if (!(step > 0.0) || !std::isfinite(step)) throw InvalidArgument("grid step must be positive");
    if (!(hi >= lo)) throw InvalidArgument("grid upper bound must not be below the lower bound");
    const auto n = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9)) + 1;
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = lo + step * static_cast<double>(i);
    return out;
}

std::vector<double> make_signal(const SignalSpec& spec, const std::string& name) {
    if (name == "sine") return eval::gen_sine(spec.freqs, spec.fs, spec.n);
    if (name == "twotone") return eval::gen_sine(spec.twotone_freqs, spec.fs, spec.n);
    if (name == "lorenz") return eval::gen_lorenz(spec.n, spec.lorenz_dt);
    throw InvalidArgument(fmt::format("unknown signal '{}'", name));
}

// -- grid study ------------------------------------------------------------------

GridTrend grid_trend(const ModeMatrix& modes, double tail) {
    if (modes.eval_points().dim() != 1) throw InvalidArgument("grid trend needs a one-dimensional grid");
    const std::size_t P = modes.num_points();
    const std::size_t K = modes.num_modes();
    const auto x = [&](std::size_t p) { return modes.eval_points().point(p)[0]; };
    GridTrend t;

    std::size_t center = 0;
    for (std::size_t p = 1; p < P; ++p) {
        if (std::abs(x(p)) < std::abs(x(center))) center = p;
    }
    t.dominant_at_center = argmax(modes.point_column(center)) + 1;

    std::vector<std::size_t> tally(K, 0);
    const double cut = tail - 1e-9 * std::max(1.0, std::abs(tail));
    for (std::size_t p = 0; p < P; ++p) {
        if (std::abs(x(p)) >= cut) ++tally[argmax(modes.point_column(p))];
    }
    if (std::accumulate(tally.begin(), tally.end(), std::size_t{0}) > 0) {
        t.dominant_at_tails = static_cast<std::size_t>(std::max_element(tally.begin(), tally.end()) - tally.begin()) + 1;
    }

    std::vector<double> order;
    for (std::size_t k = 0; k < K; ++k) {
        double sum = 0.0;
        std::size_t n = 0;
        for (std::size_t p = 0; p < P; ++p) {
            if (modes.at(k, p) <= 1e-12) {
                sum += std::abs(x(p));
                ++n;
            }
        }
        t.minima_abs_x.push_back(sum / static_cast<double>(n));
        order.push_back(static_cast<double>(k + 1));
    }
    t.spearman = K >= 2 ? eval::spearman(order, t.minima_abs_x) : kNaN;
    return t;
}

std::vector<GridStudyEntry> grid_study(const ExperimentRecipe& recipe) {
    const auto& s = recipe.signal;
    const SampleSet grid = SampleSet::scalars(grid_points(s.grid_lo, s.grid_hi, s.grid_step));
    std::vector<GridStudyEntry> out;
    for (const auto& name : s.signals) {
        const SampleSet centers = SampleSet::scalars(make_signal(s, name));
        for (double sigma : s.sigmas) {
            const ModeConfig cfg{s.modes, Bandwidth(sigma), kDefaultPsiFloor};
            ModeMatrix m = qipf_modes(centers, cfg, grid);
            GridTrend trend = grid_trend(m);
            out.push_back({name, sigma, std::move(m), std::move(trend)});
        }
    }
    return out;
}

// -- dominance -------------------------------------------------------------------

std::vector<DominanceEntry> dominance_study(const ExperimentRecipe& recipe) {
    const auto& s = recipe.signal;
    const ModeConfig cfg{s.modes, Bandwidth(s.sigmas.front()), kDefaultPsiFloor};
    std::vector<DominanceEntry> out;
    for (const auto& name : s.signals) {
        const auto signal = make_signal(s, name);
        const ModeMatrix m = timeseries_qipf(signal, cfg, s.warmup);
        DominanceEntry e;
        e.signal = name;
        e.counts = dominance_histogram(m);
        e.entropy = eval::dominance_entropy(e.counts);
        e.modes_95 = eval::modes_covering(e.counts, 0.95);
        out.push_back(std::move(e));
    }
    return out;
}

// -- uncertainty -----------------------------------------------------------------

UqRun run_uq(const ExperimentRecipe& recipe, const Dataset& test, const nn::MlpModel& model) {
    UqRun run;
    run.test = test;
    for (const auto& x : test.inputs) run.predictions.push_back(nn::forward_capture(model, x).output);
    if (recipe.run_qipf) run.qipf = uq::cross_qipf_report(model, test.inputs, recipe.surrogate);
    if (recipe.run_mc_dropout) run.mc_dropout = uq::mc_dropout_report(model, test.inputs, recipe.mc_dropout);
    return run;
}

std::vector<double> abs_errors(const std::vector<std::vector<double>>& predictions,
                               const std::vector<std::vector<double>>& targets) {
    if (predictions.size() != targets.size()) throw DimensionMismatch("prediction and target counts differ");
    std::vector<double> out;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        if (predictions[i].size() != targets[i].size()) throw DimensionMismatch("prediction and target widths differ");
        double sq = 0.0;
        for (std::size_t j = 0; j < targets[i].size(); ++j) {
            const double d = predictions[i][j] - targets[i][j];
            sq += d * d;
        }
        out.push_back(std::sqrt(sq));
    }
    return out;
}

std::vector<int> misclassified(const std::vector<std::vector<double>>& predictions,
                               const std::vector<std::vector<double>>& targets) {
    if (predictions.size() != targets.size()) throw DimensionMismatch("prediction and target counts differ");
    std::vector<int> out;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        out.push_back(argmax(predictions[i]) != argmax(targets[i]) ? 1 : 0);
    }
    return out;
}

RegressionMetrics regression_metrics(const UqRun& run, double train_lo, double train_hi) {
    const auto err = abs_errors(run.predictions, run.test.targets);
    RegressionMetrics m;
    m.qipf_rmse = m.mc_dropout_rmse = m.qipf_pearson = m.mc_dropout_pearson = kNaN;
    m.qipf_inside = m.qipf_outside = kNaN;
    if (!run.qipf.entries.empty()) {
        const auto u = run.qipf.uncertainties();
        m.qipf_rmse = eval::calibration_rmse(u, err);
        m.qipf_pearson = eval::pearson(u, err);
        std::vector<double> in, out;
        for (std::size_t i = 0; i < u.size(); ++i) {
            const double x = run.test.inputs[i][0];
            (x >= train_lo && x <= train_hi ? in : out).push_back(u[i]);
        }
        if (!in.empty()) m.qipf_inside = eval::mean(in);
        if (!out.empty()) m.qipf_outside = eval::mean(out);
    }
    if (!run.mc_dropout.entries.empty()) {
        const auto u = run.mc_dropout.uncertainties();
        m.mc_dropout_rmse = eval::calibration_rmse(u, err);
        m.mc_dropout_pearson = eval::pearson(u, err);
    }
    return m;
}

ClassificationMetrics classification_metrics(const UqRun& run) {
    const auto wrong = misclassified(run.predictions, run.test.targets);
    ClassificationMetrics m;
    m.errors = static_cast<std::size_t>(std::count(wrong.begin(), wrong.end(), 1));
    if (!run.qipf.entries.empty()) m.qipf = eval::roc_auc(run.qipf.uncertainties(), wrong);
    if (!run.mc_dropout.entries.empty()) m.mc_dropout = eval::roc_auc(run.mc_dropout.uncertainties(), wrong);
    return m;
}

// -- calibration table -----------------------------------------------------------

CalibrationRow calibration_study(const ExperimentRecipe& recipe, const Dataset& data, const std::string& name) {
    CalibrationRow row;
    row.dataset = name;
    row.n = data.size();
    row.q = data.num_features();
    const auto splits = eval::split_k(data.size(), recipe.calibration.splits, recipe.calibration.test_fraction,
                                      recipe.calibration.seed);
    for (std::size_t s = 0; s < splits.size(); ++s) {
        Dataset train, test;
        for (std::size_t i : splits[s].train) {
            train.inputs.push_back(data.inputs[i]);
            train.targets.push_back(data.targets[i]);
        }
        for (std::size_t i : splits[s].test) {
            test.inputs.push_back(data.inputs[i]);
            test.targets.push_back(data.targets[i]);
        }
        const auto xn = eval::Normalizer::fit(train.inputs);
        const auto yn = eval::Normalizer::fit(train.targets);
        for (auto* set : {&train, &test}) {
            for (auto& x : set->inputs) x = xn.apply(x);
            for (auto& y : set->targets) y = yn.apply(y);
        }

        ExperimentRecipe r = recipe;
        r.model.seed += s;
        r.train.seed += s;
        r.mc_dropout.seed += s;
        const auto trained = train_model(r, train, nn::OutputMode::regression);
        const UqRun run = run_uq(r, test, trained.model);
        const auto err = abs_errors(run.predictions, test.targets);
        if (r.run_mc_dropout) row.mc_dropout.push_back(eval::calibration_rmse(run.mc_dropout.uncertainties(), err));
        if (r.run_qipf) row.qipf.push_back(eval::calibration_rmse(run.qipf.uncertainties(), err));
    }
    return row;
}

std::string format_cell(std::span<const double> values) {
    if (values.empty()) return "n/a";
    return fmt::format("{:.3f} +- {:.3f}", eval::mean(values), eval::stddev(values));
}

std::string format_table(const std::vector<CalibrationRow>& rows) {
    std::string out = "dataset,N,Q,mc_dropout,qipf\n";
    for (const auto& r : rows) {
        out += fmt::format("{},{},{},{},{}\n", r.dataset, r.n, r.q, format_cell(r.mc_dropout), format_cell(r.qipf));
    }
    return out;
}

// -- charts ----------------------------------------------------------------------

io::Chart modes_chart(const io::CsvTable& t, const std::string& title) {
    io::Chart c;
    c.title = title;
    c.x_label = t.header.front();
    c.y_label = "normalized value";
    const auto x = t.column(0);
    std::size_t color = 0;
    for (std::size_t j = 1; j < t.header.size(); ++j) {
        if (t.header[j].empty() || t.header[j][0] != 'V') continue;
        c.lines.push_back({x, io::min_max_normalize(t.column(j)), io::palette_color(color++), false, t.header[j]});
    }
    const auto has_ipf = std::find(t.header.begin(), t.header.end(), "ipf");
    if (has_ipf != t.header.end()) {
        const auto col = static_cast<std::size_t>(has_ipf - t.header.begin());
        c.lines.push_back({x, io::min_max_normalize(t.column(col)), "#000000", true, "IPF"});
    }
    return c;
}

io::Chart table_chart(const io::CsvTable& t, const std::string& title) {
    if (t.header.size() < 2) throw ParseError("plot", "need at least two columns");
    io::Chart c;
    c.title = title;
    c.x_label = t.header.front();
    c.y_label = t.header.size() == 2 ? t.header[1] : "value";
    const auto x = t.column(0);
    for (std::size_t j = 1; j < t.header.size(); ++j) {
        c.lines.push_back({x, t.column(j), io::palette_color(j - 1), false, t.header[j]});
    }
    return c;
}

io::Chart report_chart(const uq::UncertaintyReport& report, const std::string& title, std::span<const double> x_values) {
    if (!x_values.empty() && x_values.size() != report.entries.size()) {
        throw DimensionMismatch("one x value per report entry is required");
    }
    io::Chart c;
    c.title = title;
    c.x_label = x_values.empty() ? "test index" : "x";
    c.y_label = "prediction";
    std::vector<std::size_t> order(report.entries.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    if (!x_values.empty()) {
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x_values[a] < x_values[b]; });
    }
    io::BandSeries band;
    io::LineSeries pred;
    pred.label = "prediction";
    for (std::size_t i : order) {
        const auto& e = report.entries[i];
        const double x = x_values.empty() ? static_cast<double>(e.index) : x_values[i];
        const double y = e.prediction.empty() ? 0.0 : e.prediction[0];
        band.x.push_back(x);
        band.lower.push_back(y - e.uncertainty);
        band.upper.push_back(y + e.uncertainty);
        pred.x.push_back(x);
        pred.y.push_back(y);
    }
    c.bands.push_back(std::move(band));
    c.lines.push_back(std::move(pred));
    return c;
}

io::Chart roc_chart(const ClassificationMetrics& m) {
    io::Chart c;
    c.title = "misclassification detection ROC";
    c.x_label = "false positive rate";
    c.y_label = "true positive rate";
    const auto line = [](const eval::RocCurve& r, std::string color, std::string label) {
        io::LineSeries s;
        for (const auto& p : r.points) {
            s.x.push_back(p.fpr);
            s.y.push_back(p.tpr);
        }
        s.color = std::move(color);
        s.label = std::move(label);
        return s;
    };
    if (!m.qipf.points.empty()) c.lines.push_back(line(m.qipf, io::palette_color(0), fmt::format("QIPF (AUC {:.3f})", m.qipf.auc)));
    if (!m.mc_dropout.points.empty()) {
        c.lines.push_back(line(m.mc_dropout, io::palette_color(1), fmt::format("MC dropout (AUC {:.3f})", m.mc_dropout.auc)));
    }
    c.lines.push_back({{0.0, 1.0}, {0.0, 1.0}, "#888888", true, "chance"});
    return c;
}

// -- stages ----------------------------------------------------------------------

RunResult train_stage(const ExperimentRecipe& recipe, const fs::path& out) {
    const DataSplit data = load_train(recipe.data);
    const auto trained = train_model(recipe, data.train, output_mode(recipe.pipeline));
    RunResult r;
    write(r, out / "model.json", nn::model_to_json(trained.model));
    io::CsvTable loss;
    loss.header = {"epoch", "loss"};
    for (std::size_t i = 0; i < trained.loss_history.size(); ++i) {
        loss.rows.push_back({static_cast<double>(i + 1), trained.loss_history[i]});
    }
    write(r, out / "loss.csv", loss);
    r.summary = fmt::format("trained {} parameters on {} rows; final loss {}\n", trained.model.parameter_count(),
                            data.train.size(), num(trained.loss_history.back()));
    return r;
}

RunResult uq_stage(const ExperimentRecipe& recipe, const fs::path& out, const fs::path& model_path) {
    const DataSplit data = load_split(recipe.data);
    const nn::MlpModel model = nn::load_model(model_path);
    const UqRun run = run_uq(recipe, data.test, model);
    RunResult r;
    write(r, out / "predictions.csv", predictions_table(run));
    for (const auto* rep : {&run.qipf, &run.mc_dropout}) {
        if (rep->entries.empty()) continue;
        const std::string stem = rep->meta.method == "cross-qipf" ? "qipf" : "mc_dropout";
        write(r, out / (stem + ".jsonl"), io::report_to_jsonl(*rep));
        write(r, out / (stem + ".meta.json"), io::report_metadata_json(rep->meta));
        r.summary += fmt::format("{}: {} test points, {} forward passes\n", rep->meta.method, rep->entries.size(),
                                 std::accumulate(rep->entries.begin(), rep->entries.end(), std::uint64_t{0},
                                                 [](std::uint64_t a, const auto& e) { return a + e.forward_passes; }));
    }
    return r;
}

RunResult evaluate_stage(const ExperimentRecipe& recipe, const fs::path& out) {
    RunResult r;
    if (recipe.pipeline == Pipeline::calibration_table) {
        if (recipe.calibration.data_file.empty()) throw ParseError("calibration.data_file", "required");
        const Dataset data = read_dataset(recipe.calibration.data_file, recipe.data.target_columns);
        const CalibrationRow row = calibration_study(recipe, data, dataset_name(recipe));
        io::CsvTable splits;
        splits.header = {"split", "mc_dropout", "qipf"};
        for (std::size_t s = 0; s < recipe.calibration.splits; ++s) {
            splits.rows.push_back({static_cast<double>(s), s < row.mc_dropout.size() ? row.mc_dropout[s] : kNaN,
                                   s < row.qipf.size() ? row.qipf[s] : kNaN});
        }
        write(r, out / "splits.csv", splits);
        const std::string table = format_table({row});
        write(r, out / "table.csv", table);
        r.summary = table;
        return r;
    }
    if (recipe.pipeline != Pipeline::regression_uq && recipe.pipeline != Pipeline::classification_uq) {
        throw UsageError(fmt::format("evaluate does not apply to the {} pipeline", to_string(recipe.pipeline)));
    }

    const DataSplit data = load_split(recipe.data);
    UqRun run;
    run.test = data.test;
    run.predictions = read_predictions(out / "predictions.csv", data.test.num_features(),
                                       data.test.targets.front().size());
    if (run.predictions.size() != data.test.size()) {
        throw DimensionMismatch("predictions.csv does not match the recipe's test set");
    }
    const auto load_report = [&](const char* stem, uq::UncertaintyReport& rep) {
        const fs::path p = out / (std::string(stem) + ".jsonl");
        if (fs::exists(p)) rep = io::report_from_jsonl(io::read_text(p), p.string());
    };
    if (recipe.run_qipf) load_report("qipf", run.qipf);
    if (recipe.run_mc_dropout) load_report("mc_dropout", run.mc_dropout);
    if (run.qipf.entries.empty() && run.mc_dropout.entries.empty()) {
        throw Error(fmt::format("no uncertainty reports in {}; run the uq command first", out.string()));
    }

    CalibrationRow row;
    row.dataset = dataset_name(recipe);
    row.n = data.train.size() + data.test.size();
    row.q = data.train.num_features();
    if (recipe.pipeline == Pipeline::regression_uq) {
        double lo = std::numeric_limits<double>::infinity(), hi = -lo;
        for (const auto& x : data.train.inputs) {
            lo = std::min(lo, x[0]);
            hi = std::max(hi, x[0]);
        }
        const auto m = regression_metrics(run, lo, hi);
        std::string metrics = "method,calibration_rmse,pearson,mean_inside,mean_outside\n";
        if (!run.mc_dropout.entries.empty()) {
            metrics += fmt::format("mc_dropout,{},{},n/a,n/a\n", num(m.mc_dropout_rmse), num(m.mc_dropout_pearson));
            row.mc_dropout = {m.mc_dropout_rmse};
        }
        if (!run.qipf.entries.empty()) {
            metrics += fmt::format("qipf,{},{},{},{}\n", num(m.qipf_rmse), num(m.qipf_pearson), num(m.qipf_inside),
                                   num(m.qipf_outside));
            row.qipf = {m.qipf_rmse};
        }
        write(r, out / "metrics.csv", metrics);
        r.summary = metrics;
    } else {
        const auto m = classification_metrics(run);
        std::string auc = "method,auc,errors\n";
        if (!run.mc_dropout.entries.empty()) {
            write(r, out / "roc_mc_dropout.csv", io::roc_to_csv(m.mc_dropout));
            auc += fmt::format("mc_dropout,{:.6f},{}\n", m.mc_dropout.auc, m.errors);
            row.mc_dropout = {m.mc_dropout.auc};
        }
        if (!run.qipf.entries.empty()) {
            write(r, out / "roc_qipf.csv", io::roc_to_csv(m.qipf));
            auc += fmt::format("qipf,{:.6f},{}\n", m.qipf.auc, m.errors);
            row.qipf = {m.qipf.auc};
        }
        write(r, out / "auc.csv", auc);
        write(r, out / "roc.svg", io::render_svg(roc_chart(m)));
        r.summary = auc;
    }
    const std::string table = format_table({row});
    write(r, out / "table.csv", table);
    r.summary += table;
    return r;
}

RunResult run_pipeline(const ExperimentRecipe& recipe, const fs::path& out) {
    RunResult r;
    const auto merge = [&](RunResult part) {
        r.files.insert(r.files.end(), part.files.begin(), part.files.end());
        r.summary += part.summary;
    };
    switch (recipe.pipeline) {
        case Pipeline::grid_study: {
            std::string summary = "signal,sigma,dominant_center,dominant_tails,spearman\n";
            for (const auto& e : grid_study(recipe)) {
                const std::string stem = fmt::format("modes_{}_sigma{}", e.signal, sigma_tag(e.sigma));
                const io::CsvTable t = io::modes_to_csv(e.modes);
                write(r, out / (stem + ".csv"), t);
                write(r, out / (stem + ".json"), io::modes_to_json(e.modes));
                write(r, out / (stem + ".svg"),
                      io::render_svg(modes_chart(t, fmt::format("{} modes, sigma {}", e.signal, io::format_number(e.sigma)))));
                summary += fmt::format("{},{},{},{},{}\n", e.signal, io::format_number(e.sigma), e.trend.dominant_at_center,
                                       e.trend.dominant_at_tails, num(e.trend.spearman));
            }
            write(r, out / "grid_summary.csv", summary);
            r.summary = summary;
            return r;
        }
        case Pipeline::dominance: {
            std::string summary = "signal,entropy,modes_95";
            for (int k = 1; k <= recipe.signal.modes; ++k) summary += fmt::format(",m{}", k);
            summary += '\n';
            for (const auto& e : dominance_study(recipe)) {
                summary += fmt::format("{},{:.6f},{}", e.signal, e.entropy, e.modes_95);
                for (auto c : e.counts) summary += fmt::format(",{}", c);
                summary += '\n';
            }
            write(r, out / "dominance.csv", summary);
            r.summary = summary;
            return r;
        }
        case Pipeline::regression_uq:
        case Pipeline::classification_uq: {
            const DataSplit data = load_split(recipe.data);
            write_dataset(out / "train.csv", data.train);
            write_dataset(out / "test.csv", data.test);
            r.files.push_back(out / "train.csv");
            r.files.push_back(out / "test.csv");
            merge(train_stage(recipe, out));
            merge(uq_stage(recipe, out, out / "model.json"));
            merge(evaluate_stage(recipe, out));
            if (recipe.pipeline == Pipeline::regression_uq) {
                for (const char* stem : {"qipf", "mc_dropout"}) {
                    const fs::path p = out / (std::string(stem) + ".jsonl");
                    if (!fs::exists(p)) continue;
                    const auto rep = io::report_from_jsonl(io::read_text(p), p.string());
                    std::vector<double> xs;
                    for (const auto& x : data.test.inputs) xs.push_back(x[0]);
                    write(r, out / (std::string(stem) + ".svg"), io::render_svg(report_chart(rep, stem, xs)));
                }
            }
            return r;
        }
        case Pipeline::calibration_table:
            merge(evaluate_stage(recipe, out));
            return r;
    }
    return r;
}

}  // namespace qipf::cli
