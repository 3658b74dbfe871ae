#include "qipf_cli/commands.hpp"

#include <array>
#include <charconv>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "qipf/csv.hpp"
#include "qipf/eval.hpp"
#include "qipf/modes.hpp"
#include "qipf/serialize.hpp"
#include "qipf/svg.hpp"
#include "qipf_cli/pipelines.hpp"
#include "qipf_cli/recipe.hpp"

namespace qipf::cli {

namespace fs = std::filesystem;

namespace {

struct GenerateArgs {
    std::string kind;
    std::vector<double> freqs;
    double fs = 0.0;
    std::size_t n = 0;
    double lo = 0.0;
    double hi = 0.0;
    std::uint64_t seed = 0;
    double dt = 0.01;
    std::string component = "x";
    std::size_t per_class = 0;
    double sd = 0.0;
    std::vector<double> means{-1.0, 0.0, 1.0, 0.0, 0.0, 1.5};
    double noise = 0.03;
    std::string out;
};

struct DecomposeArgs {
    std::string data;
    double sigma = 0.0;
    int modes = 6;
    std::string grid;
    bool timeseries = false;
    std::size_t warmup = 2;
    std::string column;
    std::string out;
    std::string plot;
};

struct RecipeArgs {
    std::string recipe;
    std::string out;
    std::string model;
};

struct PlotArgs {
    std::string input;
    std::string out;
    std::string title;
};

[[noreturn]] void usage(const std::string& what) { throw UsageError(what); }

fs::path resolve_out(const std::string& flag, const std::string& fallback_name) {
    return flag.empty() ? default_output_dir() / fallback_name : fs::path(flag);
}

int cmd_generate(const GenerateArgs& a, CLI::App& sub, std::ostream& out) {
    const auto given = [&](const char* name) { return sub.count(name) > 0; };
    const auto need = [&](std::initializer_list<const char*> names) {
        std::vector<std::string> missing;
        for (const char* n : names) {
            if (!given(n)) missing.emplace_back(n);
        }
        if (!missing.empty()) {
            std::string list;
            for (const auto& m : missing) list += (list.empty() ? "" : ", ") + m;
            usage(fmt::format("generate {} requires {}", a.kind, list));
        }
    };

    io::CsvTable t;
    if (a.kind == "sine") {
        need({"--freqs", "--fs", "--n"});
        const auto x = eval::gen_sine(a.freqs, a.fs, a.n);
        t.header = {"t", "x"};
        for (std::size_t i = 0; i < x.size(); ++i) t.rows.push_back({static_cast<double>(i) / a.fs, x[i]});
    } else if (a.kind == "lorenz") {
        need({"--n"});
        eval::LorenzComponent c = eval::LorenzComponent::x;
        if (a.component == "y") {
            c = eval::LorenzComponent::y;
        } else if (a.component == "z") {
            c = eval::LorenzComponent::z;
        } else if (a.component != "x") {
            usage("--component must be x, y or z");
        }
        const auto x = eval::gen_lorenz(a.n, a.dt, c);
        t.header = {"t", a.component};
        for (std::size_t i = 0; i < x.size(); ++i) t.rows.push_back({static_cast<double>(i) * a.dt, x[i]});
    } else if (a.kind == "xsinx") {
        need({"--n", "--lo", "--hi", "--seed"});
        const auto s = eval::gen_xsinx(a.n, a.lo, a.hi, a.seed);
        t.header = {"x", "y"};
        for (std::size_t i = 0; i < s.size(); ++i) t.rows.push_back({s.inputs[i][0], s.targets[i][0]});
    } else if (a.kind == "twosine") {
        need({"--seed"});
        eval::TwoSineParams p;
        p.noise_sd = a.noise;
        p.seed = a.seed;
        const auto s = eval::gen_twosine(p);
        t.header = {"x", "y"};
        for (std::size_t i = 0; i < s.size(); ++i) t.rows.push_back({s.inputs[i][0], s.targets[i][0]});
    } else if (a.kind == "blobs") {
        need({"--per-class", "--sd", "--seed"});
        if (a.means.size() < 4 || a.means.size() % 2 != 0) usage("--means takes x,y pairs for at least two classes");
        std::vector<std::array<double, 2>> means;
        for (std::size_t i = 0; i < a.means.size(); i += 2) means.push_back({a.means[i], a.means[i + 1]});
        const auto s = eval::gen_blobs(a.per_class, means, a.sd, a.seed);
        t.header = {"x1", "x2"};
        for (std::size_t c = 0; c < means.size(); ++c) t.header.push_back("c" + std::to_string(c));
        for (std::size_t i = 0; i < s.size(); ++i) {
            std::vector<double> row = s.inputs[i];
            row.insert(row.end(), s.targets[i].begin(), s.targets[i].end());
            t.rows.push_back(std::move(row));
        }
    } else {
        usage(fmt::format("unknown kind '{}' (expected sine, lorenz, xsinx, twosine or blobs)", a.kind));
    }
    const fs::path path = resolve_out(a.out, a.kind + ".csv");
    io::write_csv(path, t);
    out << fmt::format("{} rows written to {}\n", t.rows.size(), path.string());
    return kExitOk;
}

std::array<double, 3> parse_grid(const std::string& spec) {
    std::array<double, 3> g{};
    std::size_t start = 0;
    for (std::size_t i = 0; i < 3; ++i) {
        const std::size_t colon = spec.find(':', start);
        if ((i < 2) == (colon == std::string::npos)) usage("--grid expects lo:hi:step");
        const std::string part = spec.substr(start, colon == std::string::npos ? std::string::npos : colon - start);
        const auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), g[i]);
        if (part.empty() || ec != std::errc() || ptr != part.data() + part.size()) {
            usage(fmt::format("--grid: '{}' is not a number", part));
        }
        start = colon + 1;
    }
    if (!(g[2] > 0.0)) usage("--grid step must be positive");
    if (!(g[1] >= g[0])) usage("--grid upper bound must not be below the lower bound");
    return g;
}

int cmd_decompose(const DecomposeArgs& a, std::ostream& out) {
    const bool has_grid = !a.grid.empty();
    if (has_grid == a.timeseries) usage("decompose needs exactly one of --grid or --timeseries");
    const io::CsvTable data = io::read_csv(a.data);
    if (data.rows.empty()) throw ParseError(a.data, "no data rows");
    const std::size_t col = a.column.empty() ? data.header.size() - 1 : data.column_index(a.column);
    const std::vector<double> values = data.column(col);
    const ModeConfig cfg{a.modes, Bandwidth(a.sigma), kDefaultPsiFloor};
    cfg.validate();

    ModeMatrix modes = [&] {
        if (has_grid) {
            const auto g = parse_grid(a.grid);
            return qipf_modes(SampleSet::scalars(values), cfg, SampleSet::scalars(grid_points(g[0], g[1], g[2])));
        }
        return timeseries_qipf(values, cfg, a.warmup);
    }();

    const fs::path base = resolve_out(a.out, "modes");
    const io::CsvTable table = io::modes_to_csv(modes);
    io::write_csv(fs::path(base).concat(".csv"), table);
    io::write_text(fs::path(base).concat(".json"), io::modes_to_json(modes));
    out << fmt::format("{} points x {} modes written to {}.csv and {}.json\n", modes.num_points(), modes.num_modes(),
                       base.string(), base.string());
    if (!a.plot.empty()) {
        io::write_text(a.plot, io::render_svg(modes_chart(
                                   table, fmt::format("QIPF modes, sigma {}", io::format_number(a.sigma)))));
        out << fmt::format("plot written to {}\n", a.plot);
    }
    return kExitOk;
}

fs::path recipe_out(const ExperimentRecipe& r, const RecipeArgs& a) {
    return a.out.empty() ? output_dir(r) : fs::path(a.out);
}

int report(const RunResult& r, std::ostream& out) {
    out << r.summary;
    for (const auto& f : r.files) out << "wrote " << f.string() << '\n';
    return kExitOk;
}

int cmd_plot(const PlotArgs& a, std::ostream& out) {
    const fs::path in(a.input);
    const std::string text = io::read_text(in);
    if (text.find_first_not_of(" \t\r\n") == std::string::npos) throw ParseError(a.input, "file is empty");
    io::Chart chart;
    const std::string title = a.title.empty() ? in.stem().string() : a.title;
    if (in.extension() == ".jsonl") {
        chart = report_chart(io::report_from_jsonl(text, a.input), title);
    } else {
        const io::CsvTable t = io::parse_csv(text, a.input);
        if (t.rows.empty()) throw ParseError(a.input, "no data rows");
        const bool mode_matrix = t.header.size() >= 3 && t.header[1] == "V1";
        chart = mode_matrix ? modes_chart(t, title) : table_chart(t, title);
    }
    fs::path path = a.out.empty() ? fs::path(in).replace_extension(".svg") : fs::path(a.out);
    io::write_text(path, io::render_svg(chart));
    out << fmt::format("plot written to {}\n", path.string());
    return kExitOk;
}

void emit_error(std::ostream& err, bool json, const char* kind, const std::string& message, const std::string& where,
                int code) {
    if (json) {
        nlohmann::json j;
        j["error"] = {{"kind", kind}, {"message", message}, {"exit_code", code}};
        if (!where.empty()) j["error"]["where"] = where;
        err << j.dump() << '\n';
    } else {
        err << "qipf: " << message << '\n';
    }
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    bool json = false;
    for (int i = 1; i < argc; ++i) {
        if (std::string_view(argv[i]) == "--json") json = true;
    }

    CLI::App app{"Quantum information potential field modes and uncertainty pipelines", "qipf"};
    app.add_flag("--json", json, "Print errors as JSON objects on stderr");
    app.require_subcommand(1);

    GenerateArgs gen;
    auto* g = app.add_subcommand("generate", "Write a synthetic dataset as CSV");
    g->add_option("kind", gen.kind, "sine, lorenz, xsinx, twosine or blobs")->required();
    g->add_option("--freqs", gen.freqs, "Sine frequencies in Hz")->delimiter(',');
    g->add_option("--fs", gen.fs, "Sampling rate in Hz");
    g->add_option("--n", gen.n, "Number of samples");
    g->add_option("--lo", gen.lo, "Lower input bound");
    g->add_option("--hi", gen.hi, "Upper input bound");
    g->add_option("--seed", gen.seed, "Random seed");
    g->add_option("--dt", gen.dt, "Lorenz integration step")->capture_default_str();
    g->add_option("--component", gen.component, "Lorenz component (x, y or z)")->capture_default_str();
    g->add_option("--per-class", gen.per_class, "Blob points per class");
    g->add_option("--sd", gen.sd, "Blob standard deviation");
    g->add_option("--means", gen.means, "Blob centers as x,y pairs")->delimiter(',');
    g->add_option("--noise", gen.noise, "Two-tone noise standard deviation")->capture_default_str();
    g->add_option("--out", gen.out, "Output CSV (default: <output dir>/<kind>.csv)");

    DecomposeArgs dec;
    auto* d = app.add_subcommand("decompose", "QIPF mode decomposition of one CSV column");
    d->add_option("data", dec.data, "Input CSV")->required()->check(CLI::ExistingFile);
    d->add_option("--sigma", dec.sigma, "Kernel width")->required();
    d->add_option("--modes", dec.modes, "Number of modes")->capture_default_str();
    d->add_option("--grid", dec.grid, "Evaluate on the grid lo:hi:step");
    d->add_flag("--timeseries", dec.timeseries, "Causal sample-by-sample decomposition");
    d->add_option("--warmup", dec.warmup, "Samples before the first time-series evaluation")->capture_default_str();
    d->add_option("--column", dec.column, "Column to decompose (default: last)");
    d->add_option("--out", dec.out, "Output path without extension (default: <output dir>/modes)");
    d->add_option("--plot", dec.plot, "Also write an SVG chart to this path");

    RecipeArgs rec;
    const auto recipe_cmd = [&](const char* name, const char* help) {
        auto* s = app.add_subcommand(name, help);
        s->add_option("recipe", rec.recipe, "Recipe file")->required()->check(CLI::ExistingFile);
        s->add_option("--out", rec.out, "Output directory (default: recipe output_dir)");
        return s;
    };
    auto* tr = recipe_cmd("train", "Train the recipe's network; writes model.json and loss.csv");
    auto* u = recipe_cmd("uq", "Run the recipe's uncertainty methods over its test set");
    u->add_option("--model", rec.model, "Model file (default: <output dir>/model.json)");
    auto* ev = recipe_cmd("evaluate", "Compute metrics and the summary table");
    auto* run = recipe_cmd("run", "Run the recipe's whole pipeline");

    PlotArgs plt;
    auto* p = app.add_subcommand("plot", "Render a mode matrix CSV, a two-column CSV or a report as SVG");
    p->add_option("input", plt.input, "CSV or JSON-lines report")->required()->check(CLI::ExistingFile);
    p->add_option("--out", plt.out, "Output SVG (default: input with .svg extension)");
    p->add_option("--title", plt.title, "Chart title");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            out << (app.get_subcommands().empty() ? app.help() : app.get_subcommands().front()->help());
            return kExitOk;
        }
        emit_error(err, json, "usage", e.what(), "", kExitUsage);
        if (!json) err << "Run with --help for more information.\n";
        return kExitUsage;
    }

    try {
        if (g->parsed()) return cmd_generate(gen, *g, out);
        if (d->parsed()) return cmd_decompose(dec, out);
        if (p->parsed()) return cmd_plot(plt, out);
        const ExperimentRecipe recipe = ExperimentRecipe::load(rec.recipe);
        const fs::path dir = recipe_out(recipe, rec);
        if (tr->parsed()) return report(train_stage(recipe, dir), out);
        if (u->parsed()) return report(uq_stage(recipe, dir, rec.model.empty() ? dir / "model.json" : fs::path(rec.model)), out);
        if (ev->parsed()) return report(evaluate_stage(recipe, dir), out);
        if (run->parsed()) return report(run_pipeline(recipe, dir), out);
    } catch (const UsageError& e) {
        emit_error(err, json, "usage", e.what(), "", kExitUsage);
        return kExitUsage;
    } catch (const ParseError& e) {
        emit_error(err, json, "parse", e.what(), e.where(), kExitRuntime);
        return kExitRuntime;
    } catch (const std::exception& e) {
        emit_error(err, json, "runtime", e.what(), "", kExitRuntime);
        return kExitRuntime;
    }
    return kExitUsage;
}

}  // namespace qipf::cli
