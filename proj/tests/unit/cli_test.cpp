#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <regex>
#include <sstream>

#include "json.hpp"
#include "oracles.hpp"
#include "qipf/csv.hpp"
#include "qipf/error.hpp"
#include "qipf/serialize.hpp"
#include "qipf_cli/commands.hpp"
#include "qipf_cli/pipelines.hpp"
#include "qipf_cli/recipe.hpp"

namespace fs = std::filesystem;
using namespace qipf;
using namespace qipf::cli;

namespace {

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result invoke(std::vector<std::string> args) {
    args.insert(args.begin(), "qipf");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out;
    std::ostringstream err;
    const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

int run_binary(const std::string& args) {
    const std::string cmd = std::string(QIPF_BINARY) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path fixture(const std::string& name) { return fs::path(QIPF_FIXTURE_DIR) / name; }
fs::path recipe_file(const std::string& name) { return fs::path(QIPF_RECIPE_DIR) / name; }

std::size_t count(const std::string& text, const std::string& pattern) {
    const std::regex re(pattern);
    return static_cast<std::size_t>(std::distance(std::sregex_iterator(text.begin(), text.end(), re), std::sregex_iterator()));
}

}  // namespace

TEST_CASE("generate sine") {
    auto dir = oracle::scratch_dir("cli-sine");
    auto r = invoke({"generate", "sine", "--freqs", "50", "--fs", "6000", "--n", "3000", "--out", (dir / "s.csv").string()});
    CHECK(r.code == kExitOk);
    CHECK(r.out.find("3000 rows") != std::string::npos);
    auto t = io::read_csv(dir / "s.csv");
    CHECK(t.rows.size() == 3000);
    CHECK(t.header == std::vector<std::string>{"t", "x"});
}

TEST_CASE("generate xsinx matches the golden file") {
    auto dir = oracle::scratch_dir("cli-xsinx");
    auto r = invoke({"generate", "xsinx", "--n", "60", "--lo", "-5", "--hi", "5", "--seed", "7", "--out", (dir / "x.csv").string()});
    REQUIRE(r.code == kExitOk);
    CHECK(io::read_text(dir / "x.csv") == io::read_text(fixture("xsinx_n60_seed7.csv")));
}

TEST_CASE("generate covers every kind") {
    auto dir = oracle::scratch_dir("cli-kinds");
    CHECK(invoke({"generate", "lorenz", "--n", "100", "--out", (dir / "l.csv").string()}).code == kExitOk);
    CHECK(invoke({"generate", "twosine", "--seed", "1", "--out", (dir / "t.csv").string()}).code == kExitOk);
    CHECK(io::read_csv(dir / "t.csv").rows.size() == 50);
    CHECK(invoke({"generate", "blobs", "--per-class", "10", "--sd", "0.5", "--means", "0,0,2,2", "--seed", "1", "--out",
               (dir / "b.csv").string()})
              .code == kExitOk);
    CHECK(io::read_csv(dir / "b.csv").header == std::vector<std::string>{"x1", "x2", "c0", "c1"});
}

TEST_CASE("generate usage errors") {
    CHECK(invoke({"generate", "sine", "--fs", "6000"}).code == kExitUsage);
    CHECK(invoke({"generate", "xsinx", "--n", "60"}).code == kExitUsage);
    CHECK(invoke({"generate", "noise"}).code == kExitUsage);
    CHECK(invoke({"generate"}).code == kExitUsage);
    CHECK(invoke({"frobnicate"}).code == kExitUsage);
}

TEST_CASE("decompose on the sine grid") {
    auto dir = oracle::scratch_dir("cli-decompose");
    REQUIRE(invoke({"generate", "sine", "--freqs", "50", "--fs", "6000", "--n", "3000", "--out", (dir / "s.csv").string()}).code == 0);
    auto r = invoke({"decompose", (dir / "s.csv").string(), "--sigma", "1.2", "--modes", "6", "--grid", "-6:6:0.1", "--out",
                  (dir / "m").string(), "--plot", (dir / "m.svg").string()});
    REQUIRE(r.code == kExitOk);
    auto t = io::read_csv(dir / "m.csv");
    CHECK(t.rows.size() == 121);
    CHECK(t.header.size() == 1 + 6 + 1);
    CHECK(fs::exists(dir / "m.json"));
    const auto svg = io::read_text(dir / "m.svg");
    CHECK(count(svg, "<polyline ") == 7);
    CHECK(count(svg, "<polyline [^>]*stroke-dasharray") == 1);

    auto again = invoke({"decompose", (dir / "s.csv").string(), "--sigma", "1.2", "--modes", "6", "--grid", "-6:6:0.1",
                      "--out", (dir / "m2").string(), "--plot", (dir / "m2.svg").string()});
    REQUIRE(again.code == kExitOk);
    CHECK(io::read_text(dir / "m.csv") == io::read_text(dir / "m2.csv"));
    CHECK(io::read_text(dir / "m.json") == io::read_text(dir / "m2.json"));
    CHECK(io::read_text(dir / "m.svg") == io::read_text(dir / "m2.svg"));
}

TEST_CASE("decompose time series") {
    auto dir = oracle::scratch_dir("cli-ts");
    REQUIRE(invoke({"generate", "lorenz", "--n", "200", "--out", (dir / "l.csv").string()}).code == 0);
    auto r = invoke({"decompose", (dir / "l.csv").string(), "--sigma", "1.2", "--modes", "10", "--timeseries", "--out",
                  (dir / "ts").string()});
    CHECK(r.code == kExitOk);
    CHECK(io::read_csv(dir / "ts.csv").rows.size() == 198);
}

TEST_CASE("decompose usage errors") {
    const auto data = fixture("small_signal.csv").string();
    CHECK(invoke({"decompose", data, "--sigma", "1"}).code == kExitUsage);
    CHECK(invoke({"decompose", data, "--sigma", "1", "--grid", "-1:1:0.1", "--timeseries"}).code == kExitUsage);
    CHECK(invoke({"decompose", data, "--sigma", "1", "--grid", "-1:1:0"}).code == kExitUsage);
    CHECK(invoke({"decompose", data, "--sigma", "1", "--grid", "-1:1:-0.5"}).code == kExitUsage);
    CHECK(invoke({"decompose", data, "--sigma", "1", "--grid", "nonsense"}).code == kExitUsage);
    CHECK(invoke({"decompose", data, "--grid", "-1:1:0.1"}).code == kExitUsage);
    CHECK(invoke({"decompose", data, "--sigma", "-1", "--grid", "-1:1:0.1"}).code != kExitOk);
}

TEST_CASE("plot renders the golden mode chart") {
    auto dir = oracle::scratch_dir("cli-plot");
    auto r = invoke({"decompose", fixture("small_signal.csv").string(), "--sigma", "0.8", "--modes", "3", "--grid",
                  "-3:3:0.5", "--out", (dir / "m").string()});
    REQUIRE(r.code == kExitOk);
    REQUIRE(invoke({"plot", (dir / "m.csv").string(), "--out", (dir / "m.svg").string(), "--title", "modes"}).code == 0);
    const auto svg = io::read_text(dir / "m.svg");
    CHECK(count(svg, "<polyline ") == 4);
    CHECK(count(svg, "<polyline [^>]*stroke-dasharray") == 1);
    CHECK(svg == io::read_text(fixture("modes_plot.svg")));
}

TEST_CASE("plot other inputs") {
    auto dir = oracle::scratch_dir("cli-plot2");
    io::write_text(dir / "two.csv", "x,y\n0,1\n1,3\n2,2\n");
    REQUIRE(invoke({"plot", (dir / "two.csv").string()}).code == kExitOk);
    CHECK(count(io::read_text(dir / "two.svg"), "<polyline ") == 1);

    io::write_text(dir / "empty.csv", "");
    CHECK(invoke({"plot", (dir / "empty.csv").string()}).code == kExitRuntime);
    io::write_text(dir / "bad.csv", "x,y\n1,oops\n");
    CHECK(invoke({"plot", (dir / "bad.csv").string()}).code == kExitRuntime);
    CHECK(invoke({"plot", (dir / "missing.csv").string()}).code == kExitUsage);
}

TEST_CASE("JSON error objects") {
    auto dir = oracle::scratch_dir("cli-json");
    io::write_text(dir / "empty.csv", "");
    auto r = invoke({"--json", "plot", (dir / "empty.csv").string()});
    CHECK(r.code == kExitRuntime);
    auto doc = nlohmann::json::parse(r.err);
    CHECK(doc["error"]["exit_code"] == 1);
    CHECK(doc["error"]["kind"] == "parse");
    CHECK(doc["error"].contains("message"));

    auto u = invoke({"--json", "generate", "sine"});
    CHECK(u.code == kExitUsage);
    CHECK(nlohmann::json::parse(u.err)["error"]["exit_code"] == 2);

    io::write_text(dir / "bad.cfg", "[experiment]\npipeline = regression-uq\n[train]\nepochz = 3\n");
    auto p = invoke({"--json", "train", (dir / "bad.cfg").string()});
    CHECK(p.code == kExitRuntime);
    CHECK(nlohmann::json::parse(p.err)["error"]["where"] == "train.epochz");
}

TEST_CASE("binary exit codes") {
    CHECK(run_binary("--help") == 0);
    CHECK(run_binary("generate sine --freqs 50 --fs 6000") == 2);
    CHECK(run_binary("frobnicate") == 2);
    auto dir = oracle::scratch_dir("cli-bin");
    io::write_text(dir / "empty.csv", "");
    CHECK(run_binary("plot " + (dir / "empty.csv").string()) == 1);
    CHECK(run_binary("generate xsinx --n 5 --lo 0 --hi 1 --seed 1 --out " + (dir / "x.csv").string()) == 0);
}

TEST_CASE("recipes round-trip through the config format") {
    for (const char* name : {"grid_sine.cfg", "dominance.cfg", "xsinx_regression.cfg", "twosine_regression.cfg",
                             "blobs_classification.cfg", "calibration.cfg"}) {
        CAPTURE(name);
        auto r = ExperimentRecipe::load(recipe_file(name));
        CHECK_NOTHROW(r.validate());
        auto back = ExperimentRecipe::from_config(io::Config::parse(r.to_config().serialize()));
        CHECK(back == r);
    }
    ExperimentRecipe custom;
    custom.pipeline = Pipeline::classification_uq;
    custom.surrogate.reference_width = 0.75;
    custom.surrogate.bandwidth_multipliers = {1.5, 2.5};
    custom.train.learning_rate = 0.1 + 0.2;
    custom.run_mc_dropout = false;
    CHECK(ExperimentRecipe::from_config(custom.to_config()) == custom);
}

TEST_CASE("recipe schema errors name the field") {
    auto where = [](const std::string& text) {
        try {
            ExperimentRecipe::from_config(io::Config::parse(text)).validate();
        } catch (const ParseError& e) {
            return e.where();
        }
        return std::string("no error");
    };
    CHECK(where("[data]\nkind = xsinx\n") == "experiment.pipeline");
    CHECK(where("[experiment]\npipeline = nonsense\n") == "experiment.pipeline");
    CHECK(where("[experiment]\npipeline = grid-study\n[bogus]\nx = 1\n") == "bogus");
    CHECK(where("[experiment]\npipeline = grid-study\n[train]\nepochs = zero\n") == "train.epochs");
    CHECK(where("[experiment]\npipeline = grid-study\n[train]\nepochs = 0\n") == "train.epochs");
    CHECK(where("[experiment]\npipeline = regression-uq\n[surrogate]\nmodes = 1\n") == "surrogate.modes");
}

TEST_CASE("recipe with no test file") {
    auto dir = oracle::scratch_dir("cli-notest");
    io::write_text(dir / "train.csv", "x,y\n0,0\n1,1\n2,4\n3,9\n");
    io::write_text(dir / "r.cfg", "[experiment]\npipeline = regression-uq\n[data]\nkind = file\ntrain_file = train.csv\n");
    auto r = invoke({"--json", "uq", (dir / "r.cfg").string(), "--out", (dir / "out").string()});
    CHECK(r.code == kExitRuntime);
    CHECK(nlohmann::json::parse(r.err)["error"]["where"] == "data.test_file");
}

TEST_CASE("train, uq and evaluate stages for dataset I") {
    auto dir = oracle::scratch_dir("cli-stages");
    const auto recipe = recipe_file("xsinx_regression.cfg").string();
    REQUIRE(invoke({"train", recipe, "--out", dir.string()}).code == kExitOk);
    CHECK(fs::exists(dir / "model.json"));
    CHECK(io::read_csv(dir / "loss.csv").rows.size() == 100);
    REQUIRE(invoke({"uq", recipe, "--out", dir.string()}).code == kExitOk);
    auto report = io::report_from_jsonl(io::read_text(dir / "qipf.jsonl"));
    CHECK(report.entries.size() == 120);
    REQUIRE(invoke({"evaluate", recipe, "--out", dir.string()}).code == kExitOk);
    const auto metrics = io::read_text(dir / "metrics.csv");
    CHECK(std::count(metrics.begin(), metrics.end(), '\n') == 3);
    CHECK(metrics.find("\nmc_dropout,") != std::string::npos);
    CHECK(metrics.find("\nqipf,") != std::string::npos);
    CHECK(io::read_text(dir / "table.csv").rfind("dataset,N,Q,mc_dropout,qipf\n", 0) == 0);
}

TEST_CASE("run is byte-identical across invocations") {
    for (const char* name : {"blobs_classification.cfg", "twosine_regression.cfg"}) {
        CAPTURE(name);
        auto a = oracle::scratch_dir("cli-run-a");
        auto b = oracle::scratch_dir("cli-run-b");
        REQUIRE(invoke({"run", recipe_file(name).string(), "--out", a.string()}).code == kExitOk);
        REQUIRE(invoke({"run", recipe_file(name).string(), "--out", b.string()}).code == kExitOk);
        std::size_t files = 0;
        for (const auto& e : fs::directory_iterator(a)) {
            CAPTURE(e.path().filename().string());
            CHECK(io::read_text(e.path()) == io::read_text(b / e.path().filename()));
            ++files;
        }
        CHECK(files > 5);
    }
}

TEST_CASE("calibration table cells use the mean +- std format") {
    std::vector<double> vals{0.1, 0.3};
    CHECK(format_cell(vals) == "0.200 +- 0.100");
    CHECK(format_cell(std::vector<double>{}) == "n/a");
    auto dir = oracle::scratch_dir("cli-calib");
    REQUIRE(invoke({"run", recipe_file("calibration.cfg").string(), "--out", dir.string()}).code == kExitOk);
    const auto table = io::read_text(dir / "table.csv");
    CHECK(std::regex_search(table, std::regex(R"(\n[^,]+,\d+,\d+,\d\.\d{3} \+- \d\.\d{3},\d\.\d{3} \+- \d\.\d{3}\n)")));
}

TEST_CASE("default output directory honours the environment") {
    ::setenv("QIPF_OUTPUT_DIR", "/tmp/qipf-env-out", 1);
    CHECK(default_output_dir() == fs::path("/tmp/qipf-env-out"));
    ::unsetenv("QIPF_OUTPUT_DIR");
    CHECK(default_output_dir() == fs::path("qipf-out"));
}
