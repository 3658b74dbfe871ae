#include "qipf/serialize.hpp"

#include "json.hpp"
#include "qipf/error.hpp"

namespace qipf::io {

using nlohmann::json;

CsvTable modes_to_csv(const ModeMatrix& modes) {
    CsvTable t;
    const std::size_t d = modes.eval_points().dim();
    if (d == 1) {
        t.header.push_back("x");
    } else {
        for (std::size_t j = 0; j < d; ++j) t.header.push_back("x" + std::to_string(j + 1));
    }
    for (std::size_t k = 0; k < modes.num_modes(); ++k) t.header.push_back("V" + std::to_string(k + 1));
    t.header.push_back("ipf");
    for (std::size_t p = 0; p < modes.num_points(); ++p) {
        const auto x = modes.eval_points().point(p);
        std::vector<double> row(x.begin(), x.end());
        for (std::size_t k = 0; k < modes.num_modes(); ++k) row.push_back(modes.at(k, p));
        row.push_back(modes.psi()[p] * modes.psi()[p]);
        t.rows.push_back(std::move(row));
    }
    return t;
}

std::string modes_to_json(const ModeMatrix& modes) {
    json doc;
    doc["num_modes"] = modes.num_modes();
    doc["num_points"] = modes.num_points();
    doc["dim"] = modes.eval_points().dim();
    doc["eigenvalues"] = modes.eigenvalues();
    json near = json::array();
    json far = json::array();
    for (std::size_t p = 0; p < modes.num_points(); ++p) {
        if (modes.near_node()[p]) near.push_back(p);
        if (modes.far_field()[p]) far.push_back(p);
    }
    doc["near_node_points"] = std::move(near);
    doc["far_field_points"] = std::move(far);
    doc["psi"] = modes.psi();
    json rows = json::array();
    for (std::size_t k = 0; k < modes.num_modes(); ++k) {
        const auto r = modes.mode_row(k);
        rows.push_back(std::vector<double>(r.begin(), r.end()));
    }
    doc["values"] = std::move(rows);
    return doc.dump(1) + "\n";
}

std::string report_to_jsonl(const uq::UncertaintyReport& report) {
    std::string out;
    for (const auto& e : report.entries) {
        json j;
        j["index"] = e.index;
        j["method"] = report.meta.method;
        j["prediction"] = e.prediction;
        j["uncertainty"] = e.uncertainty;
        if (report.meta.method == "cross-qipf") {
            j["eval_point"] = e.eval_point;
            j["modes"] = e.modes;
            j["near_node"] = e.near_node;
        } else {
            j["predictive_std"] = e.predictive_std;
        }
        j["forward_passes"] = e.forward_passes;
        out += j.dump();
        out += '\n';
    }
    return out;
}

uq::UncertaintyReport report_from_jsonl(std::string_view text, const std::string& source) {
    uq::UncertaintyReport report;
    std::size_t pos = 0;
    std::size_t line_no = 0;
    while (pos < text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        const std::string_view line = text.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (line.empty()) continue;
        const std::string where = source + ":" + std::to_string(line_no);
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            throw ParseError(where, e.what());
        }
        try {
            uq::UncertaintyEntry e;
            e.index = j.at("index").get<std::size_t>();
            e.prediction = j.at("prediction").get<std::vector<double>>();
            e.uncertainty = j.at("uncertainty").get<double>();
            if (j.contains("eval_point")) e.eval_point = j["eval_point"].get<double>();
            if (j.contains("modes")) e.modes = j["modes"].get<std::vector<double>>();
            if (j.contains("near_node")) e.near_node = j["near_node"].get<bool>();
            if (j.contains("predictive_std")) e.predictive_std = j["predictive_std"].get<double>();
            if (j.contains("forward_passes")) e.forward_passes = j["forward_passes"].get<std::uint64_t>();
            if (report.meta.method.empty()) report.meta.method = j.value("method", "");
            report.entries.push_back(std::move(e));
        } catch (const json::exception& ex) {
            throw ParseError(where, ex.what());
        }
    }
    if (report.entries.empty()) throw ParseError(source, "report has no records");
    return report;
}

std::string report_metadata_json(const uq::ReportMetadata& meta, bool include_timings) {
    json j;
    j["method"] = meta.method;
    j["seed"] = meta.seed;
    j["config"] = meta.config;
    if (include_timings) j["elapsed_seconds"] = meta.elapsed_seconds;
    return j.dump(1) + "\n";
}

CsvTable roc_to_csv(const eval::RocCurve& curve) {
    CsvTable t;
    t.header = {"fpr", "tpr"};
    for (const auto& p : curve.points) t.rows.push_back({p.fpr, p.tpr});
    return t;
}

}  // namespace qipf::io
