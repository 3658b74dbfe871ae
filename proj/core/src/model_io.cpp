#include <fstream>
#include <sstream>

#include "json.hpp"
#include "qipf/error.hpp"
#include "qipf/nn.hpp"

namespace qipf::nn {

using nlohmann::json;

std::string model_to_json(const MlpModel& model) {
    json doc;
    doc["format_version"] = kModelFormatVersion;
    doc["output_mode"] = std::string(to_string(model.output_mode()));
    json layers = json::array();
    for (const Layer& l : model.layers()) {
        layers.push_back({{"in", l.in},
                          {"out", l.out},
                          {"activation", std::string(to_string(l.activation))},
                          {"weights", l.weights},
                          {"bias", l.bias}});
    }
    doc["layers"] = std::move(layers);
    return doc.dump(1) + "\n";
}

namespace {

const json& field(const json& obj, const char* key, const std::string& path) {
    if (!obj.is_object()) throw ParseError(path, "expected an object");
    auto it = obj.find(key);
    if (it == obj.end()) throw ParseError(path + "." + key, "missing field");
    return *it;
}

std::vector<double> number_array(const json& arr, const std::string& path) {
    if (!arr.is_array()) throw ParseError(path, "expected an array of numbers");
    std::vector<double> out;
    out.reserve(arr.size());
    for (std::size_t i = 0; i < arr.size(); ++i) {
        if (!arr[i].is_number()) throw ParseError(path + "[" + std::to_string(i) + "]", "expected a number");
        out.push_back(arr[i].get<double>());
    }
    return out;
}

std::size_t count(const json& v, const std::string& path) {
    if (!v.is_number_unsigned()) throw ParseError(path, "expected a non-negative integer");
    return v.get<std::size_t>();
}

}  // namespace

MlpModel model_from_json(std::string_view text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError("model", e.what());
    }
    const json& version = field(doc, "format_version", "model");
    if (!version.is_number_integer() || version.get<int>() != kModelFormatVersion) {
        throw ParseError("model.format_version", "unsupported format version");
    }
    const json& mode = field(doc, "output_mode", "model");
    if (!mode.is_string()) throw ParseError("model.output_mode", "expected a string");
    const json& layers_doc = field(doc, "layers", "model");
    if (!layers_doc.is_array() || layers_doc.empty()) throw ParseError("model.layers", "expected a non-empty array");

    std::vector<Layer> layers;
    for (std::size_t i = 0; i < layers_doc.size(); ++i) {
        const std::string path = "model.layers[" + std::to_string(i) + "]";
        const json& l = layers_doc[i];
        Layer layer;
        layer.in = count(field(l, "in", path), path + ".in");
        layer.out = count(field(l, "out", path), path + ".out");
        const json& act = field(l, "activation", path);
        if (!act.is_string()) throw ParseError(path + ".activation", "expected a string");
        try {
            layer.activation = parse_activation(act.get<std::string>());
        } catch (const InvalidArgument& e) {
            throw ParseError(path + ".activation", e.what());
        }
        layer.weights = number_array(field(l, "weights", path), path + ".weights");
        layer.bias = number_array(field(l, "bias", path), path + ".bias");
        layers.push_back(std::move(layer));
    }
    try {
        return MlpModel(std::move(layers), parse_output_mode(mode.get<std::string>()));
    } catch (const ParseError&) {
        throw;
    } catch (const Error& e) {
        throw ParseError("model", e.what());
    }
}

void save_model(const MlpModel& model, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open '" + path.string() + "' for writing");
    out << model_to_json(model);
    if (!out) throw Error("failed writing '" + path.string() + "'");
}

MlpModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return model_from_json(ss.str());
}

}  // namespace qipf::nn
