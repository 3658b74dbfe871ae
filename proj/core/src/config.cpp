#include "qipf/config.hpp"

#include <charconv>
#include <cmath>

#include "qipf/csv.hpp"
#include "qipf/error.hpp"

namespace qipf::io {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::string path_of(std::string_view section, std::string_view key) {
    return std::string(section) + "." + std::string(key);
}

double to_double(std::string_view s, const std::string& where) {
    s = trim(s);
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) {
        throw ParseError(where, "expected a number, got '" + std::string(s) + "'");
    }
    return v;
}

long long to_int(std::string_view s, const std::string& where) {
    s = trim(s);
    long long v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
        throw ParseError(where, "expected an integer, got '" + std::string(s) + "'");
    }
    return v;
}

std::vector<std::string_view> split_list(std::string_view s) {
    std::vector<std::string_view> out;
    std::size_t pos = 0;
    while (pos <= s.size()) {
        std::size_t end = s.find(',', pos);
        if (end == std::string_view::npos) end = s.size();
        const auto item = trim(s.substr(pos, end - pos));
        if (!item.empty()) out.push_back(item);
        pos = end + 1;
    }
    return out;
}

}  // namespace

Config Config::parse(std::string_view text, const std::string& source) {
    Config cfg;
    std::size_t pos = 0;
    std::size_t line_no = 0;
    while (pos < text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = trim(text.substr(pos, end - pos));
        pos = end + 1;
        ++line_no;
        const std::string where = source + ":" + std::to_string(line_no);
        if (line.empty() || line.front() == '#' || line.front() == ';') continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw ParseError(where, "unterminated section header");
            const auto name = trim(line.substr(1, line.size() - 2));
            if (name.empty()) throw ParseError(where, "empty section name");
            if (cfg.has_section(name)) throw ParseError(where, "duplicate section [" + std::string(name) + "]");
            cfg.sections_.push_back({std::string(name), {}});
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) throw ParseError(where, "expected 'key = value'");
        if (cfg.sections_.empty()) throw ParseError(where, "key outside of any section");
        const auto key = trim(line.substr(0, eq));
        const auto value = trim(line.substr(eq + 1));
        if (key.empty()) throw ParseError(where, "empty key");
        auto& sec = cfg.sections_.back();
        for (const auto& [k, v] : sec.entries) {
            if (k == key) throw ParseError(path_of(sec.name, key), "duplicate key");
        }
        sec.entries.emplace_back(std::string(key), std::string(value));
    }
    return cfg;
}

Config Config::load(const std::filesystem::path& path) { return parse(read_text(path), path.string()); }

std::string Config::serialize() const {
    std::string out;
    for (std::size_t i = 0; i < sections_.size(); ++i) {
        if (i) out += '\n';
        out += "[" + sections_[i].name + "]\n";
        for (const auto& [k, v] : sections_[i].entries) out += k + " = " + v + "\n";
    }
    return out;
}

const std::string* Config::find(std::string_view section, std::string_view key) const {
    for (const auto& s : sections_) {
        if (s.name != section) continue;
        for (const auto& [k, v] : s.entries) {
            if (k == key) return &v;
        }
    }
    return nullptr;
}

bool Config::has(std::string_view section, std::string_view key) const { return find(section, key) != nullptr; }

bool Config::has_section(std::string_view section) const {
    for (const auto& s : sections_) {
        if (s.name == section) return true;
    }
    return false;
}

void Config::set(const std::string& section, const std::string& key, std::string value) {
    for (auto& s : sections_) {
        if (s.name != section) continue;
        for (auto& [k, v] : s.entries) {
            if (k == key) {
                v = std::move(value);
                return;
            }
        }
        s.entries.emplace_back(key, std::move(value));
        return;
    }
    sections_.push_back({section, {{key, std::move(value)}}});
}

std::string Config::get_string(std::string_view section, std::string_view key) const {
    const auto* v = find(section, key);
    if (v == nullptr) throw ParseError(path_of(section, key), "required field is missing");
    return *v;
}

std::string Config::get_string(std::string_view section, std::string_view key, std::string fallback) const {
    const auto* v = find(section, key);
    return v == nullptr ? std::move(fallback) : *v;
}

long long Config::get_int(std::string_view section, std::string_view key) const {
    return to_int(get_string(section, key), path_of(section, key));
}

long long Config::get_int(std::string_view section, std::string_view key, long long fallback) const {
    const auto* v = find(section, key);
    return v == nullptr ? fallback : to_int(*v, path_of(section, key));
}

double Config::get_double(std::string_view section, std::string_view key) const {
    return to_double(get_string(section, key), path_of(section, key));
}

double Config::get_double(std::string_view section, std::string_view key, double fallback) const {
    const auto* v = find(section, key);
    return v == nullptr ? fallback : to_double(*v, path_of(section, key));
}

bool Config::get_bool(std::string_view section, std::string_view key, bool fallback) const {
    const auto* v = find(section, key);
    if (v == nullptr) return fallback;
    if (*v == "true" || *v == "yes" || *v == "1") return true;
    if (*v == "false" || *v == "no" || *v == "0") return false;
    throw ParseError(path_of(section, key), "expected true or false, got '" + *v + "'");
}

std::vector<double> Config::get_doubles(std::string_view section, std::string_view key) const {
    const std::string raw = get_string(section, key);
    std::vector<double> out;
    for (auto item : split_list(raw)) out.push_back(to_double(item, path_of(section, key)));
    return out;
}

std::vector<long long> Config::get_ints(std::string_view section, std::string_view key) const {
    const std::string raw = get_string(section, key);
    std::vector<long long> out;
    for (auto item : split_list(raw)) out.push_back(to_int(item, path_of(section, key)));
    return out;
}

std::vector<std::string> Config::unknown_keys(std::string_view section, const std::vector<std::string>& allowed) const {
    std::vector<std::string> out;
    for (const auto& s : sections_) {
        if (s.name != section) continue;
        for (const auto& [k, v] : s.entries) {
            bool ok = false;
            for (const auto& a : allowed) ok = ok || a == k;
            if (!ok) out.push_back(path_of(section, k));
        }
    }
    return out;
}

std::vector<std::string> Config::section_names() const {
    std::vector<std::string> out;
    for (const auto& s : sections_) out.push_back(s.name);
    return out;
}

}  // namespace qipf::io
