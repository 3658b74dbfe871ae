#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace qipf::io {

/// Sectioned key = value text format:
///
///     # comment
///     [section]
///     key = value
///
/// Keys are addressed as "section.key" in error messages. Order of sections
/// and keys is preserved so serialization is stable.
class Config {
public:
    static Config parse(std::string_view text, const std::string& source = "config");
    static Config load(const std::filesystem::path& path);
    std::string serialize() const;

    bool has(std::string_view section, std::string_view key) const;
    bool has_section(std::string_view section) const;
    void set(const std::string& section, const std::string& key, std::string value);

    std::string get_string(std::string_view section, std::string_view key) const;
    std::string get_string(std::string_view section, std::string_view key, std::string fallback) const;
    long long get_int(std::string_view section, std::string_view key) const;
    long long get_int(std::string_view section, std::string_view key, long long fallback) const;
    double get_double(std::string_view section, std::string_view key) const;
    double get_double(std::string_view section, std::string_view key, double fallback) const;
    bool get_bool(std::string_view section, std::string_view key, bool fallback) const;
    std::vector<double> get_doubles(std::string_view section, std::string_view key) const;
    std::vector<long long> get_ints(std::string_view section, std::string_view key) const;

    /// Keys of a section that are not in `allowed`, as "section.key" paths.
    std::vector<std::string> unknown_keys(std::string_view section, const std::vector<std::string>& allowed) const;
    std::vector<std::string> section_names() const;

private:
    struct Section {
        std::string name;
        std::vector<std::pair<std::string, std::string>> entries;
    };
    const std::string* find(std::string_view section, std::string_view key) const;

    std::vector<Section> sections_;
};

}  // namespace qipf::io
