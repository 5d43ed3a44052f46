#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace gnlab {

// Experiment configs are UTF-8 text with [section] headers and key = value
// lines; '#' starts a comment. Unknown sections or keys are hard errors so a
// typo cannot silently change an experiment.
class ConfigFile {
public:
    static ConfigFile parse_file(const std::string& path);
    static ConfigFile parse_text(const std::string& text, const std::string& origin);

    bool has(const std::string& section, const std::string& key) const;

    std::string get_string(const std::string& section, const std::string& key,
                           const std::string& fallback) const;
    double get_double(const std::string& section, const std::string& key,
                      double fallback) const;
    size_t get_size(const std::string& section, const std::string& key,
                    size_t fallback) const;
    uint64_t get_u64(const std::string& section, const std::string& key,
                     uint64_t fallback) const;
    bool get_bool(const std::string& section, const std::string& key,
                  bool fallback) const;
    std::vector<double> get_doubles(const std::string& section, const std::string& key,
                                    const std::vector<double>& fallback) const;

    // "auto" (or absence) -> nullopt, otherwise the numeric value.
    std::optional<double> get_auto_double(const std::string& section,
                                          const std::string& key) const;

    void override_value(const std::string& section, const std::string& key,
                        const std::string& value);

    // Canonical text: sections and keys sorted, one value per line. Written
    // into run directories as the config snapshot.
    std::string canonical_text() const;

private:
    std::map<std::string, std::map<std::string, std::string>> values_;
    std::string origin_;

    const std::string* find(const std::string& section, const std::string& key) const;
};

}  // namespace gnlab
