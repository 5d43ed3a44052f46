#include "gnlab/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

#include "gnlab/errors.hpp"

namespace gnlab {

namespace {

// The full key schema. A config may set any subset; anything else is a
// config error.
const std::map<std::string, std::set<std::string>>& schema() {
    static const std::map<std::string, std::set<std::string>> s = {
        {"dataset",
         {"kind", "n", "side", "classes", "noise_std", "mask", "test_size",
          "variance", "path"}},
        {"model", {"hidden", "checkpoint", "init_seed"}},
        {"train", {"epochs", "lr", "momentum", "batch"}},
        {"explainer",
         {"method", "ig_steps", "shap_samples", "shap_sigma", "occlusion_patch",
          "occlusion_fill", "gamma"}},
        {"enhancer",
         {"n", "m", "sigma_sg", "sigma_ng", "alpha_sg", "target_drop", "drop_tol",
          "share_xi", "pre_abs", "fg_mode", "kind"}},
        {"metrics",
         {"faithfulness_subset", "faithfulness_iterations", "sensitivity_radius",
          "sensitivity_n"}},
        {"compare", {"samples"}},
        {"sweep", {"sigma_ng_grid", "sigma_sg_grid", "samples"}},
        {"heuristic", {"samples", "max_drop"}},
        {"sanity", {"samples"}},
        {"am",
         {"class", "steps", "step_size", "l2", "jitter", "box_lo", "box_hi", "m",
          "sigma_ng"}},
        {"toy", {"grid", "point"}},
        {"explain", {"samples"}},
        {"run", {"seed", "threads"}},
    };
    return s;
}

std::string trim(const std::string& s) {
    size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

void check_known(const std::string& section, const std::string& key,
                 const std::string& origin, size_t line_no) {
    const auto& known = schema();
    auto it = known.find(section);
    if (it == known.end()) {
        raise(ErrorKind::config, origin + ":" + std::to_string(line_no) +
                                     ": unknown section [" + section + "]");
    }
    if (!key.empty() && it->second.find(key) == it->second.end()) {
        raise(ErrorKind::config, origin + ":" + std::to_string(line_no) +
                                     ": unknown key '" + key + "' in [" + section + "]");
    }
}

}  // namespace

ConfigFile ConfigFile::parse_file(const std::string& path) {
    std::ifstream in(path);
    require(in.good(), ErrorKind::config, "cannot open config file " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_text(buffer.str(), path);
}

ConfigFile ConfigFile::parse_text(const std::string& text, const std::string& origin) {
    ConfigFile config;
    config.origin_ = origin;
    std::istringstream in(text);
    std::string line;
    std::string section;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const size_t comment = line.find('#');
        if (comment != std::string::npos) {
            line = line.substr(0, comment);
        }
        line = trim(line);
        if (line.empty()) {
            continue;
        }
        if (line.front() == '[') {
            if (line.back() != ']') {
                raise(ErrorKind::config, origin + ":" + std::to_string(line_no) +
                                             ": malformed section header");
            }
            section = trim(line.substr(1, line.size() - 2));
            check_known(section, "", origin, line_no);
            config.values_[section];
            continue;
        }
        const size_t eq = line.find('=');
        if (eq == std::string::npos || section.empty()) {
            raise(ErrorKind::config, origin + ":" + std::to_string(line_no) +
                                         ": expected 'key = value' inside a section");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        check_known(section, key, origin, line_no);
        if (config.values_[section].count(key) != 0) {
            raise(ErrorKind::config, origin + ":" + std::to_string(line_no) +
                                         ": duplicate key '" + key + "'");
        }
        config.values_[section][key] = value;
    }
    return config;
}

const std::string* ConfigFile::find(const std::string& section,
                                    const std::string& key) const {
    auto sit = values_.find(section);
    if (sit == values_.end()) {
        return nullptr;
    }
    auto kit = sit->second.find(key);
    return kit == sit->second.end() ? nullptr : &kit->second;
}

bool ConfigFile::has(const std::string& section, const std::string& key) const {
    return find(section, key) != nullptr;
}

std::string ConfigFile::get_string(const std::string& section, const std::string& key,
                                   const std::string& fallback) const {
    const std::string* v = find(section, key);
    return v == nullptr ? fallback : *v;
}

double ConfigFile::get_double(const std::string& section, const std::string& key,
                              double fallback) const {
    const std::string* v = find(section, key);
    if (v == nullptr) {
        return fallback;
    }
    try {
        size_t used = 0;
        const double parsed = std::stod(*v, &used);
        require(used == v->size(), ErrorKind::config,
                origin_ + ": bad number for " + section + "." + key + ": '" + *v + "'");
        return parsed;
    } catch (const std::exception&) {
        raise(ErrorKind::config,
              origin_ + ": bad number for " + section + "." + key + ": '" + *v + "'");
    }
}

size_t ConfigFile::get_size(const std::string& section, const std::string& key,
                            size_t fallback) const {
    const double v = get_double(section, key, static_cast<double>(fallback));
    require(v >= 0.0 && v == static_cast<double>(static_cast<size_t>(v)),
            ErrorKind::config,
            origin_ + ": expected a non-negative integer for " + section + "." + key);
    return static_cast<size_t>(v);
}

uint64_t ConfigFile::get_u64(const std::string& section, const std::string& key,
                             uint64_t fallback) const {
    const std::string* v = find(section, key);
    if (v == nullptr) {
        return fallback;
    }
    try {
        size_t used = 0;
        const uint64_t parsed = std::stoull(*v, &used);
        require(used == v->size(), ErrorKind::config,
                origin_ + ": bad integer for " + section + "." + key);
        return parsed;
    } catch (const std::exception&) {
        raise(ErrorKind::config, origin_ + ": bad integer for " + section + "." + key);
    }
}

bool ConfigFile::get_bool(const std::string& section, const std::string& key,
                          bool fallback) const {
    const std::string* v = find(section, key);
    if (v == nullptr) {
        return fallback;
    }
    if (*v == "true" || *v == "1" || *v == "yes") return true;
    if (*v == "false" || *v == "0" || *v == "no") return false;
    raise(ErrorKind::config, origin_ + ": bad boolean for " + section + "." + key);
}

std::vector<double> ConfigFile::get_doubles(const std::string& section,
                                            const std::string& key,
                                            const std::vector<double>& fallback) const {
    const std::string* v = find(section, key);
    if (v == nullptr) {
        return fallback;
    }
    std::vector<double> out;
    std::istringstream in(*v);
    std::string token;
    while (in >> token) {
        try {
            out.push_back(std::stod(token));
        } catch (const std::exception&) {
            raise(ErrorKind::config,
                  origin_ + ": bad number list for " + section + "." + key);
        }
    }
    require(!out.empty(), ErrorKind::config,
            origin_ + ": empty number list for " + section + "." + key);
    return out;
}

std::optional<double> ConfigFile::get_auto_double(const std::string& section,
                                                  const std::string& key) const {
    const std::string* v = find(section, key);
    if (v == nullptr || *v == "auto") {
        return std::nullopt;
    }
    return get_double(section, key, 0.0);
}

void ConfigFile::override_value(const std::string& section, const std::string& key,
                                const std::string& value) {
    check_known(section, key, origin_ + " (override)", 0);
    values_[section][key] = value;
}

std::string ConfigFile::canonical_text() const {
    std::ostringstream out;
    for (const auto& [section, keys] : values_) {
        out << "[" << section << "]\n";
        for (const auto& [key, value] : keys) {
            out << key << " = " << value << "\n";
        }
    }
    return out.str();
}

}  // namespace gnlab
