#pragma once

#include <map>
#include <string>
#include <vector>

#include "accerl/tensor.hpp"

namespace accerl {

// Flat key=value run configuration; command-line overrides win over file
// values. Unknown keys are rejected with the list of valid keys.
struct CliConfig {
    std::map<std::string, std::string> values;

    static const std::vector<std::string>& known_keys();

    std::string get(const std::string& key, const std::string& fallback = "") const;
    double get_num(const std::string& key, double fallback) const;
    int64_t get_int(const std::string& key, int64_t fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
    void set(const std::string& key, const std::string& value);

    bool operator==(const CliConfig&) const = default;
};

CliConfig parse_config_text(const std::string& text);
CliConfig parse_config_file(const std::string& path);
std::string render_config(const CliConfig& cfg);
void apply_overrides(CliConfig& cfg, const std::vector<std::pair<std::string, std::string>>& kv);

}  // namespace accerl
