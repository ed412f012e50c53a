#include "accerl/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace accerl {

const std::vector<std::string>& CliConfig::known_keys() {
    static const std::vector<std::string> keys = {
        "env",          "chain_n",       "arch",          "na",
        "nd",           "n_steps",       "lr",            "gamma",
        "entropy_coef", "value_coef",    "batch_size",    "compressors",
        "correctors",   "monitor",       "seed",          "total_steps",
        "eval_interval", "eval_episodes", "deterministic", "out_dir",
        "queue_capacity", "compile_interval", "calibration_window",
        "distill_steps", "distill_lr",   "distill_beta",  "teacher_sync_interval",
        "behavior_perturb", "max_grad_norm", "grid_size",  "env_max_steps",
    };
    return keys;
}

std::string CliConfig::get(const std::string& key, const std::string& fallback) const {
    auto it = values.find(key);
    return it == values.end() ? fallback : it->second;
}

double CliConfig::get_num(const std::string& key, double fallback) const {
    auto it = values.find(key);
    if (it == values.end()) return fallback;
    try {
        return std::stod(it->second);
    } catch (const std::exception&) {
        throw Error("config: key '" + key + "' has non-numeric value '" + it->second + "'");
    }
}

int64_t CliConfig::get_int(const std::string& key, int64_t fallback) const {
    auto it = values.find(key);
    if (it == values.end()) return fallback;
    try {
        return std::stoll(it->second);
    } catch (const std::exception&) {
        throw Error("config: key '" + key + "' has non-integer value '" + it->second + "'");
    }
}

bool CliConfig::get_bool(const std::string& key, bool fallback) const {
    auto it = values.find(key);
    if (it == values.end()) return fallback;
    if (it->second == "true" || it->second == "1") return true;
    if (it->second == "false" || it->second == "0") return false;
    throw Error("config: key '" + key + "' wants true/false, got '" + it->second + "'");
}

void CliConfig::set(const std::string& key, const std::string& value) {
    const auto& keys = known_keys();
    if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
        std::ostringstream os;
        os << "unknown config key '" << key << "'. Valid keys:";
        for (const auto& k : keys) os << " " << k;
        throw Error(os.str());
    }
    values[key] = value;
}

CliConfig parse_config_text(const std::string& text) {
    CliConfig cfg;
    std::stringstream ss(text);
    std::string line;
    int lineno = 0;
    while (std::getline(ss, line)) {
        lineno++;
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        // trim
        auto b = line.find_first_not_of(" \t\r");
        if (b == std::string::npos) continue;
        auto e = line.find_last_not_of(" \t\r");
        line = line.substr(b, e - b + 1);
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw Error("config line " + std::to_string(lineno) + ": expected key=value");
        std::string key = line.substr(0, eq);
        std::string val = line.substr(eq + 1);
        auto trim = [](std::string s) {
            auto b2 = s.find_first_not_of(" \t");
            if (b2 == std::string::npos) return std::string();
            auto e2 = s.find_last_not_of(" \t");
            return s.substr(b2, e2 - b2 + 1);
        };
        cfg.set(trim(key), trim(val));
    }
    return cfg;
}

CliConfig parse_config_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw Error("cannot open config file '" + path + "'");
    std::stringstream buf;
    buf << f.rdbuf();
    return parse_config_text(buf.str());
}

std::string render_config(const CliConfig& cfg) {
    std::ostringstream os;
    for (const auto& [k, v] : cfg.values) os << k << "=" << v << "\n";
    return os.str();
}

void apply_overrides(CliConfig& cfg, const std::vector<std::pair<std::string, std::string>>& kv) {
    for (const auto& [k, v] : kv) cfg.set(k, v);
}

}  // namespace accerl
