#include "dsc/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "dsc/errors.hpp"

namespace dsc {

namespace {

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos)
        return "";
    const auto end = s.find_last_not_of(" \t\r\n");
    return s.substr(begin, end - begin + 1);
}

std::int64_t parse_int(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        const std::int64_t v = std::stoll(value, &used);
        if (used != value.size())
            throw ConfigError("");
        return v;
    } catch (...) {
        throw ConfigError("config: invalid integer for '" + key + "': " + value);
    }
}

double parse_double(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        const double v = std::stod(value, &used);
        if (used != value.size())
            throw ConfigError("");
        return v;
    } catch (...) {
        throw ConfigError("config: invalid number for '" + key + "': " + value);
    }
}

std::vector<int> parse_int_list(const std::string& key, const std::string& value) {
    std::vector<int> out;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ','))
        out.push_back(static_cast<int>(parse_int(key, trim(item))));
    if (out.empty())
        throw ConfigError("config: empty list for '" + key + "'");
    return out;
}

} // namespace

ExperimentConfig parse_config_text(const std::string& text) {
    ExperimentConfig c;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos)
            line = line.substr(0, hash);
        line = trim(line);
        if (line.empty())
            continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(line_no) +
                              ": expected 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (value.empty())
            throw ConfigError("config: empty value for '" + key + "'");

        if (key == "scenario") {
            if (value == "field")
                c.kind = ScenarioKind::Field;
            else if (value == "ceo")
                c.kind = ScenarioKind::Ceo;
            else
                throw ConfigError("config: scenario must be 'field' or 'ceo'");
        } else if (key == "n") {
            c.n = static_cast<int>(parse_int(key, value));
        } else if (key == "beta") {
            c.beta = parse_double(key, value);
        } else if (key == "placement_seed") {
            c.placement_seed = static_cast<std::uint64_t>(parse_int(key, value));
        } else if (key == "sigma0_sq") {
            c.sigma0_sq = parse_double(key, value);
        } else if (key == "lambda_sq") {
            c.lambda_sq = parse_double(key, value);
        } else if (key == "u0_resolution") {
            c.u0_resolution = static_cast<int>(parse_int(key, value));
        } else if (key == "rate") {
            c.rate = static_cast<int>(parse_int(key, value));
        } else if (key == "resolutions") {
            c.resolutions = parse_int_list(key, value);
        } else if (key == "resolution") {
            c.resolution = static_cast<int>(parse_int(key, value));
        } else if (key == "cluster_size") {
            c.cluster_cap = static_cast<int>(parse_int(key, value));
        } else if (key == "link_a") {
            c.link_a = static_cast<int>(parse_int(key, value));
        } else if (key == "link_b") {
            c.link_b = static_cast<int>(parse_int(key, value));
        } else if (key == "design_samples") {
            c.design_samples = parse_int(key, value);
        } else if (key == "eval_samples") {
            c.eval_samples = parse_int(key, value);
        } else if (key == "seed") {
            c.seed = static_cast<std::uint64_t>(parse_int(key, value));
        } else if (key == "threads") {
            c.threads = static_cast<int>(parse_int(key, value));
        } else {
            throw ConfigError("config: unknown key '" + key + "'");
        }
    }
    validate_config(c);
    return c;
}

ExperimentConfig parse_config_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ConfigError("config: cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str());
}

void validate_config(const ExperimentConfig& c) {
    if (c.n < 1)
        throw ConfigError("config: n must be >= 1");
    if (c.rate < 1)
        throw ConfigError("config: rate must be >= 1");
    if (c.kind == ScenarioKind::Field && !(c.beta >= 0.0))
        throw ConfigError("config: beta must be >= 0");
    if (c.kind == ScenarioKind::Ceo) {
        if (!(c.sigma0_sq > 0.0) || !(c.lambda_sq > 0.0))
            throw ConfigError("config: ceo variances must be positive");
        if (c.u0_resolution < 2)
            throw ConfigError("config: u0_resolution must be >= 2");
    }
    for (int r : c.resolutions)
        if (r != 2 && r != 4 && r != 8 && r != 16)
            throw ConfigError("config: resolutions entries must come from {2,4,8,16}");
    if (c.resolution != 0 &&
        (c.resolution < c.codeword_count() || c.resolution > 64))
        throw ConfigError("config: resolution must satisfy 2^rate <= L <= 64");
    if (c.cluster_cap < 1)
        throw ConfigError("config: cluster_size must be >= 1");
    if (c.link_a < 1 || c.link_b < 1)
        throw ConfigError("config: link caps must be >= 1");
    if (c.design_samples < 1)
        throw ConfigError("config: design_samples must be >= 1");
    if (c.eval_samples < 0)
        throw ConfigError("config: eval_samples must be >= 0");
    if (c.threads < 1)
        throw ConfigError("config: threads must be >= 1");
}

std::string to_string(ScenarioKind kind) {
    return kind == ScenarioKind::Field ? "field" : "ceo";
}

} // namespace dsc
