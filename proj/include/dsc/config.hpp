#ifndef DSC_CONFIG_HPP
#define DSC_CONFIG_HPP

#include <cstdint>
#include <string>
#include <vector>

namespace dsc {

enum class ScenarioKind { Field, Ceo };

/// Scenario description, normally read from a key-value config file.
/// See README for the format and a full example of each scenario.
struct ExperimentConfig {
    ScenarioKind kind = ScenarioKind::Field;
    int n = 100; // sensors (field) or encoders (ceo)

    // field
    double beta = 0.5;
    std::uint64_t placement_seed = 1;

    // ceo
    double sigma0_sq = 1.0;
    double lambda_sq = 0.1;
    int u0_resolution = 64;

    int rate = 1;                           // codeword bits per encoder
    std::vector<int> resolutions = {2, 4, 8, 16}; // candidate quantizer sizes
    int resolution = 0;                     // single design L; 0 = 2^rate
    int cluster_cap = 4;                    // S
    int link_a = 1;
    int link_b = 1;
    std::int64_t design_samples = 1'000'000;
    std::int64_t eval_samples = 10'000;
    std::uint64_t seed = 1;
    int threads = 1;

    int codeword_count() const { return 1 << rate; }
    int design_resolution() const { return resolution > 0 ? resolution : codeword_count(); }
};

/// Parses the `key = value` format; '#' starts a comment. Unknown keys and
/// invalid values raise ConfigError.
ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig parse_config_file(const std::string& path);

void validate_config(const ExperimentConfig& config);

std::string to_string(ScenarioKind kind);

} // namespace dsc

#endif
