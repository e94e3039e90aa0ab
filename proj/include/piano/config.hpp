/// @file config.hpp
/// @brief Run configuration: JSON in, fully-resolved JSON out. Every command
/// writes its resolved config next to its outputs so a run directory is
/// self-describing.

#pragma once

#include "piano/operators.hpp"
#include "piano/training.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace piano {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct RunConfig {
    std::uint64_t seed = 7;

    struct Scenario {
        std::string kind = "mixed"; ///< a scenario kind, or "mixed" to cycle all
        int height = 32;
        int width = 32;
        int n_frames = 24;
        int count = 8;      ///< training scenarios
        int eval_count = 2; ///< held-out scenarios
    } scenario;

    TNOConfig tno;
    VNOConfig vno;
    TranslatorConfig translator;

    TrainConfig train;

    struct Eval {
        std::vector<double> thresholds = {4.0, 8.0};
        int s = 8;
    } eval;

    struct Paths {
        std::string data = "data";
        std::string checkpoints = "checkpoints";
        std::string reports = "reports";
    } paths;

    std::vector<double> sweep_alphas = {0.0, 0.2, 1.0, 5.0};

    /// All validation failures at once, joined into one ConfigError.
    void validate() const;
};

/// Parse a config file; missing keys keep defaults. Throws ConfigError with
/// every problem listed.
RunConfig load_config(const std::filesystem::path& path);

/// Serialize with all defaults expanded.
std::string resolved_config_json(const RunConfig& cfg);

} // namespace piano
