#pragma once

#include "delayoco/harness.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace delayoco::config {

// A named player for sweep curves.
struct Curve {
    std::string name;
    wrappers::PlayerSpec player;
};

struct VerifyConfig {
    int random_schedules = 1000;
    std::int64_t max_T = 200;
    std::uint64_t seed = 1;
    // "" (none) or the name of a profile field to corrupt: sigma, d_star,
    // sigma_star, beta, d
    std::string inject_fault;
};

struct ExperimentConfig {
    harness::Environment env;
    wrappers::PlayerSpec player;
    std::vector<Curve> curves; // sweep; defaults to {player}
    std::vector<std::int64_t> T_grid;
    std::vector<std::uint64_t> seeds;
    std::uint64_t seed = 1;
    std::string out_dir = "out";
    int threads = 1;
    bool keep_rounds = true;
    VerifyConfig verify;
};

// Errors are ValidationError with a "config: <field>: <problem>" message.
ExperimentConfig parse_config(const std::string &yaml_text, const std::string &base_dir = ".");
ExperimentConfig load_config(const std::string &path);
// Configuration used when no --config is given.
ExperimentConfig default_config();

} // namespace delayoco::config
