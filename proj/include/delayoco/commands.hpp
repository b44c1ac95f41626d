#pragma once

#include "delayoco/config.hpp"

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace delayoco::commands {

enum ExitCode { Ok = 0, CheckFailed = 1, ConfigError = 2 };

struct Options {
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::optional<int> threads;
    bool audit = false;
    bool svg = false;
};

// Each command writes its files under the output directory and returns an
// exit code; ValidationError propagates for the caller to map to 2.
int cmd_verify(const config::ExperimentConfig &cfg, const Options &opt, std::ostream &log);
int cmd_run(const config::ExperimentConfig &cfg, const Options &opt, std::ostream &log);
int cmd_sweep(const config::ExperimentConfig &cfg, const Options &opt, std::ostream &log);
// inputs: sweep table CSVs (`T,mean,...`) or plot-data CSVs (`curve,x,y`).
int cmd_report(const std::vector<std::string> &inputs, const Options &opt, std::ostream &log);

// Random delay schedule mixing dense, short and spiky delays.
timeline::DelaySchedule random_schedule(std::int64_t T, std::uint64_t seed, std::uint64_t index);

} // namespace delayoco::commands
