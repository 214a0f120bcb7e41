#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "snswf/errors.hpp"
#include "snswf/pipeline.hpp"
#include "snswf/signals.hpp"

namespace snswf::cli {

/// Bad configuration value or unknown key. Always maps to exit code 2.
class ConfigError : public Error {
public:
    using Error::Error;
};

enum Command : unsigned { kSimulate = 1u, kSobi = 2u, kPsd = 4u, kDenoise = 8u };

/// Everything a command can be told, with the library defaults.
struct RunConfig {
    SimulationConfig simulation;
    PipelineConfig pipeline;
    std::size_t n_sources = 0;

    std::string input;
    std::string out_dir = ".";
    std::optional<double> input_sample_rate_hz;
    std::string channel;
    std::string signal_channel;           // empty: first channel
    std::vector<std::string> references;  // empty: every other channel
    std::string method = "both";
};

/// One flat key. `key` is snake_case; the flag is the kebab-case spelling.
struct Field {
    std::string key;
    std::string help;
    std::string type;
    unsigned commands;
    std::function<std::string(const RunConfig&)> get;
    std::function<void(RunConfig&, std::string_view)> set;
};

const std::vector<Field>& fields();
const Field* find_field(std::string_view key);

std::string flag_name(std::string_view key);

/// Parses `key = value` lines ('#' starts a comment). Unknown or repeated
/// keys and unparsable values raise ConfigError naming the key and line.
void apply_config_file(RunConfig& config, const std::filesystem::path& path);

/// Parses "lo:hi"; "inf" is accepted for hi.
Band parse_band(std::string_view text);
std::string format_band(const Band& band);

/// Shortest text that reads back to the same double.
std::string shortest(double value);

} // namespace snswf::cli
