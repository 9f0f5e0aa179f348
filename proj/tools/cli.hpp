#pragma once

#include "scopefe/pipeline.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace scopefe::cli {

inline constexpr const char* kToolVersion = "0.1.0";

/// Exit codes shared by every subcommand.
enum Exit : int { kOk = 0, kStageFailure = 1, kUsage = 2 };

/// Parsed TOML configuration: how to read the data plus the pipeline settings.
struct FileConfig {
    LoadOptions load;
    PipelineConfig pipeline;
};

/// Raised for malformed or invalid configuration (maps to exit code 2).
class ConfigError : public Error {
public:
    using Error::Error;
};

FileConfig parse_config(const std::string& toml_text);
FileConfig load_config(const std::string& path);

/// Full configuration snapshot, including load options.
nlohmann::json to_json(const FileConfig& cfg);

/// Hex SHA-256 of a file's bytes.
std::string sha256_file(const std::string& path);

/// Command-line overrides applied on top of the config file.
struct Overrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> workers;
    std::optional<std::string> clustering;
};

void apply(const Overrides& o, FileConfig& cfg);

/// Report JSON with the wall-time fields removed.
nlohmann::json without_timings(nlohmann::json report);

int cmd_run(const std::string& config, const std::string& data, const std::string& out_dir,
            const Overrides& o, std::ostream& err);
int cmd_assoc(const std::string& config, const std::string& data, const std::string& out,
              const Overrides& o, std::ostream& os, std::ostream& err);
int cmd_cluster(const std::string& config, const std::string& data, const std::string& out,
                const Overrides& o, std::ostream& os, std::ostream& err);
int cmd_probe(const std::string& config, const std::string& data, const std::string& out,
              const Overrides& o, std::ostream& os, std::ostream& err);
int cmd_sweep(const std::string& config, const std::string& data, const std::string& param,
              const std::vector<double>& values, const std::string& out, const Overrides& o,
              std::ostream& os, std::ostream& err);
int cmd_ablate(const std::string& config, const std::string& data, const std::string& out,
               const Overrides& o, std::ostream& os, std::ostream& err);

/// Entry point used by main(); parses argv with CLI11.
int main(int argc, char** argv, std::ostream& os, std::ostream& err);

}  // namespace scopefe::cli
