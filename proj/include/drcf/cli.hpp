#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "drcf/model.hpp"

namespace drcf::cli {

enum ExitCode : int { ok = 0, usage_error = 1, data_error = 2, io_error = 3 };

struct CliConfig {
    std::string subcommand;
    std::filesystem::path data;
    std::string format = "ml100k";
    double train_fraction = 0.9;
    double k_max = 5.0;
    Hyperparams hp;
    std::filesystem::path out;
    std::filesystem::path model;
    std::optional<std::string> baseline;
    std::optional<std::filesystem::path> report;
    bool report_timing = false;
    bool quiet = false;
    std::string user;
    std::string item;
};

int cmd_train(const CliConfig& config, std::ostream& out, std::ostream& err);
int cmd_eval(const CliConfig& config, std::ostream& out, std::ostream& err);
int cmd_predict(const CliConfig& config, std::ostream& out, std::ostream& err);
/// Writes <out>.train and <out>.test in the input's own line format.
int cmd_split(const CliConfig& config, std::ostream& out, std::ostream& err);

/// Parses argv and dispatches. Never throws.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace drcf::cli
