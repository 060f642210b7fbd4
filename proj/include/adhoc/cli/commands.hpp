#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "adhoc/cli/config.hpp"
#include "adhoc/corpus/corpus.hpp"

namespace adhoc::cli {

struct GlobalOptions {
  std::filesystem::path out_dir = "out";
  std::optional<std::uint64_t> seed;
  std::optional<Level> level;
  std::optional<double> threshold;
};

// Runs one subcommand; throws adhoc::Error on failure. `serve` blocks.
void run_subcommand(const std::string& name, const GlobalOptions& options, RunConfig& config);

// "Config keys read:" block for --help.
std::string keys_help(const std::string& name);
std::string describe(const std::string& name);

}  // namespace adhoc::cli
