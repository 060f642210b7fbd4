#include <iostream>
#include <map>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "adhoc/cli/commands.hpp"
#include "adhoc/cli/config.hpp"
#include "adhoc/cli/manifest.hpp"
#include "adhoc/core/error.hpp"

namespace {

struct Flags {
  std::optional<std::string> config;
  std::optional<std::uint64_t> seed;
  std::string out_dir = "out";
  std::optional<std::string> level;
  std::optional<double> threshold;
};

}  // namespace

int main(int argc, char** argv) {
  using namespace adhoc;
  CLI::App app{"Ad hoc announcement topic pipeline"};
  app.set_version_flag("--version", std::string(cli::kVersion));
  app.require_subcommand(1);

  Flags flags;
  std::map<std::string, CLI::App*> subs;
  for (const auto& name : cli::subcommands()) {
    CLI::App* sub = app.add_subcommand(name, cli::describe(name));
    sub->add_option("--config", flags.config, "JSON config file");
    sub->add_option("--seed", flags.seed, "Global seed (overrides config `seed`)");
    sub->add_option("--out-dir", flags.out_dir, "Directory for outputs and manifests")->capture_default_str();
    sub->add_option("--level", flags.level, "Evaluation/training level")->check(CLI::IsMember({"sentence", "document"}));
    sub->add_option("--threshold", flags.threshold, "Decision threshold for sigmoid scores")
        ->check(CLI::Range(0.0, 1.0));
    sub->footer(cli::keys_help(name));
    subs[name] = sub;
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // Usage errors count as validation failures (exit 1); --help exits 0.
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    std::string chosen;
    for (const auto& [name, sub] : subs) {
      if (sub->parsed()) chosen = name;
    }
    cli::GlobalOptions options;
    options.out_dir = flags.out_dir;
    options.seed = flags.seed;
    options.threshold = flags.threshold;
    if (flags.level) options.level = parse_level(*flags.level);
    std::optional<std::filesystem::path> config_file;
    if (flags.config) config_file = *flags.config;
    cli::RunConfig config = cli::RunConfig::load(config_file, cli::app_environment());
    cli::run_subcommand(chosen, options, config);
    return 0;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e.kind());
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: malformed JSON input: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 3;
  }
}
