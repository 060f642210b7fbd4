#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace adhoc::cli {

struct KeySpec {
  std::string key;  // "section.name", or "seed"
  std::string fallback;
  std::string help;
};

// Config keys each subcommand may read, in --help order.
const std::map<std::string, std::vector<KeySpec>>& key_registry();
std::vector<std::string> subcommands();

// JSON config file merged with APP__SECTION__KEY environment overrides.
// Override values are parsed as JSON when possible and kept as strings
// otherwise. Relative `paths.*` entries resolve against the config file's
// directory.
class RunConfig {
public:
  RunConfig() = default;

  static RunConfig load(const std::optional<std::filesystem::path>& file,
                        const std::map<std::string, std::string>& environment);

  // Keys read so far are recorded for the manifest and checked against the
  // subcommand's registry entry.
  void bind(std::string subcommand);

  const nlohmann::json* find(std::string_view key) const;
  double number(std::string_view key, double fallback);
  std::int64_t integer(std::string_view key, std::int64_t fallback);
  bool flag(std::string_view key, bool fallback);
  std::string text(std::string_view key, const std::string& fallback);
  nlohmann::json value(std::string_view key, const nlohmann::json& fallback);
  std::optional<std::filesystem::path> path(std::string_view key);
  std::filesystem::path resolve(const std::string& relative) const;
  // Sub-object for blocks such as train, with the keys it holds recorded.
  nlohmann::json block(std::string_view section);

  void set(std::string_view key, nlohmann::json value);

  // Values of the keys read, as a flat object.
  const nlohmann::json& used() const noexcept { return used_; }
  const std::filesystem::path& base_dir() const noexcept { return base_dir_; }

private:
  void record(std::string_view key, const nlohmann::json& value);

  nlohmann::json doc_ = nlohmann::json::object();
  nlohmann::json used_ = nlohmann::json::object();
  std::filesystem::path base_dir_ = ".";
  std::string subcommand_;
};

// APP__* variables of the current process.
std::map<std::string, std::string> app_environment();

}  // namespace adhoc::cli
