#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "adhoc/cli/config.hpp"

namespace adhoc::cli {

inline constexpr const char* kVersion = "0.1.0";

// Run record of one subcommand: config values read and their hash, seed,
// component versions and SHA-256 digests of every input and output. Holds
// no timestamps or absolute paths, so identical reruns write identical
// manifests.
class Manifest {
public:
  Manifest(std::string subcommand, std::filesystem::path out_dir);

  void input(const std::filesystem::path& path);
  // Writes `content` to out_dir / name and records its digest.
  void output(const std::string& name, const std::string& content);
  void set_seed(std::uint64_t seed) { seed_ = seed; }
  void note(const std::string& key, nlohmann::json value) { notes_[key] = std::move(value); }

  nlohmann::json to_json(const RunConfig& config) const;
  // Variants of one subcommand (phases, levels) keep separate manifests.
  void set_stem(std::string stem) { stem_ = std::move(stem); }
  // manifests/<stem>.json under the output directory.
  std::filesystem::path write(const RunConfig& config) const;

  const std::filesystem::path& out_dir() const noexcept { return out_dir_; }

private:
  std::string display(const std::filesystem::path& path) const;

  std::string subcommand_;
  std::string stem_;
  std::filesystem::path out_dir_;
  std::optional<std::uint64_t> seed_;
  nlohmann::json inputs_ = nlohmann::json::array();
  nlohmann::json outputs_ = nlohmann::json::array();
  nlohmann::json notes_ = nlohmann::json::object();
};

nlohmann::json component_versions();

}  // namespace adhoc::cli
