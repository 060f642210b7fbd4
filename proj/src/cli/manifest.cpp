#include "adhoc/cli/manifest.hpp"

#include <Eigen/Core>
#include <boost/version.hpp>
#include <openssl/opensslv.h>

#include "adhoc/core/digest.hpp"
#include "adhoc/core/error.hpp"

namespace adhoc::cli {

namespace fs = std::filesystem;
using nlohmann::json;

Manifest::Manifest(std::string subcommand, fs::path out_dir)
    : subcommand_(std::move(subcommand)), stem_(subcommand_), out_dir_(std::move(out_dir)) {}

std::string Manifest::display(const fs::path& path) const {
  const fs::path rel = path.lexically_relative(out_dir_);
  if (!rel.empty() && *rel.begin() != "..") return rel.generic_string();
  return path.filename().generic_string();
}

void Manifest::input(const fs::path& path) {
  inputs_.push_back({{"path", display(path)}, {"sha256", sha256_file(path)}});
}

void Manifest::output(const std::string& name, const std::string& content) {
  const fs::path target = out_dir_ / name;
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  write_file(target, content);
  outputs_.push_back({{"path", name}, {"sha256", sha256_hex(content)}});
}

json Manifest::to_json(const RunConfig& config) const {
  return {{"subcommand", subcommand_},
          {"version", kVersion},
          {"components", component_versions()},
          {"seed", seed_ ? json(*seed_) : json(nullptr)},
          {"config", config.used()},
          {"config_sha256", sha256_hex(config.used().dump())},
          {"inputs", inputs_},
          {"outputs", outputs_},
          {"notes", notes_}};
}

fs::path Manifest::write(const RunConfig& config) const {
  const fs::path dir = out_dir_ / "manifests";
  fs::create_directories(dir);
  const fs::path target = dir / (stem_ + ".json");
  write_file(target, to_json(config).dump(2) + "\n");
  return target;
}

json component_versions() {
  return {{"adhoc", kVersion},
          {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
                        "." + std::to_string(EIGEN_MINOR_VERSION)},
          {"boost", std::to_string(BOOST_VERSION / 100000) + "." +
                        std::to_string(BOOST_VERSION / 100 % 1000) + "." +
                        std::to_string(BOOST_VERSION % 100)},
          {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
          {"openssl", OPENSSL_VERSION_TEXT}};
}

}  // namespace adhoc::cli
