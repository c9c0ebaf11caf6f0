#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace soda::cli {

std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::filesystem::path& path);

/// Record of one command run: what went in, what came out, and how.
class Manifest {
 public:
  Manifest(std::string command, nlohmann::ordered_json config, std::uint64_t seed);

  void add_input(const std::filesystem::path& path);
  /// `path` is relative to the output directory.
  void add_artifact(const std::filesystem::path& out_dir, const std::filesystem::path& relative);
  nlohmann::ordered_json& summary() { return summary_; }

  /// Writes manifest.json into out_dir.
  void write(const std::filesystem::path& out_dir) const;

 private:
  std::string command_;
  nlohmann::ordered_json config_;
  std::uint64_t seed_;
  std::vector<std::pair<std::string, std::string>> inputs_;
  std::vector<std::pair<std::string, std::string>> artifacts_;
  nlohmann::ordered_json summary_ = nlohmann::ordered_json::object();
};

}  // namespace soda::cli
