#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace sparsedyn::cli {

/// Git blob hash: SHA-1 of "blob <size>\0" followed by the content.
std::string git_blob_sha1(const std::string& content);

/// Writes to a temporary sibling and renames it into place, so a reader
/// never sees a partial file.
void atomic_write(const std::filesystem::path& path, const std::string& content);

std::string read_file(const std::filesystem::path& path);

/// Record of one command run: the effective configuration, the seed and the
/// hash of every output. Contains nothing time- or host-dependent, so two
/// runs of the same configuration produce the same bytes.
struct Manifest {
  std::string command;
  std::uint64_t seed = 0;
  std::vector<std::pair<std::string, std::string>> config;
  nlohmann::ordered_json info = nlohmann::ordered_json::object();
  std::vector<std::pair<std::string, std::string>> outputs;  // file name, hash

  /// Writes `content` to dir/name atomically and records its hash.
  void emit(const std::filesystem::path& dir, const std::string& name, const std::string& content);

  nlohmann::ordered_json to_json() const;
  void write(const std::filesystem::path& dir, const std::string& name = "manifest.json") const;
};

}  // namespace sparsedyn::cli
