#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

namespace drlir {

inline constexpr const char* kToolVersion = "0.1.0";

struct ArtifactRecord {
  std::string path;         // relative to the run directory
  std::string fingerprint;  // FNV-1a of the file contents
  std::string header;       // expected leading bytes
  std::string stage;
};

/// Book-keeping for one run directory: what each stage produced, with
/// fingerprints so a later stage can refuse to clobber files it did not write.
class RunManifest {
 public:
  static RunManifest load_or_create(const std::filesystem::path& run_dir);

  /// Throws ValidationError if `file` exists but is not the exact artifact
  /// this manifest recorded for it (edited, replaced or foreign).
  void guard_overwrite(const std::filesystem::path& file) const;
  void record(const std::string& key, const std::filesystem::path& file, const std::string& header,
              const std::string& stage);
  /// Every recorded artifact exists, starts with its header and matches its
  /// fingerprint. Returns the first problem, empty when healthy.
  std::string verify() const;
  void save() const;

  const std::filesystem::path& run_dir() const { return run_dir_; }
  const std::map<std::string, ArtifactRecord>& artifacts() const { return artifacts_; }
  std::filesystem::path path_of(const std::string& key) const;

  std::string config_hash;
  std::uint64_t seed = 0;
  std::string tool_version = kToolVersion;

 private:
  std::filesystem::path run_dir_;
  std::map<std::string, ArtifactRecord> artifacts_;
};

}  // namespace drlir
