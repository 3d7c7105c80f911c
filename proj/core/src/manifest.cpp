#include "drlir/manifest.hpp"

#include <nlohmann/json.hpp>

#include <fstream>

#include "drlir/error.hpp"
#include "drlir/io.hpp"

namespace drlir {
namespace {

constexpr const char* kManifestName = "manifest.json";

bool starts_with_bytes(const std::filesystem::path& file, const std::string& header) {
  std::ifstream in(file, std::ios::binary);
  std::string got(header.size(), '\0');
  return in.read(got.data(), static_cast<std::streamsize>(got.size())) && got == header;
}

}  // namespace

RunManifest RunManifest::load_or_create(const std::filesystem::path& run_dir) {
  RunManifest m;
  m.run_dir_ = run_dir;
  const auto file = run_dir / kManifestName;
  if (!std::filesystem::exists(file)) return m;
  std::ifstream in(file);
  nlohmann::json j;
  try {
    in >> j;
    m.config_hash = j.value("config_hash", "");
    m.seed = j.value("seed", std::uint64_t{0});
    m.tool_version = j.value("tool_version", kToolVersion);
    for (const auto& [key, a] : j.at("artifacts").items()) {
      m.artifacts_[key] = ArtifactRecord{a.at("path"), a.at("fingerprint"), a.at("header"),
                                         a.at("stage")};
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("corrupt manifest " + file.string() + ": " + e.what());
  }
  return m;
}

std::filesystem::path RunManifest::path_of(const std::string& key) const {
  auto it = artifacts_.find(key);
  if (it == artifacts_.end()) return {};
  return run_dir_ / it->second.path;
}

void RunManifest::guard_overwrite(const std::filesystem::path& file) const {
  if (!std::filesystem::exists(file)) return;
  const auto rel = std::filesystem::relative(file, run_dir_).generic_string();
  for (const auto& [key, a] : artifacts_) {
    if (a.path == rel) {
      if (to_hex(file_fingerprint(file)) == a.fingerprint) return;
      throw ValidationError("refusing to overwrite " + file.string() +
                            ": it changed since this run wrote it (use --force)");
    }
  }
  throw ValidationError("refusing to overwrite " + file.string() +
                        ": not produced by this run (use --force)");
}

void RunManifest::record(const std::string& key, const std::filesystem::path& file,
                         const std::string& header, const std::string& stage) {
  artifacts_[key] = ArtifactRecord{std::filesystem::relative(file, run_dir_).generic_string(),
                                   to_hex(file_fingerprint(file)), header, stage};
}

std::string RunManifest::verify() const {
  for (const auto& [key, a] : artifacts_) {
    const auto file = run_dir_ / a.path;
    if (!std::filesystem::exists(file)) return key + ": missing " + file.string();
    if (!starts_with_bytes(file, a.header)) return key + ": bad header in " + file.string();
    if (to_hex(file_fingerprint(file)) != a.fingerprint) return key + ": fingerprint mismatch";
  }
  return {};
}

void RunManifest::save() const {
  nlohmann::json j;
  j["tool_version"] = tool_version;
  j["config_hash"] = config_hash;
  j["seed"] = seed;
  j["artifacts"] = nlohmann::json::object();
  for (const auto& [key, a] : artifacts_) {
    j["artifacts"][key] = {{"path", a.path},
                           {"fingerprint", a.fingerprint},
                           {"header", a.header},
                           {"stage", a.stage}};
  }
  write_atomically(run_dir_ / kManifestName,
                   [&](std::ostream& out) { out << j.dump(2) << '\n'; }, false);
}

}  // namespace drlir
