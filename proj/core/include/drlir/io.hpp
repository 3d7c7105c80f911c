#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>

namespace drlir {

/// Writes through a sibling temp file and renames it over `path`, so readers
/// never observe a half-written artifact.
void write_atomically(const std::filesystem::path& path,
                      const std::function<void(std::ostream&)>& writer,
                      bool binary = true);

/// 64-bit FNV-1a. Used for artifact fingerprints and config hashes, not for
/// anything adversarial.
std::uint64_t fnv1a64(std::string_view bytes,
                      std::uint64_t seed = 0xcbf29ce484222325ULL);
std::uint64_t file_fingerprint(const std::filesystem::path& path);
std::string to_hex(std::uint64_t value);

namespace binary {

// Little-endian scalar codecs. The host is assumed little-endian (checked
// at compile time in binary_io.cpp).
void write_u32(std::ostream& out, std::uint32_t v);
void write_u64(std::ostream& out, std::uint64_t v);
void write_i32(std::ostream& out, std::int32_t v);
void write_f32(std::ostream& out, float v);
void write_f64(std::ostream& out, double v);
void write_magic(std::ostream& out, std::string_view magic);

std::uint32_t read_u32(std::istream& in);
std::uint64_t read_u64(std::istream& in);
std::int32_t read_i32(std::istream& in);
float read_f32(std::istream& in);
double read_f64(std::istream& in);
/// Throws FormatError when the next bytes are not `magic`.
void expect_magic(std::istream& in, std::string_view magic);

}  // namespace binary
}  // namespace drlir
