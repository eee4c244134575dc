#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace motiflab {

using Json = nlohmann::json;

/// Lowercase hex SHA-256 of the given bytes.
std::string sha256_hex(std::string_view bytes);

std::string read_file(const std::filesystem::path& path);

/// Writes to a sibling temp file and renames it over `path`, so readers never
/// observe a partial file. Parent directories are created.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

std::vector<Json> read_jsonl(const std::filesystem::path& path);
std::string to_jsonl(const std::vector<Json>& records);

/// True when `bytes` is well-formed UTF-8 (no overlongs, surrogates or values past U+10FFFF).
bool is_valid_utf8(std::string_view bytes);

std::string trim(std::string_view s);

/// Runs fn(i) for i in [0, n) on up to `width` worker threads. Every index runs
/// even if some throw; the first exception by index order is rethrown.
void bounded_parallel_for(std::size_t n, std::size_t width,
                          const std::function<void(std::size_t)>& fn);

}  // namespace motiflab
