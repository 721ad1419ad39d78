#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace cvq {

/// Formats a double with 12 significant digits (the CSV contract).
std::string format_number(double v);

/// Writes `content` to `path` atomically (temp file + rename).
void atomic_write_file(const std::string& path, const std::string& content);

std::string read_file(const std::string& path);

/// FNV-1a, used for config hashes in run manifests.
std::uint64_t fnv1a64(std::string_view data);

std::string hex64(std::uint64_t v);

}  // namespace cvq
