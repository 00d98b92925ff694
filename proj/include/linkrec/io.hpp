#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

namespace linkrec {

// Writes contents to path via a temp file + rename so a crashed run never
// leaves a partial file at the final location.
void atomic_write(const std::filesystem::path& path, const std::string& contents);

std::string read_file(const std::filesystem::path& path);

// FNV-1a 64-bit checksum of a file's bytes, hex-encoded.
std::string file_checksum(const std::filesystem::path& path);

}  // namespace linkrec
