// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace nids::io {

// Writes `content` to a sibling temporary file and renames it over `path`.
// Either the complete new file is visible at `path` or nothing changed; the
// temporary is removed on every failure path. Throws IoError.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

std::string read_file(const std::filesystem::path& path);

}  // namespace nids::io
