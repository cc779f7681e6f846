// Copyright Contributors to the splatstyle Project
// SPDX-License-Identifier: Apache-2.0
//
#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace splatstyle {

/// Whole-file read. Throws IoError.
std::string read_file(const std::filesystem::path& path);

/// Writes to a sibling temporary file and renames it over `path`, so readers never observe a
/// partial file. Throws IoError.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);

} // namespace splatstyle
