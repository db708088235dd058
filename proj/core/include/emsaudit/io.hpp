#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace emsaudit::io {

// Whole-file read; throws emsaudit::Error when the file cannot be opened.
std::string read_file(const std::filesystem::path& path);

// Lines without trailing '\n' / '\r'. A final empty line is not reported.
std::vector<std::string> read_lines(const std::filesystem::path& path);

// Writes to "<path>.tmp" and renames over the target, so readers never see a
// partially written artifact. Parent directories are created as needed.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

}  // namespace emsaudit::io
