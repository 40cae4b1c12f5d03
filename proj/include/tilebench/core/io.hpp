#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace tilebench {

// Writes through a sibling temp file and renames it into place, so readers
// never observe a partially written artifact.
void write_file_atomic(const std::filesystem::path& path,
                       const std::function<void(std::ostream&)>& writer,
                       bool binary = false);
void write_text_atomic(const std::filesystem::path& path, std::string_view text);

std::string read_text(const std::filesystem::path& path);

std::vector<std::string> split(std::string_view text, char sep);
std::string_view trim(std::string_view text);

}  // namespace tilebench
