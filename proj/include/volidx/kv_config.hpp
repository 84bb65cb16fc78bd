#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>

namespace volidx {

/// Parses `key = value` lines. Blank lines and text after `#` are ignored;
/// keys and values are trimmed. Duplicate keys and lines without `=` throw
/// DataError naming the line.
[[nodiscard]] std::map<std::string, std::string> parse_kv_text(std::string_view text,
                                                               const std::string& source = "<config>");
[[nodiscard]] std::map<std::string, std::string> load_kv_file(const std::filesystem::path& path);

}  // namespace volidx
