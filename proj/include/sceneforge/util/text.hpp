#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace sceneforge::util {

std::string_view trim(std::string_view text);
std::string to_lower(std::string_view text);
bool istarts_with(std::string_view text, std::string_view prefix);
std::vector<std::string> split_lines(std::string_view text);
std::vector<std::string> split(std::string_view text, char delimiter);
std::string join(const std::vector<std::string>& parts, std::string_view separator);
std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view contents);
/// ISO-8601 UTC timestamp with second resolution.
std::string utc_timestamp();

}  // namespace sceneforge::util
