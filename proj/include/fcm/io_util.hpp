#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace fcm {

// Shortest decimal string that parses back to the identical double.
std::string format_double(double v);

// Strict parsers; throw ValidationError on trailing junk or empty input.
double parse_double(std::string_view s);
std::int64_t parse_int(std::string_view s);

// Write-temp-then-rename so readers never observe a partial file.
void write_file_atomic(const std::string& path, const std::string& content);
std::string read_file(const std::string& path);

}  // namespace fcm
