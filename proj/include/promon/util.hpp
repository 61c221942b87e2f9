#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace promon::util {

std::string_view trim(std::string_view s);
bool only_whitespace(std::string_view s);
std::string to_lower(std::string_view s);
std::string join(const std::vector<std::string>& items, std::string_view sep);
std::vector<std::string> split_nonempty_lines(std::string_view s);

// Compact "%g" formatting for diagnostics.
std::string num(double v);

// FNV-1a 64-bit; used where hashes must be stable across platforms and runs.
std::uint64_t fnv1a(std::string_view s);

std::string base64_encode(std::string_view bytes);

}  // namespace promon::util
