#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ats {

/// Shortest round-trip decimal representation; locale independent.
std::string format_number(double x);

/// Whole-field parse of a decimal number; nullopt on any trailing garbage.
std::optional<double> parse_number(std::string_view s);

std::string_view trim(std::string_view s);
std::vector<std::string_view> split_csv_line(std::string_view line);

/// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view data);
std::string hex64(std::uint64_t v);

}  // namespace ats
