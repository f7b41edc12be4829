#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace riskwarden {

// Fixed 12-significant-digit rendering shared by every output surface
// (0.4 -> "0.400000000000").
std::string format_sig12(double v);

// Current UTC time as "YYYY-MM-DDTHH:MM:SSZ".
std::string iso_now();

// Days since 1970-01-01 for an ISO-8601 date ("YYYY-MM-DD", optionally
// followed by a time part which is ignored). nullopt when not a date.
std::optional<std::int64_t> parse_iso_days(std::string_view text);

// Strict decimal parse of the whole string.
std::optional<double> parse_number(std::string_view text);

std::string truncate(std::string_view s, std::size_t width);

} // namespace riskwarden
