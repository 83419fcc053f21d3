#pragma once

// Locale-independent number formatting for reports.

#include <filesystem>
#include <string>
#include <string_view>

namespace policy_forge {

inline constexpr int kReportDigits = 12;

// Shortest %g-style text with 12 significant digits; "nan", "inf", "-inf"
// for non-finite values and "0" for both zeros.
std::string format_number(double x);

// x rounded to 12 significant digits (non-finite values pass through).
double round_significant(double x);

// Writes `content` verbatim; throws std::runtime_error on failure.
void write_file(const std::filesystem::path& file, std::string_view content);

}  // namespace policy_forge
