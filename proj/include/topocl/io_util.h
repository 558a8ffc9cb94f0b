// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace topocl {

std::string readFile(const std::filesystem::path& path);
void        writeFile(const std::filesystem::path& path, std::string_view bytes);

//! Splits one CSV record. Double quotes delimit fields containing commas; `""` is a literal quote.
std::vector<std::string> splitCsvLine(std::string_view line);

//! Parses a whole CSV document into rows; blank lines are dropped and a trailing '\r' is stripped.
std::vector<std::vector<std::string>> parseCsv(std::string_view text);

//! Quotes a field only when it contains a comma, quote or newline.
std::string csvEscape(std::string_view field);

//! Shortest-round-trip-safe decimal: 17 significant digits, general format.
std::string formatDouble(double value);

//! Strict decimal parse of the whole field; returns false on trailing garbage or empty input.
bool parseDouble(std::string_view field, double& out);

std::string trim(std::string_view text);

}  // namespace topocl
