#pragma once

#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace pibgen::csv {

/// Reads one RFC 4180 record (quoted fields may span lines). Returns nullopt
/// at end of input. A trailing '\r' is dropped.
std::optional<std::vector<std::string>> read_record(std::istream& in);

std::string_view trim(std::string_view s);

/// Full-string numeric parse after trimming; nullopt on any junk.
std::optional<double> parse_double(std::string_view s);

/// Quotes a field when it contains a delimiter, quote or newline.
std::string escape(std::string_view field);

}  // namespace pibgen::csv
