#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace dial::csv {

using Row = std::vector<std::string>;

// RFC 4180 reader: quoted fields may contain separators, CRLF and doubled
// quotes. A UTF-8 byte-order mark at the start of the stream is skipped.
std::vector<Row> parse(std::string_view text);
std::vector<Row> read_file(const std::string& path);

std::string escape(std::string_view field);
void write_row(std::ostream& out, const Row& row);

}  // namespace dial::csv
