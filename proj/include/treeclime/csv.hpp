#pragma once

#include <string>
#include <vector>

namespace treeclime {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

// Minimal RFC-4180 reader: quoted fields, embedded commas/quotes, CRLF.
// Throws DataError(UnreadableFile) / DataError(EmptyFile) / DataError(RaggedRow).
CsvTable read_csv(const std::string& path);

// Writer quotes only where needed; unconditional '\n' line endings.
void write_csv(const std::string& path, const CsvTable& table);

std::string csv_escape(const std::string& field);

// Shortest round-trip decimal form of v (std::to_chars); "" is never produced.
std::string format_double(double v);

// Fixed-precision helper for report tables.
std::string format_fixed(double v, int decimals);

}  // namespace treeclime
