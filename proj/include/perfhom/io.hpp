#pragma once

#include <string>

namespace perfhom {

/// Writes to path.tmp then renames over path.
void write_file_atomic(const std::string& path, const std::string& content);

std::string read_file(const std::string& path);

/// Shortest decimal that round-trips.
std::string format_double(double v);

}  // namespace perfhom
