#pragma once

#include "fblab/grid_field.hpp"

#include <iosfwd>
#include <string>

namespace fblab {

/// FBLAB1 text format. Header line:
///   FBLAB1 n m dims[0..n) origin[0..n) spacing
/// followed by one line per node (row-major, last axis fastest) holding the
/// m component values. Numbers are written with 17 significant digits so a
/// write/read round trip is exact.
void write_field(std::ostream& os, const Field& u);
Field read_field(std::istream& is);

/// File variants. Writing goes through a temporary file and a rename.
void write_field_file(const std::string& path, const Field& u);
Field read_field_file(const std::string& path);

/// Writes `content` to `path` atomically (temp file in the same directory,
/// then rename).
void write_file_atomic(const std::string& path, const std::string& content);

}  // namespace fblab
