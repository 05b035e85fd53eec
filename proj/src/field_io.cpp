#include "fblab/field_io.hpp"

#include "fblab/errors.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace fblab {

namespace {

void put_number(std::ostream& os, double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  os << buf;
}

}  // namespace

void write_field(std::ostream& os, const Field& u) {
  const int n = u.dim();
  os << "FBLAB1 " << n << ' ' << u.components();
  for (int d = 0; d < n; ++d) os << ' ' << u.dims()[d];
  for (int d = 0; d < n; ++d) {
    os << ' ';
    put_number(os, u.origin()[d]);
  }
  os << ' ';
  put_number(os, u.spacing());
  os << '\n';
  for (Index i = 0; i < u.num_nodes(); ++i) {
    for (int c = 0; c < u.components(); ++c) {
      if (c) os << ' ';
      put_number(os, u.values()(i, c));
    }
    os << '\n';
  }
}

Field read_field(std::istream& is) {
  std::string header;
  if (!std::getline(is, header)) throw InputError("field file: empty input");
  std::istringstream hs(header);
  std::string magic;
  int n = 0;
  int m = 0;
  if (!(hs >> magic) || magic != "FBLAB1") throw InputError("field file: missing FBLAB1 header");
  if (!(hs >> n >> m)) throw InputError("field file: cannot parse n and m");
  if (n < 1 || n > kMaxDim) throw InputError("field file: dimension must be 1..3");
  if (m < 1) throw InputError("field file: m must be positive");
  NodeIndex dims{1, 1, 1};
  Point origin(n);
  double spacing = 0.0;
  for (int d = 0; d < n; ++d) {
    if (!(hs >> dims[d]) || dims[d] < 2) throw InputError("field file: bad node count");
  }
  for (int d = 0; d < n; ++d) {
    if (!(hs >> origin[d]) || !std::isfinite(origin[d])) throw InputError("field file: bad origin");
  }
  if (!(hs >> spacing) || !(spacing > 0.0) || !std::isfinite(spacing)) {
    throw InputError("field file: bad spacing");
  }
  std::string extra;
  if (hs >> extra) throw InputError("field file: trailing tokens in header");

  Field u(origin, spacing, dims, m);
  std::string line;
  Index row = 0;
  while (std::getline(is, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    if (row >= u.num_nodes()) throw InputError("field file: more value lines than nodes");
    std::istringstream ls(line);
    for (int c = 0; c < m; ++c) {
      double v = 0.0;
      if (!(ls >> v)) {
        throw InputError("field file: line " + std::to_string(row + 2) + " has fewer than " +
                         std::to_string(m) + " values");
      }
      if (!std::isfinite(v)) {
        throw InputError("field file: non-finite value on line " + std::to_string(row + 2));
      }
      u.values()(row, c) = v;
    }
    if (ls >> extra) {
      throw InputError("field file: line " + std::to_string(row + 2) + " has more than " +
                       std::to_string(m) + " values");
    }
    ++row;
  }
  if (row != u.num_nodes()) {
    throw InputError("field file: expected " + std::to_string(u.num_nodes()) + " value lines, got " +
                     std::to_string(row));
  }
  return u;
}

void write_file_atomic(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw InputError("cannot open " + tmp.string() + " for writing");
    os << content;
    if (!os) throw InputError("write failed: " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) throw InputError("cannot rename " + tmp.string() + ": " + ec.message());
}

void write_field_file(const std::string& path, const Field& u) {
  std::ostringstream os;
  write_field(os, u);
  write_file_atomic(path, os.str());
}

Field read_field_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw InputError("cannot open field file " + path);
  return read_field(is);
}

}  // namespace fblab
