#pragma once

#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "sacflow/error.hpp"
#include "sacflow/grid.hpp"

namespace sacflow {

/// Write `contents` to `path` via a temporary sibling and rename, so readers never see partial files.
void write_file_atomic(const std::string& path, std::string_view contents);

/// Little-endian binary helpers for the snapshot/trajectory formats.
namespace binary {

template <typename T>
void put(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw Error("binary stream truncated");
  return v;
}

void put_magic(std::ostream& out, std::string_view magic);
void expect_magic(std::istream& in, std::string_view magic);

void put_lattice(std::ostream& out, const Lattice& lattice);
Lattice get_lattice(std::istream& in);
void put_time_grid(std::ostream& out, const TimeGrid& grid);
TimeGrid get_time_grid(std::istream& in);

void put_doubles(std::ostream& out, const std::vector<double>& v);
std::vector<double> get_doubles(std::istream& in);

}  // namespace binary

}  // namespace sacflow
