#include "sacflow/io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>

namespace sacflow {

void write_file_atomic(const std::string& path, std::string_view contents) {
  const std::filesystem::path target(path);
  if (target.has_parent_path()) std::filesystem::create_directories(target.parent_path());
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open '" + tmp + "' for writing");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw Error("write to '" + tmp + "' failed");
  }
  std::filesystem::rename(tmp, target);
}

namespace binary {

void put_magic(std::ostream& out, std::string_view magic) { out.write(magic.data(), static_cast<std::streamsize>(magic.size())); }

void expect_magic(std::istream& in, std::string_view magic) {
  std::string got(magic.size(), '\0');
  in.read(got.data(), static_cast<std::streamsize>(got.size()));
  if (!in || got != magic) throw Error("bad magic: expected " + std::string(magic));
}

void put_lattice(std::ostream& out, const Lattice& lattice) {
  const Box& b = lattice.box();
  put<std::int32_t>(out, b.dim);
  put<std::int32_t>(out, lattice.cells(0));
  put<std::int32_t>(out, b.dim == 2 ? lattice.cells(1) : 0);
  for (double v : {b.lo[0], b.lo[1], b.hi[0], b.hi[1]}) put<double>(out, v);
}

Lattice get_lattice(std::istream& in) {
  Box b;
  b.dim = get<std::int32_t>(in);
  const int c0 = get<std::int32_t>(in);
  const int c1 = get<std::int32_t>(in);
  b.lo[0] = get<double>(in);
  b.lo[1] = get<double>(in);
  b.hi[0] = get<double>(in);
  b.hi[1] = get<double>(in);
  return Lattice(b, {c0, c1});
}

void put_time_grid(std::ostream& out, const TimeGrid& grid) {
  put<double>(out, grid.horizon());
  put<std::int32_t>(out, grid.steps());
}

TimeGrid get_time_grid(std::istream& in) {
  const double horizon = get<double>(in);
  const int steps = get<std::int32_t>(in);
  return TimeGrid(horizon, steps);
}

void put_doubles(std::ostream& out, const std::vector<double>& v) {
  put<std::uint64_t>(out, v.size());
  out.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
}

std::vector<double> get_doubles(std::istream& in) {
  const auto n = get<std::uint64_t>(in);
  if (n > (1ULL << 34)) throw Error("binary stream: implausible array length");
  std::vector<double> v(n);
  in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(double)));
  if (!in) throw Error("binary stream truncated");
  return v;
}

}  // namespace binary

}  // namespace sacflow
