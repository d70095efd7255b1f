#pragma once

#include <cstdint>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "mispro/error.hpp"

namespace mispro::detail {

inline void put_u32(std::ostream& out, std::uint32_t v) { out.write(reinterpret_cast<const char*>(&v), sizeof v); }
inline void put_u64(std::ostream& out, std::uint64_t v) { out.write(reinterpret_cast<const char*>(&v), sizeof v); }
inline void put_doubles(std::ostream& out, const double* p, std::size_t n) {
  out.write(reinterpret_cast<const char*>(p), static_cast<std::streamsize>(n * sizeof(double)));
}
inline void put_string(std::ostream& out, const std::string& s) {
  put_u64(out, s.size());
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline void get_exact(std::istream& in, char* p, std::size_t n) {
  in.read(p, static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(in.gcount()) != n) throw_data("corrupt file: truncated");
}
inline std::uint32_t get_u32(std::istream& in) {
  std::uint32_t v = 0;
  get_exact(in, reinterpret_cast<char*>(&v), sizeof v);
  return v;
}
inline std::uint64_t get_u64(std::istream& in) {
  std::uint64_t v = 0;
  get_exact(in, reinterpret_cast<char*>(&v), sizeof v);
  return v;
}
inline void get_doubles(std::istream& in, double* p, std::size_t n) {
  get_exact(in, reinterpret_cast<char*>(p), n * sizeof(double));
}
inline std::string get_string(std::istream& in, std::uint64_t limit = 1u << 26) {
  const auto n = get_u64(in);
  if (n > limit) throw_data("corrupt file: implausible string length");
  std::string s(n, '\0');
  get_exact(in, s.data(), n);
  return s;
}

}  // namespace mispro::detail
