#ifndef PAMNET_XYZ_HPP_
#define PAMNET_XYZ_HPP_

#include <charconv>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "pamnet/elements.hpp"
#include "pamnet/structure.hpp"

namespace pamnet {

namespace detail {

inline std::vector<std::string> split_ws(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream ss(line);
  std::string tok;
  while (ss >> tok) out.push_back(tok);
  return out;
}

inline bool parse_double(const std::string& tok, double& out) {
  const char* first = tok.data();
  const char* last = tok.data() + tok.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

inline bool parse_int(const std::string& tok, long& out) {
  const char* first = tok.data();
  const char* last = tok.data() + tok.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

/// Shortest decimal string that parses back to exactly the same double.
inline std::string format_double(double x) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  (void)ec;
  return std::string(buf, ptr);
}

inline std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::string cur;
  for (char c : text) {
    if (c == '\n') {
      if (!cur.empty() && cur.back() == '\r') cur.pop_back();
      lines.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) lines.push_back(cur);
  return lines;
}

}  // namespace detail

/// Parses standard XYZ: atom count, comment line, then `symbol x y z` rows.
/// Extra columns after z (partial charges etc.) are ignored. Errors carry
/// 1-based line numbers.
inline Structure parse_xyz(const std::string& text, const std::string& id = "") {
  const auto lines = detail::split_lines(text);
  if (lines.empty()) throw ParseError("xyz: empty input");
  long count = 0;
  {
    auto toks = detail::split_ws(lines[0]);
    if (toks.size() != 1 || !detail::parse_int(toks[0], count) || count < 1)
      throw ParseError("xyz: bad atom count at line 1");
  }
  if (lines.size() < static_cast<std::size_t>(count) + 2)
    throw ParseError("xyz: count mismatch, expected " + std::to_string(count) + " atom rows");

  Structure s;
  s.id = id;
  for (long a = 0; a < count; ++a) {
    const std::size_t ln = static_cast<std::size_t>(a) + 2;  // 0-based index of row
    const auto toks = detail::split_ws(lines[ln]);
    if (toks.size() < 4)
      throw ParseError("xyz: malformed atom row at line " + std::to_string(ln + 1));
    const int z = atomic_number(toks[0]);
    if (z == 0) throw ParseError("xyz: unknown symbol at line " + std::to_string(ln + 1));
    Vec3 p{};
    for (int c = 0; c < 3; ++c) {
      if (!detail::parse_double(toks[static_cast<std::size_t>(c) + 1], p[static_cast<std::size_t>(c)]))
        throw ParseError("xyz: non-numeric coordinate at line " + std::to_string(ln + 1));
    }
    s.atoms.push_back({z, {}});
    s.positions.push_back(p);
  }
  // Anything after the atom block must be blank.
  for (std::size_t ln = static_cast<std::size_t>(count) + 2; ln < lines.size(); ++ln) {
    if (!detail::split_ws(lines[ln]).empty())
      throw ParseError("xyz: count mismatch, unexpected content at line " + std::to_string(ln + 1));
  }
  s.validate();
  return s;
}

/// Writes XYZ with shortest-round-trip coordinates, so parse(write(s))
/// reproduces positions bit-exactly.
inline std::string write_xyz(const Structure& s, const std::string& comment = "") {
  std::string out = std::to_string(s.n_atoms()) + "\n" + comment + "\n";
  for (int i = 0; i < s.n_atoms(); ++i) {
    const auto& p = s.positions[static_cast<std::size_t>(i)];
    out += element_symbol(s.atoms[static_cast<std::size_t>(i)].atomic_number);
    for (double c : p) out += " " + detail::format_double(c);
    out += "\n";
  }
  return out;
}

}  // namespace pamnet

#endif  // PAMNET_XYZ_HPP_
