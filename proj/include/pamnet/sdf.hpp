#ifndef PAMNET_SDF_HPP_
#define PAMNET_SDF_HPP_

#include <cctype>
#include <string>
#include <vector>

#include "pamnet/structure.hpp"
#include "pamnet/xyz.hpp"

namespace pamnet {

namespace detail {

// Reads a fixed-width 3-char integer field; falls back to whitespace
// tokens for files that pad differently.
inline bool fixed3(const std::string& line, std::size_t offset, long& out) {
  if (line.size() < offset + 3) return false;
  std::string field = line.substr(offset, 3);
  std::size_t b = field.find_first_not_of(' ');
  if (b == std::string::npos) return false;
  std::size_t e = field.find_last_not_of(' ');
  return parse_int(field.substr(b, e - b + 1), out);
}

}  // namespace detail

/// Parses one V2000 molfile: header (3 lines), counts line, atom block,
/// bond block. Only connectivity is retained; bond order, isotopes, and
/// charges are ignored.
inline Structure parse_sdf_bonds(const std::string& text, const std::string& fallback_id = "") {
  const auto lines = detail::split_lines(text);
  if (lines.size() < 4) throw ParseError("sdf: truncated header");

  long n_atoms = 0, n_bonds = 0;
  const std::string& counts = lines[3];
  if (!detail::fixed3(counts, 0, n_atoms) || !detail::fixed3(counts, 3, n_bonds)) {
    auto toks = detail::split_ws(counts);
    if (toks.size() < 2 || !detail::parse_int(toks[0], n_atoms) || !detail::parse_int(toks[1], n_bonds))
      throw ParseError("sdf: malformed counts line (line 4)");
  }
  if (n_atoms < 1) throw ParseError("sdf: malformed counts line (line 4): no atoms");
  if (lines.size() < 4 + static_cast<std::size_t>(n_atoms) + static_cast<std::size_t>(n_bonds))
    throw ParseError("sdf: truncated atom/bond block");

  Structure s;
  s.id = fallback_id;
  if (!lines[0].empty()) {
    auto name = detail::split_ws(lines[0]);
    if (!name.empty()) s.id = lines[0];
  }

  for (long a = 0; a < n_atoms; ++a) {
    const std::size_t ln = 4 + static_cast<std::size_t>(a);
    const auto toks = detail::split_ws(lines[ln]);
    if (toks.size() < 4) throw ParseError("sdf: malformed atom row at line " + std::to_string(ln + 1));
    Vec3 p{};
    for (int c = 0; c < 3; ++c) {
      if (!detail::parse_double(toks[static_cast<std::size_t>(c)], p[static_cast<std::size_t>(c)]))
        throw ParseError("sdf: non-numeric coordinate at line " + std::to_string(ln + 1));
    }
    const int z = atomic_number(toks[3]);
    if (z == 0) throw ParseError("sdf: unknown symbol at line " + std::to_string(ln + 1));
    s.atoms.push_back({z, {}});
    s.positions.push_back(p);
  }

  for (long b = 0; b < n_bonds; ++b) {
    const std::size_t ln = 4 + static_cast<std::size_t>(n_atoms) + static_cast<std::size_t>(b);
    const std::string& line = lines[ln];
    long i = 0, j = 0;
    if (!(detail::fixed3(line, 0, i) && detail::fixed3(line, 3, j))) {
      auto toks = detail::split_ws(line);
      if (toks.size() < 2 || !detail::parse_int(toks[0], i) || !detail::parse_int(toks[1], j))
        throw ParseError("sdf: malformed bond row at line " + std::to_string(ln + 1));
    }
    if (i < 1 || j < 1 || i > n_atoms || j > n_atoms)
      throw ParseError("sdf: bond index out of range at line " + std::to_string(ln + 1));
    int a0 = static_cast<int>(i) - 1, a1 = static_cast<int>(j) - 1;
    s.bonds.emplace_back(std::min(a0, a1), std::max(a0, a1));
  }

  s.validate();
  return s;
}

/// Splits a multi-record SDF on `$$$$` separators and parses each record.
/// Record ids default to `<stem>#<index>` when the molfile name line is blank.
inline std::vector<Structure> parse_sdf_multi(const std::string& text, const std::string& stem = "sdf") {
  std::vector<Structure> out;
  const auto lines = detail::split_lines(text);
  std::string record;
  int index = 0;
  auto flush = [&]() {
    bool blank = true;
    for (char c : record)
      if (!std::isspace(static_cast<unsigned char>(c))) blank = false;
    if (!blank) {
      out.push_back(parse_sdf_bonds(record, stem + "#" + std::to_string(index)));
      ++index;
    }
    record.clear();
  };
  for (const auto& line : lines) {
    if (line.rfind("$$$$", 0) == 0) {
      flush();
    } else {
      record += line;
      record += '\n';
    }
  }
  flush();
  return out;
}

}  // namespace pamnet

#endif  // PAMNET_SDF_HPP_
