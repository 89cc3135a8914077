#ifndef PAMNET_ELEMENTS_HPP_
#define PAMNET_ELEMENTS_HPP_

#include <array>
#include <string>
#include <string_view>
#include <unordered_map>

namespace pamnet {

// Symbols indexed by atomic number, 1..118. Index 0 is a placeholder.
inline constexpr std::array<std::string_view, 119> kElementSymbols = {
    "",   "H",  "He", "Li", "Be", "B",  "C",  "N",  "O",  "F",  "Ne", "Na",
    "Mg", "Al", "Si", "P",  "S",  "Cl", "Ar", "K",  "Ca", "Sc", "Ti", "V",
    "Cr", "Mn", "Fe", "Co", "Ni", "Cu", "Zn", "Ga", "Ge", "As", "Se", "Br",
    "Kr", "Rb", "Sr", "Y",  "Zr", "Nb", "Mo", "Tc", "Ru", "Rh", "Pd", "Ag",
    "Cd", "In", "Sn", "Sb", "Te", "I",  "Xe", "Cs", "Ba", "La", "Ce", "Pr",
    "Nd", "Pm", "Sm", "Eu", "Gd", "Tb", "Dy", "Ho", "Er", "Tm", "Yb", "Lu",
    "Hf", "Ta", "W",  "Re", "Os", "Ir", "Pt", "Au", "Hg", "Tl", "Pb", "Bi",
    "Po", "At", "Rn", "Fr", "Ra", "Ac", "Th", "Pa", "U",  "Np", "Pu", "Am",
    "Cm", "Bk", "Cf", "Es", "Fm", "Md", "No", "Lr", "Rf", "Db", "Sg", "Bh",
    "Hs", "Mt", "Ds", "Rg", "Cn", "Nh", "Fl", "Mc", "Lv", "Ts", "Og"};

/// Atomic number for an element symbol, or 0 if the symbol is unknown.
inline int atomic_number(std::string_view symbol) {
  static const std::unordered_map<std::string_view, int> table = [] {
    std::unordered_map<std::string_view, int> t;
    for (int z = 1; z <= 118; ++z) t.emplace(kElementSymbols[static_cast<std::size_t>(z)], z);
    return t;
  }();
  auto it = table.find(symbol);
  return it == table.end() ? 0 : it->second;
}

inline std::string element_symbol(int z) {
  if (z < 1 || z > 118) return "?";
  return std::string(kElementSymbols[static_cast<std::size_t>(z)]);
}

}  // namespace pamnet

#endif  // PAMNET_ELEMENTS_HPP_
