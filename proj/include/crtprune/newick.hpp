#pragma once

#include <string>
#include <string_view>

#include "crtprune/tree.hpp"

namespace crtprune {

// Newick dialect: mass leaves "L", truncation leaves "X", internal nodes "I",
// lengths with 17 significant digits, canonical child order. A bare root is ";".
std::string serialize_tree(const Tree& t);
Tree parse_tree(std::string_view text);

}  // namespace crtprune
