#pragma once

// FeFunction text format:
//   fefield2d 1
//   ndof <n>
//   <n lines, one coefficient each, 17 significant digits>

#include <iosfwd>
#include <string>

#include "hce/fem.hpp"

namespace hce {

void save_fefield(const FeFunction& u, std::ostream& out);
void save_fefield_file(const FeFunction& u, const std::string& path);

/// Throws ParseError on malformed input or when ndof does not match `space`.
FeFunction load_fefield(std::istream& in, const SpacePtr& space);
FeFunction load_fefield_file(const std::string& path, const SpacePtr& space);

}  // namespace hce
