#include "hce/field_io.hpp"

#include <fstream>
#include <istream>
#include <ostream>

#include "hce/errors.hpp"
#include "text_util.hpp"

namespace hce {

void save_fefield(const FeFunction& u, std::ostream& out) {
  out << "fefield2d 1\n";
  out << "ndof " << u.coefficients().size() << '\n';
  for (Eigen::Index i = 0; i < u.coefficients().size(); ++i) out << detail::format_double(u.coefficients()[i]) << '\n';
}

void save_fefield_file(const FeFunction& u, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write field file " + path);
  save_fefield(u, out);
  if (!out) throw Error("write failed: " + path);
}

FeFunction load_fefield(std::istream& in, const SpacePtr& space) {
  detail::LineReader reader(in);
  const auto header = reader.expect_record("header 'fefield2d 1'");
  if (header.size() != 2 || header[0] != "fefield2d" || header[1] != "1")
    throw ParseError(reader.line(), "expected header 'fefield2d 1'");
  const auto count = reader.expect_record("'ndof <n>'");
  if (count.size() != 2 || count[0] != "ndof") throw ParseError(reader.line(), "expected 'ndof <n>'");
  const Index n = detail::parse_index(count[1], reader.line());
  if (static_cast<Eigen::Index>(n) != space->ndofs())
    throw ParseError(reader.line(), "ndof " + std::to_string(n) + " does not match space with " +
                                        std::to_string(space->ndofs()) + " dofs");
  Vector c(static_cast<Eigen::Index>(n));
  for (Index i = 0; i < n; ++i) {
    const auto rec = reader.expect_record("coefficient " + std::to_string(i));
    if (rec.size() != 1) throw ParseError(reader.line(), "one coefficient per line expected");
    c[static_cast<Eigen::Index>(i)] = detail::parse_double(rec[0], reader.line());
  }
  if (reader.next_record()) throw ParseError(reader.line(), "more coefficients than declared");
  if (!c.allFinite()) throw ParseError(reader.line(), "non-finite coefficient");
  return FeFunction(space, std::move(c));
}

FeFunction load_fefield_file(const std::string& path, const SpacePtr& space) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open field file " + path);
  return load_fefield(in, space);
}

}  // namespace hce
