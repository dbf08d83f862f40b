#include "qdsr/error.hpp"

#include <fmt/format.h>

namespace qdsr {

ParseError::ParseError(std::size_t line, std::string const& what)
    : std::runtime_error(line > 0 ? fmt::format("line {}: {}", line, what) : what)
    , line_(line)
{
}

} // namespace qdsr
