#pragma once

#include <stdexcept>
#include <string>

#include "nps/asmfe/program.hpp"

namespace nps::asmfe {

struct ParseError : std::runtime_error {
    ParseError(int line, int column, const std::string& what);
    int line;
    int column;
};

// Parses Intel-syntax assembly text. One instruction or label per line,
// ';' starts a comment. All branch labels must resolve.
Program parse_program(const std::string& source);

}  // namespace nps::asmfe
