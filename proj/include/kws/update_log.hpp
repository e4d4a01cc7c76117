#pragma once

#include <filesystem>
#include <istream>
#include <string>
#include <string_view>
#include <vector>

#include "kws/engine.hpp"
#include "kws/store.hpp"

namespace kws {

class LogError : public std::runtime_error {
  public:
    LogError(std::size_t line, std::string const& what)
        : std::runtime_error("line " + std::to_string(line) + ": " + what), m_line(line)
    {
    }
    [[nodiscard]] std::size_t line() const noexcept { return m_line; }

  private:
    std::size_t m_line;
};

/// Escapes '%', tab, CR and LF as %XX.
std::string percent_encode(std::string_view text);
/// Inverse of percent_encode; accepts any %XX escape.
std::string percent_decode(std::string_view text);

/// One log line without the newline:
///
///     I<TAB>relation<TAB>key<TAB>attr=value...
///     D<TAB>relation<TAB>key
std::string format_op(SchemaGraph const& schema, UpdateOp const& op);

/// Parses one line. Relation and attributes are checked against `schema`;
/// errors carry `line`.
UpdateOp parse_op(SchemaGraph const& schema, std::string_view text, std::size_t line);

/// Every op of a log; blank lines and `#` comments are skipped.
std::vector<UpdateOp> read_update_log(SchemaGraph const& schema, std::istream& in);
std::vector<UpdateOp> read_update_log_file(SchemaGraph const& schema, std::filesystem::path const& path);

}  // namespace kws
