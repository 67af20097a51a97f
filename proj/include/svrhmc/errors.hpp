#ifndef SVRHMC_ERRORS_HPP
#define SVRHMC_ERRORS_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace svrhmc {

// Caller violated a precondition (bad index, non-positive parameter, ...).
class usage_error : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Non-finite input or a quantity that failed a numerical sanity check.
class numeric_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A chain produced a non-finite coordinate.
class divergence_error : public numeric_error {
 public:
  divergence_error(std::size_t iteration, const std::string& what)
      : numeric_error("diverged at iteration " + std::to_string(iteration) +
                      ": " + what),
        iteration_(iteration) {}

  std::size_t iteration() const noexcept { return iteration_; }

 private:
  std::size_t iteration_;
};

// Malformed input text. line/column are 1-based; 0 means "not applicable".
class parse_error : public std::runtime_error {
 public:
  parse_error(std::size_t line, std::size_t column, const std::string& what)
      : std::runtime_error(format(line, column, what)),
        line_(line),
        column_(column) {}

  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  static std::string format(std::size_t line, std::size_t column,
                            const std::string& what) {
    std::string where = "line " + std::to_string(line);
    if (column != 0) where += ", column " + std::to_string(column);
    return where + ": " + what;
  }

  std::size_t line_;
  std::size_t column_;
};

}  // namespace svrhmc

#endif  // SVRHMC_ERRORS_HPP
