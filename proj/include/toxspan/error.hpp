#ifndef TOXSPAN_ERROR_HPP
#define TOXSPAN_ERROR_HPP

#include <stdexcept>
#include <string>

namespace toxspan {

/// Process exit codes used by the command-line tool.
enum class ExitCode : int {
    ok = 0,
    validation = 2,
    data = 3,
    numerical = 4,
};

class Error : public std::runtime_error {
public:
    Error(ExitCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
    ExitCode code() const noexcept { return code_; }

private:
    ExitCode code_;
};

/// Bad arguments or violated preconditions.
class ValidationError : public Error {
public:
    explicit ValidationError(const std::string& what) : Error(ExitCode::validation, what) {}
};

/// Unreadable or malformed input files.
class DataError : public Error {
public:
    explicit DataError(const std::string& what) : Error(ExitCode::data, what) {}
};

class ParseError : public DataError {
public:
    ParseError(const std::string& what, std::size_t column)
        : DataError(what + " (column " + std::to_string(column) + ")"), column_(column) {}
    std::size_t column() const noexcept { return column_; }

private:
    std::size_t column_;
};

/// Non-finite values during training or inference.
class NumericalError : public Error {
public:
    explicit NumericalError(const std::string& what) : Error(ExitCode::numerical, what) {}
};

} // namespace toxspan

#endif // TOXSPAN_ERROR_HPP
