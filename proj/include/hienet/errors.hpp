#pragma once

#include <stdexcept>
#include <string>

namespace hienet {

// Malformed input data (cascade files, manifests, checkpoints).
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ParseError : public DataError {
public:
    ParseError(std::size_t line, const std::string& field, const std::string& what)
        : DataError("line " + std::to_string(line) + ": field '" + field + "': " + what),
          line_(line), field_(field) {}

    std::size_t line() const { return line_; }
    const std::string& field() const { return field_; }

private:
    std::size_t line_;
    std::string field_;
};

// Invalid hyperparameters or incompatible model/dataset settings.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class ShapeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

}  // namespace hienet
