#pragma once

#include <stdexcept>
#include <string>

namespace nsdyn {

// Exit-code mapping used by the CLI: ConfigError -> 1, ParseError/DataError -> 2,
// NumericError -> 3.

class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& file, long line, const std::string& msg)
        : std::runtime_error(file + ":" + std::to_string(line) + ": " + msg),
          line_(line) {}
    long line() const { return line_; }

private:
    long line_;
};

class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace nsdyn
