#pragma once

#include <stdexcept>
#include <string>

namespace aswd {

// Shape or precondition violation in a numerical operation.
class ContractError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// A primitive produced a non-finite value, or an input was non-finite.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Invalid configuration (bad key, bad value, unknown metric/target name).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed external input (sample CSV, record file).
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace aswd
