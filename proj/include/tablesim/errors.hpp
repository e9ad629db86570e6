#pragma once

#include <functional>
#include <stdexcept>
#include <string>

namespace tablesim {

/// Bad or inconsistent input data (files, config, arguments). Maps to exit code 1.
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Failure while simulating or evaluating. Maps to exit code 2.
class RuntimeError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Receives non-fatal diagnostics from loaders.
using WarningSink = std::function<void(const std::string &)>;

/// Writes "warning: <msg>" to stderr.
WarningSink stderr_warnings();

}  // namespace tablesim
