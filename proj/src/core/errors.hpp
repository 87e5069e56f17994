// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace rtme {

/// Error categories surfaced through the C API as status codes.
enum class ErrorKind { Config, Input, Format, Numeric, Internal };

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

struct ConfigError : Error {
    explicit ConfigError(const std::string& what) : Error(ErrorKind::Config, what) {}
};

struct InputError : Error {
    explicit InputError(const std::string& what) : Error(ErrorKind::Input, what) {}
};

struct FormatError : Error {
    explicit FormatError(const std::string& what) : Error(ErrorKind::Format, what) {}
};

/// Non-finite loss or gradient during training.
struct NumericError : Error {
    explicit NumericError(const std::string& what) : Error(ErrorKind::Numeric, what) {}
};

struct InternalError : Error {
    explicit InternalError(const std::string& what) : Error(ErrorKind::Internal, what) {}
};

}  // namespace rtme
