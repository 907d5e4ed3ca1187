#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace veilmod {

// Every failure raised by the library carries one of these kinds; the HTTP
// layer and the CLI map them onto status codes and exit codes.
enum class ErrorKind {
    invalid_parameter,
    invalid_image,
    invalid_pair,
    out_of_bounds,
    io,
    schema,
    validation,
    conflict,
    not_found,
    state,
    unauthorized,
    forbidden,
    expired,
    too_large,
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

} // namespace veilmod
