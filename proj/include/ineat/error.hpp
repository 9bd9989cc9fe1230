#pragma once

#include <stdexcept>
#include <string>

namespace ineat {

enum class ErrorKind {
    invalid_argument,
    format,
    io,
    divergence,
};

// All library failures surface as this type; `kind()` drives CLI exit codes.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

inline void require(bool cond, const std::string& what) {
    if (!cond) fail(ErrorKind::invalid_argument, what);
}

} // namespace ineat
