#ifndef SYLGL_ERRORS_HPP
#define SYLGL_ERRORS_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace sylgl {

/// Bad configuration, invalid parameters, malformed experiment specs.
/// The CLI maps this to exit code 2.
class SpecError : public std::runtime_error {
public:
    explicit SpecError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Numeric failure (non-finite values, indefinite matrices, failed
/// factorizations). The CLI maps this to exit code 3.
class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Malformed or truncated binary files; carries the byte offset at which
/// the problem was detected.
class IoError : public std::runtime_error {
public:
    IoError(const std::string& msg, std::size_t byte_offset)
        : std::runtime_error(msg + " (at byte offset " + std::to_string(byte_offset) + ")"),
          offset_(byte_offset) {}

    std::size_t byte_offset() const { return offset_; }

private:
    std::size_t offset_;
};

}  // namespace sylgl

#endif
