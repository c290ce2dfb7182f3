#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace vesselq {

/// Broad classification of library failures. The CLI maps these onto its
/// exit codes, so new kinds need a matching entry in tools/.
enum class ErrorKind {
    io,                 ///< file missing, unreadable or unwritable
    format,             ///< malformed header or sidecar field
    unsupported_dtype,  ///< well-formed file with a datatype we do not decode
    truncation,         ///< payload shorter than the header promises
    validation,         ///< argument or value violates a documented invariant
    dimension_mismatch, ///< two volumes that must share a grid do not
    degenerate,         ///< computation undefined for this input (zero-length tangent, ...)
    undefined,          ///< metric undefined (empty set, zero denominator)
};

std::string_view to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
    throw Error(kind, message);
}

}  // namespace vesselq
