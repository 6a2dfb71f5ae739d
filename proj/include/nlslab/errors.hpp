#pragma once

#include <stdexcept>
#include <string>

namespace nlslab {

// Invalid or inconsistent configuration / input. CLI maps this to exit code 2.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Runtime failure of a computation that was configured legally (blow-up,
// non-finite fields, exceeded validity window). CLI maps this to exit code 3.
struct RuntimeAbort : std::runtime_error {
    explicit RuntimeAbort(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace nlslab
