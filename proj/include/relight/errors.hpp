#pragma once

#include <stdexcept>
#include <string>

namespace relight {

// Unusable file or directory (missing, unreadable, malformed on disk).
class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

// Computation left the representable domain (non-finite iterate, diverging fit).
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace relight
