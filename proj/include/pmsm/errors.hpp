#pragma once

#include <stdexcept>
#include <string>

namespace pmsm {

/// Raised when a computation produces a non-finite value (NaN or Inf).
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace pmsm
