#pragma once

#include <stdexcept>
#include <string>

namespace fhn {

/// Thrown when an integration or root-finding step leaves the domain in
/// which the numerical scheme is valid (non-finite state, event overshoot).
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace fhn
