#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace ocelad {

/// Raised when a numerical routine produces or receives non-finite values,
/// or a factorization fails. Carries the step index and the module name so
/// the experiment runner can report where a run broke down.
class NumericalError : public std::runtime_error {
  public:
    NumericalError(std::string module, std::int64_t step, const std::string &what)
        : std::runtime_error(module + " (step " + std::to_string(step) + "): " + what),
          module_(std::move(module)), step_(step) {}

    const std::string &module() const noexcept { return module_; }
    std::int64_t step() const noexcept { return step_; }

  private:
    std::string module_;
    std::int64_t step_;
};

} // namespace ocelad
