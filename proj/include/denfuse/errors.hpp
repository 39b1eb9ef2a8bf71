#pragma once

#include <stdexcept>
#include <string>

namespace denfuse {

/// Inconsistent or invalid model / scenario configuration.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A matrix that must be positive definite failed factorisation.
class NumericalError : public std::runtime_error {
public:
    NumericalError(const std::string& what, int object)
        : std::runtime_error(what + " (object " + std::to_string(object) + ")"), object_(object) {}
    [[nodiscard]] int object() const noexcept { return object_; }

private:
    int object_;
};

class SimulationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised when step damping cannot restore a valid natural parameter.
class TrackerDiverged : public std::runtime_error {
public:
    TrackerDiverged(int sensor, int object, int iteration)
        : std::runtime_error("tracker diverged: sensor " + std::to_string(sensor) + ", object " +
                             std::to_string(object) + ", iteration " + std::to_string(iteration)),
          sensor_(sensor), object_(object), iteration_(iteration) {}
    [[nodiscard]] int sensor() const noexcept { return sensor_; }
    [[nodiscard]] int object() const noexcept { return object_; }
    [[nodiscard]] int iteration() const noexcept { return iteration_; }

private:
    int sensor_;
    int object_;
    int iteration_;
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace denfuse
