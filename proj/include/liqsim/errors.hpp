#pragma once

#include <stdexcept>
#include <string>

namespace liqsim {

// Bad configuration or input files. CLI maps this to exit code 2.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// A numerical procedure failed to meet its contract (quadrature
// nonconvergence, singular regression, ...). CLI maps this to exit 3.
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace liqsim
