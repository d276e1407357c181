#pragma once

#include <stdexcept>
#include <string>

namespace eit {

// Invalid parameters or inputs. Maps to CLI exit code 2.
class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Integrator or fit failure. Maps to CLI exit code 3.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Field estimate is not unique. Maps to CLI exit code 4.
class AmbiguityError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace eit
