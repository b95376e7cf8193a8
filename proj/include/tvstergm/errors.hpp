#ifndef TVSTERGM_ERRORS_HPP
#define TVSTERGM_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace tvstergm {

// Exit codes used by the command line driver map one-to-one onto these.
// 1: malformed or inconsistent input data
struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// 2: a documented precondition of an operation was violated
struct ContractError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// 3: the numerics failed (non-convergence, indefinite systems)
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace tvstergm

#endif
