#pragma once

#include <stdexcept>
#include <string>

namespace rescale {

// Invalid mesh/grading/config parameters.
struct config_error : std::runtime_error {
    explicit config_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Weight not finite at a quadrature node, eval outside [0,L], unsupported order.
struct domain_error : std::runtime_error {
    explicit domain_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Field lacks the even-symmetry contract required by the operation.
struct symmetry_error : std::runtime_error {
    explicit symmetry_error(const std::string& msg) : std::runtime_error(msg) {}
};

// u_hat(0) = 0 or u_hat_ii(0) = 0: the modulation system is unsolvable.
struct singular_normalization_error : std::runtime_error {
    explicit singular_normalization_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Non-finite values produced by a time step; the step is rejected.
struct step_rejected_error : std::runtime_error {
    explicit step_rejected_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Retries exhausted; the run cannot continue.
struct numerical_blowup_error : std::runtime_error {
    explicit numerical_blowup_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed checkpoint / mesh / timeseries file.
struct io_error : std::runtime_error {
    explicit io_error(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace rescale
