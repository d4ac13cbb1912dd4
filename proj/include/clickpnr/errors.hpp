#ifndef CLICKPNR_ERRORS_HPP
#define CLICKPNR_ERRORS_HPP

#include <stdexcept>
#include <string>
#include <vector>

namespace clickpnr {

// Input or state fails a documented precondition / invariant.
struct validation_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Mean clicks at or above the bin count: the detector response is not invertible there.
struct saturation_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct io_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Non-fatal diagnostics carried into reports (truncation tails, ill-conditioned
// deconvolutions, negligible-parameter notes).
struct Warning {
    std::string code;
    std::string message;
};

using Warnings = std::vector<Warning>;

inline void warn(Warnings* sink, std::string code, std::string message) {
    if (sink) sink->push_back({std::move(code), std::move(message)});
}

}  // namespace clickpnr

#endif
