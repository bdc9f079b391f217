#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace mvsk {

using index_t = std::int64_t;

// Error taxonomy: dimension/domain errors are contract violations by the
// caller, data errors come from malformed input files, numeric errors from
// non-finite intermediates inside the oracles.
struct dimension_error : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct domain_error : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct data_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct numeric_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Counts streaming passes over the return panel. One forward product z = Ax
// and one transpose product A^T w each count as a single pass; the cost
// contracts (2 passes per value+gradient, 2 per Hessian product, 3 per
// third-order action) are asserted against these counters in the tests.
struct PassCounter {
    std::uint64_t forward = 0;
    std::uint64_t transpose = 0;

    std::uint64_t total() const { return forward + transpose; }
    void reset() { forward = transpose = 0; }
};

} // namespace mvsk
