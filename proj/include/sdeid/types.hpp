#ifndef SDEID_TYPES_HPP
#define SDEID_TYPES_HPP

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace sdeid {

/// A point in state space.
using Point = Eigen::VectorXd;

/// Sample cloud, one sample per row (N x d).
using SampleMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using Seed = std::uint64_t;

/// Malformed input: wrong dimensions, invalid parameters, bad files.
class InputError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Numerical failure such as a diverging simulation.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline void require(bool cond, const std::string& what) {
    if (!cond) {
        throw InputError(what);
    }
}

} // namespace sdeid

#endif
