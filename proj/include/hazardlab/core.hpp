#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace hazardlab {

using scalar_t = double;
using vector_t = Eigen::Matrix<scalar_t, Eigen::Dynamic, 1>;
using matrix_t = Eigen::Matrix<scalar_t, Eigen::Dynamic, Eigen::Dynamic>;

inline constexpr const char* kLibraryVersion = HAZARDLAB_VERSION;
inline constexpr const char* kSchemaVersion = "1";

/** Base class for every error raised by the library. */
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/** Invalid arguments or invariant violations in caller-supplied data. */
class InputError : public Error {
 public:
  using Error::Error;
};

/** A numerical procedure could not meet its contract. */
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Shortest decimal string that round-trips to the same double.
std::string format_double(double value);

}  // namespace hazardlab
