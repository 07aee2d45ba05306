#pragma once

#include <span>

namespace boilerctl {

// Mean squared error. Throws DataError on length mismatch or empty input.
double mse(std::span<const double> pred, std::span<const double> actual);

// Mean absolute percentage error, in percent. Throws DataError if any
// actual value is zero.
double mape(std::span<const double> pred, std::span<const double> actual);

}  // namespace boilerctl
