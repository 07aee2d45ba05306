#include "boilerctl/metrics.hpp"

#include <cmath>
#include <string>

#include "boilerctl/common.hpp"

namespace boilerctl {

namespace {
void check_lengths(std::span<const double> pred, std::span<const double> actual) {
    if (pred.size() != actual.size())
        throw DataError("metrics: length mismatch (" + std::to_string(pred.size()) +
                        " vs " + std::to_string(actual.size()) + ")");
    if (pred.empty()) throw DataError("metrics: empty input");
}
}  // namespace

double mse(std::span<const double> pred, std::span<const double> actual) {
    check_lengths(pred, actual);
    double acc = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double e = pred[i] - actual[i];
        acc += e * e;
    }
    return acc / static_cast<double>(pred.size());
}

double mape(std::span<const double> pred, std::span<const double> actual) {
    check_lengths(pred, actual);
    double acc = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        if (actual[i] == 0.0)
            throw DataError("mape: actual value at index " + std::to_string(i) + " is zero");
        acc += std::abs(pred[i] - actual[i]) / std::abs(actual[i]);
    }
    return acc / static_cast<double>(pred.size()) * 100.0;
}

}  // namespace boilerctl
