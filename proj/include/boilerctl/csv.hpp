#pragma once

#include <filesystem>
#include <string>

#include "boilerctl/schema.hpp"

namespace boilerctl {

struct LoadReport {
    std::size_t rows_read = 0;
    std::size_t rows_dropped = 0;  // non-finite or non-numeric in schema columns
};

// Reads a telemetry CSV. The header must name at least every schema column;
// extra columns are ignored. A "timestamp" column is used when present,
// otherwise row order defines the step index. Rows with non-numeric or
// non-finite values in schema columns are dropped and counted.
// Throws SchemaError if a schema column is missing, DataError if no usable
// rows remain.
Dataset load_csv(const std::filesystem::path& path, const SignalSchema& schema,
                 LoadReport* report = nullptr);

// Writes a dataset in the format load_csv reads, with a timestamp column
// first. Doubles are written round-trip exact.
void save_csv(const std::filesystem::path& path, const Dataset& ds);

}  // namespace boilerctl
