#pragma once

#include <stdexcept>
#include <string>

namespace slx {

/// Invalid or inconsistent input data (CSV parse failures, schema
/// mismatches, bad fold parameters). Maps to CLI exit code 3.
struct DataError : std::runtime_error {
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Malformed or corrupted model archive. Maps to CLI exit code 4.
struct ArchiveError : std::runtime_error {
    enum class Kind { bad_magic, bad_version, bad_checksum, truncated, malformed };
    ArchiveError(Kind k, const std::string& msg) : std::runtime_error(msg), kind(k) {}
    Kind kind;
};

}  // namespace slx
