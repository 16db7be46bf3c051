#pragma once

#include <stdexcept>
#include <string>

namespace maskcast {

/// Bad command line, bad config file, out-of-range request.
class UsageError : public std::runtime_error {
public:
	explicit UsageError(const std::string &what) : std::runtime_error(what) {}
};

/// Malformed or inconsistent input data (parse failures, gaps, duplicates).
class DataError : public std::runtime_error {
public:
	explicit DataError(const std::string &what) : std::runtime_error(what) {}
};

/// Training could not complete (divergence, non-finite loss).
class TrainingError : public std::runtime_error {
public:
	explicit TrainingError(const std::string &what) : std::runtime_error(what) {}
};

} // namespace maskcast
