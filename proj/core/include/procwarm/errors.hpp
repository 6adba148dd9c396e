#pragma once

#include <stdexcept>
#include <string>

namespace procwarm {

// Base class for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Invalid specs, configs, stage guards, out-of-range arguments.
class ValidationError : public Error {
public:
    explicit ValidationError(const std::string& what) : Error(what) {}
};

// Malformed or inconsistent on-disk artifacts (manifests, payloads, plans).
class FormatError : public Error {
public:
    explicit FormatError(const std::string& what) : Error(what) {}
};

// Filesystem failures: missing files, short reads, failed renames.
class IoError : public Error {
public:
    explicit IoError(const std::string& what) : Error(what) {}
};

// Numerical failures: non-finite loss, overflow during training.
class NumericError : public Error {
public:
    explicit NumericError(const std::string& what) : Error(what) {}
};

}  // namespace procwarm
