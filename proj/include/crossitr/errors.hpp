#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace crossitr {

// Root of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ArgumentError : public Error {
public:
    using Error::Error;
};

// A named column could not be resolved against the CSV header.
class SchemaError : public Error {
public:
    SchemaError(std::string column, const std::string& what)
        : Error(what), column_(std::move(column)) {}
    const std::string& column() const noexcept { return column_; }

private:
    std::string column_;
};

// A file could not be opened for reading or writing.
class IoError : public Error {
public:
    using Error::Error;
};

class EmptyInputError : public Error {
public:
    using Error::Error;
};

struct RowIssue {
    std::size_t row;  // 1-based data row (header excluded)
    std::string message;
};

class ValidationError : public Error {
public:
    explicit ValidationError(std::vector<RowIssue> issues);
    const std::vector<RowIssue>& issues() const noexcept { return issues_; }

private:
    std::vector<RowIssue> issues_;
};

class NumericError : public Error {
public:
    using Error::Error;
};

// A CV training fold did not contain both classification labels among its
// positively weighted rows.
class PoorAllocationError : public Error {
public:
    explicit PoorAllocationError(std::size_t fold);
    std::size_t fold() const noexcept { return fold_; }

private:
    std::size_t fold_;
};

// Every reward (hence every classification weight) is zero.
class DegenerateRewardError : public Error {
public:
    using Error::Error;
};

// Inverse-propensity value with an empty agreement set.
class UndefinedValueError : public Error {
public:
    using Error::Error;
};

class InsufficientDataError : public Error {
public:
    using Error::Error;
};

// Text emitted when cross-validation cannot proceed because of label
// allocation. Shared by the library and the CLI.
inline constexpr const char* kPoorAllocationWarning =
    "cross-validation failed: a training fold did not observe both values of "
    "sign(R)*A1; when sign(R)*A1 is poorly allocated the tuning of lambda and "
    "sigma may fail. Consider more subjects or adjusting the randomization "
    "probabilities.";

}  // namespace crossitr
