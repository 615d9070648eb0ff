#pragma once

#include <stdexcept>
#include <string>

namespace gridres {

/// Input that violates a documented precondition or file contract. The CLI
/// maps these to exit code 2.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Malformed grid, plan, feature or config file.
class ParseError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class UnknownCandidateId : public ValidationError {
public:
    explicit UnknownCandidateId(const std::string& id)
        : ValidationError("plan references unknown candidate edge '" + id + "'") {}
};

class DuplicateSelection : public ValidationError {
public:
    explicit DuplicateSelection(const std::string& id)
        : ValidationError("plan selects edge '" + id + "' more than once") {}
};

class CountExceedsSubsetSpace : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class EmptyLossList : public ValidationError {
public:
    EmptyLossList() : ValidationError("loss list is empty") {}
};

class DegenerateVariance : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class ZeroDegreeNode : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class DegenerateSplit : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class EmptyDataset : public ValidationError {
public:
    EmptyDataset() : ValidationError("dataset is empty") {}
};

/// Operand shapes are incompatible for a matrix operation.
class ShapeMismatch : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// A forward value became NaN or infinite.
class NonFiniteValue : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace gridres
