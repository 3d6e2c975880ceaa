#ifndef MLSIF_ERRORS_HPP
#define MLSIF_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace mlsif {

// Base for everything thrown by this library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Bad arguments: empty multisets, out-of-range lengths, mismatched sizes.
class InvalidInput : public Error {
public:
    explicit InvalidInput(const std::string& what) : Error(what) {}
};

// Data unfit for the requested computation (too few observed points,
// zero variance for normalization, constant truth for d2, ...).
class DegenerateData : public Error {
public:
    explicit DegenerateData(const std::string& what) : Error(what) {}
};

// A metric whose preconditions fail on the given data.
class UndefinedMetric : public Error {
public:
    explicit UndefinedMetric(const std::string& what) : Error(what) {}
};

// An imputer asked to fill a segment it cannot handle.
class CannotImpute : public Error {
public:
    explicit CannotImpute(const std::string& what) : Error(what) {}
};

// Training produced a non-finite loss.
class StageFailure : public Error {
public:
    explicit StageFailure(const std::string& what) : Error(what) {}
};

// The selection fell back to the whole series twice in a row.
class ProgressStall : public Error {
public:
    explicit ProgressStall(const std::string& what) : Error(what) {}
};

// File/config syntax problems; carries a 1-based line number when known.
class ParseError : public Error {
public:
    ParseError(const std::string& what, long line = -1)
        : Error(line >= 0 ? what + " (line " + std::to_string(line) + ")" : what),
          line_(line) {}
    long line() const { return line_; }

private:
    long line_;
};

} // namespace mlsif

#endif
