#pragma once

#include <stdexcept>
#include <string>

namespace scm {

// Domain errors carry a stable machine-readable tag used by the CLI
// ("error:<tag>" on stderr, exit code 1).
class ScmError : public std::runtime_error {
public:
    ScmError(std::string tag, const std::string& what)
        : std::runtime_error(what), tag_(std::move(tag)) {}
    const std::string& tag() const noexcept { return tag_; }

private:
    std::string tag_;
};

class BalanceError : public ScmError {
public:
    explicit BalanceError(const std::string& what) : ScmError("balance", what) {}
};

class ConsistencyError : public ScmError {
public:
    explicit ConsistencyError(const std::string& what) : ScmError("consistency", what) {}
};

class ParseError : public ScmError {
public:
    explicit ParseError(const std::string& what) : ScmError("parse", what) {}
};

class IoError : public ScmError {
public:
    explicit IoError(const std::string& what) : ScmError("io", what) {}
};

class RangeError : public ScmError {
public:
    explicit RangeError(const std::string& what) : ScmError("range", what) {}
};

class ShapeError : public ScmError {
public:
    explicit ShapeError(const std::string& what) : ScmError("shape", what) {}
};

class OverflowError : public ScmError {
public:
    explicit OverflowError(const std::string& what) : ScmError("overflow", what) {}
};

class EmptyCohortError : public ScmError {
public:
    explicit EmptyCohortError(const std::string& what) : ScmError("empty_cohort", what) {}
};

class RankError : public ScmError {
public:
    explicit RankError(const std::string& what) : ScmError("rank", what) {}
};

class DegenerateDesignError : public ScmError {
public:
    explicit DegenerateDesignError(const std::string& what) : ScmError("degenerate_design", what) {}
};

class StudyError : public ScmError {
public:
    explicit StudyError(const std::string& what) : ScmError("study", what) {}
};

}  // namespace scm
