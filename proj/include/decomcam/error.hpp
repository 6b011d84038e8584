#pragma once

#include <stdexcept>
#include <string>

namespace decomcam {

/// Root of every failure the library reports.
class error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Caller passed something outside an operation's precondition.
class invalid_argument : public error {
public:
    using error::error;
};

/// A numerical routine (SVD, eigensolver) did not produce a usable result.
class computation_failed : public error {
public:
    using error::error;
};

/// Bytes on disk or on the wire do not follow the expected layout.
class format_error : public error {
public:
    format_error(const std::string& what, std::size_t offset)
        : error(what + " (at byte offset " + std::to_string(offset) + ")"), offset_(offset) {}

    std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

/// A file or socket could not be opened or read at all.
class io_error : public error {
public:
    using error::error;
};

/// Well-formed container that lacks a required entry or has inconsistent shapes.
class schema_error : public error {
public:
    using error::error;
};

/// Failure in one stage of the explain pipeline, tagged with that stage.
class stage_error : public error {
public:
    stage_error(std::string stage, const std::string& what)
        : error("[" + stage + "] " + what), stage_(std::move(stage)) {}

    const std::string& stage() const noexcept { return stage_; }

private:
    std::string stage_;
};

} // namespace decomcam
