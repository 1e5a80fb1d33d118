#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace cacherag {

// Base for every error the engine raises on purpose. Anything else reaching
// the CLI is treated as an internal failure.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Caller misuse: missing template slot, invalid config, empty subgraph passed
// to the summarizer.
class UsageError : public Error {
public:
    using Error::Error;
};

// Malformed input text (triple files, scripts, config, model output).
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line = 0)
        : Error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

// Live backend exhausted its retries.
class TransportError : public Error {
public:
    using Error::Error;
};

// Query compilation produced nothing executable. When every op was dropped for
// referencing predicates outside the local schema, breadth_fallback() is set
// and the pipeline falls back to star-pattern exploration.
class CompileError : public Error {
public:
    CompileError(const std::string& what, bool breadth_fallback)
        : Error(what), breadth_fallback_(breadth_fallback) {}

    bool breadth_fallback() const noexcept { return breadth_fallback_; }

private:
    bool breadth_fallback_;
};

class ExecutionError : public Error {
public:
    using Error::Error;
};

}  // namespace cacherag
