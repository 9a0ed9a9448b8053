#pragma once

#include <stdexcept>
#include <string>

namespace serendip {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Dataset files missing, malformed, or referentially broken.
class DatasetError : public Error {
public:
    using Error::Error;
};

// Run configuration unparseable or infeasible (CLI exit code 2).
class ConfigError : public Error {
public:
    using Error::Error;
};

// LLM endpoint unreachable, auth failure, or malformed reply (CLI exit code 3).
class TransportError : public Error {
public:
    using Error::Error;
};

// Prompt cannot be rendered from the available data.
class PromptError : public Error {
public:
    using Error::Error;
};

}  // namespace serendip
