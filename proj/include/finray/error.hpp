#pragma once

#include <stdexcept>
#include <string>

namespace finray {

// Kinds map one-to-one onto CLI exit codes (see exit_code()).
enum class ErrorKind {
    Config,          // bad configuration / usage
    Contract,        // precondition violated by the caller
    NotADataset,     // wrong magic
    VersionMismatch, // right magic, unsupported version
    Truncated,       // payload shorter than the header promises
    Corrupt,         // structurally invalid payload
    Io,
    Numeric,         // NaN / overflow during training
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

inline int exit_code(ErrorKind kind) noexcept
{
    switch (kind) {
    case ErrorKind::Config:
    case ErrorKind::Contract:
        return 1;
    case ErrorKind::Numeric:
        return 3;
    default:
        return 2;
    }
}

inline void require(bool cond, const std::string& msg)
{
    if (!cond)
        throw Error(ErrorKind::Contract, msg);
}

} // namespace finray
