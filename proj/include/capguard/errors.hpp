// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace capguard {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed trace file. Carries the 1-based line number when known.
struct TraceError : Error {
    TraceError(const std::string& msg, size_t line = 0)
        : Error(line ? "trace line " + std::to_string(line) + ": " + msg : msg),
          line(line) {}
    size_t line;
};

struct ElfError : Error {
    using Error::Error;
};

// Binary has no usable symbol table (stripped or empty .symtab).
struct SymbolsUnavailableError : ElfError {
    using ElfError::ElfError;
};

struct UnresolvableAddressError : Error {
    explicit UnresolvableAddressError(uint64_t addr)
        : Error("unresolvable address 0x" + to_hex(addr)), addr(addr) {}
    uint64_t addr;

private:
    static std::string to_hex(uint64_t v);
};

struct ClassifyError : Error {
    using Error::Error;
};

struct MappingError : Error {
    using Error::Error;
};

struct AttributionError : Error {
    using Error::Error;
};

struct PolicyError : Error {
    using Error::Error;
};

// Two documents or configurations with incompatible metadata.
struct MetadataMismatchError : PolicyError {
    using PolicyError::PolicyError;
};

struct StreamError : Error {
    using Error::Error;
};

}  // namespace capguard
