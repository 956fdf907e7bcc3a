// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace capguard {

// Function-symbol table extracted from an ELF64 little-endian binary.
// Immutable after load; lookups are read-only and shareable.
class SymbolTable {
public:
    struct Entry {
        uint64_t start = 0;
        uint64_t size = 0;
        std::string name;
    };

    // Parses the symbol and string table sections. Throws ElfError for
    // non-ELF input and SymbolsUnavailableError for stripped binaries.
    static SymbolTable load(std::string_view bytes, std::string binary_path = {});
    static SymbolTable load_file(const std::string& path);

    // Returns the symbol whose [start, start+size) contains addr. Addresses
    // in a padding gap shorter than 64 bytes resolve to the preceding
    // symbol; larger gaps and addresses below the first symbol throw
    // UnresolvableAddressError.
    const Entry& resolve(uint64_t addr) const;

    const std::vector<Entry>& entries() const { return entries_; }
    const std::string& binary_path() const { return binary_path_; }

private:
    std::vector<Entry> entries_;  // sorted by start
    std::string binary_path_;
};

// Gap past a symbol's end still attributed to it (trailing padding).
inline constexpr uint64_t kSymbolGapSlack = 64;

}  // namespace capguard
