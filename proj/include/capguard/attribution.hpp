// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "capguard/package.hpp"

namespace capguard {

// Ordered call path, outermost first, terminal package last.
// Consecutive duplicates are collapsed; hash is path_hash(packages).
struct CallPath {
    std::vector<std::string> packages;
    uint64_t hash = 0;
};

// Outcome of stack attribution: either the responsible terminal package
// with its call path, or a trusted runtime-internal classification.
struct Attribution {
    enum class Kind : uint8_t { Attributed, RuntimeInternal };
    Kind kind = Kind::RuntimeInternal;
    PackageId terminal;  // Attributed only
    CallPath path;       // Attributed only

    bool attributed() const { return kind == Kind::Attributed; }
};

// FNV-1a 64-bit over the UTF-8 bytes of each element, with a single 0x1F
// separator byte between consecutive elements. Deterministic across
// platforms; the policy interchange hash.
uint64_t path_hash(std::span<const std::string> packages);

// Attributes a resolved stack (innermost frame first). Throws
// AttributionError on an empty frame list.
Attribution attribute(std::span<const ResolvedFrame> frames,
                      const ClassifierConfig& config);

}  // namespace capguard
