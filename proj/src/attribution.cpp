// SPDX-License-Identifier: Apache-2.0
#include "capguard/attribution.hpp"

#include "capguard/errors.hpp"

namespace capguard {

namespace {
constexpr uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
constexpr uint64_t kFnvPrime = 0x100000001b3ULL;
constexpr unsigned char kSeparator = 0x1F;
}  // namespace

uint64_t path_hash(std::span<const std::string> packages) {
    uint64_t hash = kFnvOffset;
    auto feed = [&hash](unsigned char byte) {
        hash ^= byte;
        hash *= kFnvPrime;
    };
    bool first = true;
    for (const auto& pkg : packages) {
        if (!first) feed(kSeparator);
        first = false;
        for (char c : pkg) feed(static_cast<unsigned char>(c));
    }
    return hash;
}

Attribution attribute(std::span<const ResolvedFrame> frames,
                      const ClassifierConfig& config) {
    if (frames.empty()) throw AttributionError("empty stack");

    // Terminal: innermost application or third-party frame.
    const ResolvedFrame* terminal = nullptr;
    size_t terminal_idx = 0;
    for (size_t i = 0; i < frames.size(); ++i) {
        const TrustClass tc = frames[i].package.trust_class;
        if (tc == TrustClass::RootModule || tc == TrustClass::ThirdParty) {
            terminal = &frames[i];
            terminal_idx = i;
            break;
        }
    }
    if (!terminal) {
        // Only runtime and stdlib wrappers on the stack: trusted
        // infrastructure, exempt from policy.
        return Attribution{};
    }

    Attribution result;
    result.kind = Attribution::Kind::Attributed;
    result.terminal = terminal->package;

    // Call path, outermost first, down to and including the terminal frame.
    // Root-module packages participate only when configured; consecutive
    // duplicates collapse to one element.
    auto keep = [&](TrustClass tc) {
        return tc == TrustClass::ThirdParty ||
               (tc == TrustClass::RootModule && config.include_root_module);
    };
    auto& path = result.path.packages;
    for (size_t i = frames.size(); i-- > terminal_idx;) {
        const auto& pkg = frames[i].package;
        if (!keep(pkg.trust_class)) continue;
        if (path.empty() || path.back() != pkg.path) path.push_back(pkg.path);
    }
    // The terminal always appears, even when its class is path-filtered.
    if (path.empty() || path.back() != result.terminal.path) {
        path.push_back(result.terminal.path);
    }
    result.path.hash = path_hash(path);
    return result;
}

}  // namespace capguard
