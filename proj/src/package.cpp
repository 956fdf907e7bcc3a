// SPDX-License-Identifier: Apache-2.0
#include "capguard/package.hpp"

#include <cstdio>

#include "capguard/attribution.hpp"
#include "capguard/errors.hpp"

namespace capguard {

std::string_view trust_class_name(TrustClass tc) {
    switch (tc) {
        case TrustClass::Runtime: return "runtime";
        case TrustClass::Stdlib: return "stdlib";
        case TrustClass::RootModule: return "root-module";
        case TrustClass::ThirdParty: return "third-party";
    }
    return "";
}

std::string classifier_digest(const ClassifierConfig& config) {
    // Same FNV-1a construction as path_hash, with the flag appended so
    // path-rule changes also invalidate merges.
    std::vector<std::string> parts = config.root_module_prefixes;
    parts.push_back(config.include_root_module ? "root-paths:on" : "root-paths:off");
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(path_hash(parts)));
    return buf;
}

std::string extract_package(std::string_view function_name) {
    if (function_name.empty()) throw ClassifyError("empty symbol name");

    // Generic instantiations: classify the prefix before the first '['.
    std::string_view name = function_name;
    if (auto bracket = name.find('['); bracket != std::string_view::npos) {
        name = name.substr(0, bracket);
    }

    const auto slash = name.rfind('/');
    const size_t search_from = slash == std::string_view::npos ? 0 : slash + 1;
    const auto dot = name.find('.', search_from);
    if (dot == std::string_view::npos || dot == 0) {
        throw ClassifyError("not a Go-convention symbol: \"" +
                            std::string(function_name) + "\"");
    }
    return std::string(name.substr(0, dot));
}

TrustClass classify_package(std::string_view path, const ClassifierConfig& config) {
    if (path == "runtime" || path.starts_with("runtime/")) {
        return TrustClass::Runtime;
    }
    if (path == "main") return TrustClass::RootModule;
    for (const auto& prefix : config.root_module_prefixes) {
        // Prefixes match on import path segment boundaries only.
        if (path == prefix ||
            (path.starts_with(prefix) && path[prefix.size()] == '/')) {
            return TrustClass::RootModule;
        }
    }
    // Stdlib import paths have no domain-qualified first segment.
    const auto first_seg = path.substr(0, path.find('/'));
    if (first_seg.find('.') == std::string_view::npos) {
        return TrustClass::Stdlib;
    }
    return TrustClass::ThirdParty;
}

ResolvedFrame frame_from_symbol(std::string_view function_name,
                                const ClassifierConfig& config, uint64_t address) {
    ResolvedFrame frame;
    frame.function_name = std::string(function_name);
    frame.address = address;
    try {
        frame.package.path = extract_package(function_name);
        frame.package.trust_class = classify_package(frame.package.path, config);
    } catch (const ClassifyError&) {
        // Non-Go symbol, most likely C code reached through CGO.
        frame.package.path = "cgo/" + std::string(function_name);
        frame.package.trust_class = TrustClass::ThirdParty;
    }
    return frame;
}

}  // namespace capguard
