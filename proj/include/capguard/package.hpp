// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace capguard {

enum class TrustClass : uint8_t { Runtime, Stdlib, RootModule, ThirdParty };

std::string_view trust_class_name(TrustClass tc);

struct ClassifierConfig {
    // Package path prefixes classified as the application's own module,
    // in addition to "main".
    std::vector<std::string> root_module_prefixes;
    // Whether root-module frames participate in call paths.
    bool include_root_module = false;
};

// Stable fingerprint of a classifier configuration. Policies learned under
// different classifiers are incomparable and refuse to merge.
std::string classifier_digest(const ClassifierConfig& config);

struct PackageId {
    std::string path;
    TrustClass trust_class = TrustClass::ThirdParty;
};

struct ResolvedFrame {
    std::string function_name;
    PackageId package;
    uint64_t address = 0;  // 0 when the source stack was Symbolic
};

// Extracts the package import path from a Go-convention symbol name:
// everything up to the last '/', extended to the first '.' that follows.
// Generic instantiations are classified by the prefix before the first '['.
// Throws ClassifyError when the name has no '.' at or after the last '/'.
std::string extract_package(std::string_view function_name);

TrustClass classify_package(std::string_view path, const ClassifierConfig& config);

// extract + classify, mapping non-Go symbols (e.g. C symbols reached via
// foreign-function calls) to a synthetic third-party package "cgo/<symbol>".
ResolvedFrame frame_from_symbol(std::string_view function_name,
                                const ClassifierConfig& config,
                                uint64_t address = 0);

}  // namespace capguard
