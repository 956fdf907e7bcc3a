// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "capguard/attribution.hpp"
#include "capguard/capability.hpp"
#include "capguard/package.hpp"

namespace capguard {

// One approved call path. Identity is the hash; the plaintext packages are
// retained for audit when plaintext retention is enabled.
struct ApprovedPath {
    uint64_t hash = 0;
    std::optional<std::vector<std::string>> plaintext;

    bool operator<(const ApprovedPath& other) const { return hash < other.hash; }
};

struct PackagePolicy {
    enum class Kind : uint8_t { Dep, Main };
    Kind kind = Kind::Dep;
    std::string path;
    std::set<int> syscalls;
    std::set<Capability> capabilities;
    std::set<std::string> executed_binaries;
    std::map<Capability, std::set<ApprovedPath>> call_paths;
};

struct PolicyMetadata {
    std::string created_at;
    std::string arch;               // syscall mapping architecture tag
    std::string classifier_digest;  // see classifier_digest()
};

// The allowlist: per-package capability and call-path sets, plus flat
// post-exec allowlists keyed by executable name.
struct PolicyDocument {
    std::map<std::string, PackagePolicy> packages;
    std::map<std::string, std::set<Capability>> flat_binaries;
    PolicyMetadata metadata;
};

bool operator==(const ApprovedPath& a, const ApprovedPath& b);
bool operator==(const PackagePolicy& a, const PackagePolicy& b);
bool operator==(const PolicyMetadata& a, const PolicyMetadata& b);
bool operator==(const PolicyDocument& a, const PolicyDocument& b);

// Analysis-mode accumulation. All record operations are idempotent
// set-unions, so observation order does not affect the final document.
// `capability` is nullopt for syscalls absent from the mapping; the number
// is still recorded verbatim.
void record_observation(PolicyDocument& doc, const PackageId& terminal, int nr,
                        std::optional<Capability> capability, const CallPath& path,
                        bool retain_plaintext = true);

void record_exec(PolicyDocument& doc, const std::string& source_package,
                 const std::string& binary_name);

void record_flat_observation(PolicyDocument& doc, const std::string& binary_name,
                             Capability capability);

// Canonical JSON: sorted keys and sorted sets, so equal documents produce
// byte-identical output.
std::string serialize(const PolicyDocument& doc);

// Accepts the current layout, the legacy flat layout (package entries at
// top level), the "syscalls_paths" alias for "call_paths", and the
// CAP_MODIFY_SYSTEM_STATE capability alias. Throws PolicyError naming the
// offending package entry on schema violations.
PolicyDocument parse_policy(const std::string& bytes,
                            std::vector<std::string>* warnings = nullptr);

// Field-wise set union. Throws MetadataMismatchError unless both documents
// share the same arch and classifier digest.
PolicyDocument merge(const PolicyDocument& a, const PolicyDocument& b);

struct PackageDiff {
    std::set<Capability> added_capabilities, removed_capabilities;
    std::set<int> added_syscalls, removed_syscalls;
    std::map<Capability, std::set<uint64_t>> added_paths, removed_paths;
    std::set<std::string> added_binaries, removed_binaries;

    bool empty() const;
};

struct DiffReport {
    std::set<std::string> added_packages, removed_packages;
    std::map<std::string, PackageDiff> changed_packages;
    std::map<std::string, std::set<Capability>> added_flat, removed_flat;

    bool empty() const;
};

DiffReport diff(const PolicyDocument& old_doc, const PolicyDocument& new_doc);

std::string render_diff_text(const DiffReport& report);
std::string render_diff_json(const DiffReport& report);

// Sorted per-package listing with capabilities grouped by taxonomy category.
std::string render_audit(const PolicyDocument& doc);

}  // namespace capguard
