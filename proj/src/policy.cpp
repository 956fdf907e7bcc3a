// SPDX-License-Identifier: Apache-2.0
#include "capguard/policy.hpp"

#include <cstdio>
#include <sstream>

#include <json.hpp>

#include "capguard/errors.hpp"

namespace capguard {

using nlohmann::json;

bool operator==(const ApprovedPath& a, const ApprovedPath& b) {
    return a.hash == b.hash && a.plaintext == b.plaintext;
}

bool operator==(const PackagePolicy& a, const PackagePolicy& b) {
    return a.kind == b.kind && a.path == b.path && a.syscalls == b.syscalls &&
           a.capabilities == b.capabilities &&
           a.executed_binaries == b.executed_binaries && a.call_paths == b.call_paths;
}

bool operator==(const PolicyMetadata& a, const PolicyMetadata& b) {
    return a.created_at == b.created_at && a.arch == b.arch &&
           a.classifier_digest == b.classifier_digest;
}

bool operator==(const PolicyDocument& a, const PolicyDocument& b) {
    return a.packages == b.packages && a.flat_binaries == b.flat_binaries &&
           a.metadata == b.metadata;
}

void record_observation(PolicyDocument& doc, const PackageId& terminal, int nr,
                        std::optional<Capability> capability, const CallPath& path,
                        bool retain_plaintext) {
    auto& entry = doc.packages[terminal.path];
    if (entry.path.empty()) {
        entry.path = terminal.path;
        entry.kind = terminal.trust_class == TrustClass::RootModule
                         ? PackagePolicy::Kind::Main
                         : PackagePolicy::Kind::Dep;
    }
    entry.syscalls.insert(nr);
    if (!capability) return;  // unknown syscall: number recorded verbatim

    entry.capabilities.insert(*capability);
    ApprovedPath approved{path.hash, std::nullopt};
    if (retain_plaintext) approved.plaintext = path.packages;
    auto& paths = entry.call_paths[*capability];
    auto [it, inserted] = paths.insert(std::move(approved));
    if (!inserted && !it->plaintext && retain_plaintext) {
        // Same hash recorded earlier without plaintext; keep the readable form.
        auto node = paths.extract(it);
        node.value().plaintext = path.packages;
        paths.insert(std::move(node));
    }
}

void record_exec(PolicyDocument& doc, const std::string& source_package,
                 const std::string& binary_name) {
    if (!source_package.empty()) {
        auto& entry = doc.packages[source_package];
        if (entry.path.empty()) entry.path = source_package;
        entry.executed_binaries.insert(binary_name);
    }
    doc.flat_binaries.try_emplace(binary_name);
}

void record_flat_observation(PolicyDocument& doc, const std::string& binary_name,
                             Capability capability) {
    doc.flat_binaries[binary_name].insert(capability);
}

namespace {

std::string hash_to_hex(uint64_t hash) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(hash));
    return buf;
}

uint64_t hex_to_hash(const std::string& hex, const std::string& context) {
    if (hex.size() != 16 || hex.find_first_not_of("0123456789abcdef") != std::string::npos) {
        throw PolicyError(context + ": hash must be 16 lowercase hex digits");
    }
    return std::stoull(hex, nullptr, 16);
}

json capability_set_to_json(const std::set<Capability>& caps) {
    std::set<std::string> names;
    for (Capability cap : caps) names.insert(std::string(capability_name(cap)));
    return json(names);
}

json package_to_json(const PackagePolicy& pkg) {
    json entry;
    entry["type"] = pkg.kind == PackagePolicy::Kind::Main ? "main" : "dep";
    entry["path"] = pkg.path;
    entry["syscalls"] = json(pkg.syscalls);
    entry["capabilities"] = capability_set_to_json(pkg.capabilities);
    entry["executed_binaries"] = json(pkg.executed_binaries);
    json paths = json::object();
    for (const auto& [cap, set] : pkg.call_paths) {
        json arr = json::array();
        for (const auto& approved : set) {
            json p;
            p["hash"] = hash_to_hex(approved.hash);
            if (approved.plaintext) p["path"] = *approved.plaintext;
            arr.push_back(std::move(p));
        }
        paths[std::string(capability_name(cap))] = std::move(arr);
    }
    entry["call_paths"] = std::move(paths);
    return entry;
}

Capability parse_capability_or_throw(const std::string& name,
                                     const std::string& context) {
    auto cap = parse_capability(name);
    if (!cap) throw PolicyError(context + ": unknown capability \"" + name + "\"");
    return *cap;
}

PackagePolicy package_from_json(const std::string& key, const json& entry,
                                std::vector<std::string>* warnings) {
    const std::string ctx = "package \"" + key + "\"";
    if (!entry.is_object()) throw PolicyError(ctx + ": entry is not an object");

    PackagePolicy pkg;
    try {
        const std::string type = entry.value("type", "dep");
        if (type != "dep" && type != "main") {
            throw PolicyError(ctx + ": type must be \"dep\" or \"main\"");
        }
        pkg.kind = type == "main" ? PackagePolicy::Kind::Main : PackagePolicy::Kind::Dep;
        pkg.path = entry.value("path", key);
        if (pkg.path != key) {
            throw PolicyError(ctx + ": path field does not match entry key");
        }
        for (const auto& nr : entry.value("syscalls", json::array())) {
            pkg.syscalls.insert(nr.get<int>());
        }
        for (const auto& name : entry.value("capabilities", json::array())) {
            pkg.capabilities.insert(
                parse_capability_or_throw(name.get<std::string>(), ctx));
        }
        for (const auto& name : entry.value("executed_binaries", json::array())) {
            pkg.executed_binaries.insert(name.get<std::string>());
        }

        const char* paths_key = nullptr;
        if (entry.contains("call_paths")) {
            paths_key = "call_paths";
        } else if (entry.contains("syscalls_paths")) {
            paths_key = "syscalls_paths";
            if (warnings) {
                warnings->push_back(ctx +
                                    ": legacy key \"syscalls_paths\" accepted as "
                                    "\"call_paths\"");
            }
        }
        if (paths_key) {
            for (const auto& [cap_name, arr] : entry[paths_key].items()) {
                Capability cap = parse_capability_or_throw(cap_name, ctx);
                auto& set = pkg.call_paths[cap];
                for (const auto& p : arr) {
                    ApprovedPath approved;
                    approved.hash =
                        hex_to_hash(p.at("hash").get<std::string>(), ctx);
                    if (p.contains("path")) {
                        approved.plaintext = p["path"].get<std::vector<std::string>>();
                        if (path_hash(*approved.plaintext) != approved.hash) {
                            throw PolicyError(ctx +
                                              ": plaintext path does not match hash");
                        }
                    }
                    set.insert(std::move(approved));
                }
                // Call paths imply the capability itself.
                if (!set.empty()) pkg.capabilities.insert(cap);
            }
        }
    } catch (const json::exception& e) {
        throw PolicyError(ctx + ": " + e.what());
    }
    return pkg;
}

bool looks_like_package_entry(const json& value) {
    return value.is_object() && (value.contains("path") || value.contains("syscalls") ||
                                 value.contains("capabilities"));
}

}  // namespace

std::string serialize(const PolicyDocument& doc) {
    json root;
    json packages = json::object();
    for (const auto& [path, pkg] : doc.packages) {
        packages[path] = package_to_json(pkg);
    }
    root["packages"] = std::move(packages);
    json flat = json::object();
    for (const auto& [name, caps] : doc.flat_binaries) {
        flat[name] = capability_set_to_json(caps);
    }
    root["flat_binaries"] = std::move(flat);
    root["metadata"] = {{"created_at", doc.metadata.created_at},
                        {"arch", doc.metadata.arch},
                        {"classifier_digest", doc.metadata.classifier_digest}};
    return root.dump(2) + "\n";
}

PolicyDocument parse_policy(const std::string& bytes,
                            std::vector<std::string>* warnings) {
    json root;
    try {
        root = json::parse(bytes);
    } catch (const json::parse_error& e) {
        throw PolicyError(std::string("malformed policy JSON: ") + e.what());
    }
    if (!root.is_object()) throw PolicyError("policy root is not a JSON object");

    PolicyDocument doc;
    if (root.contains("packages")) {
        for (const auto& [key, entry] : root["packages"].items()) {
            doc.packages.emplace(key, package_from_json(key, entry, warnings));
        }
        if (root.contains("flat_binaries")) {
            for (const auto& [name, arr] : root["flat_binaries"].items()) {
                auto& set = doc.flat_binaries[name];
                for (const auto& cap_name : arr) {
                    set.insert(parse_capability_or_throw(
                        cap_name.get<std::string>(), "flat binary \"" + name + "\""));
                }
            }
        }
        if (root.contains("metadata")) {
            const auto& meta = root["metadata"];
            doc.metadata.created_at = meta.value("created_at", "");
            doc.metadata.arch = meta.value("arch", "");
            doc.metadata.classifier_digest = meta.value("classifier_digest", "");
        }
    } else {
        // Legacy flat layout: package entries at top level, no metadata.
        if (warnings) warnings->push_back("legacy flat policy layout accepted");
        for (const auto& [key, entry] : root.items()) {
            if (!looks_like_package_entry(entry)) {
                throw PolicyError("package \"" + key +
                                  "\": not a recognizable package entry");
            }
            doc.packages.emplace(key, package_from_json(key, entry, warnings));
        }
    }

    // Every referenced executed binary gets a flat entry, possibly empty.
    for (const auto& [_, pkg] : doc.packages) {
        for (const auto& name : pkg.executed_binaries) {
            doc.flat_binaries.try_emplace(name);
        }
    }
    return doc;
}

namespace {

// Empty tags act as wildcards so that freshly constructed documents merge
// cleanly with learned ones.
void check_compatible(const PolicyMetadata& a, const PolicyMetadata& b) {
    if (!a.arch.empty() && !b.arch.empty() && a.arch != b.arch) {
        throw MetadataMismatchError("architecture mismatch: " + a.arch + " vs " +
                                    b.arch);
    }
    if (!a.classifier_digest.empty() && !b.classifier_digest.empty() &&
        a.classifier_digest != b.classifier_digest) {
        throw MetadataMismatchError("classifier digest mismatch");
    }
}

void merge_package(PackagePolicy& into, const PackagePolicy& from) {
    into.syscalls.insert(from.syscalls.begin(), from.syscalls.end());
    into.capabilities.insert(from.capabilities.begin(), from.capabilities.end());
    into.executed_binaries.insert(from.executed_binaries.begin(),
                                  from.executed_binaries.end());
    for (const auto& [cap, paths] : from.call_paths) {
        auto& target = into.call_paths[cap];
        for (const auto& p : paths) {
            auto [it, inserted] = target.insert(p);
            if (!inserted && !it->plaintext && p.plaintext) {
                auto node = target.extract(it);
                node.value().plaintext = p.plaintext;
                target.insert(std::move(node));
            }
        }
    }
}

}  // namespace

PolicyDocument merge(const PolicyDocument& a, const PolicyDocument& b) {
    check_compatible(a.metadata, b.metadata);

    PolicyDocument out = a;
    for (const auto& [path, pkg] : b.packages) {
        auto it = out.packages.find(path);
        if (it == out.packages.end()) {
            out.packages.emplace(path, pkg);
        } else {
            merge_package(it->second, pkg);
        }
    }
    for (const auto& [name, caps] : b.flat_binaries) {
        out.flat_binaries[name].insert(caps.begin(), caps.end());
    }
    if (out.metadata.arch.empty()) out.metadata.arch = b.metadata.arch;
    if (out.metadata.classifier_digest.empty()) {
        out.metadata.classifier_digest = b.metadata.classifier_digest;
    }
    // Earliest timestamp wins, keeping merge commutative.
    if (out.metadata.created_at.empty() ||
        (!b.metadata.created_at.empty() &&
         b.metadata.created_at < out.metadata.created_at)) {
        out.metadata.created_at = b.metadata.created_at;
    }
    return out;
}

bool PackageDiff::empty() const {
    return added_capabilities.empty() && removed_capabilities.empty() &&
           added_syscalls.empty() && removed_syscalls.empty() &&
           added_paths.empty() && removed_paths.empty() &&
           added_binaries.empty() && removed_binaries.empty();
}

bool DiffReport::empty() const {
    return added_packages.empty() && removed_packages.empty() &&
           changed_packages.empty() && added_flat.empty() && removed_flat.empty();
}

namespace {

template <typename T>
std::set<T> set_minus(const std::set<T>& a, const std::set<T>& b) {
    std::set<T> out;
    for (const auto& x : a) {
        if (!b.count(x)) out.insert(x);
    }
    return out;
}

std::set<uint64_t> path_hashes(const std::set<ApprovedPath>& paths) {
    std::set<uint64_t> out;
    for (const auto& p : paths) out.insert(p.hash);
    return out;
}

}  // namespace

DiffReport diff(const PolicyDocument& old_doc, const PolicyDocument& new_doc) {
    check_compatible(old_doc.metadata, new_doc.metadata);

    DiffReport report;
    for (const auto& [path, _] : new_doc.packages) {
        if (!old_doc.packages.count(path)) report.added_packages.insert(path);
    }
    for (const auto& [path, _] : old_doc.packages) {
        if (!new_doc.packages.count(path)) report.removed_packages.insert(path);
    }
    for (const auto& [path, new_pkg] : new_doc.packages) {
        auto it = old_doc.packages.find(path);
        if (it == old_doc.packages.end()) continue;
        const auto& old_pkg = it->second;

        PackageDiff d;
        d.added_capabilities = set_minus(new_pkg.capabilities, old_pkg.capabilities);
        d.removed_capabilities = set_minus(old_pkg.capabilities, new_pkg.capabilities);
        d.added_syscalls = set_minus(new_pkg.syscalls, old_pkg.syscalls);
        d.removed_syscalls = set_minus(old_pkg.syscalls, new_pkg.syscalls);
        d.added_binaries =
            set_minus(new_pkg.executed_binaries, old_pkg.executed_binaries);
        d.removed_binaries =
            set_minus(old_pkg.executed_binaries, new_pkg.executed_binaries);

        for (const auto& [cap, paths] : new_pkg.call_paths) {
            std::set<uint64_t> old_hashes;
            if (auto pit = old_pkg.call_paths.find(cap); pit != old_pkg.call_paths.end()) {
                old_hashes = path_hashes(pit->second);
            }
            auto added = set_minus(path_hashes(paths), old_hashes);
            if (!added.empty()) d.added_paths[cap] = std::move(added);
        }
        for (const auto& [cap, paths] : old_pkg.call_paths) {
            std::set<uint64_t> new_hashes;
            if (auto pit = new_pkg.call_paths.find(cap); pit != new_pkg.call_paths.end()) {
                new_hashes = path_hashes(pit->second);
            }
            auto removed = set_minus(path_hashes(paths), new_hashes);
            if (!removed.empty()) d.removed_paths[cap] = std::move(removed);
        }
        if (!d.empty()) report.changed_packages.emplace(path, std::move(d));
    }
    for (const auto& [name, caps] : new_doc.flat_binaries) {
        std::set<Capability> old_caps;
        if (auto it = old_doc.flat_binaries.find(name); it != old_doc.flat_binaries.end()) {
            old_caps = it->second;
        } else {
            report.added_flat[name] = caps;
            continue;
        }
        auto added = set_minus(caps, old_caps);
        if (!added.empty()) report.added_flat[name] = std::move(added);
    }
    for (const auto& [name, caps] : old_doc.flat_binaries) {
        auto it = new_doc.flat_binaries.find(name);
        if (it == new_doc.flat_binaries.end()) {
            report.removed_flat[name] = caps;
            continue;
        }
        auto removed = set_minus(caps, it->second);
        if (!removed.empty()) report.removed_flat[name] = std::move(removed);
    }
    return report;
}

std::string render_diff_text(const DiffReport& report) {
    if (report.empty()) return "no changes\n";
    std::ostringstream out;
    for (const auto& p : report.added_packages) out << "+ package " << p << "\n";
    for (const auto& p : report.removed_packages) out << "- package " << p << "\n";
    for (const auto& [path, d] : report.changed_packages) {
        out << "~ package " << path << "\n";
        for (auto cap : d.added_capabilities) {
            out << "  + capability " << capability_name(cap) << "\n";
        }
        for (auto cap : d.removed_capabilities) {
            out << "  - capability " << capability_name(cap) << "\n";
        }
        for (int nr : d.added_syscalls) out << "  + syscall " << nr << "\n";
        for (int nr : d.removed_syscalls) out << "  - syscall " << nr << "\n";
        for (const auto& [cap, hashes] : d.added_paths) {
            for (uint64_t h : hashes) {
                out << "  + call path " << capability_name(cap) << " "
                    << hash_to_hex(h) << "\n";
            }
        }
        for (const auto& [cap, hashes] : d.removed_paths) {
            for (uint64_t h : hashes) {
                out << "  - call path " << capability_name(cap) << " "
                    << hash_to_hex(h) << "\n";
            }
        }
        for (const auto& b : d.added_binaries) out << "  + binary " << b << "\n";
        for (const auto& b : d.removed_binaries) out << "  - binary " << b << "\n";
    }
    for (const auto& [name, caps] : report.added_flat) {
        for (auto cap : caps) {
            out << "+ flat " << name << " " << capability_name(cap) << "\n";
        }
    }
    for (const auto& [name, caps] : report.removed_flat) {
        for (auto cap : caps) {
            out << "- flat " << name << " " << capability_name(cap) << "\n";
        }
    }
    return out.str();
}

std::string render_diff_json(const DiffReport& report) {
    json root;
    root["added_packages"] = json(report.added_packages);
    root["removed_packages"] = json(report.removed_packages);
    json changed = json::object();
    for (const auto& [path, d] : report.changed_packages) {
        json entry;
        entry["added_capabilities"] = capability_set_to_json(d.added_capabilities);
        entry["removed_capabilities"] = capability_set_to_json(d.removed_capabilities);
        entry["added_syscalls"] = json(d.added_syscalls);
        entry["removed_syscalls"] = json(d.removed_syscalls);
        json ap = json::object(), rp = json::object();
        for (const auto& [cap, hashes] : d.added_paths) {
            json arr = json::array();
            for (uint64_t h : hashes) arr.push_back(hash_to_hex(h));
            ap[std::string(capability_name(cap))] = std::move(arr);
        }
        for (const auto& [cap, hashes] : d.removed_paths) {
            json arr = json::array();
            for (uint64_t h : hashes) arr.push_back(hash_to_hex(h));
            rp[std::string(capability_name(cap))] = std::move(arr);
        }
        entry["added_paths"] = std::move(ap);
        entry["removed_paths"] = std::move(rp);
        entry["added_binaries"] = json(d.added_binaries);
        entry["removed_binaries"] = json(d.removed_binaries);
        changed[path] = std::move(entry);
    }
    root["changed_packages"] = std::move(changed);
    json af = json::object(), rf = json::object();
    for (const auto& [name, caps] : report.added_flat) {
        af[name] = capability_set_to_json(caps);
    }
    for (const auto& [name, caps] : report.removed_flat) {
        rf[name] = capability_set_to_json(caps);
    }
    root["added_flat"] = std::move(af);
    root["removed_flat"] = std::move(rf);
    return root.dump(2) + "\n";
}

std::string render_audit(const PolicyDocument& doc) {
    std::ostringstream out;
    for (const auto& [path, pkg] : doc.packages) {
        out << path << " (" << (pkg.kind == PackagePolicy::Kind::Main ? "main" : "dep")
            << ")\n";
        out << "  syscalls: " << pkg.syscalls.size() << "\n";

        // Group capabilities by taxonomy category, category order fixed.
        for (auto cat : {CapabilityCategory::File, CapabilityCategory::Network,
                         CapabilityCategory::Execution, CapabilityCategory::SystemState,
                         CapabilityCategory::Memory}) {
            std::ostringstream caps_line;
            bool any = false;
            for (Capability cap : pkg.capabilities) {
                if (category_of(cap) != cat) continue;
                caps_line << "    " << capability_name(cap);
                if (auto it = pkg.call_paths.find(cap); it != pkg.call_paths.end()) {
                    caps_line << " (" << it->second.size() << " call path"
                              << (it->second.size() == 1 ? "" : "s") << ")";
                }
                caps_line << "\n";
                any = true;
            }
            if (any) {
                out << "  " << category_name(cat) << ":\n" << caps_line.str();
            }
        }
        if (!pkg.executed_binaries.empty()) {
            out << "  executed binaries:";
            for (const auto& b : pkg.executed_binaries) out << " " << b;
            out << "\n";
        }
    }
    if (!doc.flat_binaries.empty()) {
        out << "flat binaries:\n";
        for (const auto& [name, caps] : doc.flat_binaries) {
            out << "  " << name << ":";
            std::set<std::string> names;
            for (auto cap : caps) names.insert(std::string(capability_name(cap)));
            for (const auto& n : names) out << " " << n;
            out << "\n";
        }
    }
    return out.str();
}

}  // namespace capguard
