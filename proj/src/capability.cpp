// SPDX-License-Identifier: Apache-2.0
#include "capguard/capability.hpp"

#include <array>
#include <istream>
#include <sstream>

#include "capguard/errors.hpp"

namespace capguard {

namespace {

struct CapInfo {
    Capability cap;
    std::string_view name;
    CapabilityCategory category;
};

constexpr std::array<CapInfo, kCapabilityCount> kCapInfo = {{
    {Capability::File, "CAP_FILE", CapabilityCategory::File},
    {Capability::ReadFile, "CAP_READ_FILE", CapabilityCategory::File},
    {Capability::WriteFile, "CAP_WRITE_FILE", CapabilityCategory::File},
    {Capability::CreateFile, "CAP_CREATE_FILE", CapabilityCategory::File},
    {Capability::DeleteFile, "CAP_DELETE_FILE", CapabilityCategory::File},
    {Capability::FileMetadata, "CAP_FILE_METADATA", CapabilityCategory::File},
    {Capability::ConnectRemote, "CAP_CONNECT_REMOTE", CapabilityCategory::Network},
    {Capability::ListenLocal, "CAP_LISTEN_LOCAL", CapabilityCategory::Network},
    {Capability::SendData, "CAP_SEND_DATA", CapabilityCategory::Network},
    {Capability::ReceiveData, "CAP_RECEIVE_DATA", CapabilityCategory::Network},
    {Capability::Exec, "CAP_EXEC", CapabilityCategory::Execution},
    {Capability::TerminateProcess, "CAP_TERMINATE_PROCESS", CapabilityCategory::Execution},
    {Capability::ReadSystemState, "CAP_READ_SYSTEM_STATE", CapabilityCategory::SystemState},
    {Capability::WriteSystemState, "CAP_WRITE_SYSTEM_STATE", CapabilityCategory::SystemState},
    {Capability::ResourceLimits, "CAP_RESOURCE_LIMITS", CapabilityCategory::SystemState},
    {Capability::MemoryManipulation, "CAP_MEMORY_MANIPULATION", CapabilityCategory::Memory},
    {Capability::DirectIo, "CAP_DIRECT_IO", CapabilityCategory::Memory},
}};

}  // namespace

std::string_view capability_name(Capability cap) {
    return kCapInfo[static_cast<size_t>(cap)].name;
}

CapabilityCategory category_of(Capability cap) {
    return kCapInfo[static_cast<size_t>(cap)].category;
}

std::string_view category_name(CapabilityCategory cat) {
    switch (cat) {
        case CapabilityCategory::File: return "File Capabilities";
        case CapabilityCategory::Network: return "Network Capabilities";
        case CapabilityCategory::Execution: return "Execution Capabilities";
        case CapabilityCategory::SystemState: return "System State and Configuration";
        case CapabilityCategory::Memory: return "Memory Operations";
    }
    return "";
}

std::optional<Capability> parse_capability(std::string_view name) {
    if (name == "CAP_MODIFY_SYSTEM_STATE") return Capability::WriteSystemState;
    for (const auto& info : kCapInfo) {
        if (info.name == name) return info.cap;
    }
    return std::nullopt;
}

SyscallMapping SyscallMapping::load(std::istream& source, std::string arch) {
    SyscallMapping mapping;
    mapping.arch_ = std::move(arch);

    std::string line;
    size_t lineno = 0;
    while (std::getline(source, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) {
            line.erase(hash);
        }
        // trim trailing whitespace left by stripped comments
        while (!line.empty() && (line.back() == ' ' || line.back() == '\t' ||
                                 line.back() == '\r')) {
            line.pop_back();
        }
        if (line.empty()) continue;

        std::istringstream fields(line);
        long nr = -1;
        std::string name, cap_name;
        if (!(fields >> nr >> name >> cap_name)) {
            throw MappingError("mapping line " + std::to_string(lineno) +
                               ": expected <nr>\\t<name>\\t<CAPABILITY>");
        }
        auto cap = parse_capability(cap_name);
        if (!cap) {
            throw MappingError("mapping line " + std::to_string(lineno) +
                               ": unknown capability \"" + cap_name + "\"");
        }
        auto [it, inserted] =
            mapping.table_.emplace(static_cast<int>(nr), Entry{name, *cap});
        if (!inserted) {
            throw MappingError("mapping line " + std::to_string(lineno) +
                               ": duplicate syscall number " + std::to_string(nr));
        }
    }
    return mapping;
}

SyscallMapping SyscallMapping::load_string(std::string_view text, std::string arch) {
    std::istringstream stream{std::string(text)};
    return load(stream, std::move(arch));
}

std::optional<Capability> SyscallMapping::capability_of(int nr) const {
    auto it = table_.find(nr);
    if (it == table_.end()) return std::nullopt;
    return it->second.capability;
}

std::optional<std::string_view> SyscallMapping::name_of(int nr) const {
    auto it = table_.find(nr);
    if (it == table_.end()) return std::nullopt;
    return std::string_view(it->second.name);
}

namespace {
constexpr const char kDefaultMapX86_64[] =
#include "default_mapping_x86_64.inc"
    ;
}

const SyscallMapping& SyscallMapping::default_x86_64() {
    static const SyscallMapping mapping =
        SyscallMapping::load_string(kDefaultMapX86_64, "x86_64");
    return mapping;
}

}  // namespace capguard
