// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>

namespace capguard {

// The 17-member capability taxonomy. Each capability groups syscalls that
// touch the same resource with equivalent security implications.
enum class Capability : uint8_t {
    File,                // manage file descriptors
    ReadFile,            // read data from files
    WriteFile,           // write or append data to files
    CreateFile,          // create new files or directories
    DeleteFile,          // remove existing files or directories
    FileMetadata,        // modify file permissions or ownership
    ConnectRemote,       // initiate outbound connections
    ListenLocal,         // bind local ports, accept connections
    SendData,            // transmit data over established connections
    ReceiveData,         // receive data from connections
    Exec,                // launch new processes or threads
    TerminateProcess,    // terminate processes or threads
    ReadSystemState,     // access system configuration or status
    WriteSystemState,    // modify system settings
    ResourceLimits,      // adjust resource limits
    MemoryManipulation,  // alter memory regions or mappings
    DirectIo,            // low-level I/O on devices or memory
};

inline constexpr int kCapabilityCount = 17;

enum class CapabilityCategory : uint8_t {
    File,
    Network,
    Execution,
    SystemState,
    Memory,
};

std::string_view capability_name(Capability cap);  // e.g. "CAP_WRITE_FILE"
std::string_view category_name(CapabilityCategory cat);
CapabilityCategory category_of(Capability cap);

// Accepts the legacy alias CAP_MODIFY_SYSTEM_STATE for CAP_WRITE_SYSTEM_STATE.
std::optional<Capability> parse_capability(std::string_view name);

// A validated, architecture-tagged syscall-number-to-capability table.
class SyscallMapping {
public:
    struct Entry {
        std::string name;
        Capability capability;
    };

    // Parses the tab-separated mapping format. Throws MappingError on
    // duplicate numbers or unknown capability names.
    static SyscallMapping load(std::istream& source, std::string arch);
    static SyscallMapping load_string(std::string_view text, std::string arch);

    // The mapping shipped with the engine for x86-64 Linux.
    static const SyscallMapping& default_x86_64();

    // Returns nullopt for numbers absent from the table. Never throws;
    // the enforcement engine decides what an unknown syscall means.
    std::optional<Capability> capability_of(int nr) const;

    // Syscall name, or nullopt when absent.
    std::optional<std::string_view> name_of(int nr) const;

    const std::string& arch() const { return arch_; }
    size_t size() const { return table_.size(); }

private:
    std::unordered_map<int, Entry> table_;
    std::string arch_;
};

}  // namespace capguard
