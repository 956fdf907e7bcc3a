// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace capguard {

struct ProcessIdentity {
    int pid = 0;
    int tid = 0;
    int ppid = 0;
    std::string comm;        // short executable name
    std::string program_id;  // opaque image identifier, changes across exec
};

enum class Direction : uint8_t { Enter, Exit };

// Stack snapshot attached to Enter events, innermost frame first.
// Raw carries return addresses for symbolization against a binary;
// Symbolic carries fully qualified function names directly.
struct StackPayload {
    enum class Kind : uint8_t { Raw, Symbolic };
    Kind kind = Kind::Symbolic;
    std::vector<uint64_t> addresses;   // Raw
    std::vector<std::string> frames;   // Symbolic

    bool empty() const {
        return kind == Kind::Raw ? addresses.empty() : frames.empty();
    }
};

struct SyscallEvent {
    uint64_t seq = 0;      // strictly increasing within a trace
    int64_t ts_ns = 0;     // informational; ordering is by seq
    ProcessIdentity identity;
    Direction direction = Direction::Enter;
    int syscall_nr = 0;
    int64_t return_value = 0;  // Exit only
    StackPayload stack;        // Enter only
};

// One JSON object per line, UTF-8. In strict mode unknown keys are an
// error; otherwise they are collected into `warnings` and ignored.
std::vector<SyscallEvent> parse_trace(std::istream& stream, bool strict = false,
                                      std::vector<std::string>* warnings = nullptr);

void write_trace(const std::vector<SyscallEvent>& events, std::ostream& sink);

bool operator==(const ProcessIdentity& a, const ProcessIdentity& b);
bool operator==(const StackPayload& a, const StackPayload& b);
bool operator==(const SyscallEvent& a, const SyscallEvent& b);

}  // namespace capguard
