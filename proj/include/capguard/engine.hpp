// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "capguard/capability.hpp"
#include "capguard/elf_symbols.hpp"
#include "capguard/policy.hpp"
#include "capguard/trace.hpp"

namespace capguard {

enum class EngineMode : uint8_t { Analysis, Enforcement };
enum class Action : uint8_t { Log, Terminate };
enum class UnknownSyscallPolicy : uint8_t { Violate, Ignore };
// What to do with Raw stacks containing unresolvable addresses:
// fail closed (violation) or skip the event for postmortem forensics.
enum class UnresolvedStackPolicy : uint8_t { Violate, Skip };

struct EngineConfig {
    std::set<std::string> comm_filter;  // empty in replay: track everything
    Action action = Action::Log;
    ClassifierConfig classifier;
    UnknownSyscallPolicy unknown_syscall = UnknownSyscallPolicy::Violate;
    UnresolvedStackPolicy unresolved_stack = UnresolvedStackPolicy::Violate;
    bool plaintext_paths = true;
};

enum class ViolationKind : uint8_t {
    UnknownPackage,
    UnauthorizedCapability,
    UnapprovedCallPath,
    UnauthorizedFlatCapability,
    UnknownSyscall,
};

std::string_view violation_kind_name(ViolationKind kind);

struct VerdictRecord {
    enum class Status : uint8_t { Allowed, RuntimeInternal, Violation, Suppressed };
    Status status = Status::Allowed;
    ViolationKind kind = ViolationKind::UnknownPackage;  // Violation only
    uint64_t seq = 0;
    int pid = 0;
    std::string subject;     // terminal package, or binary name in flat mode
    std::string capability;  // empty when not applicable
    uint64_t path_hash = 0;
};

struct VerdictReport {
    std::vector<VerdictRecord> records;
    std::map<ViolationKind, size_t> violation_counts;
    size_t allowed = 0;
    size_t runtime_internal = 0;
    size_t suppressed = 0;

    size_t violations() const;
};

// Per-pid process tracking state.
struct ProcessState {
    enum class Mode : uint8_t { Native, Flat };

    bool tracked = false;
    Mode mode = Mode::Native;
    std::string flat_binary;          // Flat mode only
    std::string program_id;           // current image
    std::string pre_exec_program_id;  // residual filtering after a commit
    bool terminated = false;          // Terminate action fired
    uint64_t last_seq = 0;
    bool seen = false;

    struct PendingExec {
        std::string source_package;  // empty when the exec was runtime-internal
        uint64_t seq = 0;
        int tid = 0;
    };
    std::optional<PendingExec> pending_exec;
};

// Drives one event stream through tracking, exec transitions, attribution
// and capability mapping. In analysis mode observations accumulate into a
// policy document; in enforcement mode each relevant Enter event yields a
// verdict.
class Engine {
public:
    // `symbols` is required only for Raw-stack traces. `policy` is required
    // in enforcement mode and must have metadata compatible with the
    // mapping and classifier; otherwise MetadataMismatchError is thrown.
    Engine(EngineMode mode, EngineConfig config, const SyscallMapping& mapping,
           const SymbolTable* symbols = nullptr,
           const PolicyDocument* policy = nullptr);

    // Processes one event. Returns a verdict in enforcement mode for Enter
    // events that reach a decision; nullopt for dropped, exit-only, and
    // analysis-mode events.
    std::optional<VerdictRecord> step(const SyscallEvent& event);

    // Finishes analysis mode: returns the accumulated document with
    // populated metadata.
    PolicyDocument take_policy();

    const EngineConfig& config() const { return config_; }

private:
    bool is_tracked(const SyscallEvent& event, ProcessState& state);
    std::optional<VerdictRecord> step_enter(const SyscallEvent& event,
                                            ProcessState& state);
    std::optional<VerdictRecord> flat_check(const SyscallEvent& event,
                                            ProcessState& state);
    std::optional<VerdictRecord> native_check(const SyscallEvent& event,
                                              ProcessState& state);
    VerdictRecord make_violation(const SyscallEvent& event, ViolationKind kind,
                                 std::string subject, std::string capability,
                                 uint64_t hash, ProcessState& state);

    EngineMode mode_;
    EngineConfig config_;
    const SyscallMapping& mapping_;
    const SymbolTable* symbols_;
    const PolicyDocument* policy_;
    PolicyDocument learned_;
    std::map<int, ProcessState> processes_;
};

bool is_exec_syscall(int nr);
bool is_clone_syscall(int nr);

PolicyDocument run_analysis(const std::vector<SyscallEvent>& events,
                            const SymbolTable* symbols, const EngineConfig& config,
                            const SyscallMapping& mapping);

VerdictReport run_enforcement(const std::vector<SyscallEvent>& events,
                              const PolicyDocument& policy,
                              const SymbolTable* symbols, const EngineConfig& config,
                              const SyscallMapping& mapping);

// Line-delimited JSON verdict records, one per line.
std::string render_report_json(const VerdictReport& report);
std::string render_report_text(const VerdictReport& report);

}  // namespace capguard
