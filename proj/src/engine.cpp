// SPDX-License-Identifier: Apache-2.0
#include "capguard/engine.hpp"

#include <cstdio>
#include <sstream>

#include <json.hpp>

#include "capguard/attribution.hpp"
#include "capguard/errors.hpp"

namespace capguard {

using nlohmann::json;

// x86-64 numbers; the trace format is architecture-tagged through the
// mapping, and these families drive state transitions only.
bool is_exec_syscall(int nr) {
    return nr == 59 /*execve*/ || nr == 322 /*execveat*/;
}

bool is_clone_syscall(int nr) {
    return nr == 56 /*clone*/ || nr == 57 /*fork*/ || nr == 58 /*vfork*/ ||
           nr == 435 /*clone3*/;
}

std::string_view violation_kind_name(ViolationKind kind) {
    switch (kind) {
        case ViolationKind::UnknownPackage: return "unknown-package";
        case ViolationKind::UnauthorizedCapability: return "unauthorized-capability";
        case ViolationKind::UnapprovedCallPath: return "unapproved-call-path";
        case ViolationKind::UnauthorizedFlatCapability:
            return "unauthorized-flat-capability";
        case ViolationKind::UnknownSyscall: return "unknown-syscall";
    }
    return "";
}

size_t VerdictReport::violations() const {
    size_t n = 0;
    for (const auto& [_, count] : violation_counts) n += count;
    return n;
}

Engine::Engine(EngineMode mode, EngineConfig config, const SyscallMapping& mapping,
               const SymbolTable* symbols, const PolicyDocument* policy)
    : mode_(mode),
      config_(std::move(config)),
      mapping_(mapping),
      symbols_(symbols),
      policy_(policy) {
    if (mode_ == EngineMode::Enforcement) {
        if (!policy_) throw Error("enforcement mode requires a policy document");
        const auto& meta = policy_->metadata;
        if (!meta.arch.empty() && meta.arch != mapping_.arch()) {
            throw MetadataMismatchError("policy learned for arch " + meta.arch +
                                        ", mapping is " + mapping_.arch());
        }
        const std::string digest = classifier_digest(config_.classifier);
        if (!meta.classifier_digest.empty() && meta.classifier_digest != digest) {
            throw MetadataMismatchError(
                "policy learned under a different classifier configuration");
        }
    }
}

bool Engine::is_tracked(const SyscallEvent& event, ProcessState& state) {
    if (!state.seen) {
        state.seen = true;
        state.program_id = event.identity.program_id;
        auto parent = processes_.find(event.identity.ppid);
        const bool parent_tracked =
            parent != processes_.end() && parent->second.tracked;
        state.tracked = config_.comm_filter.empty() ||
                        config_.comm_filter.count(event.identity.comm) ||
                        parent_tracked;
    } else if (!state.tracked) {
        // A previously dropped pid can still match the filter later (e.g. a
        // short-lived comm change); re-check cheaply.
        state.tracked = config_.comm_filter.count(event.identity.comm) > 0;
        if (state.tracked) state.program_id = event.identity.program_id;
    }
    return state.tracked;
}

std::optional<VerdictRecord> Engine::step(const SyscallEvent& event) {
    ProcessState& state = processes_[event.identity.pid];
    if (!is_tracked(event, state)) return std::nullopt;

    if (event.seq < state.last_seq) {
        throw StreamError("out-of-order seq " + std::to_string(event.seq) +
                          " for pid " + std::to_string(event.identity.pid));
    }
    state.last_seq = event.seq;

    if (state.terminated) {
        VerdictRecord rec;
        rec.status = VerdictRecord::Status::Suppressed;
        rec.seq = event.seq;
        rec.pid = event.identity.pid;
        return rec;
    }

    if (event.direction == Direction::Exit) {
        if (is_exec_syscall(event.syscall_nr) && state.pending_exec) {
            if (event.return_value >= 0) {
                // Commit: the process image is replaced; switch to the flat
                // dependency-unaware allowlist keyed by the new binary.
                state.pre_exec_program_id = state.program_id;
                state.program_id = event.identity.program_id;
                state.mode = ProcessState::Mode::Flat;
                state.flat_binary = event.identity.comm;
                if (mode_ == EngineMode::Analysis) {
                    record_exec(learned_, state.pending_exec->source_package,
                                state.flat_binary);
                }
            }
            state.pending_exec.reset();
        } else if (is_clone_syscall(event.syscall_nr) && event.return_value > 0) {
            // Child discovered: propagate tracking and current mode.
            const int child = static_cast<int>(event.return_value);
            ProcessState& cs = processes_[child];
            if (!cs.seen) {
                cs.seen = true;
                cs.mode = state.mode;
                cs.flat_binary = state.flat_binary;
                cs.program_id = state.program_id;
            }
            cs.tracked = true;
        }
        return std::nullopt;
    }

    return step_enter(event, state);
}

std::optional<VerdictRecord> Engine::step_enter(const SyscallEvent& event,
                                                ProcessState& state) {
    if (state.mode == ProcessState::Mode::Flat) {
        // Residual syscalls from the replaced image are filtered out.
        if (event.identity.program_id == state.pre_exec_program_id) {
            return std::nullopt;
        }
        return flat_check(event, state);
    }
    return native_check(event, state);
}

VerdictRecord Engine::make_violation(const SyscallEvent& event, ViolationKind kind,
                                     std::string subject, std::string capability,
                                     uint64_t hash, ProcessState& state) {
    VerdictRecord rec;
    rec.status = VerdictRecord::Status::Violation;
    rec.kind = kind;
    rec.seq = event.seq;
    rec.pid = event.identity.pid;
    rec.subject = std::move(subject);
    rec.capability = std::move(capability);
    rec.path_hash = hash;
    if (config_.action == Action::Terminate) state.terminated = true;
    return rec;
}

std::optional<VerdictRecord> Engine::flat_check(const SyscallEvent& event,
                                                ProcessState& state) {
    const auto cap = mapping_.capability_of(event.syscall_nr);
    if (!cap) {
        if (mode_ == EngineMode::Analysis) return std::nullopt;
        if (config_.unknown_syscall == UnknownSyscallPolicy::Ignore) {
            VerdictRecord rec{VerdictRecord::Status::Allowed,
                              ViolationKind::UnknownPackage, event.seq,
                              event.identity.pid, state.flat_binary, "", 0};
            return rec;
        }
        return make_violation(event, ViolationKind::UnknownSyscall,
                              state.flat_binary, "", 0, state);
    }

    if (mode_ == EngineMode::Analysis) {
        record_flat_observation(learned_, state.flat_binary, *cap);
        return std::nullopt;
    }

    const std::string cap_name(capability_name(*cap));
    auto it = policy_->flat_binaries.find(state.flat_binary);
    if (it == policy_->flat_binaries.end() || !it->second.count(*cap)) {
        return make_violation(event, ViolationKind::UnauthorizedFlatCapability,
                              state.flat_binary, cap_name, 0, state);
    }
    VerdictRecord rec{VerdictRecord::Status::Allowed, ViolationKind::UnknownPackage,
                      event.seq, event.identity.pid, state.flat_binary, cap_name, 0};
    return rec;
}

std::optional<VerdictRecord> Engine::native_check(const SyscallEvent& event,
                                                  ProcessState& state) {
    if (event.stack.empty()) {
        throw AttributionError("empty stack at seq " + std::to_string(event.seq));
    }

    std::vector<ResolvedFrame> frames;
    if (event.stack.kind == StackPayload::Kind::Symbolic) {
        frames.reserve(event.stack.frames.size());
        for (const auto& name : event.stack.frames) {
            frames.push_back(frame_from_symbol(name, config_.classifier));
        }
    } else {
        if (!symbols_) throw Error("raw-stack trace requires a symbol table");
        frames.reserve(event.stack.addresses.size());
        for (uint64_t addr : event.stack.addresses) {
            try {
                const auto& sym = symbols_->resolve(addr);
                frames.push_back(frame_from_symbol(sym.name, config_.classifier, addr));
            } catch (const UnresolvableAddressError&) {
                if (mode_ == EngineMode::Analysis ||
                    config_.unresolved_stack == UnresolvedStackPolicy::Skip) {
                    return std::nullopt;
                }
                char buf[32];
                std::snprintf(buf, sizeof(buf), "unresolved:0x%llx",
                              static_cast<unsigned long long>(addr));
                return make_violation(event, ViolationKind::UnknownPackage, buf, "",
                                      0, state);
            }
        }
    }

    const Attribution attr = attribute(frames, config_.classifier);

    if (is_exec_syscall(event.syscall_nr)) {
        // Commit or discard happens at the matching Exit.
        state.pending_exec = ProcessState::PendingExec{
            attr.attributed() ? attr.terminal.path : std::string{}, event.seq,
            event.identity.tid};
    }

    if (!attr.attributed()) {
        if (mode_ == EngineMode::Analysis) return std::nullopt;
        VerdictRecord rec;
        rec.status = VerdictRecord::Status::RuntimeInternal;
        rec.seq = event.seq;
        rec.pid = event.identity.pid;
        return rec;
    }

    const auto cap = mapping_.capability_of(event.syscall_nr);
    if (mode_ == EngineMode::Analysis) {
        record_observation(learned_, attr.terminal, event.syscall_nr, cap, attr.path,
                           config_.plaintext_paths);
        return std::nullopt;
    }

    if (!cap) {
        if (config_.unknown_syscall == UnknownSyscallPolicy::Ignore) {
            VerdictRecord rec{VerdictRecord::Status::Allowed,
                              ViolationKind::UnknownPackage, event.seq,
                              event.identity.pid, attr.terminal.path, "",
                              attr.path.hash};
            return rec;
        }
        return make_violation(event, ViolationKind::UnknownSyscall,
                              attr.terminal.path, "", attr.path.hash, state);
    }

    // Fail-closed check order: package, then capability, then call path.
    const std::string cap_name(capability_name(*cap));
    auto pkg_it = policy_->packages.find(attr.terminal.path);
    if (pkg_it == policy_->packages.end()) {
        return make_violation(event, ViolationKind::UnknownPackage,
                              attr.terminal.path, cap_name, attr.path.hash, state);
    }
    const PackagePolicy& pkg = pkg_it->second;
    if (!pkg.capabilities.count(*cap)) {
        return make_violation(event, ViolationKind::UnauthorizedCapability,
                              attr.terminal.path, cap_name, attr.path.hash, state);
    }
    auto paths_it = pkg.call_paths.find(*cap);
    if (paths_it == pkg.call_paths.end() ||
        !paths_it->second.count(ApprovedPath{attr.path.hash, std::nullopt})) {
        return make_violation(event, ViolationKind::UnapprovedCallPath,
                              attr.terminal.path, cap_name, attr.path.hash, state);
    }
    VerdictRecord rec{VerdictRecord::Status::Allowed, ViolationKind::UnknownPackage,
                      event.seq, event.identity.pid, attr.terminal.path, cap_name,
                      attr.path.hash};
    return rec;
}

PolicyDocument Engine::take_policy() {
    learned_.metadata.arch = mapping_.arch();
    learned_.metadata.classifier_digest = classifier_digest(config_.classifier);
    return std::move(learned_);
}

PolicyDocument run_analysis(const std::vector<SyscallEvent>& events,
                            const SymbolTable* symbols, const EngineConfig& config,
                            const SyscallMapping& mapping) {
    Engine engine(EngineMode::Analysis, config, mapping, symbols);
    for (const auto& ev : events) engine.step(ev);
    return engine.take_policy();
}

VerdictReport run_enforcement(const std::vector<SyscallEvent>& events,
                              const PolicyDocument& policy,
                              const SymbolTable* symbols, const EngineConfig& config,
                              const SyscallMapping& mapping) {
    Engine engine(EngineMode::Enforcement, config, mapping, symbols, &policy);
    VerdictReport report;
    for (const auto& ev : events) {
        auto rec = engine.step(ev);
        if (!rec) continue;
        switch (rec->status) {
            case VerdictRecord::Status::Allowed: ++report.allowed; break;
            case VerdictRecord::Status::RuntimeInternal:
                ++report.runtime_internal;
                break;
            case VerdictRecord::Status::Violation:
                ++report.violation_counts[rec->kind];
                break;
            case VerdictRecord::Status::Suppressed: ++report.suppressed; break;
        }
        report.records.push_back(std::move(*rec));
    }
    return report;
}

namespace {

std::string status_name(VerdictRecord::Status status) {
    switch (status) {
        case VerdictRecord::Status::Allowed: return "allowed";
        case VerdictRecord::Status::RuntimeInternal: return "runtime-internal";
        case VerdictRecord::Status::Violation: return "violation";
        case VerdictRecord::Status::Suppressed: return "suppressed";
    }
    return "";
}

std::string hash_hex(uint64_t hash) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(hash));
    return buf;
}

}  // namespace

std::string render_report_json(const VerdictReport& report) {
    std::ostringstream out;
    for (const auto& rec : report.records) {
        json line;
        line["seq"] = rec.seq;
        line["pid"] = rec.pid;
        line["verdict"] = status_name(rec.status);
        line["kind"] = rec.status == VerdictRecord::Status::Violation
                           ? std::string(violation_kind_name(rec.kind))
                           : "";
        line["package"] = rec.subject;
        line["capability"] = rec.capability;
        line["path_hash"] = hash_hex(rec.path_hash);
        out << line.dump() << '\n';
    }
    return out.str();
}

std::string render_report_text(const VerdictReport& report) {
    std::ostringstream out;
    for (const auto& rec : report.records) {
        if (rec.status != VerdictRecord::Status::Violation) continue;
        out << "violation seq=" << rec.seq << " pid=" << rec.pid << " "
            << violation_kind_name(rec.kind) << " subject=" << rec.subject;
        if (!rec.capability.empty()) out << " capability=" << rec.capability;
        out << " path=" << hash_hex(rec.path_hash) << "\n";
    }
    out << "allowed=" << report.allowed
        << " runtime_internal=" << report.runtime_internal
        << " violations=" << report.violations()
        << " suppressed=" << report.suppressed << "\n";
    return out.str();
}

}  // namespace capguard
