// SPDX-License-Identifier: Apache-2.0
//
// Synthetic symbolic-trace generator shared by the property and
// acceptance tests.
#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "capguard/trace.hpp"

namespace capguard_test {

using capguard::Direction;
using capguard::StackPayload;
using capguard::SyscallEvent;

inline SyscallEvent make_enter(uint64_t seq, int pid, int nr,
                               std::vector<std::string> frames,
                               const std::string& comm = "app",
                               const std::string& program_id = "prog",
                               int ppid = 1) {
    SyscallEvent ev;
    ev.seq = seq;
    ev.ts_ns = static_cast<int64_t>(seq) * 1000;
    ev.identity = {pid, pid, ppid, comm, program_id};
    ev.direction = Direction::Enter;
    ev.syscall_nr = nr;
    ev.stack.kind = StackPayload::Kind::Symbolic;
    ev.stack.frames = std::move(frames);
    return ev;
}

inline SyscallEvent make_exit(uint64_t seq, int pid, int nr, int64_t ret,
                              const std::string& comm = "app",
                              const std::string& program_id = "prog",
                              int ppid = 1) {
    SyscallEvent ev;
    ev.seq = seq;
    ev.ts_ns = static_cast<int64_t>(seq) * 1000;
    ev.identity = {pid, pid, ppid, comm, program_id};
    ev.direction = Direction::Exit;
    ev.syscall_nr = nr;
    ev.return_value = ret;
    return ev;
}

// Full symbolic stack, innermost first: syscall wrappers, stdlib, then the
// given package chain (terminal first), then main and runtime frames.
inline std::vector<std::string> stack_through(
    const std::vector<std::string>& packages_terminal_first) {
    std::vector<std::string> frames = {"syscall.Syscall", "internal/poll.(*FD).Write",
                                       "os.(*File).Write"};
    for (const auto& pkg : packages_terminal_first) {
        frames.push_back(pkg + ".Call");
    }
    frames.push_back("main.main");
    frames.push_back("runtime.main");
    frames.push_back("runtime.goexit.abi0");
    return frames;
}

inline std::vector<std::string> runtime_only_stack() {
    return {"runtime.systemstack", "runtime.gcBgMarkWorker", "runtime.goexit.abi0"};
}

struct GenOptions {
    int processes = 3;
    int events_per_process = 25;
    bool with_forks = true;
    bool with_execs = true;
};

// Mixed-package random trace: third-party call chains, runtime-internal
// stacks, forks and exec transitions (committed and failed).
inline std::vector<SyscallEvent> generate_trace(uint64_t seed,
                                                const GenOptions& opts = {}) {
    std::mt19937_64 rng(seed);
    const std::vector<std::string> pool = {
        "github.com/spf13/cobra",      "github.com/fatedier/golib/log",
        "github.com/xtaci/kcp-go/v5",  "github.com/pkg/errors",
        "gopkg.in/yaml.v3",            "github.com/gorilla/mux",
    };
    const std::vector<int> nrs = {0, 1, 3, 9, 41, 42, 44, 45, 49, 50, 83, 87, 105, 160, 16};

    struct Proc {
        int pid;
        std::string program_id;
        bool flat = false;
        std::vector<SyscallEvent> events;  // seq assigned at interleave time
    };
    std::vector<Proc> procs;
    procs.reserve(32);  // forks cap at 24 tracked processes; no reallocation
    int next_pid = 100;

    auto pick = [&](const auto& v) -> const auto& {
        return v[std::uniform_int_distribution<size_t>(0, v.size() - 1)(rng)];
    };

    for (int p = 0; p < opts.processes; ++p) {
        procs.push_back({next_pid++, "prog-" + std::to_string(p)});
    }

    for (size_t p = 0; p < procs.size(); ++p) {
        Proc& proc = procs[p];
        const int n = opts.events_per_process;
        for (int i = 0; i < n; ++i) {
            const int roll = std::uniform_int_distribution<int>(0, 99)(rng);
            if (proc.flat) {
                proc.events.push_back(make_enter(0, proc.pid, pick(nrs), {"_start"},
                                                 "helper", proc.program_id));
                continue;
            }
            if (roll < 15) {
                // runtime-internal housekeeping
                proc.events.push_back(make_enter(0, proc.pid, pick(nrs),
                                                 runtime_only_stack(), "app",
                                                 proc.program_id));
            } else if (opts.with_forks && roll < 20 && procs.size() < 24) {
                const int child_pid = next_pid++;
                proc.events.push_back(make_enter(0, proc.pid, 56,
                                                 stack_through({pick(pool)}), "app",
                                                 proc.program_id));
                proc.events.push_back(
                    make_exit(0, proc.pid, 56, child_pid, "app", proc.program_id));
                Proc child{child_pid, proc.program_id};
                for (int c = 0; c < 5; ++c) {
                    child.events.push_back(make_enter(0, child_pid, pick(nrs),
                                                      stack_through({pick(pool)}),
                                                      "app", child.program_id,
                                                      proc.pid));
                }
                procs.push_back(std::move(child));
            } else if (opts.with_execs && roll < 26) {
                const bool commit = roll < 23;
                proc.events.push_back(make_enter(0, proc.pid, 59,
                                                 stack_through({pick(pool)}), "app",
                                                 proc.program_id));
                if (commit) {
                    const std::string new_id = proc.program_id + "-exec";
                    proc.events.push_back(
                        make_exit(0, proc.pid, 59, 0, "helper", new_id));
                    // residual syscall from the replaced image
                    proc.events.push_back(make_enter(0, proc.pid, pick(nrs),
                                                     runtime_only_stack(), "app",
                                                     proc.program_id));
                    proc.program_id = new_id;
                    proc.flat = true;
                } else {
                    proc.events.push_back(
                        make_exit(0, proc.pid, 59, -2, "app", proc.program_id));
                }
            } else {
                // plain attributed syscall through a 1-3 package chain
                std::vector<std::string> chain = {pick(pool)};
                const int depth = std::uniform_int_distribution<int>(1, 3)(rng);
                while (static_cast<int>(chain.size()) < depth) {
                    const auto& next = pick(pool);
                    if (next != chain.back()) chain.push_back(next);
                }
                proc.events.push_back(make_enter(0, proc.pid, pick(nrs),
                                                 stack_through(chain), "app",
                                                 proc.program_id));
            }
        }
    }

    // Round-robin interleave with globally increasing seq.
    std::vector<SyscallEvent> trace;
    uint64_t seq = 1;
    std::vector<size_t> cursor(procs.size(), 0);
    bool progress = true;
    while (progress) {
        progress = false;
        for (size_t p = 0; p < procs.size(); ++p) {
            if (cursor[p] >= procs[p].events.size()) continue;
            // keep exec/clone enter+exit adjacent per pid anyway; emit 1-2
            const int burst = std::uniform_int_distribution<int>(1, 2)(rng);
            for (int b = 0; b < burst && cursor[p] < procs[p].events.size(); ++b) {
                SyscallEvent ev = procs[p].events[cursor[p]++];
                ev.seq = seq++;
                ev.ts_ns = static_cast<int64_t>(ev.seq) * 1000;
                trace.push_back(std::move(ev));
            }
            progress = true;
        }
    }
    return trace;
}

}  // namespace capguard_test
