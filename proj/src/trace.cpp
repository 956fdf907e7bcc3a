// SPDX-License-Identifier: Apache-2.0
#include "capguard/trace.hpp"

#include <istream>
#include <ostream>
#include <set>

#include <json.hpp>

#include "capguard/errors.hpp"

namespace capguard {

using nlohmann::json;

bool operator==(const ProcessIdentity& a, const ProcessIdentity& b) {
    return a.pid == b.pid && a.tid == b.tid && a.ppid == b.ppid &&
           a.comm == b.comm && a.program_id == b.program_id;
}

bool operator==(const StackPayload& a, const StackPayload& b) {
    return a.kind == b.kind && a.addresses == b.addresses && a.frames == b.frames;
}

bool operator==(const SyscallEvent& a, const SyscallEvent& b) {
    if (a.seq != b.seq || a.ts_ns != b.ts_ns || !(a.identity == b.identity) ||
        a.direction != b.direction || a.syscall_nr != b.syscall_nr) {
        return false;
    }
    if (a.direction == Direction::Exit) return a.return_value == b.return_value;
    return a.stack == b.stack;
}

namespace {

const std::set<std::string> kKnownKeys = {
    "seq",  "ts_ns", "pid", "tid", "ppid",        "comm",
    "dir",  "nr",    "ret", "program_id", "stack_addrs", "stack_syms"};

SyscallEvent parse_record(const json& rec, size_t lineno, bool strict,
                          std::vector<std::string>* warnings) {
    if (!rec.is_object()) throw TraceError("record is not a JSON object", lineno);

    for (const auto& [key, _] : rec.items()) {
        if (!kKnownKeys.count(key)) {
            if (strict) throw TraceError("unknown key \"" + key + "\"", lineno);
            if (warnings) {
                warnings->push_back("line " + std::to_string(lineno) +
                                    ": ignoring unknown key \"" + key + "\"");
            }
        }
    }

    auto require = [&](const char* key) -> const json& {
        auto it = rec.find(key);
        if (it == rec.end()) {
            throw TraceError(std::string("missing key \"") + key + "\"", lineno);
        }
        return *it;
    };

    SyscallEvent ev;
    ev.ts_ns = require("ts_ns").get<int64_t>();
    ev.identity.pid = require("pid").get<int>();
    ev.identity.tid = require("tid").get<int>();
    ev.identity.ppid = require("ppid").get<int>();
    ev.identity.comm = require("comm").get<std::string>();
    ev.identity.program_id = require("program_id").get<std::string>();
    ev.syscall_nr = require("nr").get<int>();

    if (ev.identity.pid <= 0 || ev.identity.tid <= 0 || ev.identity.ppid < 0) {
        throw TraceError("invalid process identity", lineno);
    }
    if (ev.identity.comm.empty()) throw TraceError("empty comm", lineno);

    const std::string dir = require("dir").get<std::string>();
    if (dir == "enter") {
        ev.direction = Direction::Enter;
        const bool has_addrs = rec.contains("stack_addrs");
        const bool has_syms = rec.contains("stack_syms");
        if (has_addrs == has_syms) {
            throw TraceError(
                "enter record needs exactly one of stack_addrs/stack_syms", lineno);
        }
        if (has_addrs) {
            ev.stack.kind = StackPayload::Kind::Raw;
            ev.stack.addresses = rec["stack_addrs"].get<std::vector<uint64_t>>();
        } else {
            ev.stack.kind = StackPayload::Kind::Symbolic;
            ev.stack.frames = rec["stack_syms"].get<std::vector<std::string>>();
        }
        if (rec.contains("ret")) throw TraceError("enter record carries ret", lineno);
    } else if (dir == "exit") {
        ev.direction = Direction::Exit;
        ev.return_value = require("ret").get<int64_t>();
        if (rec.contains("stack_addrs") || rec.contains("stack_syms")) {
            throw TraceError("exit record carries a stack", lineno);
        }
    } else {
        throw TraceError("dir must be \"enter\" or \"exit\"", lineno);
    }
    return ev;
}

}  // namespace

std::vector<SyscallEvent> parse_trace(std::istream& stream, bool strict,
                                      std::vector<std::string>* warnings) {
    std::vector<SyscallEvent> events;
    std::string line;
    size_t lineno = 0;
    uint64_t last_seq = 0;
    bool have_seq = false;
    std::optional<StackPayload::Kind> stack_kind;

    while (std::getline(stream, line)) {
        ++lineno;
        if (line.empty()) continue;

        json rec;
        try {
            rec = json::parse(line);
        } catch (const json::parse_error& e) {
            throw TraceError(std::string("malformed JSON: ") + e.what(), lineno);
        }

        SyscallEvent ev;
        try {
            ev = parse_record(rec, lineno, strict, warnings);
        } catch (const json::exception& e) {
            throw TraceError(std::string("bad field type: ") + e.what(), lineno);
        }

        if (rec.contains("seq")) {
            ev.seq = rec["seq"].get<uint64_t>();
        } else {
            ev.seq = lineno;  // assigned from record order
        }
        if (have_seq && ev.seq <= last_seq) {
            throw TraceError("seq not strictly increasing", lineno);
        }
        last_seq = ev.seq;
        have_seq = true;

        if (ev.direction == Direction::Enter) {
            if (stack_kind && *stack_kind != ev.stack.kind) {
                throw TraceError("mixed Raw and Symbolic stacks in one trace",
                                 lineno);
            }
            stack_kind = ev.stack.kind;
        }
        events.push_back(std::move(ev));
    }
    return events;
}

void write_trace(const std::vector<SyscallEvent>& events, std::ostream& sink) {
    for (const auto& ev : events) {
        json rec;
        rec["seq"] = ev.seq;
        rec["ts_ns"] = ev.ts_ns;
        rec["pid"] = ev.identity.pid;
        rec["tid"] = ev.identity.tid;
        rec["ppid"] = ev.identity.ppid;
        rec["comm"] = ev.identity.comm;
        rec["program_id"] = ev.identity.program_id;
        rec["nr"] = ev.syscall_nr;
        if (ev.direction == Direction::Enter) {
            rec["dir"] = "enter";
            if (ev.stack.kind == StackPayload::Kind::Raw) {
                rec["stack_addrs"] = ev.stack.addresses;
            } else {
                rec["stack_syms"] = ev.stack.frames;
            }
        } else {
            rec["dir"] = "exit";
            rec["ret"] = ev.return_value;
        }
        sink << rec.dump() << '\n';
        if (!sink) throw Error("trace sink write failure");
    }
}

}  // namespace capguard
