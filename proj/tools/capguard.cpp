// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end: learn, check, diff, audit, and merge workflows
// over trace files, binaries, and policy documents.
//
// Exit codes: 0 success / no violations, 1 violations found (check only),
// 2 usage or configuration error.

#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "capguard/engine.hpp"
#include "capguard/errors.hpp"
#include "capguard/policy.hpp"
#include "capguard/trace.hpp"

namespace {

using namespace capguard;

std::string read_file(const std::string& path) {
    std::ifstream file(path, std::ios::binary);
    if (!file) throw Error("cannot open file: " + path);
    std::ostringstream contents;
    contents << file.rdbuf();
    return contents.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream file(path, std::ios::binary);
    if (!file || !(file << content)) throw Error("cannot write file: " + path);
}

SyscallMapping load_mapping_opt(const std::string& mapping_path) {
    std::string path = mapping_path;
    if (path.empty()) {
        if (const char* env = std::getenv("CAPGUARD_MAPPING")) path = env;
    }
    if (path.empty()) return SyscallMapping::default_x86_64();
    std::ifstream file(path);
    if (!file) throw Error("cannot open mapping file: " + path);
    return SyscallMapping::load(file, "x86_64");
}

struct CommonOpts {
    std::string trace_path;
    std::string binary_path;
    std::string mapping_path;
    std::vector<std::string> comms;
    std::vector<std::string> root_prefixes;
    bool include_root_module = false;
    bool strict = false;
};

void add_engine_flags(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("--trace", opts.trace_path, "Trace file (JSON lines)")
        ->required();
    cmd->add_option("--binary", opts.binary_path,
                    "ELF binary for raw-stack symbolization");
    cmd->add_option("--mapping", opts.mapping_path,
                    "Syscall mapping file (default: built-in x86-64 table, or "
                    "$CAPGUARD_MAPPING)");
    cmd->add_option("--comm", opts.comms, "Command name to track (repeatable)");
    cmd->add_option("--root-prefix", opts.root_prefixes,
                    "Package prefix treated as the root module (repeatable)");
    cmd->add_flag("--include-root-module", opts.include_root_module,
                  "Include root-module packages in call paths");
    cmd->add_flag("--strict", opts.strict, "Reject unknown trace keys");
}

EngineConfig make_config(const CommonOpts& opts) {
    EngineConfig config;
    config.comm_filter.insert(opts.comms.begin(), opts.comms.end());
    config.classifier.root_module_prefixes = opts.root_prefixes;
    config.classifier.include_root_module = opts.include_root_module;
    return config;
}

std::vector<SyscallEvent> load_trace(const CommonOpts& opts) {
    std::ifstream file(opts.trace_path);
    if (!file) throw Error("cannot open trace file: " + opts.trace_path);
    std::vector<std::string> warnings;
    auto events = parse_trace(file, opts.strict, &warnings);
    for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
    return events;
}

// A raw-stack trace cannot run without a symbol table; fail early with a
// usage error instead of deep inside the engine.
std::optional<SymbolTable> load_symbols(const CommonOpts& opts,
                                        const std::vector<SyscallEvent>& events) {
    bool raw = false;
    for (const auto& ev : events) {
        if (ev.direction == Direction::Enter) {
            raw = ev.stack.kind == StackPayload::Kind::Raw;
            break;
        }
    }
    if (!raw) return std::nullopt;
    if (opts.binary_path.empty()) {
        throw Error("trace has raw stacks; --binary is required");
    }
    return SymbolTable::load_file(opts.binary_path);
}

std::string timestamp_now() {
    if (const char* env = std::getenv("CAPGUARD_CREATED_AT")) return env;
    std::time_t now = std::time(nullptr);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    return buf;
}

int cmd_learn(const CommonOpts& opts, const std::string& out_path,
              bool no_plaintext) {
    auto mapping = load_mapping_opt(opts.mapping_path);
    auto events = load_trace(opts);
    auto symbols = load_symbols(opts, events);
    EngineConfig config = make_config(opts);
    config.plaintext_paths = !no_plaintext;

    PolicyDocument doc = run_analysis(events, symbols ? &*symbols : nullptr,
                                      config, mapping);
    doc.metadata.created_at = timestamp_now();

    const std::string serialized = serialize(doc);
    if (out_path.empty() || out_path == "-") {
        std::cout << serialized;
    } else {
        write_file(out_path, serialized);
    }
    return 0;
}

int cmd_check(const CommonOpts& opts, const std::string& policy_path,
              const std::string& action, const std::string& unknown_syscall,
              const std::string& format) {
    auto mapping = load_mapping_opt(opts.mapping_path);
    std::vector<std::string> warnings;
    PolicyDocument policy = parse_policy(read_file(policy_path), &warnings);
    for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";

    auto events = load_trace(opts);
    auto symbols = load_symbols(opts, events);
    EngineConfig config = make_config(opts);
    config.action = action == "terminate" ? Action::Terminate : Action::Log;
    config.unknown_syscall = unknown_syscall == "ignore"
                                 ? UnknownSyscallPolicy::Ignore
                                 : UnknownSyscallPolicy::Violate;

    VerdictReport report = run_enforcement(events, policy,
                                           symbols ? &*symbols : nullptr, config,
                                           mapping);
    std::cout << (format == "json" ? render_report_json(report)
                                   : render_report_text(report));
    return report.violations() > 0 ? 1 : 0;
}

int cmd_diff(const std::string& old_path, const std::string& new_path,
             const std::string& format) {
    PolicyDocument old_doc = parse_policy(read_file(old_path));
    PolicyDocument new_doc = parse_policy(read_file(new_path));
    DiffReport report = diff(old_doc, new_doc);
    std::cout << (format == "json" ? render_diff_json(report)
                                   : render_diff_text(report));
    return 0;
}

int cmd_audit(const std::string& policy_path) {
    std::vector<std::string> warnings;
    PolicyDocument doc = parse_policy(read_file(policy_path), &warnings);
    for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
    std::cout << render_audit(doc);
    return 0;
}

int cmd_merge(const std::string& a_path, const std::string& b_path,
              const std::string& out_path) {
    PolicyDocument merged = merge(parse_policy(read_file(a_path)),
                                  parse_policy(read_file(b_path)));
    const std::string serialized = serialize(merged);
    if (out_path.empty() || out_path == "-") {
        std::cout << serialized;
    } else {
        write_file(out_path, serialized);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Per-package syscall capability policy engine"};
    app.require_subcommand(1);

    CommonOpts learn_opts;
    std::string learn_out;
    bool learn_no_plaintext = false;
    auto* learn = app.add_subcommand("learn", "Build a policy from a trace");
    add_engine_flags(learn, learn_opts);
    learn->add_option("-o,--out", learn_out, "Output policy file (default stdout)");
    learn->add_flag("--no-plaintext", learn_no_plaintext,
                    "Store call-path hashes only, no readable paths");

    CommonOpts check_opts;
    std::string check_policy, check_action = "log", check_unknown = "violate",
                check_format = "text";
    auto* check = app.add_subcommand("check", "Replay a trace against a policy");
    add_engine_flags(check, check_opts);
    check->add_option("--policy", check_policy, "Policy file")->required();
    check->add_option("--action", check_action, "log|terminate")
        ->check(CLI::IsMember({"log", "terminate"}));
    check->add_option("--unknown-syscall", check_unknown, "violate|ignore")
        ->check(CLI::IsMember({"violate", "ignore"}));
    check->add_option("--format", check_format, "text|json")
        ->check(CLI::IsMember({"text", "json"}));

    std::string diff_old, diff_new, diff_format = "text";
    auto* diff_cmd = app.add_subcommand("diff", "Compare two policies");
    diff_cmd->add_option("old", diff_old, "Old policy file")->required();
    diff_cmd->add_option("new", diff_new, "New policy file")->required();
    diff_cmd->add_option("--format", diff_format, "text|json")
        ->check(CLI::IsMember({"text", "json"}));

    std::string audit_policy;
    auto* audit = app.add_subcommand("audit", "Render a policy for review");
    audit->add_option("policy", audit_policy, "Policy file")->required();

    std::string merge_a, merge_b, merge_out;
    auto* merge_cmd = app.add_subcommand("merge", "Union two policies");
    merge_cmd->add_option("a", merge_a, "First policy")->required();
    merge_cmd->add_option("b", merge_b, "Second policy")->required();
    merge_cmd->add_option("-o,--out", merge_out, "Output file (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (learn->parsed()) return cmd_learn(learn_opts, learn_out, learn_no_plaintext);
        if (check->parsed()) {
            return cmd_check(check_opts, check_policy, check_action, check_unknown,
                             check_format);
        }
        if (diff_cmd->parsed()) return cmd_diff(diff_old, diff_new, diff_format);
        if (audit->parsed()) return cmd_audit(audit_policy);
        if (merge_cmd->parsed()) return cmd_merge(merge_a, merge_b, merge_out);
    } catch (const capguard::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
