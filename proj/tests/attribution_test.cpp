// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>
#include <set>
#include <string>
#include <vector>

#include "capguard/attribution.hpp"
#include "capguard/errors.hpp"
#include "capguard/package.hpp"
#include "support/fnv_ref.hpp"

using namespace capguard;
using capguard_test::fnv1a64_ref;

namespace {

std::vector<ResolvedFrame> resolve_all(const std::vector<std::string>& symbols,
                                       const ClassifierConfig& config = {}) {
    std::vector<ResolvedFrame> frames;
    for (const auto& sym : symbols) {
        frames.push_back(frame_from_symbol(sym, config));
    }
    return frames;
}

// The logging write stack of a cobra-driven server, innermost first.
const std::vector<std::string> kServerWriteStack = {
    "syscall.Syscall",
    "syscall.write",
    "internal/poll.(*FD).Write",
    "os.(*File).Write",
    "github.com/fatedier/golib/log.WriteLog",
    "github.com/fatedier/golib/log.log",
    "main.runServer",
    "main.init.func1",
    "github.com/spf13/cobra.execute",
    "github.com/spf13/cobra.ExecuteC",
    "main.Execute",
    "main.main",
    "runtime.main",
    "runtime.goexit.abi0",
};

}  // namespace

TEST_CASE("package extraction from symbol names") {
    CHECK(extract_package("main.main") == "main");
    CHECK(extract_package("runtime.goexit.abi0") == "runtime");
    CHECK(extract_package("os.(*File).Write") == "os");
    CHECK(extract_package("internal/poll.(*FD).Write") == "internal/poll");
    CHECK(extract_package("github.com/spf13/cobra.ExecuteC") ==
          "github.com/spf13/cobra");
    CHECK(extract_package("github.com/fatedier/golib/log.WriteLog") ==
          "github.com/fatedier/golib/log");
    // generic instantiation: classify by the prefix before '['
    CHECK(extract_package("sort.Slice[go.shape.int]") == "sort");
    CHECK(extract_package(
              "github.com/x/maps.Keys[go.shape.map[string]int].func1") ==
          "github.com/x/maps");
    CHECK_THROWS_AS(extract_package("no_dot_symbol"), ClassifyError);
}

TEST_CASE("trust classification") {
    ClassifierConfig config;
    CHECK(classify_package("runtime", config) == TrustClass::Runtime);
    CHECK(classify_package("runtime/internal/atomic", config) == TrustClass::Runtime);
    CHECK(classify_package("main", config) == TrustClass::RootModule);
    CHECK(classify_package("os", config) == TrustClass::Stdlib);
    CHECK(classify_package("internal/poll", config) == TrustClass::Stdlib);
    CHECK(classify_package("github.com/spf13/cobra", config) == TrustClass::ThirdParty);
    CHECK(classify_package("gopkg.in/yaml.v3", config) == TrustClass::ThirdParty);

    config.root_module_prefixes = {"github.com/example/app"};
    CHECK(classify_package("github.com/example/app/server", config) ==
          TrustClass::RootModule);
    CHECK(classify_package("github.com/example/application", config) ==
          TrustClass::ThirdParty);
}

TEST_CASE("non-Go symbols become synthetic cgo packages") {
    auto frame = frame_from_symbol("SSL_read", {});
    CHECK(frame.package.path == "cgo/SSL_read");
    CHECK(frame.package.trust_class == TrustClass::ThirdParty);
}

TEST_CASE("server write stack attributes to the logging package") {
    auto result = attribute(resolve_all(kServerWriteStack), {});
    REQUIRE(result.attributed());
    CHECK(result.terminal.path == "github.com/fatedier/golib/log");
    CHECK(result.terminal.trust_class == TrustClass::ThirdParty);
    const std::vector<std::string> want = {"github.com/spf13/cobra",
                                           "github.com/fatedier/golib/log"};
    CHECK(result.path.packages == want);
    CHECK(result.path.hash == fnv1a64_ref(want));
}

TEST_CASE("runtime-only stack is runtime internal") {
    auto result =
        attribute(resolve_all({"runtime.systemstack", "runtime.gcBgMarkWorker"}), {});
    CHECK_FALSE(result.attributed());
}

TEST_CASE("root-module terminal still appears in the filtered path") {
    auto result = attribute(
        resolve_all({"syscall.Syscall", "os.(*File).Write", "main.main"}), {});
    REQUIRE(result.attributed());
    CHECK(result.terminal.path == "main");
    CHECK(result.path.packages == std::vector<std::string>{"main"});
}

TEST_CASE("include_root_module adds main frames to the path") {
    ClassifierConfig config;
    config.include_root_module = true;
    auto result = attribute(resolve_all(kServerWriteStack, config), config);
    REQUIRE(result.attributed());
    CHECK(result.terminal.path == "github.com/fatedier/golib/log");
    const std::vector<std::string> want = {
        "main", "github.com/spf13/cobra", "main", "github.com/fatedier/golib/log"};
    CHECK(result.path.packages == want);
}

TEST_CASE("consecutive duplicate packages collapse") {
    auto result = attribute(
        resolve_all({"syscall.Syscall", "github.com/spf13/cobra.execute",
                     "github.com/spf13/cobra.ExecuteC", "main.main"}),
        {});
    REQUIRE(result.attributed());
    CHECK(result.path.packages ==
          std::vector<std::string>{"github.com/spf13/cobra"});
}

TEST_CASE("empty stack rejected") {
    std::vector<ResolvedFrame> none;
    CHECK_THROWS_AS(attribute(none, {}), AttributionError);
}

TEST_CASE("removing stdlib frames never changes the terminal") {
    auto base = resolve_all(kServerWriteStack);
    auto full = attribute(base, {});
    for (size_t drop = 0; drop < base.size(); ++drop) {
        if (base[drop].package.trust_class != TrustClass::Runtime &&
            base[drop].package.trust_class != TrustClass::Stdlib) {
            continue;
        }
        auto frames = base;
        frames.erase(frames.begin() + static_cast<long>(drop));
        auto result = attribute(frames, {});
        REQUIRE(result.attributed());
        CHECK(result.terminal.path == full.terminal.path);
    }
}

TEST_CASE("path hash anchor value") {
    const std::vector<std::string> a = {"a"};
    CHECK(path_hash(a) == 0xAF63DC4C8601EC8CULL);
    CHECK(fnv1a64_ref(a) == 0xAF63DC4C8601EC8CULL);
}

TEST_CASE("path hash matches the independent reference on a random corpus") {
    std::mt19937_64 rng(7);
    const std::vector<std::string> alphabet = {
        "github.com/spf13/cobra", "github.com/fatedier/golib/log", "main",
        "gopkg.in/yaml.v3", "a", "ab", "b", "cgo/SSL_read",
        "github.com/xtaci/kcp-go/v5"};
    std::set<uint64_t> hashes;
    std::set<std::vector<std::string>> distinct;
    for (int i = 0; i < 10000; ++i) {
        const size_t len = 1 + rng() % 5;
        std::vector<std::string> path;
        for (size_t j = 0; j < len; ++j) {
            path.push_back(alphabet[rng() % alphabet.size()]);
            // occasionally mutate to widen the corpus
            if (rng() % 4 == 0) path.back() += std::to_string(rng() % 1000);
        }
        const uint64_t got = path_hash(path);
        CHECK(got == fnv1a64_ref(path));
        hashes.insert(got);
        distinct.insert(std::move(path));
    }
    // collision scan: distinct inputs hash distinctly
    CHECK(hashes.size() == distinct.size());
}

TEST_CASE("separator prevents concatenation ambiguity") {
    CHECK(path_hash(std::vector<std::string>{"ab", "c"}) !=
          path_hash(std::vector<std::string>{"a", "bc"}));
    CHECK(path_hash(std::vector<std::string>{"a", "b"}) !=
          path_hash(std::vector<std::string>{"b", "a"}));
}
