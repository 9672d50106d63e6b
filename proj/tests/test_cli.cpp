#include <doctest.h>

#include <unistd.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "ecol/artifact.hpp"
#include "ecol/cli.hpp"
#include "ecol/collision.hpp"
#include "ecol/embedders.hpp"
#include "ecol/store.hpp"

using namespace ecol;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run cli(std::vector<std::string> args) {
    args.insert(args.begin(), "ecol");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

struct TempDir {
    fs::path path;
    TempDir() {
        static int n = 0;
        path = fs::temp_directory_path() / ("ecol_cli_" + std::to_string(::getpid()) + "_" + std::to_string(n++));
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string operator/(const std::string& name) const { return (path / name).string(); }
};

json read_json(const std::string& p) {
    std::ifstream in(p);
    return json::parse(in);
}

std::string slurp(const std::string& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("sweep over five K values writes one artifact with five cells") {
    TempDir d;
    const auto r = cli({"sweep", "--tag", "service", "--K", "1", "2", "4", "8", "16", "--embed", "hash", "--vw", "0.0",
                        "0.5", "--seed", "42", "--n-entities", "8", "--resamples", "200", "--out", d / "r.json"});
    REQUIRE(r.code == 0);
    const auto j = read_json(d / "r.json");
    CHECK_NOTHROW(validate_result_artifact(j));
    REQUIRE(j["cells"].size() == 5);
    CHECK(j["cells"][0]["K"] == 1);
    CHECK(j["cells"][0]["arm_a"]["hit_at_1"] == 1.0);
    CHECK(j["cells"][0]["arm_b"]["hit_at_1"] == 1.0);
    CHECK(j["cells"][4]["n"] == 8);
    CHECK(j["spec"]["seed"] == 42);
    CHECK(j["spec"]["embedder"]["name"] == "hash-trigram-256");
    CHECK(j["spec"]["retrieval"]["query_expansion_min_dominance"].is_null());
    for (const auto& c : j["cells"]) CHECK(c["ci_lo"].get<double>() <= c["delta"].get<double>());
}

TEST_CASE("sweep output is deterministic, and the seed env var overrides the flag") {
    TempDir d;
    const std::vector<std::string> base = {"sweep", "--tag", "tool", "--K", "4", "--vw", "0", "0.5", "1",
                                           "--n-entities", "8", "--resamples", "100", "--seed", "5"};
    auto a = base, b = base;
    a.insert(a.end(), {"--out", d / "a.json"});
    b.insert(b.end(), {"--out", d / "b.json", "--jobs", "2"});
    REQUIRE(cli(a).code == 0);
    REQUIRE(cli(b).code == 0);
    CHECK(slurp(d / "a.json") == slurp(d / "b.json"));
    CHECK(read_json(d / "a.json")["cells"].size() == 2);

    ::setenv(kSeedEnvVar, "77", 1);
    auto c = base;
    c.insert(c.end(), {"--out", d / "c.json"});
    const auto rc = cli(c).code;
    ::unsetenv(kSeedEnvVar);
    REQUIRE(rc == 0);
    CHECK(read_json(d / "c.json")["spec"]["seed"] == 77);
}

TEST_CASE("multi-tag sweep writes one artifact per tag") {
    TempDir d;
    REQUIRE(cli({"sweep", "--tag", "service", "project", "--K", "2", "--vw", "0", "0.5", "--n-entities", "4",
                 "--resamples", "50", "--out", d / "sweep_{tag}.json"})
                .code == 0);
    CHECK(fs::exists(d / "sweep_service.json"));
    CHECK(fs::exists(d / "sweep_project.json"));
    REQUIRE(cli({"sweep", "--tag", "service", "tool", "--K", "2", "--vw", "0", "0.5", "--n-entities", "4",
                 "--resamples", "50", "--out", d / "x.json"})
                .code == 0);
    CHECK(fs::exists(d / "x_service.json"));
    CHECK(fs::exists(d / "x_tool.json"));
}

TEST_CASE("usage errors exit 2") {
    const auto big = cli({"sweep", "--K", "32", "--tag", "tool", "--vw", "0", "0.5"});
    CHECK(big.code == 2);
    CHECK(big.err.find("tool") != std::string::npos);
    CHECK(cli({"sweep", "--vw", "0.5"}).code == 2);
    CHECK(cli({"sweep", "--vw", "0", "1.5"}).code == 2);
    CHECK(cli({"sweep", "--tag", "weather", "--vw", "0", "1"}).code == 2);
    CHECK(cli({"frobnicate"}).code == 2);
    CHECK(cli({}).code == 2);
    CHECK(cli({"sweep", "--vw", "0", "1", "--embed", "precomputed"}).code == 2);
    CHECK(cli({"--help"}).code == 0);
}

TEST_CASE("precomputed vectors: missing text exits 1, complete file runs") {
    TempDir d;
    REQUIRE(cli({"generate", "--tag", "service", "--K", "2", "--n-entities", "4", "--seed", "9", "--out",
                 d / "corpus.json", "--texts-out", d / "texts.txt"})
                .code == 0);
    std::ifstream tin(d / "texts.txt");
    const auto texts = read_text_list(tin);
    const auto corpus = read_json(d / "corpus.json");
    REQUIRE(corpus["corpora"].size() == 1);
    CHECK(texts.size() == corpus["corpora"][0]["docs"].size() + corpus["corpora"][0]["queries"].size());

    std::vector<std::pair<std::string, std::vector<float>>> entries;
    for (const auto& t : texts) {
        const auto e = hash_trigram_embed(t, 32);
        entries.emplace_back(t, std::vector<float>(e.values.begin(), e.values.end()));
    }
    {
        std::ofstream f(d / "all.vec", std::ios::binary);
        write_vector_file(f, "toy", 32, entries);
    }
    auto partial = entries;
    partial.pop_back();
    {
        std::ofstream f(d / "partial.vec", std::ios::binary);
        write_vector_file(f, "toy", 32, partial);
    }
    const std::vector<std::string> base = {"sweep", "--tag", "service", "--K", "2", "--n-entities", "4", "--seed",
                                           "9", "--vw", "0", "1", "--resamples", "50", "--embed", "precomputed",
                                           "--dim", "32"};
    auto ok = base;
    ok.insert(ok.end(), {"--vectors", d / "all.vec", "--out", d / "ok.json"});
    CHECK(cli(ok).code == 0);
    CHECK(read_json(d / "ok.json")["spec"]["embedder"]["name"] == "toy");
    auto missing = base;
    missing.insert(missing.end(), {"--vectors", d / "partial.vec", "--out", d / "bad.json"});
    const auto r = cli(missing);
    CHECK(r.code == 1);
    CHECK(r.err.find("missing precomputed vector") != std::string::npos);
    auto wrong_dim = base;
    wrong_dim[wrong_dim.size() - 1] = "64";
    wrong_dim.insert(wrong_dim.end(), {"--vectors", d / "all.vec", "--out", d / "dim.json"});
    CHECK(cli(wrong_dim).code != 0);
}

TEST_CASE("generate is reproducible and repetitions regenerate") {
    TempDir d;
    REQUIRE(cli({"generate", "--tag", "preference", "--K", "4", "--seed", "3", "--repetitions", "2", "--out", d / "a.json"}).code == 0);
    REQUIRE(cli({"generate", "--tag", "preference", "--K", "4", "--seed", "3", "--repetitions", "2", "--out", d / "b.json"}).code == 0);
    CHECK(slurp(d / "a.json") == slurp(d / "b.json"));
    const auto j = read_json(d / "a.json");
    REQUIRE(j["corpora"].size() == 2);
    CHECK(j["corpora"][0]["docs"] != j["corpora"][1]["docs"]);
    CHECK(j["corpora"][0]["docs"].size() == 128);
    const auto stdout_run = cli({"generate", "--K", "1", "--n-entities", "2"});
    CHECK(json::parse(stdout_run.out)["corpora"][0]["queries"].size() == 2);
}

TEST_CASE("verify-registry reports ok, missing and corrupt artifacts") {
    TempDir d;
    REQUIRE(cli({"sweep", "--K", "2", "--vw", "0", "0.5", "--n-entities", "4", "--resamples", "50", "--out",
                 d / "good.json"})
                .code == 0);
    {
        std::ofstream f(d / "reg_ok.tsv");
        f << "# claim\tpath\nservice K=2 lift\tgood.json\n";
    }
    auto r = cli({"verify-registry", d / "reg_ok.tsv"});
    CHECK(r.code == 0);
    CHECK(r.out.find("ok: 1/1") != std::string::npos);

    {
        std::ofstream f(d / "corrupt.json");
        f << "{\"schema_version\": 1, \"cells\": [";
    }
    {
        std::ofstream f(d / "wrong.json");
        f << R"({"schema_version": 1, "spec": {}, "cells": [], "environment": {}})";
    }
    {
        std::ofstream f(d / "reg_bad.tsv");
        f << "a\tgood.json\nb\tnowhere.json\nc\tcorrupt.json\nd\twrong.json\n";
    }
    r = cli({"verify-registry", d / "reg_bad.tsv"});
    CHECK(r.code == 1);
    CHECK(r.err.find("MISSING b") != std::string::npos);
    CHECK(r.err.find("CORRUPT c") != std::string::npos);
    CHECK(r.err.find("CORRUPT d") != std::string::npos);
    CHECK(r.out.find("1/4") != std::string::npos);
    CHECK(cli({"verify-registry", d / "no_such_registry.tsv"}).code != 0);
}

TEST_CASE("store-verify and lifecycle-replay read an event log") {
    TempDir d;
    const auto log = d / "events.jsonl";
    {
        MemoryStore s(std::make_shared<HashTrigramEmbedder>(64), StorageConfig{}, fs::path(log), false);
        s.remember(WriteRequest{"alice", "first memory text", MemoryType::Episode, 0.5, 1.0, std::nullopt});
        s.remember(WriteRequest{"alice", "first memory text", MemoryType::Episode, 0.5, 1.0, std::nullopt});
        s.append_lifecycle({"sch", LifecycleAction::Create, "w0", std::nullopt});
        s.append_lifecycle({"sch", LifecycleAction::Deprecate, "w1", "e1"});
        s.append_lifecycle({"sch", LifecycleAction::Promote, "w2", std::nullopt});  // illegal after DEPRECATE
    }
    auto r = cli({"store-verify", "--log", log});
    REQUIRE(r.code == 0);
    auto j = json::parse(r.out);
    CHECK(j["events"] == 5);
    CHECK(j["rows"] == 1);
    CHECK(j["deduped_writes"] == 1);
    CHECK(j["lifecycle_events"] == 3);

    r = cli({"lifecycle-replay", "--log", log});
    REQUIRE(r.code == 0);
    j = json::parse(r.out);
    CHECK(j["schemas"]["sch"]["status"] == "DEPRECATED");
    r = cli({"lifecycle-replay", "--log", log, "--quorum-k", "2"});
    j = json::parse(r.out);
    CHECK(j["schemas"]["sch"]["status"] == "PROMOTED");
    CHECK(j["schemas"]["sch"]["pending_deprecate_emitters"].empty());
    CHECK(cli({"lifecycle-replay", "--log", log, "--mode", "strict"}).code == 1);
    CHECK(cli({"lifecycle-replay", "--log", log, "--quorum-k", "0"}).code == 2);

    {
        std::ofstream f(log, std::ios::app);
        f << "garbage\n";
    }
    r = cli({"store-verify", "--log", log});
    CHECK(r.code == 1);
    CHECK(r.err.find("line 6") != std::string::npos);
}

TEST_CASE("router reports oracle headroom and policies") {
    const auto r = cli({"router", "--tag", "service", "--K", "4", "--n-entities", "8", "--vw", "0", "0.5", "1",
                        "--tau", "-1e300", "1e300", "--low-vw", "0", "--high-vw", "0.5", "--resamples", "100"});
    REQUIRE(r.code == 0);
    const auto j = json::parse(r.out);
    CHECK(j["oracle"]["oracle_hit1"].get<double>() >= j["oracle"]["static_best_hit1"].get<double>());
    REQUIRE(j["policies"].size() == 2);
    double arm0 = 0, arm05 = 0;
    for (const auto& a : j["arms"]) {
        if (a["vw"] == 0.0) arm0 = a["hit_at_1"];
        if (a["vw"] == 0.5) arm05 = a["hit_at_1"];
    }
    CHECK(j["policies"][0]["hit_at_1"] == arm0);
    CHECK(j["policies"][1]["hit_at_1"] == arm05);
    CHECK(cli({"router", "--vw", "0", "1", "--low-vw", "0.3"}).code == 2);
}

TEST_CASE("the installed binary runs end to end") {
    TempDir d;
    const std::string cmd = std::string(ECOL_CLI_PATH) + " sweep --K 32 --tag tool --vw 0 0.5 > " + (d / "o.txt") +
                            " 2>&1";
    const int status = std::system(cmd.c_str());
    REQUIRE(WIFEXITED(status));
    CHECK(WEXITSTATUS(status) == 2);
    const std::string ok = std::string(ECOL_CLI_PATH) + " generate --K 1 --n-entities 2 --out " + (d / "c.json");
    CHECK(std::system(ok.c_str()) == 0);
    CHECK(read_json(d / "c.json")["corpora"].size() == 1);
}

}
