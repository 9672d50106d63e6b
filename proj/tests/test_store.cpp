#include <doctest.h>

#include <unistd.h>

#include <array>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <set>
#include <thread>

#include "ecol/errors.hpp"
#include "ecol/rng.hpp"
#include "ecol/store.hpp"

using namespace ecol;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("ecol_store_" + std::to_string(::getpid()) + "_" +
                                            std::to_string(counter()++));
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    static int& counter() {
        static int n = 0;
        return n;
    }
};

std::shared_ptr<const Embedder> hash_embedder() { return std::make_shared<HashTrigramEmbedder>(256); }

// Vectors with chosen pairwise cosines: "a"·"b" = 0.80, "c" orthogonal to both.
std::shared_ptr<const Embedder> angle_embedder() {
    const float s = static_cast<float>(std::sqrt(1.0 - 0.8 * 0.8));
    return std::make_shared<PrecomputedVectors>(
        "angles", 3,
        std::vector<std::pair<std::string, std::vector<float>>>{
            {"a", {1, 0, 0}}, {"b", {0.8f, s, 0}}, {"c", {0, 0, 1}}});
}

WriteRequest req(std::string actor, std::string text, double salience = 0.5, double ec = 1.0) {
    return WriteRequest{std::move(actor), std::move(text), MemoryType::Episode, salience, ec, std::nullopt};
}

StorageConfig acl_cfg(bool acl, bool dedup = true) {
    StorageConfig c;
    c.acl_enabled = acl;
    c.write_dedup_enabled = dedup;
    return c;
}

void grant_all(MemoryStore& s, std::initializer_list<const char*> actors) {
    for (const char* a : actors) s.set_grant({a, GrantScope::Own, false});
}

std::vector<std::string> lines_of(const fs::path& p) {
    std::ifstream in(p);
    std::vector<std::string> out;
    for (std::string l; std::getline(in, l);) out.push_back(l);
    return out;
}

}  // namespace

TEST_SUITE("store") {

TEST_CASE("sequential appends number 1, 2, 3") {
    TempDir dir;
    EventLog log(dir.path / "log.jsonl");
    std::vector<std::uint64_t> seqs;
    for (int i = 0; i < 3; ++i) {
        WriteEvent ev{"", EventKind::Lifecycle, lifecycle_to_json({"s", LifecycleAction::Create, "w", std::nullopt}), 0};
        seqs.push_back(log.append(ev));
        CHECK(ev.seq == seqs.back());
    }
    CHECK(seqs == std::vector<std::uint64_t>{1, 2, 3});
    CHECK(lines_of(dir.path / "log.jsonl").size() == 3);
    EventLog reopened(dir.path / "log.jsonl");
    CHECK(reopened.last_seq() == 3);
}

TEST_CASE("50 concurrent appenders x 20 events are lossless and untorn") {
    TempDir dir;
    const auto path = dir.path / "log.jsonl";
    {
        EventLog log(path, false);
        std::vector<std::thread> ts;
        for (int w = 0; w < 50; ++w) {
            ts.emplace_back([&, w] {
                for (int i = 0; i < 20; ++i) {
                    WriteEvent ev{"", EventKind::Remember,
                                  nlohmann::json{{"writer", w}, {"i", i}, {"deduped_against", "x"}}, 0};
                    log.append(ev);
                }
            });
        }
        for (auto& t : ts) t.join();
    }
    const auto lines = lines_of(path);
    REQUIRE(lines.size() == 1000);
    std::set<std::pair<int, int>> seen;
    std::set<std::uint64_t> seqs;
    for (const auto& l : lines) {
        const auto j = nlohmann::json::parse(l);  // throws on interleaved bytes
        seen.emplace(j["payload"]["writer"].get<int>(), j["payload"]["i"].get<int>());
        seqs.insert(j["seq"].get<std::uint64_t>());
    }
    CHECK(seen.size() == 1000);
    CHECK(seqs.size() == 1000);
    CHECK(*seqs.begin() == 1);
    CHECK(*seqs.rbegin() == 1000);
    CHECK(replay(path).events_applied == 1000);
}

TEST_CASE("torn trailing record fails fast with its byte offset") {
    TempDir dir;
    const auto path = dir.path / "log.jsonl";
    {
        EventLog log(path);
        WriteEvent ev{"", EventKind::Remember, nlohmann::json{{"deduped_against", "x"}}, 0};
        log.append(ev);
    }
    const auto good = fs::file_size(path);
    {
        std::ofstream out(path, std::ios::app);
        out << R"({"seq": 2, "kind": "REMEM)";
    }
    try {
        EventLog again(path);
        FAIL("expected TornRecordError");
    } catch (const TornRecordError& e) {
        CHECK(e.offset == good);
    }
}

TEST_CASE("replay reports the malformed line number") {
    TempDir dir;
    const auto path = dir.path / "log.jsonl";
    {
        std::ofstream out(path);
        out << R"({"seq":1,"kind":"REMEMBER","payload":{"deduped_against":"x"}})" << "\n";
        out << R"({"seq":2,"kind":"REMEMBER","payload":{"deduped_against":"y"}})" << "\n";
        out << "not json\n";
    }
    try {
        replay(path);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.line == 3);
    }
    CHECK(replay(std::span<const WriteEvent>{}) == Projection{});
}

TEST_CASE("replay is deterministic and prefix replay equals incremental application") {
    TempDir dir;
    const auto path = dir.path / "log.jsonl";
    Rng rng(5);
    std::vector<Projection> live;
    StorageConfig cfg;
    cfg.write_dedup_threshold = 0.99;
    cfg.merge_threshold = 0.5;  // both dedup and merge fire in this corpus
    {
        MemoryStore store(hash_embedder(), cfg, path, false);
        const char* agents[] = {"alice", "bob", ""};
        const char* words[] = {"alpha", "bravo", "charlie", "delta", "echo", "foxtrot"};
        for (int i = 0; i < 1000; ++i) {
            const auto r = rng.below(20);
            if (r == 0) {
                store.mechanical_merge_pass();
            } else if (r == 1) {
                store.append_lifecycle({"s" + std::to_string(rng.below(3)), LifecycleAction::Create, "w", std::nullopt});
            } else {
                std::string text;
                for (int w = 0; w < 3; ++w) text += std::string(words[rng.below(6)]) + " ";
                store.remember(req(agents[rng.below(3)], text, rng.uniform()));
            }
            if (i % 97 == 0) live.push_back(store.projection());
        }
        live.push_back(store.projection());
    }
    const auto events = read_event_log(path);
    CHECK(replay(path) == replay(path));
    CHECK(replay(path) == live.back());

    Projection inc;
    std::size_t next_check = 0;
    for (std::size_t n = 0; n < events.size(); ++n) {
        inc.apply(events[n]);
        if (n % 37 == 0) CHECK(inc == replay(std::span(events).first(n + 1)));
        if (next_check < live.size() - 1 && inc.last_seq == live[next_check].last_seq) {
            CHECK(inc == live[next_check]);
            ++next_check;
        }
    }
    CHECK(inc.deduped_writes > 0);
    CHECK(inc.suppressions > 0);

    // Reopening rebuilds the same projection and continues numbering.
    MemoryStore reopened(hash_embedder(), cfg, path, false);
    CHECK(reopened.projection() == live.back());
    reopened.remember(req("zed", "a brand new memory text"));
    CHECK(reopened.projection().last_seq == live.back().last_seq + 1);
}

TEST_CASE("WD-3: same actor writing identical text is deduped") {
    for (bool acl : {false, true}) {
        MemoryStore s(hash_embedder(), acl_cfg(acl));
        grant_all(s, {"alice"});
        const auto first = s.remember(req("alice", "alice prefers dark mode in the editor"));
        REQUIRE(first.stored);
        const auto second = s.remember(req("alice", "alice prefers dark mode in the editor"));
        CHECK(!second.stored);
        REQUIRE(second.deduped_against);
        CHECK(*second.deduped_against == first.stored->id);
        CHECK(s.projection().rows.size() == 1);
        CHECK(s.projection().deduped_writes == 1);
    }
}

TEST_CASE("WD-1: under ACL another actor's near-duplicate still lands") {
    MemoryStore s(hash_embedder(), acl_cfg(true));
    grant_all(s, {"alice", "bob"});
    const auto a = s.remember(req("alice", "the deploy key lives in the vault"));
    const auto b = s.remember(req("bob", "the deploy key lives in the vault"));
    REQUIRE(a.stored);
    REQUIRE(b.stored);
    CHECK(b.stored->agent_id == "bob");
    const auto scope = s.acl_scope("bob");
    const auto hits = s.lexical().search(tokenize("deploy key vault"), 5, scope, 0);
    REQUIRE(hits.size() == 1);
    CHECK(hits[0].id == b.stored->id);
}

TEST_CASE("WD-2: with ACL off cross-actor dedup fires") {
    MemoryStore s(hash_embedder(), acl_cfg(false));
    const auto a = s.remember(req("alice", "the deploy key lives in the vault"));
    const auto b = s.remember(req("bob", "the deploy key lives in the vault"));
    CHECK(!b.stored);
    CHECK(b.deduped_against == a.stored->id);
}

TEST_CASE("system memory is visible to every writer's dedup scope") {
    MemoryStore s(hash_embedder(), acl_cfg(true));
    grant_all(s, {"", "bob"});
    const auto sys = s.remember(req("", "company holiday calendar for the year"));
    const auto b = s.remember(req("bob", "company holiday calendar for the year"));
    CHECK(b.deduped_against == sys.stored->id);
}

TEST_CASE("dedup threshold boundaries") {
    auto emb = angle_embedder();
    MemoryStore s(emb, acl_cfg(false));
    const auto a = s.remember(req("x", "a"));
    CHECK(s.remember(req("x", "b")).stored);  // cosine 0.80 < 0.92
    CHECK(s.remember(req("x", "a")).deduped_against == a.stored->id);
    CHECK(s.remember(req("x", "c")).stored);
    CHECK_THROWS_AS(s.remember(req("x", "")), InvalidArgument);
    CHECK_THROWS_AS(s.remember(req("x", "zzz")), MissingVectorError);
}

TEST_CASE("R1: a vector hit whose row cannot be loaded is skipped") {
    VectorIndex vi;
    vi.add("ghost", "alice", hash_trigram_embed("same text here", 256));
    const auto cand = hash_trigram_embed("same text here", 256);
    StorageConfig cfg;
    CHECK(!dedup_check(vi, cand, std::nullopt, cfg, [](std::string_view) -> const Memory* { return nullptr; }));
    Memory row;
    row.id = "ghost";
    row.agent_id = "alice";
    CHECK(dedup_check(vi, cand, std::nullopt, cfg, [&](std::string_view) { return &row; }) == "ghost");
    CHECK(!dedup_check(vi, cand, AgentSet{"bob", ""}, cfg, [&](std::string_view) { return &row; }));
}

TEST_CASE("I1/I2: dedup ignores and preserves the keeper's extraction confidence") {
    for (double keeper_ec : {0.0, 0.05, 0.5, 0.95, 1.0}) {
        MemoryStore s(hash_embedder(), acl_cfg(false));
        const auto k = s.remember(req("alice", "quarterly report due friday", 0.5, keeper_ec));
        const double before = s.find(k.stored->id)->extraction_confidence;
        const auto d = s.remember(req("alice", "quarterly report due friday", 0.5, 1.0 - keeper_ec));
        CHECK(d.deduped_against == k.stored->id);  // I1: same outcome for every keeper EC
        const double after = s.find(k.stored->id)->extraction_confidence;
        CHECK(std::memcmp(&before, &after, sizeof(double)) == 0);  // I2
    }
}

TEST_CASE("extraction confidence is clamped") {
    MemoryStore s(hash_embedder(), acl_cfg(false));
    CHECK(s.remember(req("a", "one thing", 0.5, 1.7)).stored->extraction_confidence == 1.0);
    CHECK(s.remember(req("a", "other stuff", 0.5, -0.2)).stored->extraction_confidence == 0.0);
}

TEST_CASE("MM-ACL-2: same-agent near-duplicates merge, lower salience loses") {
    MemoryStore s(hash_embedder(), acl_cfg(false, false));
    const auto hi = s.remember(req("alice", "standup moved to ten am", 0.9));
    const auto lo = s.remember(req("alice", "standup moved to ten am", 0.4));
    CHECK(s.mechanical_merge_pass().suppressed == 1);
    CHECK(s.find(lo.stored->id)->state == MemoryState::Suppressed);
    CHECK(s.find(hi.stored->id)->state == MemoryState::Active);
    CHECK(s.mechanical_merge_pass().suppressed == 0);
    const auto ev = s.events().back();
    CHECK(ev.kind == EventKind::Suppress);
    CHECK(ev.payload["memory_id"] == lo.stored->id);
    CHECK(ev.payload["keeper"] == hi.stored->id);
}

TEST_CASE("equal salience suppresses the later write") {
    MemoryStore s(hash_embedder(), acl_cfg(false, false));
    const auto first = s.remember(req("alice", "lunch order is tacos"));
    const auto later = s.remember(req("alice", "lunch order is tacos"));
    s.mechanical_merge_pass();
    CHECK(s.find(first.stored->id)->state == MemoryState::Active);
    CHECK(s.find(later.stored->id)->state == MemoryState::Suppressed);
}

TEST_CASE("MM-ACL-1: cross-agent near-duplicates never merge, either direction") {
    for (auto [sa, sb] : {std::pair{0.9, 0.4}, std::pair{0.4, 0.9}}) {
        MemoryStore s(hash_embedder(), acl_cfg(true, false));
        grant_all(s, {"alice", "bob"});
        s.remember(req("alice", "standup moved to ten am", sa));
        s.remember(req("bob", "standup moved to ten am", sb));
        CHECK(s.mechanical_merge_pass().suppressed == 0);
        CHECK(s.projection().active_rows() == 2);
    }
}

TEST_CASE("MM-ACL-4: system memory does not merge with an agent memory") {
    for (auto [sys, agent] : {std::pair{0.9, 0.4}, std::pair{0.4, 0.9}}) {
        MemoryStore s(hash_embedder(), acl_cfg(false, false));
        s.remember(req("", "standup moved to ten am", sys));
        s.remember(req("alice", "standup moved to ten am", agent));
        CHECK(s.mechanical_merge_pass().suppressed == 0);
    }
    MemoryStore s(hash_embedder(), acl_cfg(false, false));
    s.remember(req("", "standup moved to ten am", 0.9));
    s.remember(req("", "standup moved to ten am", 0.4));
    CHECK(s.mechanical_merge_pass().suppressed == 1);
}

TEST_CASE("merge is idempotent and agent-local on random stores") {
    Rng rng(31);
    const char* words[] = {"red", "green", "blue", "cyan", "magenta"};
    for (int trial = 0; trial < 15; ++trial) {
        MemoryStore s(hash_embedder(), acl_cfg(false, false));
        for (int i = 0; i < 40; ++i) {
            std::string t = std::string(words[rng.below(5)]) + " " + words[rng.below(5)] + " paint";
            s.remember(req(rng.below(2) ? "alice" : "bob", t, std::round(rng.uniform() * 4) / 4));
        }
        s.mechanical_merge_pass();
        const auto after = s.projection();
        CHECK(s.mechanical_merge_pass().suppressed == 0);
        CHECK(s.projection().rows == after.rows);
        for (const auto& ev : s.events()) {
            if (ev.kind != EventKind::Suppress) continue;
            CHECK(s.find(ev.payload["memory_id"].get<std::string>())->agent_id ==
                  s.find(ev.payload["keeper"].get<std::string>())->agent_id);
        }
    }
}

TEST_CASE("ACL monotonicity: disabling ACL never shrinks the dedup pool") {
    Rng rng(8);
    const char* words[] = {"ship", "the", "release", "notes", "today", "tomorrow"};
    for (int trial = 0; trial < 20; ++trial) {
        MemoryStore on(hash_embedder(), acl_cfg(true, false));
        MemoryStore off(hash_embedder(), acl_cfg(false, false));
        grant_all(on, {"alice", "bob", ""});
        for (int i = 0; i < 30; ++i) {
            std::string t;
            for (int w = 0; w < 4; ++w) t += std::string(words[rng.below(6)]) + " ";
            const char* who = std::array{"alice", "bob", ""}[rng.below(3)];
            on.remember(req(who, t));
            off.remember(req(who, t));
        }
        for (int q = 0; q < 10; ++q) {
            std::string t;
            for (int w = 0; w < 4; ++w) t += std::string(words[rng.below(6)]) + " ";
            const auto vec = hash_trigram_embed(t, 256);
            const auto look_on = [&](std::string_view id) { return on.find(id); };
            const auto look_off = [&](std::string_view id) { return off.find(id); };
            const bool fired_on = dedup_check(on.vectors(), vec, on.acl_scope("alice"), on.config(), look_on).has_value();
            const bool fired_off = dedup_check(off.vectors(), vec, off.acl_scope("alice"), off.config(), look_off).has_value();
            if (fired_on) CHECK(fired_off);
        }
        CHECK(on.mechanical_merge_pass().suppressed == off.mechanical_merge_pass().suppressed);
    }
}

TEST_CASE("FE-ACL-1..4: facts inherit their episode's owner") {
    MemoryStore s(hash_embedder(), acl_cfg(true));
    grant_all(s, {"alice", "bob", ""});
    const auto a = s.remember(req("alice", "alice booked flights to lisbon")).stored->id;
    const auto b = s.remember(req("bob", "bob renewed the gym membership")).stored->id;
    const auto sys = s.remember(req("", "office closes at six on fridays")).stored->id;

    CHECK(s.synthesize_facts({a}, 0.8).at(0).agent_id == "alice");
    CHECK(s.synthesize_facts({b}, 0.8).at(0).agent_id == "bob");
    CHECK(s.synthesize_facts({sys}, 0.8).at(0).agent_id == "");

    const auto a2 = s.remember(req("alice", "alice owes carol twenty dollars")).stored->id;
    const auto b2 = s.remember(req("bob", "bob parks on level three")).stored->id;
    const auto mixed = s.synthesize_facts({a2, b2, a}, 0.7);
    REQUIRE(mixed.size() == 3);
    CHECK(mixed[0].agent_id == "alice");
    CHECK(mixed[1].agent_id == "bob");
    CHECK(mixed[2].agent_id == "alice");
    for (const auto& f : mixed) {
        CHECK(f.memory_type == MemoryType::Fact);
        CHECK(f.extraction_confidence == 0.7);
        CHECK(f.id.rfind("m:" + f.agent_id + ":", 0) == 0);
    }
    // Bob cannot see Alice's facts.
    const auto hits = s.lexical().search(tokenize("alice carol dollars"), 10, s.acl_scope("bob"), 0);
    CHECK(hits.empty());
    CHECK_THROWS_AS(s.synthesize_facts({"m:nobody:1"}, 0.5), InvalidArgument);
    CHECK_THROWS_AS(s.synthesize_facts({mixed[0].id}, 0.5), InvalidArgument);
}

TEST_CASE("grants and permissions") {
    MemoryStore s(hash_embedder(), acl_cfg(true));
    CHECK_THROWS_AS(s.remember(req("mallory", "hello there world")), PermissionError);
    s.set_grant({"alice", GrantScope::Own, false});
    s.set_grant({"root", GrantScope::All, false});
    s.set_grant({"fed", GrantScope::Own, true});
    CHECK(s.acl_scope("alice") == Scope{AgentSet{"alice", ""}});
    CHECK(!s.acl_scope("root").has_value());
    CHECK(!s.acl_scope("fed").has_value());
    MemoryStore open(hash_embedder(), acl_cfg(false));
    CHECK(!open.acl_scope("anyone").has_value());
}

TEST_CASE("config validation") {
    StorageConfig c;
    c.write_dedup_threshold = 0;
    CHECK_THROWS_AS(c.validate(), InvalidArgument);
    c = {};
    c.merge_threshold = 1.01;
    CHECK_THROWS_AS(c.validate(), InvalidArgument);
    c = {};
    c.merge_pool = 0;
    CHECK_THROWS_AS(c.validate(), InvalidArgument);
    CHECK_NOTHROW(StorageConfig{}.validate());
}

TEST_CASE("schema rows require a schema id") {
    MemoryStore s(hash_embedder(), acl_cfg(false));
    WriteRequest r = req("", "schema: weekly planning");
    r.memory_type = MemoryType::Schema;
    CHECK_THROWS_AS(s.remember(r), InvalidArgument);
    r.schema_id = "weekly";
    CHECK(s.remember(r).stored->schema_id == "weekly");
}

}
