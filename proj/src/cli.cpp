#include "ecol/cli.hpp"

#include <atomic>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <mutex>
#include <numeric>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "ecol/artifact.hpp"
#include "ecol/collision.hpp"
#include "ecol/errors.hpp"
#include "ecol/lifecycle.hpp"
#include "ecol/retrieval.hpp"
#include "ecol/stats.hpp"
#include "ecol/store.hpp"

namespace ecol {

using nlohmann::json;

namespace {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::uint64_t effective_seed(std::uint64_t flag_value) {
    if (const char* env = std::getenv(kSeedEnvVar); env != nullptr && *env != '\0') {
        try {
            return std::stoull(env);
        } catch (const std::exception&) {
            throw UsageError(std::string(kSeedEnvVar) + " is not an unsigned integer: " + env);
        }
    }
    return flag_value;
}

void write_json(const json& j, const std::string& path, std::ostream& out) {
    const std::string text = j.dump(2) + "\n";
    if (path.empty() || path == "-") {
        out << text;
        return;
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + path);
    f << text;
}

std::string path_for_tag(const std::string& out, std::string_view tag, bool multi) {
    if (!multi || out == "-") return out;
    if (auto p = out.find("{tag}"); p != std::string::npos) return out.substr(0, p) + std::string(tag) + out.substr(p + 5);
    const std::filesystem::path fp(out);
    return (fp.parent_path() / (fp.stem().string() + "_" + std::string(tag) + fp.extension().string())).string();
}

// ------------------------------------------------------------ shared flags

struct EmbedFlags {
    std::string kind = "hash";
    std::size_t dim = 256;
    std::string vectors;

    void add(CLI::App& app) {
        app.add_option("--embed", kind, "Embedder: hash or precomputed")->check(CLI::IsMember({"hash", "precomputed"}));
        app.add_option("--dim", dim, "Embedding dimension (hash default 256)")->check(CLI::PositiveNumber);
        app.add_option("--vectors", vectors, "Precomputed vector file");
    }

    EmbedderConfig config() const {
        EmbedderConfig c;
        c.kind = kind == "hash" ? EmbedderKind::HashTrigram : EmbedderKind::Precomputed;
        c.dim = dim;
        if (!vectors.empty()) c.vectors_path = vectors;
        if (c.kind == EmbedderKind::Precomputed && !c.vectors_path) throw UsageError("--embed precomputed needs --vectors");
        return c;
    }

    json to_json(const Embedder& e) const { return json{{"kind", kind}, {"dim", dim}, {"name", e.name()}}; }
};

struct RetrievalFlags {
    RetrievalConfig cfg;
    double prf_d = 0.0, rarity = 0.0, alpha = 0.0, anchor = 0.5;
    bool no_anchor = false, rm3 = false;
    Rm3Config rm3cfg;
    CLI::Option* o_prf = nullptr;
    CLI::Option* o_rarity = nullptr;
    CLI::Option* o_alpha = nullptr;

    void add(CLI::App& app) {
        app.add_option("--k", cfg.k, "Results per query")->check(CLI::PositiveNumber);
        o_prf = app.add_option("--prf-min-dominance", prf_d, "Enable PRF with this dominance fraction");
        app.add_option("--prf-top-k", cfg.top_k_for_prf, "PRF mining pool size");
        app.add_option("--prf-max-entities", cfg.max_entities, "PRF candidate entity cap");
        o_rarity = app.add_option("--prf-idf-min-rarity", rarity, "Drop PRF candidates rarer than this");
        app.add_option("--prf-anchor-share-max", anchor, "Anchor-share ceiling for PRF");
        app.add_flag("--no-anchor-share-gate", no_anchor, "Disable the anchor-share gate");
        o_alpha = app.add_option("--share-prior-alpha", alpha, "Enable share_prior with this alpha");
        app.add_option("--share-prior-pool", cfg.share_prior_pool, "share_prior pool size");
        app.add_flag("--share-prior-adaptive", cfg.share_prior_adaptive_alpha, "Degree-adaptive alpha");
        app.add_option("--share-prior-epsilon", cfg.share_prior_epsilon, "Rank-0 cap margin");
        app.add_flag("--no-extraction-confidence{false}", cfg.use_extraction_confidence,
                     "Do not multiply by extraction confidence");
        app.add_flag("--ignore-schema-lifecycle{false}", cfg.respect_schema_lifecycle,
                     "Keep DEPRECATED schema memories");
        app.add_option("--deprecate-quorum-k", cfg.deprecate_quorum_k, "Distinct DEPRECATE votes required");
        app.add_flag("--rm3", rm3, "Enable RM3 expansion");
        app.add_option("--rm3-fb-docs", rm3cfg.fb_docs, "RM3 feedback documents");
        app.add_option("--rm3-fb-terms", rm3cfg.fb_terms, "RM3 feedback terms");
        app.add_option("--rm3-lambda", rm3cfg.lambda, "RM3 original-query weight");
        app.add_option("--rm3-epsilon", rm3cfg.epsilon, "RM3 minimum term probability");
    }

    RetrievalConfig build(double vw, std::uint64_t seed) const {
        RetrievalConfig c = cfg;
        c.vector_weight = vw;
        c.tie_seed = seed;
        if (o_prf->count()) c.query_expansion_min_dominance = prf_d;
        if (o_rarity->count()) c.query_expansion_idf_min_rarity = rarity;
        c.anchor_share_max = no_anchor ? std::nullopt : std::optional<double>(anchor);
        if (o_alpha->count()) c.share_prior_alpha = alpha;
        if (rm3) c.rm3 = rm3cfg;
        try {
            c.validate();
        } catch (const InvalidArgument& e) {
            throw UsageError(e.what());
        }
        return c;
    }
};

json retrieval_to_json(const RetrievalConfig& c) {
    auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
    json j{{"k", c.k},
           {"query_expansion_min_dominance", opt(c.query_expansion_min_dominance)},
           {"top_k_for_prf", c.top_k_for_prf},
           {"max_entities", c.max_entities},
           {"query_expansion_idf_min_rarity", opt(c.query_expansion_idf_min_rarity)},
           {"anchor_share_max", opt(c.anchor_share_max)},
           {"share_prior_alpha", opt(c.share_prior_alpha)},
           {"share_prior_pool", c.share_prior_pool},
           {"share_prior_adaptive_alpha", c.share_prior_adaptive_alpha},
           {"use_extraction_confidence", c.use_extraction_confidence},
           {"respect_schema_lifecycle", c.respect_schema_lifecycle},
           {"deprecate_quorum_k", c.deprecate_quorum_k}};
    if (c.rm3) {
        j["rm3"] = json{{"fb_docs", c.rm3->fb_docs}, {"fb_terms", c.rm3->fb_terms}, {"lambda", c.rm3->lambda},
                        {"epsilon", c.rm3->epsilon}};
    } else {
        j["rm3"] = nullptr;
    }
    return j;
}

json environment_stamp(std::uint64_t seed) {
    return json{{"artifact_version", kArtifactVersion}, {"seed", seed}};
}

std::vector<Tag> parse_tags(const std::vector<std::string>& names) {
    std::vector<Tag> out;
    for (const auto& n : names) {
        try {
            out.push_back(parse_tag(n));
        } catch (const InvalidArgument& e) {
            throw UsageError(e.what());
        }
    }
    return out;
}

CollisionSpec make_spec(Tag tag, int K, int n_entities, std::uint64_t seed, bool paraphrase) {
    CollisionSpec s;
    s.tag = tag;
    s.K = K;
    s.n_entities = n_entities;
    s.seed = seed;
    s.paraphrase = paraphrase;
    try {
        s.validate();
    } catch (const InvalidArgument& e) {
        throw UsageError(e.what());
    }
    return s;
}

/// Runs fn(i) for i in [0, n) on up to `jobs` threads; results are placed by index.
template <class Fn>
void parallel_for(std::size_t n, unsigned jobs, Fn fn) {
    jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(n)));
    if (jobs <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex fail_mu;
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < jobs; ++t) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(fail_mu);
                    if (!failure) failure = std::current_exception();
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);
}

// ------------------------------------------------------------ generate

struct GenerateArgs {
    std::vector<std::string> tags{"service"};
    std::vector<int> Ks{4};
    int n_entities = 32;
    std::uint64_t seed = 0;
    int repetitions = 1;
    bool paraphrase = false;
    std::string out = "-";
    std::string texts_out;
};

int cmd_generate(const GenerateArgs& a, std::ostream& out) {
    const std::uint64_t seed = effective_seed(a.seed);
    json corpora = json::array();
    std::vector<std::string> texts;
    for (Tag tag : parse_tags(a.tags)) {
        for (int K : a.Ks) {
            const CollisionSpec base = make_spec(tag, K, a.n_entities, seed, a.paraphrase);
            for (int rep = 0; rep < a.repetitions; ++rep) {
                CollisionSpec s = base;
                s.seed = repetition_seed(seed, rep);
                const auto c = generate(s);
                json cj = corpus_to_json(c);
                cj["repetition"] = rep;
                corpora.push_back(std::move(cj));
                const auto t = corpus_texts(c);
                texts.insert(texts.end(), t.begin(), t.end());
            }
        }
    }
    if (!a.out.empty()) write_json(json{{"schema_version", 1}, {"corpora", corpora}}, a.out, out);
    if (!a.texts_out.empty()) {
        std::ofstream f(a.texts_out, std::ios::binary);
        if (!f) throw std::runtime_error("cannot write " + a.texts_out);
        write_text_list(f, texts);
    }
    return 0;
}

// ------------------------------------------------------------ sweep

struct SweepArgs {
    std::vector<std::string> tags{"service"};
    std::vector<int> Ks{1, 2, 4, 8, 16};
    std::vector<double> vws{0.0, 0.5};
    int n_entities = 32;
    std::uint64_t seed = 0;
    int repetitions = 1;
    bool reps_scale_with_k = false;
    bool paraphrase = false;
    int resamples = 10000;
    unsigned jobs = 1;
    std::string out = "-";
    EmbedFlags embed;
    RetrievalFlags retrieval;
};

int cmd_sweep(SweepArgs& a, std::ostream& out) {
    const std::uint64_t seed = effective_seed(a.seed);
    if (a.vws.size() < 2) throw UsageError("--vw needs at least two arms (baseline first)");
    for (double v : a.vws) {
        if (!(v >= 0.0 && v <= 1.0)) throw UsageError("--vw values must lie in [0, 1]");
    }
    if (a.repetitions < 1) throw UsageError("--repetitions must be >= 1");
    const auto tags = parse_tags(a.tags);
    for (Tag t : tags) {
        for (int K : a.Ks) make_spec(t, K, a.n_entities, seed, a.paraphrase);
    }
    const auto embedder = make_embedder(a.embed.config());

    for (Tag tag : tags) {
        struct Job {
            int K;
            std::size_t arm;
        };
        std::vector<Job> jobs;
        for (int K : a.Ks) {
            for (std::size_t i = 1; i < a.vws.size(); ++i) jobs.push_back({K, i});
        }
        std::vector<json> cells(jobs.size());
        parallel_for(jobs.size(), a.jobs, [&](std::size_t j) {
            const int K = jobs[j].K;
            const int reps = a.reps_scale_with_k ? a.repetitions * K : a.repetitions;
            const double vwa = a.vws[0], vwb = a.vws[jobs[j].arm];
            const ArmSpec arm_a{"vw=" + json(vwa).dump(), a.retrieval.build(vwa, seed), embedder};
            const ArmSpec arm_b{"vw=" + json(vwb).dump(), a.retrieval.build(vwb, seed), embedder};
            const auto pr = run_cell_repeated(make_spec(tag, K, a.n_entities, seed, a.paraphrase), reps, arm_a, arm_b);
            const auto ci = paired_bootstrap_ci(pr, a.resamples, seed);
            json cell{{"tag", tag_name(tag)},
                      {"K", K},
                      {"n", pr.size()},
                      {"repetitions", reps},
                      {"arm_a", {{"label", arm_a.label}, {"vw", vwa}, {"hit_at_1", pr.mean_a()}}},
                      {"arm_b", {{"label", arm_b.label}, {"vw", vwb}, {"hit_at_1", pr.mean_b()}}}};
            cell.update(ci_to_json(ci));
            cells[j] = std::move(cell);
        });
        json artifact{{"schema_version", kArtifactSchemaVersion},
                      {"spec",
                       {{"tag", tag_name(tag)},
                        {"K", a.Ks},
                        {"n_entities", a.n_entities},
                        {"seed", seed},
                        {"embedder", a.embed.to_json(*embedder)},
                        {"vw_arms", a.vws},
                        {"repetitions", a.repetitions},
                        {"reps_scale_with_k", a.reps_scale_with_k},
                        {"paraphrase", a.paraphrase},
                        {"resamples", a.resamples},
                        {"retrieval", retrieval_to_json(a.retrieval.build(a.vws[0], seed))}}},
                      {"cells", cells},
                      {"environment", environment_stamp(seed)}};
        write_json(artifact, path_for_tag(a.out, tag_name(tag), tags.size() > 1), out);
    }
    return 0;
}

// ------------------------------------------------------------ router

struct RouterArgs {
    std::string tag = "service";
    int K = 16;
    std::vector<double> vws{0.0, 0.3, 0.5, 0.7, 1.0};
    int n_entities = 32;
    std::uint64_t seed = 0;
    int repetitions = 1;
    bool paraphrase = false;
    int resamples = 10000;
    std::string signal = "raw_gap";
    std::vector<double> taus;
    double low_vw = 0.0;
    double high_vw = 0.5;
    double probe_vw = 0.0;
    std::string out = "-";
    EmbedFlags embed;
    RetrievalFlags retrieval;
};

int cmd_router(RouterArgs& a, std::ostream& out) {
    const std::uint64_t seed = effective_seed(a.seed);
    const Tag tag = parse_tags({a.tag}).front();
    const auto spec = make_spec(tag, a.K, a.n_entities, seed, a.paraphrase);
    const SignalKind kind = a.signal == "raw_gap"    ? SignalKind::RawGap
                            : a.signal == "norm_gap" ? SignalKind::NormGap
                                                     : SignalKind::Crowd095;
    auto has = [&](double v) { return std::find(a.vws.begin(), a.vws.end(), v) != a.vws.end(); };
    if (!has(a.low_vw) || !has(a.high_vw)) throw UsageError("--low-vw and --high-vw must be members of --vw");
    const auto embedder = make_embedder(a.embed.config());

    HitsByVw hits;
    std::vector<double> signal;
    for (int rep = 0; rep < a.repetitions; ++rep) {
        CollisionSpec s = spec;
        s.seed = repetition_seed(seed, rep);
        const auto corpus = generate(s);
        StorageConfig scfg;
        scfg.write_dedup_enabled = false;
        MemoryStore store(embedder, scfg);
        std::map<std::string, std::string> mem_of;
        for (const auto& d : corpus.docs) mem_of[d.doc_id] = store.remember(WriteRequest{"", d.text, MemoryType::Episode, 0.5, 1.0, std::nullopt}).stored->id;
        RetrievalEngine engine(store);
        const auto probe = a.retrieval.build(a.probe_vw, seed);
        for (const auto& q : corpus.queries) signal.push_back(routing_signals(engine.recall_detailed("", q.text, probe)).get(kind));
        for (double vw : a.vws) {
            const auto cfg = a.retrieval.build(vw, seed);
            for (const auto& q : corpus.queries) {
                const auto r = engine.recall("", q.text, cfg);
                hits[vw].push_back(!r.empty() && r.front().memory_id == mem_of.at(q.gold_doc_id) ? 1.0 : 0.0);
            }
        }
    }
    const auto oracle = router_oracle(hits);
    json policies = json::array();
    for (double tau : a.taus) {
        const auto e = threshold_policy_eval(signal, tau, a.low_vw, a.high_vw, hits, a.resamples, seed);
        json p{{"signal", a.signal}, {"tau", tau}, {"low_vw", e.low_vw}, {"high_vw", e.high_vw},
               {"hit_at_1", e.policy_hit1}, {"static_best_vw", e.static_best_vw}};
        p.update(ci_to_json(e.vs_static_best));
        policies.push_back(std::move(p));
    }
    json arms = json::array();
    for (const auto& [vw, h] : hits) {
        arms.push_back({{"vw", vw}, {"hit_at_1", std::accumulate(h.begin(), h.end(), 0.0) / static_cast<double>(h.size())}});
    }
    json artifact{{"schema_version", kArtifactSchemaVersion},
                  {"kind", "router"},
                  {"spec",
                   {{"tag", a.tag}, {"K", a.K}, {"n_entities", a.n_entities}, {"seed", seed},
                    {"repetitions", a.repetitions}, {"embedder", a.embed.to_json(*embedder)}, {"vw_grid", a.vws},
                    {"probe_vw", a.probe_vw}}},
                  {"arms", arms},
                  {"oracle",
                   {{"oracle_hit1", oracle.oracle_hit1}, {"static_best_vw", oracle.static_best_vw},
                    {"static_best_hit1", oracle.static_best_hit1}, {"headroom", oracle.headroom}}},
                  {"policies", policies},
                  {"environment", environment_stamp(seed)}};
    write_json(artifact, a.out, out);
    return 0;
}

// ------------------------------------------------------------ lifecycle / store / registry

int cmd_lifecycle_replay(const std::string& log, int k, const std::string& mode, const std::string& outp,
                         std::ostream& out) {
    if (k < 1) throw UsageError("--quorum-k must be >= 1");
    const auto events = read_event_log(log);
    std::vector<LifecycleEvent> lev;
    for (const auto& e : events) {
        if (e.kind == EventKind::Lifecycle) lev.push_back(lifecycle_from_json(e.payload));
    }
    const auto snap = reduce_events(lev, mode == "strict" ? ReducerMode::Strict : ReducerMode::Lenient, k);
    json schemas = json::object();
    for (const auto& [id, s] : snap) {
        schemas[id] = json{{"status", to_string(s.status)},
                           {"version", s.version},
                           {"last_window_id", s.last_window_id},
                           {"pending_deprecate_emitters", s.pending_deprecate_emitters}};
    }
    write_json(json{{"lifecycle_events", lev.size()}, {"quorum_k", k}, {"mode", mode}, {"schemas", schemas}}, outp, out);
    return 0;
}

int cmd_store_verify(const std::string& log, std::ostream& out) {
    const auto p = replay(std::filesystem::path(log));
    json counts{{"events", p.events_applied},
                {"last_seq", p.last_seq},
                {"rows", p.rows.size()},
                {"active_rows", p.active_rows()},
                {"suppressed_rows", p.rows.size() - p.active_rows()},
                {"deduped_writes", p.deduped_writes},
                {"lifecycle_events", p.lifecycle.size()}};
    out << counts.dump(2) << "\n";
    return 0;
}

int cmd_verify_registry(const std::string& registry, std::ostream& out, std::ostream& err) {
    const auto entries = read_registry(registry);
    const auto problems = verify_registry(registry);
    for (const auto& p : problems) {
        if (p.error == "missing") {
            err << "MISSING " << p.entry.claim << " -> " << p.entry.path.string() << "\n";
        } else {
            err << "CORRUPT " << p.entry.claim << " -> " << p.entry.path.string() << ": " << p.error << "\n";
        }
    }
    out << (problems.empty() ? "ok" : "failed") << ": " << entries.size() - problems.size() << "/" << entries.size()
        << " artifacts verified\n";
    return problems.empty() ? 0 : 1;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Entity-collision evaluation and governed hybrid retrieval", "ecol"};
    app.require_subcommand(1);

    GenerateArgs gen;
    auto* g = app.add_subcommand("generate", "Generate a collision corpus (JSON) and optional text list");
    g->add_option("--tag", gen.tags, "Discriminator tag(s)")->expected(1, -1);
    g->add_option("--K", gen.Ks, "Collision degree(s)")->expected(1, -1);
    g->add_option("--n-entities", gen.n_entities, "Entities per corpus");
    g->add_option("--seed", gen.seed, "Run seed");
    g->add_option("--repetitions", gen.repetitions, "Regenerations per (tag, K)");
    g->add_flag("--paraphrase", gen.paraphrase, "Draw doc templates from the paraphrase set");
    g->add_option("--out", gen.out, "Corpus JSON path ('-' for stdout, '' to skip)");
    g->add_option("--texts-out", gen.texts_out, "Write the escaped text list for vector export");

    SweepArgs sw;
    auto* s = app.add_subcommand("sweep", "Run paired collision cells and write result artifacts");
    s->add_option("--tag", sw.tags, "Discriminator tag(s)")->expected(1, -1);
    s->add_option("--K", sw.Ks, "Collision degrees")->expected(1, -1);
    s->add_option("--vw", sw.vws, "Vector weights; the first is the baseline arm")->expected(2, -1);
    s->add_option("--n-entities", sw.n_entities, "Entities per corpus");
    s->add_option("--seed", sw.seed, "Run seed");
    s->add_option("--repetitions", sw.repetitions, "Regenerations per cell");
    s->add_flag("--reps-scale-with-k", sw.reps_scale_with_k, "Multiply repetitions by K (n = n_entities * K)");
    s->add_flag("--paraphrase", sw.paraphrase, "Paraphrased doc templates");
    s->add_option("--resamples", sw.resamples, "Bootstrap resamples")->check(CLI::PositiveNumber);
    s->add_option("--jobs", sw.jobs, "Worker threads for cells");
    s->add_option("--out", sw.out, "Artifact path; '{tag}' is substituted for multi-tag sweeps");
    sw.embed.add(*s);
    sw.retrieval.add(*s);

    RouterArgs rt;
    auto* r = app.add_subcommand("router", "Per-query vw routing oracle and threshold policies");
    r->add_option("--tag", rt.tag, "Discriminator tag");
    r->add_option("--K", rt.K, "Collision degree");
    r->add_option("--vw", rt.vws, "vw grid")->expected(1, -1);
    r->add_option("--n-entities", rt.n_entities, "Entities per corpus");
    r->add_option("--seed", rt.seed, "Run seed");
    r->add_option("--repetitions", rt.repetitions, "Regenerations");
    r->add_flag("--paraphrase", rt.paraphrase, "Paraphrased doc templates");
    r->add_option("--resamples", rt.resamples, "Bootstrap resamples")->check(CLI::PositiveNumber);
    r->add_option("--signal", rt.signal, "raw_gap, norm_gap or crowd095")
        ->check(CLI::IsMember({"raw_gap", "norm_gap", "crowd095"}));
    r->add_option("--tau", rt.taus, "Thresholds to evaluate")->expected(1, -1);
    r->add_option("--low-vw", rt.low_vw, "Arm used when signal >= tau");
    r->add_option("--high-vw", rt.high_vw, "Arm used when signal < tau");
    r->add_option("--probe-vw", rt.probe_vw, "vw of the first-pass probe that records signals");
    r->add_option("--out", rt.out, "Output path");
    rt.embed.add(*r);
    rt.retrieval.add(*r);

    std::string lc_log, lc_mode = "lenient", lc_out = "-";
    int lc_k = 1;
    auto* lc = app.add_subcommand("lifecycle-replay", "Fold LIFECYCLE events of an event log");
    lc->add_option("--log", lc_log, "Event log path")->required();
    lc->add_option("--quorum-k", lc_k, "deprecate_quorum_k");
    lc->add_option("--mode", lc_mode, "strict or lenient")->check(CLI::IsMember({"strict", "lenient"}));
    lc->add_option("--out", lc_out, "Output path");

    std::string sv_log;
    auto* sv = app.add_subcommand("store-verify", "Replay an event log and report counts");
    sv->add_option("--log", sv_log, "Event log path")->required();

    std::string registry;
    auto* vr = app.add_subcommand("verify-registry", "Check every artifact listed in a registry");
    vr->add_option("registry", registry, "Registry file (claim<TAB>path rows)")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*g) return cmd_generate(gen, out);
        if (*s) return cmd_sweep(sw, out);
        if (*r) return cmd_router(rt, out);
        if (*lc) return cmd_lifecycle_replay(lc_log, lc_k, lc_mode, lc_out, out);
        if (*sv) return cmd_store_verify(sv_log, out);
        if (*vr) return cmd_verify_registry(registry, out, err);
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const MissingVectorError& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}

}  // namespace ecol
