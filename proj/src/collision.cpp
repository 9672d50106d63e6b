#include "ecol/collision.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "ecol/errors.hpp"
#include "ecol/rng.hpp"
#include "ecol/store.hpp"
#include "ecol/text.hpp"

namespace ecol {

using nlohmann::json;

std::string_view tag_name(Tag t) {
    switch (t) {
        case Tag::Preference: return "preference";
        case Tag::Project: return "project";
        case Tag::Technical: return "technical";
        case Tag::Service: return "service";
        case Tag::Tool: return "tool";
    }
    return "?";
}

Tag parse_tag(std::string_view s) {
    for (Tag t : all_tags()) {
        if (tag_name(t) == s) return t;
    }
    throw InvalidArgument("unknown tag '" + std::string(s) + "'");
}

const std::vector<Tag>& all_tags() {
    static const std::vector<Tag> tags = {Tag::Preference, Tag::Project, Tag::Technical, Tag::Service, Tag::Tool};
    return tags;
}

bool is_lexical_tag(Tag t) { return t == Tag::Service || t == Tag::Tool; }

// Every answer within one tag has the same token count, so docs of one
// entity have equal length and tie exactly under BM25.
const std::vector<std::string>& answer_vocabulary(Tag t) {
    static const std::vector<std::string> service = {
        "aws",    "gcp",     "azure",    "heroku",   "netlify",    "vercel",  "digitalocean",
        "linode", "cloudflare", "fastly", "akamai",  "supabase",   "firebase", "vultr",
        "hetzner", "ovh",    "backblaze", "scaleway", "railway",   "openshift"};
    static const std::vector<std::string> tool = {
        "git",     "docker",  "postgres", "kubernetes", "terraform", "ansible", "jenkins",
        "redis",   "nginx",   "vim",      "emacs",      "cmake",     "bazel",   "npm",
        "webpack", "grafana", "prometheus", "mysql",    "sqlite",    "helm"};
    static const std::vector<std::string> preference = {
        "dark mode",         "light mode",          "large fonts",        "small fonts",
        "compact layout",    "spacious layout",     "tab indentation",    "space indentation",
        "morning meetings",  "afternoon meetings",  "email updates",      "chat updates",
        "weekly summaries",  "daily summaries",     "vertical monitors",  "wide monitors",
        "quiet notifications", "loud notifications"};
    static const std::vector<std::string> project = {
        "payment gateway",    "search revamp",       "mobile checkout",   "data pipeline",
        "billing migration",  "onboarding flow",     "analytics dashboard", "fraud detection",
        "recommendation engine", "inventory sync",   "chat assistant",    "design system",
        "identity platform",  "release tooling",     "pricing experiments", "support portal",
        "loyalty program",    "partner integrations"};
    static const std::vector<std::string> technical = {
        "event sourcing",     "consistent hashing",  "vector clocks",      "bloom filters",
        "rate limiting",      "circuit breakers",    "feature flags",      "canary releases",
        "sharded databases",  "message queues",      "graph traversal",    "gradient boosting",
        "connection pooling", "lazy loading",        "memoized caching",   "schema migrations",
        "structured logging", "distributed tracing"};
    switch (t) {
        case Tag::Service: return service;
        case Tag::Tool: return tool;
        case Tag::Preference: return preference;
        case Tag::Project: return project;
        case Tag::Technical: return technical;
    }
    return service;
}

const std::vector<std::string>& default_paraphrase_templates() {
    static const std::vector<std::string> templates = {
        "for {tag}, {entity} relies on {answer}.",
        "{entity} picked {answer} as the go-to {tag}.",
        "when it comes to {tag}, {entity} goes with {answer}.",
        "{answer} is what {entity} depends on for {tag}.",
        "{entity} has standardized on {answer} for {tag}.",
    };
    return templates;
}

namespace {

std::string fill(std::string_view tmpl, const std::string& entity, const std::string& answer, std::string_view tag) {
    std::string out;
    for (std::size_t i = 0; i < tmpl.size();) {
        if (tmpl.substr(i, 8) == "{entity}") {
            out += entity;
            i += 8;
        } else if (tmpl.substr(i, 8) == "{answer}") {
            out += answer;
            i += 8;
        } else if (tmpl.substr(i, 5) == "{tag}") {
            out += tag;
            i += 5;
        } else {
            out.push_back(tmpl[i++]);
        }
    }
    return out;
}

int count_of(std::string_view s, std::string_view needle) {
    int n = 0;
    for (auto p = s.find(needle); p != std::string_view::npos; p = s.find(needle, p + needle.size())) ++n;
    return n;
}

}  // namespace

void CollisionSpec::validate() const {
    if (K < 1) throw InvalidArgument("K must be >= 1");
    if (n_entities < 1) throw InvalidArgument("n_entities must be >= 1");
    const auto& vocab = answer_vocabulary(tag);
    if (static_cast<std::size_t>(K) > vocab.size()) {
        throw InvalidArgument("K=" + std::to_string(K) + " exceeds the " + std::to_string(vocab.size()) +
                              "-entry answer vocabulary of tag '" + std::string(tag_name(tag)) + "'");
    }
    if (paraphrase) {
        const auto& t = paraphrase_templates.empty() ? default_paraphrase_templates() : paraphrase_templates;
        if (t.size() < 4) throw InvalidArgument("paraphrase needs at least 4 templates");
        for (const auto& s : t) {
            if (count_of(s, "{entity}") != 1 || count_of(s, "{answer}") != 1) {
                throw InvalidArgument("template must contain {entity} and {answer} exactly once: " + s);
            }
        }
    }
}

namespace {
int digit_width(int n_entities) {
    return std::max<int>(2, static_cast<int>(std::to_string(std::max(0, n_entities - 1)).size()));
}

std::string padded(int value, int width) {
    std::string s = std::to_string(value);
    if (static_cast<int>(s.size()) < width) s.insert(0, static_cast<std::size_t>(width) - s.size(), '0');
    return s;
}

// 100 consonant-vowel syllables; three of them make one pseudo-word.
std::string syllable_word(std::uint64_t v) {
    static constexpr std::string_view cons = "bdfghjklmnprstvwxyzq";
    static constexpr std::string_view vows = "aeiou";
    std::string w;
    for (int i = 0; i < 3; ++i) {
        const auto s = v % 100;
        v /= 100;
        w.push_back(cons[s / 5]);
        w.push_back(vows[s % 5]);
    }
    return w;
}
}  // namespace

// Two pseudo-words per entity. The first is a bijection of the index (for
// n < 10^6), so names are pairwise distinct; neighbouring indices share
// almost no character trigrams.
std::string entity_name(int index, int /*n_entities*/) {
    const auto i = static_cast<std::uint64_t>(index);
    const std::uint64_t first = (i * 7919 + 4241) % 1000000;
    const std::uint64_t second = splitmix64(i ^ 0x656e74697479ull) % 1000000;
    return syllable_word(first) + " " + syllable_word(second);
}

CollisionCorpus generate(const CollisionSpec& spec) {
    spec.validate();
    CollisionCorpus c;
    c.spec = spec;
    const auto& vocab = answer_vocabulary(spec.tag);
    const auto& templates = spec.paraphrase_templates.empty() ? default_paraphrase_templates() : spec.paraphrase_templates;
    const std::string tag(tag_name(spec.tag));
    Rng rng(splitmix64(spec.seed ^ fnv1a64(tag)));
    // Separate stream so template draws never shift answer or slot draws.
    Rng tmpl_rng(splitmix64(spec.seed ^ fnv1a64(tag + "/templates")));
    const int width = digit_width(spec.n_entities);

    for (int e = 0; e < spec.n_entities; ++e) {
        const std::string entity = entity_name(e, spec.n_entities);
        const std::string digits = padded(e, width);
        const std::string prefix = "e" + digits;

        std::vector<std::string> pool = vocab;
        for (int j = 0; j < spec.K; ++j) {  // partial Fisher-Yates: first K without replacement
            const auto pick = j + static_cast<int>(rng.below(pool.size() - static_cast<std::size_t>(j)));
            std::swap(pool[static_cast<std::size_t>(j)], pool[static_cast<std::size_t>(pick)]);
        }
        std::vector<int> order(static_cast<std::size_t>(spec.K));
        for (int j = 0; j < spec.K; ++j) order[static_cast<std::size_t>(j)] = j;
        rng.shuffle(order);

        std::string gold_id;
        for (int slot = 0; slot < spec.K; ++slot) {
            const int j = order[static_cast<std::size_t>(slot)];
            CollisionDoc d;
            d.doc_id = prefix + "-d" + std::to_string(slot);
            d.entity = entity;
            d.answer = pool[static_cast<std::size_t>(j)];
            d.is_gold = j == 0;
            const std::string_view tmpl =
                spec.paraphrase ? std::string_view(templates[tmpl_rng.below(templates.size())]) : kFixedTemplate;
            d.text = fill(tmpl, entity, d.answer, tag);
            if (d.is_gold) gold_id = d.doc_id;
            c.docs.push_back(std::move(d));
        }
        c.queries.push_back({"q" + digits, fill(kQueryTemplate, entity, "", tag), gold_id, entity});
    }
    return c;
}

json corpus_to_json(const CollisionCorpus& c) {
    json spec{{"tag", tag_name(c.spec.tag)},
              {"K", c.spec.K},
              {"n_entities", c.spec.n_entities},
              {"seed", c.spec.seed},
              {"paraphrase", c.spec.paraphrase}};
    if (c.spec.paraphrase) {
        spec["paraphrase_templates"] =
            c.spec.paraphrase_templates.empty() ? default_paraphrase_templates() : c.spec.paraphrase_templates;
    }
    json docs = json::array();
    for (const auto& d : c.docs) {
        docs.push_back({{"doc_id", d.doc_id}, {"text", d.text}, {"entity", d.entity}, {"answer", d.answer}, {"is_gold", d.is_gold}});
    }
    json queries = json::array();
    for (const auto& q : c.queries) {
        queries.push_back({{"query_id", q.query_id}, {"text", q.text}, {"gold_doc_id", q.gold_doc_id}, {"entity", q.entity}});
    }
    return json{{"spec", spec}, {"docs", docs}, {"queries", queries}};
}

std::vector<std::string> corpus_texts(const CollisionCorpus& c) {
    std::vector<std::string> out;
    std::set<std::string> seen;
    for (const auto& d : c.docs) {
        if (seen.insert(d.text).second) out.push_back(d.text);
    }
    for (const auto& q : c.queries) {
        if (seen.insert(q.text).second) out.push_back(q.text);
    }
    return out;
}

std::uint64_t repetition_seed(std::uint64_t seed, int rep) {
    return rep == 0 ? seed : splitmix64(seed + static_cast<std::uint64_t>(rep));
}

std::vector<int> run_arm(const CollisionCorpus& corpus, const ArmSpec& arm) {
    StorageConfig scfg;
    scfg.write_dedup_enabled = false;
    MemoryStore store(arm.embedder, scfg);
    std::map<std::string, std::string> mem_of;
    for (const auto& d : corpus.docs) {
        const auto r = store.remember({"", d.text, MemoryType::Episode, 0.5, 1.0, std::nullopt});
        if (!r.stored) throw std::runtime_error("ingest failed for doc " + d.doc_id);
        mem_of.emplace(d.doc_id, r.stored->id);
    }
    RetrievalEngine engine(store);
    std::vector<int> hits;
    hits.reserve(corpus.queries.size());
    for (const auto& q : corpus.queries) {
        const auto res = engine.recall("", q.text, arm.retrieval);
        hits.push_back(!res.empty() && res.front().memory_id == mem_of.at(q.gold_doc_id) ? 1 : 0);
    }
    return hits;
}

PairedResult run_cell(const CollisionCorpus& corpus, const ArmSpec& a, const ArmSpec& b) {
    PairedResult r;
    r.label_a = a.label;
    r.label_b = b.label;
    for (const auto& q : corpus.queries) r.query_ids.push_back(q.query_id);
    r.a = run_arm(corpus, a);
    r.b = run_arm(corpus, b);
    return r;
}

PairedResult run_cell_repeated(const CollisionSpec& spec, int repetitions, const ArmSpec& a, const ArmSpec& b) {
    if (repetitions < 1) throw InvalidArgument("repetitions must be >= 1");
    PairedResult all;
    all.label_a = a.label;
    all.label_b = b.label;
    for (int rep = 0; rep < repetitions; ++rep) {
        CollisionSpec s = spec;
        s.seed = repetition_seed(spec.seed, rep);
        all.append(run_cell(generate(s), a, b), "r" + std::to_string(rep) + "/");
    }
    return all;
}

}  // namespace ecol
