#include "ecol/retrieval.hpp"

#include <algorithm>
#include <map>
#include <unordered_map>

#include "ecol/errors.hpp"
#include "ecol/text.hpp"

namespace ecol {

void RetrievalConfig::validate() const {
    if (!(vector_weight >= 0.0 && vector_weight <= 1.0)) throw InvalidArgument("vector_weight must lie in [0, 1]");
    if (k < 1) throw InvalidArgument("k must be >= 1");
    if (top_k_for_prf < 1 || max_entities < 1) throw InvalidArgument("PRF pool sizes must be >= 1");
    if (share_prior_alpha && !(*share_prior_alpha > 0.0)) throw InvalidArgument("share_prior_alpha must be > 0");
    if (share_prior_pool < 1) throw InvalidArgument("share_prior_pool must be >= 1");
    if (share_prior_epsilon < 0.0) throw InvalidArgument("share_prior_epsilon must be >= 0");
    if (deprecate_quorum_k < 1) throw InvalidArgument("deprecate_quorum_k must be >= 1");
    if (rm3) {
        if (rm3->fb_docs < 1 || rm3->fb_terms < 1) throw InvalidArgument("rm3 fb_docs/fb_terms must be >= 1");
        if (!(rm3->lambda >= 0.0 && rm3->lambda <= 1.0)) throw InvalidArgument("rm3 lambda must lie in [0, 1]");
    }
}

// ---------------------------------------------------------------- PRF

PrfDecision prf_expand(const std::vector<std::string>& pool_texts, const std::set<std::string>& query_tokens,
                       const RetrievalConfig& cfg, const std::function<double(const std::string&)>& rarity) {
    PrfDecision d;
    if (!cfg.query_expansion_min_dominance) {
        d.reason = "prf disabled";
        return d;
    }
    std::map<std::string, int> df;
    for (const auto& text : pool_texts) {
        for (const auto& e : extract_entities(text)) {
            if (!query_tokens.contains(e)) ++df[e];
        }
    }
    std::vector<std::pair<std::string, int>> cands(df.begin(), df.end());
    std::stable_sort(cands.begin(), cands.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
    if (cfg.query_expansion_idf_min_rarity) {
        const double thr = *cfg.query_expansion_idf_min_rarity;
        std::erase_if(cands, [&](const auto& c) { return rarity(c.first) < thr; });
    }
    if (cands.size() > static_cast<std::size_t>(cfg.max_entities)) cands.resize(static_cast<std::size_t>(cfg.max_entities));
    d.candidates = cands;
    if (cands.empty() || pool_texts.empty()) {
        d.reason = "no candidate entity";
        return d;
    }
    const auto& [top, top_df] = cands.front();
    d.top_share = static_cast<double>(top_df) / static_cast<double>(pool_texts.size());
    if (cfg.anchor_share_max && d.top_share > *cfg.anchor_share_max) {
        d.reason = "anchor share above ceiling";
        return d;
    }
    const double need = *cfg.query_expansion_min_dominance * static_cast<double>(cfg.top_k_for_prf);
    if (static_cast<double>(top_df) + 1e-9 >= need) {
        d.expanded = true;
        d.entity = top;
        d.reason = "dominant";
    } else {
        d.reason = "below dominance";
    }
    return d;
}

// ---------------------------------------------------------------- RM3

Rm3Expansion rm3_expand(const InvertedIndex& index, const std::vector<TermWeight>& query, const Rm3Config& cfg,
                        const Scope& scope, std::uint64_t qseed) {
    Rm3Expansion out;
    out.query = query;
    const auto hits = index.search(query, static_cast<std::size_t>(cfg.fb_docs), scope, qseed);
    if (hits.empty()) return out;

    std::map<std::string, double> rm1;
    for (const auto& h : hits) {
        const TokenStream* toks = index.tokens_of(h.id);
        if (toks == nullptr) continue;
        std::map<std::string, int> tf;
        int len = 0;
        for (const auto& t : *toks) {
            if (is_stopword(t)) continue;
            ++tf[t];
            ++len;
        }
        if (len == 0) continue;
        for (const auto& [t, n] : tf) rm1[t] += static_cast<double>(n) / static_cast<double>(len);
    }
    const double m = static_cast<double>(hits.size());
    std::vector<TermWeight> model;
    for (const auto& [t, s] : rm1) {
        const double p = s / m;
        if (p >= cfg.epsilon) model.push_back({t, p});
    }
    std::stable_sort(model.begin(), model.end(), [](const auto& a, const auto& b) { return a.weight > b.weight; });
    if (model.size() > static_cast<std::size_t>(cfg.fb_terms)) model.resize(static_cast<std::size_t>(cfg.fb_terms));
    out.relevance_model = model;

    std::unordered_map<std::string, double> in_model;
    for (const auto& tw : model) in_model.emplace(tw.term, tw.weight);
    std::set<std::string> qterms;
    double qlen = 0.0;
    for (const auto& tw : query) {
        qterms.insert(tw.term);
        qlen += tw.weight;
    }
    const bool novel = std::any_of(model.begin(), model.end(), [&](const auto& tw) { return !qterms.contains(tw.term); });
    if (!novel || qlen <= 0.0) return out;

    const double lam = cfg.lambda;
    std::vector<TermWeight> mixed;
    for (const auto& tw : query) {
        auto it = in_model.find(tw.term);
        const double r = it == in_model.end() ? 0.0 : it->second;
        const double w = lam * tw.weight + (1.0 - lam) * qlen * r;
        if (w > 0.0) mixed.push_back({tw.term, w});
    }
    for (const auto& tw : model) {
        if (qterms.contains(tw.term)) continue;
        const double w = (1.0 - lam) * qlen * tw.weight;
        if (w > 0.0) mixed.push_back({tw.term, w});
    }
    out.changed = true;
    out.query = std::move(mixed);
    return out;
}

// ---------------------------------------------------------------- share_prior

double adaptive_alpha(double alpha, int max_deg) {
    return alpha / (1.0 + std::max(0, max_deg - 1) / 4.0);
}

std::vector<double> share_prior_boosts_from_degrees(const std::vector<double>& scores, const std::vector<int>& degrees,
                                                    double alpha, bool adaptive, double eps) {
    if (scores.size() != degrees.size()) throw InvalidArgument("share_prior: scores/degrees size mismatch");
    std::vector<double> boost(scores.size(), 0.0);
    if (scores.empty()) return boost;
    const int max_deg = *std::max_element(degrees.begin(), degrees.end());
    if (max_deg <= 0) return boost;
    const double a = adaptive ? adaptive_alpha(alpha, max_deg) : alpha;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const double raw = a * static_cast<double>(degrees[i]) / static_cast<double>(max_deg);
        if (i == 0) {
            boost[i] = raw;
        } else {
            boost[i] = std::max(0.0, std::min(raw, scores[0] - scores[i] - eps));
        }
    }
    return boost;
}

std::vector<int> entity_degrees(const std::vector<std::vector<std::string>>& entities) {
    std::vector<std::set<std::string>> sets;
    sets.reserve(entities.size());
    for (const auto& e : entities) sets.emplace_back(e.begin(), e.end());
    std::vector<int> deg(entities.size(), 0);
    for (std::size_t i = 0; i < sets.size(); ++i) {
        for (std::size_t j = i + 1; j < sets.size(); ++j) {
            const bool share = std::any_of(sets[i].begin(), sets[i].end(), [&](const auto& t) { return sets[j].contains(t); });
            if (share) {
                ++deg[i];
                ++deg[j];
            }
        }
    }
    return deg;
}

std::vector<double> share_prior_boosts(const std::vector<double>& scores,
                                       const std::vector<std::vector<std::string>>& entities, double alpha,
                                       bool adaptive, double eps) {
    return share_prior_boosts_from_degrees(scores, entity_degrees(entities), alpha, adaptive, eps);
}

// ---------------------------------------------------------------- engine

namespace {

void sort_by(std::vector<ScoredCandidate>& v, std::uint64_t qseed, double ScoredCandidate::*field) {
    std::vector<std::pair<std::uint64_t, std::size_t>> keys;
    keys.reserve(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) keys.emplace_back(tie_key(qseed, v[i].memory_id), i);
    std::vector<std::size_t> idx(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        const double sa = v[a].*field, sb = v[b].*field;
        if (sa != sb) return sa > sb;
        if (keys[a].first != keys[b].first) return keys[a].first < keys[b].first;
        return v[a].memory_id < v[b].memory_id;
    });
    std::vector<ScoredCandidate> out;
    out.reserve(v.size());
    for (auto i : idx) out.push_back(std::move(v[i]));
    v = std::move(out);
}

}  // namespace

std::vector<ScoredCandidate> RetrievalEngine::fuse_pass(const std::vector<TermWeight>& terms, const Embedding& qvec,
                                                        const Scope& scope, const RetrievalConfig& cfg,
                                                        std::uint64_t qseed, std::vector<LexicalHit>* bm25_out) const {
    const auto pool = static_cast<std::size_t>(cfg.k) * 5;
    const auto bm = store_.lexical().search(terms, pool, scope, qseed);
    const auto vec = store_.vectors().nearest(qvec, pool, scope, qseed);

    std::vector<ScoredCandidate> out;
    std::unordered_map<std::string, std::size_t> pos;
    if (!bm.empty()) {
        std::vector<double> raw;
        raw.reserve(bm.size());
        for (const auto& h : bm) raw.push_back(h.raw);
        const auto norm = minmax_normalize(raw);
        for (std::size_t i = 0; i < bm.size(); ++i) {
            ScoredCandidate c;
            c.memory_id = bm[i].id;
            c.bm25_raw = bm[i].raw;
            c.bm25_norm = norm[i];
            c.bm25_rank = bm[i].rank;
            pos.emplace(c.memory_id, out.size());
            out.push_back(std::move(c));
        }
    }
    for (std::size_t i = 0; i < vec.size(); ++i) {
        auto [it, fresh] = pos.emplace(vec[i].id, out.size());
        if (fresh) {
            ScoredCandidate c;
            c.memory_id = vec[i].id;
            out.push_back(std::move(c));
        }
        auto& c = out[it->second];
        c.cos_sim = vec[i].cos;
        c.vector_rank = static_cast<int>(i);
    }
    const double vw = cfg.vector_weight;
    for (auto& c : out) {
        c.fused = (1.0 - vw) * c.bm25_norm + vw * c.cos_sim;
        c.final_score = c.fused;
    }
    sort_by(out, qseed, &ScoredCandidate::fused);
    if (bm25_out) *bm25_out = bm;
    return out;
}

RecallDetail RetrievalEngine::recall_detailed(const std::string& actor, const std::string& query,
                                              const RetrievalConfig& cfg) const {
    cfg.validate();
    RecallDetail detail;
    detail.effective_query = query;
    const Scope scope = store_.acl_scope(actor);
    const TokenStream tokens = tokenize(query);
    if (tokens.empty()) return detail;

    auto lock = store_.read_lock();
    const std::uint64_t qseed = query_seed(cfg.tie_seed, query);
    const Embedding qvec = store_.embedder().embed(query);
    detail.first_pass = fuse_pass(count_weights(tokens), qvec, scope, cfg, qseed, &detail.first_pass_bm25);

    std::vector<ScoredCandidate> current = detail.first_pass;
    std::vector<TermWeight> terms = count_weights(tokens);
    bool changed = false;

    if (cfg.query_expansion_min_dominance) {
        std::vector<std::string> pool_texts;
        for (const auto& c : detail.first_pass) {
            if (pool_texts.size() >= static_cast<std::size_t>(cfg.top_k_for_prf)) break;
            if (const Memory* m = store_.find(c.memory_id)) pool_texts.push_back(m->text);
        }
        const std::set<std::string> qtok(tokens.begin(), tokens.end());
        auto rarity = [&](const std::string& e) { return store_.lexical().rarity(e, scope); };
        detail.prf = prf_expand(pool_texts, qtok, cfg, rarity);
        if (detail.prf->expanded) {
            detail.effective_query = query + " " + detail.prf->entity;
            terms = count_weights(tokenize(detail.effective_query));
            changed = true;
        }
    }
    if (cfg.rm3) {
        detail.rm3 = rm3_expand(store_.lexical(), terms, *cfg.rm3, scope, qseed);
        if (detail.rm3->changed) {
            terms = detail.rm3->query;
            changed = true;
        }
    }
    if (changed) {
        const Embedding qvec2 =
            detail.effective_query == query ? qvec : store_.embedder().embed(detail.effective_query);
        current = fuse_pass(terms, qvec2, scope, cfg, qseed, nullptr);
    }

    if (cfg.respect_schema_lifecycle) {
        const bool any_schema = std::any_of(current.begin(), current.end(), [&](const auto& c) {
            const Memory* m = store_.find(c.memory_id);
            return m && m->memory_type == MemoryType::Schema;
        });
        if (any_schema) {
            const auto snap = store_.lifecycle_snapshot(cfg.deprecate_quorum_k);
            std::erase_if(current, [&](const auto& c) {
                const Memory* m = store_.find(c.memory_id);
                if (!m || m->memory_type != MemoryType::Schema || !m->schema_id) return false;
                auto it = snap.find(*m->schema_id);
                return it != snap.end() && it->second.status == SchemaStatus::Deprecated;
            });
        }
    }

    if (cfg.share_prior_alpha && !current.empty()) {
        const std::size_t n = std::min(current.size(), static_cast<std::size_t>(cfg.share_prior_pool));
        std::vector<double> scores;
        std::vector<std::vector<std::string>> ents;
        for (std::size_t i = 0; i < n; ++i) {
            scores.push_back(current[i].fused);
            const Memory* m = store_.find(current[i].memory_id);
            ents.push_back(m ? extract_entities(m->text) : std::vector<std::string>{});
        }
        const auto boosts = share_prior_boosts(scores, ents, *cfg.share_prior_alpha, cfg.share_prior_adaptive_alpha,
                                               cfg.share_prior_epsilon);
        for (std::size_t i = 0; i < n; ++i) current[i].share_prior_boost = boosts[i];
    }

    for (auto& c : current) {
        const Memory* m = store_.find(c.memory_id);
        c.ec_multiplier = (cfg.use_extraction_confidence && m) ? m->extraction_confidence : 1.0;
        c.final_score = (c.fused + c.share_prior_boost) * c.ec_multiplier;
    }
    sort_by(current, qseed, &ScoredCandidate::final_score);
    if (current.size() > static_cast<std::size_t>(cfg.k)) current.resize(static_cast<std::size_t>(cfg.k));
    detail.results = std::move(current);
    return detail;
}

double RoutingSignals::get(SignalKind k) const {
    switch (k) {
        case SignalKind::RawGap: return raw_gap;
        case SignalKind::NormGap: return norm_gap;
        case SignalKind::Crowd095: return crowd095;
    }
    return 0.0;
}

RoutingSignals routing_signals(const RecallDetail& detail) {
    RoutingSignals s;
    const auto& bm = detail.first_pass_bm25;
    const double top1 = bm.empty() ? 0.0 : bm[0].raw;
    const double top2 = bm.size() < 2 ? 0.0 : bm[1].raw;
    s.raw_gap = top1 - top2;
    s.norm_gap = s.raw_gap / std::max(top1, 1e-9);
    if (!detail.first_pass.empty()) {
        std::vector<double> fused;
        for (const auto& c : detail.first_pass) fused.push_back(c.fused);
        const auto norm = minmax_normalize(fused);
        s.crowd095 = static_cast<double>(std::count_if(norm.begin(), norm.end(), [](double x) { return x >= 0.95; }));
    }
    return s;
}

}  // namespace ecol
