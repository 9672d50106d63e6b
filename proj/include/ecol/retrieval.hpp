#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "ecol/lexical.hpp"
#include "ecol/store.hpp"

namespace ecol {

struct Rm3Config {
    int fb_docs = 10;
    int fb_terms = 10;
    double lambda = 0.5;
    double epsilon = 0.01;
};

struct RetrievalConfig {
    double vector_weight = 0.3;
    int k = 10;
    std::optional<double> query_expansion_min_dominance;  // PRF off when absent
    int top_k_for_prf = 10;
    int max_entities = 4;
    std::optional<double> query_expansion_idf_min_rarity;
    std::optional<double> anchor_share_max = 0.5;  // consulted only with PRF on
    std::optional<double> share_prior_alpha;         // reranker off when absent
    int share_prior_pool = 20;
    bool share_prior_adaptive_alpha = false;
    double share_prior_epsilon = 1e-6;
    bool use_extraction_confidence = true;
    bool respect_schema_lifecycle = true;
    int deprecate_quorum_k = 1;
    std::optional<Rm3Config> rm3;
    std::uint64_t tie_seed = 0;

    void validate() const;
};

struct ScoredCandidate {
    std::string memory_id;
    double bm25_raw = 0.0;
    double bm25_norm = 0.0;
    int bm25_rank = -1;    // -1: not in the lexical pool
    int vector_rank = -1;  // -1: not in the vector pool
    double cos_sim = 0.0;
    double fused = 0.0;
    double share_prior_boost = 0.0;
    double ec_multiplier = 1.0;
    double final_score = 0.0;
};

struct PrfDecision {
    bool expanded = false;
    std::string entity;                                   // appended token when expanded
    std::vector<std::pair<std::string, int>> candidates;  // (entity, in-pool df) after gates
    double top_share = 0.0;
    std::string reason;
};

struct Rm3Expansion {
    bool changed = false;
    std::vector<TermWeight> relevance_model;  // RM1 after epsilon/top-terms truncation
    std::vector<TermWeight> query;            // mixture scaled by |q|, fed to weighted BM25
};

struct RecallDetail {
    std::vector<ScoredCandidate> first_pass;  // fused, sorted, before filters
    std::vector<LexicalHit> first_pass_bm25;
    std::optional<PrfDecision> prf;
    std::optional<Rm3Expansion> rm3;
    std::string effective_query;
    std::vector<ScoredCandidate> results;
};

/// Dominance-gated PRF over `pool_texts` (already the top top_k_for_prf
/// visible texts). `rarity` maps an entity to its scoped corpus rarity.
PrfDecision prf_expand(const std::vector<std::string>& pool_texts, const std::set<std::string>& query_tokens,
                       const RetrievalConfig& cfg, const std::function<double(const std::string&)>& rarity);

Rm3Expansion rm3_expand(const InvertedIndex& index, const std::vector<TermWeight>& query, const Rm3Config& cfg,
                        const Scope& scope, std::uint64_t qseed);

double adaptive_alpha(double alpha, int max_deg);

/// Boosts for a pool sorted by score desc, given each member's degree.
/// Non-rank-0 boosts are capped at score_0 - score_i - eps and floored at 0.
std::vector<double> share_prior_boosts_from_degrees(const std::vector<double>& scores, const std::vector<int>& degrees,
                                                    double alpha, bool adaptive, double eps);

/// Degrees of the entity-sharing graph (edge iff entity sets intersect).
std::vector<int> entity_degrees(const std::vector<std::vector<std::string>>& entities);

std::vector<double> share_prior_boosts(const std::vector<double>& scores,
                                       const std::vector<std::vector<std::string>>& entities, double alpha,
                                       bool adaptive, double eps);

/// Read-only recall over a store. Holds the store's read lock per call.
class RetrievalEngine {
public:
    explicit RetrievalEngine(const MemoryStore& store) : store_(store) {}

    std::vector<ScoredCandidate> recall(const std::string& actor, const std::string& query,
                                        const RetrievalConfig& cfg) const {
        return recall_detailed(actor, query, cfg).results;
    }
    RecallDetail recall_detailed(const std::string& actor, const std::string& query,
                                 const RetrievalConfig& cfg) const;

private:
    std::vector<ScoredCandidate> fuse_pass(const std::vector<TermWeight>& terms, const Embedding& qvec,
                                           const Scope& scope, const RetrievalConfig& cfg, std::uint64_t qseed,
                                           std::vector<LexicalHit>* bm25_out) const;

    const MemoryStore& store_;
};

enum class SignalKind { RawGap, NormGap, Crowd095 };

struct RoutingSignals {
    double raw_gap = 0.0;
    double norm_gap = 0.0;
    double crowd095 = 0.0;

    double get(SignalKind k) const;
};

/// Signals from a first-pass recall (lexical gap and fused crowding).
RoutingSignals routing_signals(const RecallDetail& detail);

}  // namespace ecol
