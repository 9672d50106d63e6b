#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "ecol/text.hpp"

namespace ecol {

using AgentSet = std::set<std::string, std::less<>>;
/// Absent means "no filtering".
using Scope = std::optional<AgentSet>;

inline bool in_scope(const Scope& scope, std::string_view agent) {
    return !scope || scope->contains(agent);
}

struct Bm25Params {
    double k1 = 1.2;
    double b = 0.75;
};

struct Posting {
    std::uint32_t doc;
    std::uint32_t tf;
};

struct PostingList {
    std::string term;
    std::vector<Posting> postings;  // doc strictly increasing
};

struct TermWeight {
    std::string term;
    double weight;
};

struct LexicalHit {
    std::string id;
    double raw;
    int rank;
};

/// Query terms in first-occurrence order weighted by their multiplicity.
std::vector<TermWeight> count_weights(const TokenStream& tokens);

/// (s - min) / (max - min); all 1.0 when max == min. Throws on empty input.
std::vector<double> minmax_normalize(const std::vector<double>& scores);

/// In-memory inverted index over active documents. Documents are appended,
/// can be deactivated, and are never removed.
class InvertedIndex {
public:
    explicit InvertedIndex(Bm25Params params = {});

    void add(std::string id, std::string agent, TokenStream tokens);
    void deactivate(std::string_view id);

    /// Weighted BM25: each term's contribution is multiplied by its weight.
    /// Statistics (N, df, avgdl) are computed over active documents in scope.
    std::vector<LexicalHit> search(const std::vector<TermWeight>& query, std::size_t limit,
                                   const Scope& scope, std::uint64_t qseed) const;
    std::vector<LexicalHit> search(const TokenStream& query, std::size_t limit, const Scope& scope,
                                   std::uint64_t qseed) const {
        return search(count_weights(query), limit, scope, qseed);
    }

    /// 1 - df/N over active scoped docs; 0 when the scoped corpus is empty.
    double rarity(std::string_view entity, const Scope& scope) const;

    std::size_t active_count(const Scope& scope) const;
    const TokenStream* tokens_of(std::string_view id) const;
    PostingList postings(std::string_view term) const;
    const Bm25Params& params() const { return params_; }

private:
    struct Doc {
        std::string id;
        std::string agent;
        TokenStream tokens;
        bool active;
    };

    Bm25Params params_;
    std::vector<Doc> docs_;
    std::unordered_map<std::string, std::uint32_t> by_id_;
    std::unordered_map<std::string, std::vector<Posting>> postings_;
};

}  // namespace ecol
