#include "ecol/lexical.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "ecol/errors.hpp"

namespace ecol {

std::vector<TermWeight> count_weights(const TokenStream& tokens) {
    std::vector<TermWeight> out;
    std::unordered_map<std::string, std::size_t> pos;
    for (const auto& t : tokens) {
        auto [it, fresh] = pos.emplace(t, out.size());
        if (fresh) {
            out.push_back({t, 1.0});
        } else {
            out[it->second].weight += 1.0;
        }
    }
    return out;
}

std::vector<double> minmax_normalize(const std::vector<double>& scores) {
    if (scores.empty()) throw InvalidArgument("minmax_normalize: empty score list");
    const auto [lo, hi] = std::minmax_element(scores.begin(), scores.end());
    const double mn = *lo, mx = *hi;
    std::vector<double> out(scores.size(), 1.0);
    if (mx == mn) return out;
    for (std::size_t i = 0; i < scores.size(); ++i) out[i] = (scores[i] - mn) / (mx - mn);
    return out;
}

InvertedIndex::InvertedIndex(Bm25Params params) : params_(params) {
    if (params_.k1 < 0 || params_.b < 0 || params_.b > 1) throw InvalidArgument("invalid BM25 parameters");
}

void InvertedIndex::add(std::string id, std::string agent, TokenStream tokens) {
    if (by_id_.contains(id)) throw InvalidArgument("duplicate document id " + id);
    const auto docno = static_cast<std::uint32_t>(docs_.size());
    std::map<std::string, std::uint32_t> tf;
    for (const auto& t : tokens) ++tf[t];
    for (const auto& [term, n] : tf) postings_[term].push_back({docno, n});
    by_id_.emplace(id, docno);
    docs_.push_back({std::move(id), std::move(agent), std::move(tokens), true});
}

void InvertedIndex::deactivate(std::string_view id) {
    auto it = by_id_.find(std::string(id));
    if (it != by_id_.end()) docs_[it->second].active = false;
}

std::vector<LexicalHit> InvertedIndex::search(const std::vector<TermWeight>& query, std::size_t limit,
                                              const Scope& scope, std::uint64_t qseed) const {
    if (query.empty() || limit == 0) return {};
    std::vector<char> visible(docs_.size(), 0);
    std::size_t n = 0;
    double total_len = 0.0;
    for (std::size_t i = 0; i < docs_.size(); ++i) {
        if (docs_[i].active && in_scope(scope, docs_[i].agent)) {
            visible[i] = 1;
            ++n;
            total_len += static_cast<double>(docs_[i].tokens.size());
        }
    }
    if (n == 0) return {};
    const double avgdl = total_len / static_cast<double>(n);

    std::vector<double> acc(docs_.size(), 0.0);
    std::vector<char> touched(docs_.size(), 0);
    std::vector<std::uint32_t> order;
    for (const auto& [term, weight] : query) {
        if (weight == 0.0) continue;
        auto it = postings_.find(term);
        if (it == postings_.end()) continue;
        std::size_t df = 0;
        for (const auto& p : it->second) df += visible[p.doc];
        if (df == 0) continue;
        const double idf = std::log(1.0 + (static_cast<double>(n) - static_cast<double>(df) + 0.5) /
                                              (static_cast<double>(df) + 0.5));
        for (const auto& p : it->second) {
            if (!visible[p.doc]) continue;
            const double tf = p.tf;
            const double len = static_cast<double>(docs_[p.doc].tokens.size());
            const double denom = tf + params_.k1 * (1.0 - params_.b + params_.b * len / avgdl);
            acc[p.doc] += weight * idf * (tf * (params_.k1 + 1.0) / denom);
            if (!touched[p.doc]) {
                touched[p.doc] = 1;
                order.push_back(p.doc);
            }
        }
    }

    struct Row {
        double score;
        std::uint64_t tie;
        std::uint32_t doc;
    };
    std::vector<Row> rows;
    rows.reserve(order.size());
    for (auto d : order) rows.push_back({acc[d], tie_key(qseed, docs_[d].id), d});
    auto cmp = [this](const Row& a, const Row& b) {
        if (a.score != b.score) return a.score > b.score;
        if (a.tie != b.tie) return a.tie < b.tie;
        return docs_[a.doc].id < docs_[b.doc].id;
    };
    const std::size_t m = std::min(limit, rows.size());
    std::partial_sort(rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(m), rows.end(), cmp);
    std::vector<LexicalHit> out;
    out.reserve(m);
    for (std::size_t i = 0; i < m; ++i) out.push_back({docs_[rows[i].doc].id, rows[i].score, static_cast<int>(i)});
    return out;
}

double InvertedIndex::rarity(std::string_view entity, const Scope& scope) const {
    const std::size_t n = active_count(scope);
    if (n == 0) return 0.0;
    const auto toks = tokenize(entity);
    if (toks.size() != 1) return 0.0;
    std::size_t df = 0;
    auto it = postings_.find(toks.front());
    if (it != postings_.end()) {
        for (const auto& p : it->second) {
            const auto& d = docs_[p.doc];
            if (d.active && in_scope(scope, d.agent)) ++df;
        }
    }
    return 1.0 - static_cast<double>(df) / static_cast<double>(n);
}

std::size_t InvertedIndex::active_count(const Scope& scope) const {
    std::size_t n = 0;
    for (const auto& d : docs_) n += (d.active && in_scope(scope, d.agent)) ? 1 : 0;
    return n;
}

const TokenStream* InvertedIndex::tokens_of(std::string_view id) const {
    auto it = by_id_.find(std::string(id));
    return it == by_id_.end() ? nullptr : &docs_[it->second].tokens;
}

PostingList InvertedIndex::postings(std::string_view term) const {
    PostingList pl{std::string(term), {}};
    auto it = postings_.find(pl.term);
    if (it != postings_.end()) pl.postings = it->second;
    return pl;
}

}  // namespace ecol
