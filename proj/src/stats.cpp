#include "ecol/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ecol/errors.hpp"
#include "ecol/rng.hpp"

namespace ecol {

double PairedResult::mean_a() const {
    return a.empty() ? 0.0 : std::accumulate(a.begin(), a.end(), 0.0) / static_cast<double>(a.size());
}

double PairedResult::mean_b() const {
    return b.empty() ? 0.0 : std::accumulate(b.begin(), b.end(), 0.0) / static_cast<double>(b.size());
}

void PairedResult::append(const PairedResult& other, const std::string& id_prefix) {
    for (std::size_t i = 0; i < other.size(); ++i) {
        query_ids.push_back(id_prefix + other.query_ids[i]);
        a.push_back(other.a[i]);
        b.push_back(other.b[i]);
    }
}

double percentile_sorted(const std::vector<double>& sorted, double p) {
    if (sorted.empty()) throw InvalidArgument("percentile of empty data");
    const double pos = p / 100.0 * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = static_cast<std::size_t>(std::ceil(pos));
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

namespace {

double mean(const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

CIReport finish(double point, std::vector<double> stats, int resamples, std::uint64_t seed, std::size_t n) {
    std::sort(stats.begin(), stats.end());
    CIReport r;
    r.point = point;
    r.lo = std::min(percentile_sorted(stats, 2.5), point);
    r.hi = std::max(percentile_sorted(stats, 97.5), point);
    r.resamples = resamples;
    r.seed = seed;
    r.n = n;
    r.significant = r.lo > 0.0 || r.hi < 0.0;
    return r;
}

void check_aligned(const ArmValues& x, const ArmValues& y) {
    if (x.query_ids != y.query_ids || x.values.size() != y.values.size() || x.values.size() != x.query_ids.size()) {
        throw InvalidArgument("arms do not share the same query-id set");
    }
}

std::vector<double> interaction_terms(const ArmValues& c0, const ArmValues& cp, const ArmValues& cr,
                                      const ArmValues& cb) {
    check_aligned(c0, cp);
    check_aligned(c0, cr);
    check_aligned(c0, cb);
    if (c0.values.empty()) throw InvalidArgument("interaction_ci: empty arms");
    std::vector<double> t(c0.values.size());
    for (std::size_t i = 0; i < t.size(); ++i) {
        const double base = c0.values[i];
        t[i] = (cb.values[i] - base) - ((cp.values[i] - base) + (cr.values[i] - base));
    }
    return t;
}

}  // namespace

CIReport bootstrap_mean_ci(const std::vector<double>& diffs, int resamples, std::uint64_t seed) {
    if (diffs.empty()) throw InvalidArgument("bootstrap: empty input");
    if (resamples < 1) throw InvalidArgument("bootstrap: resamples must be >= 1");
    const std::size_t n = diffs.size();
    Rng rng(seed);
    std::vector<double> stats(static_cast<std::size_t>(resamples));
    for (auto& s : stats) {
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) acc += diffs[rng.below(n)];
        s = acc / static_cast<double>(n);
    }
    return finish(mean(diffs), std::move(stats), resamples, seed, n);
}

CIReport paired_bootstrap_ci(const PairedResult& pairs, int resamples, std::uint64_t seed) {
    if (pairs.size() == 0) throw InvalidArgument("paired_bootstrap_ci: empty pairs");
    if (pairs.a.size() != pairs.size() || pairs.b.size() != pairs.size()) {
        throw InvalidArgument("paired_bootstrap_ci: arms cover different query sets");
    }
    std::vector<double> d(pairs.size());
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = static_cast<double>(pairs.b[i] - pairs.a[i]);
    return bootstrap_mean_ci(d, resamples, seed);
}

CIReport interaction_ci(const ArmValues& c0, const ArmValues& cp, const ArmValues& cr, const ArmValues& cb,
                        int resamples, std::uint64_t seed) {
    return bootstrap_mean_ci(interaction_terms(c0, cp, cr, cb), resamples, seed);
}

CIReport interaction_ci_exhaustive(const ArmValues& c0, const ArmValues& cp, const ArmValues& cr,
                                   const ArmValues& cb) {
    const auto t = interaction_terms(c0, cp, cr, cb);
    const std::size_t n = t.size();
    if (n > 8) throw InvalidArgument("exhaustive bootstrap limited to n <= 8");
    std::size_t total = 1;
    for (std::size_t i = 0; i < n; ++i) total *= n;
    std::vector<double> stats;
    stats.reserve(total);
    std::vector<std::size_t> idx(n, 0);
    for (std::size_t draw = 0; draw < total; ++draw) {
        double acc = 0.0;
        for (auto i : idx) acc += t[i];
        stats.push_back(acc / static_cast<double>(n));
        for (std::size_t p = 0; p < n; ++p) {
            if (++idx[p] < n) break;
            idx[p] = 0;
        }
    }
    return finish(mean(t), std::move(stats), static_cast<int>(total), 0, n);
}

RouterOracle router_oracle(const HitsByVw& hits) {
    if (hits.empty()) throw InvalidArgument("router_oracle: no arms");
    const std::size_t n = hits.begin()->second.size();
    for (const auto& [vw, h] : hits) {
        if (h.size() != n) throw InvalidArgument("router_oracle: arms cover different query sets");
    }
    if (n == 0) throw InvalidArgument("router_oracle: no queries");
    RouterOracle r;
    double oracle = 0.0;
    for (std::size_t q = 0; q < n; ++q) {
        double best = 0.0;
        for (const auto& [vw, h] : hits) best = std::max(best, h[q]);
        oracle += best;
    }
    r.oracle_hit1 = oracle / static_cast<double>(n);
    bool first = true;
    for (const auto& [vw, h] : hits) {  // ascending vw, strict > keeps the smaller on ties
        const double m = mean(h);
        if (first || m > r.static_best_hit1) {
            r.static_best_hit1 = m;
            r.static_best_vw = vw;
            first = false;
        }
    }
    r.headroom = r.oracle_hit1 - r.static_best_hit1;
    return r;
}

PolicyEval threshold_policy_eval(const std::vector<double>& signal, double tau, double low_vw, double high_vw,
                                 const HitsByVw& hits, int resamples, std::uint64_t seed) {
    const auto lo_it = hits.find(low_vw);
    const auto hi_it = hits.find(high_vw);
    if (lo_it == hits.end() || hi_it == hits.end()) throw InvalidArgument("policy arms missing from hits");
    const std::size_t n = signal.size();
    if (lo_it->second.size() != n || hi_it->second.size() != n) {
        throw InvalidArgument("signal and hits cover different query sets");
    }
    const RouterOracle oracle = router_oracle(hits);
    const auto& best = hits.at(oracle.static_best_vw);
    PolicyEval e;
    e.tau = tau;
    e.low_vw = low_vw;
    e.high_vw = high_vw;
    e.static_best_vw = oracle.static_best_vw;
    std::vector<double> policy(n), diff(n);
    for (std::size_t q = 0; q < n; ++q) {
        const bool high = signal[q] < tau;
        e.chosen_vw.push_back(high ? high_vw : low_vw);
        policy[q] = high ? hi_it->second[q] : lo_it->second[q];
        diff[q] = policy[q] - best[q];
    }
    e.policy_hit1 = n == 0 ? 0.0 : mean(policy);
    e.vs_static_best = bootstrap_mean_ci(diff, resamples, seed);
    return e;
}

double hit_at_k(const std::vector<int>& gold_ranks, int k) {
    if (gold_ranks.empty()) throw InvalidArgument("hit_at_k: no queries");
    double hits = 0.0;
    for (int r : gold_ranks) hits += (r >= 0 && r < k) ? 1.0 : 0.0;
    return hits / static_cast<double>(gold_ranks.size());
}

double mean_reciprocal_rank(const std::vector<int>& gold_ranks) {
    if (gold_ranks.empty()) throw InvalidArgument("mrr: no queries");
    double s = 0.0;
    for (int r : gold_ranks) s += r >= 0 ? 1.0 / (r + 1.0) : 0.0;
    return s / static_cast<double>(gold_ranks.size());
}

}  // namespace ecol
