#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace ecol {

struct PairedResult {
    std::string label_a = "A";
    std::string label_b = "B";
    std::vector<std::string> query_ids;
    std::vector<int> a;  // hit indicators, arm A
    std::vector<int> b;

    std::size_t size() const { return query_ids.size(); }
    double mean_a() const;
    double mean_b() const;
    void append(const PairedResult& other, const std::string& id_prefix = "");
};

struct CIReport {
    double point = 0.0;
    double lo = 0.0;
    double hi = 0.0;
    int resamples = 0;
    std::uint64_t seed = 0;
    std::size_t n = 0;
    bool significant = false;
};

/// One arm's per-query values, keyed by query id.
struct ArmValues {
    std::vector<std::string> query_ids;
    std::vector<double> values;
};

/// numpy-style linear-interpolated percentile of sorted data, p in [0, 100].
double percentile_sorted(const std::vector<double>& sorted, double p);

/// Percentile bootstrap of the mean of `diffs`.
CIReport bootstrap_mean_ci(const std::vector<double>& diffs, int resamples, std::uint64_t seed);

CIReport paired_bootstrap_ci(const PairedResult& pairs, int resamples = 10000, std::uint64_t seed = 0);

/// (CB - C0) - ((CP - C0) + (CR - C0)); one shared index vector per draw.
CIReport interaction_ci(const ArmValues& c0, const ArmValues& cp, const ArmValues& cr, const ArmValues& cb,
                        int resamples = 10000, std::uint64_t seed = 0);

/// Same statistic over all n^n index vectors (n <= 8); resamples = n^n.
CIReport interaction_ci_exhaustive(const ArmValues& c0, const ArmValues& cp, const ArmValues& cr,
                                   const ArmValues& cb);

struct RouterOracle {
    double oracle_hit1 = 0.0;
    double static_best_vw = 0.0;
    double static_best_hit1 = 0.0;
    double headroom = 0.0;
};

using HitsByVw = std::map<double, std::vector<double>>;

RouterOracle router_oracle(const HitsByVw& hits);

struct PolicyEval {
    double tau = 0.0;
    double low_vw = 0.0;
    double high_vw = 0.0;
    double policy_hit1 = 0.0;
    std::vector<double> chosen_vw;
    double static_best_vw = 0.0;
    CIReport vs_static_best;  // policy minus static best
};

/// Per query: high_vw when signal < tau, else low_vw.
PolicyEval threshold_policy_eval(const std::vector<double>& signal, double tau, double low_vw, double high_vw,
                                 const HitsByVw& hits, int resamples = 10000, std::uint64_t seed = 0);

/// gold_ranks are 0-based; -1 means the gold was not retrieved.
double hit_at_k(const std::vector<int>& gold_ranks, int k);
double mean_reciprocal_rank(const std::vector<int>& gold_ranks);

}  // namespace ecol
