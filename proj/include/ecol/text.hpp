#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace ecol {

/// 64-bit FNV-1a over raw bytes.
constexpr std::uint64_t fnv1a64(std::string_view s) noexcept {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

/// Per-query seed for tie-breaking; one per recall.
inline std::uint64_t query_seed(std::uint64_t run_seed, std::string_view query) noexcept {
    return splitmix64(run_seed ^ fnv1a64(query));
}

/// Uniform-looking but reproducible order among exact score ties.
inline std::uint64_t tie_key(std::uint64_t qseed, std::string_view id) noexcept {
    return splitmix64(qseed ^ fnv1a64(id));
}

using TokenStream = std::vector<std::string>;

/// Lowercase, split on every non-alphanumeric byte, drop empties.
TokenStream tokenize(std::string_view text);

/// The fixed 30-word English stopword list used by PRF and RM3 mining.
const std::set<std::string, std::less<>>& stopwords();
bool is_stopword(std::string_view token);

/// Distinct non-stopword tokens of length >= min_len, in first-occurrence order.
std::vector<std::string> extract_entities(std::string_view text, std::size_t min_len = 3);

std::string to_lower_ascii(std::string_view s);

}  // namespace ecol
