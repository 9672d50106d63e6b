#include "ecol/text.hpp"

#include <cctype>

namespace ecol {

std::string to_lower_ascii(std::string_view s) {
    std::string out(s);
    for (char& c : out) {
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    }
    return out;
}

TokenStream tokenize(std::string_view text) {
    TokenStream out;
    std::string cur;
    for (char ch : text) {
        const auto c = static_cast<unsigned char>(ch);
        if (c < 0x80 && std::isalnum(c)) {
            cur.push_back(static_cast<char>(std::tolower(c)));
        } else if (!cur.empty()) {
            out.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

const std::set<std::string, std::less<>>& stopwords() {
    static const std::set<std::string, std::less<>> words = {
        "a",    "an",   "and",  "are",  "as",   "at",   "be",   "by",  "do",   "does",
        "for",  "from", "has",  "he",   "in",   "is",   "it",   "its", "of",   "on",
        "or",   "that", "the",  "this", "to",   "was",  "were", "what", "will", "with",
    };
    return words;
}

bool is_stopword(std::string_view token) { return stopwords().contains(token); }

std::vector<std::string> extract_entities(std::string_view text, std::size_t min_len) {
    std::vector<std::string> out;
    std::set<std::string, std::less<>> seen;
    for (auto& tok : tokenize(text)) {
        if (tok.size() < min_len || is_stopword(tok)) continue;
        if (seen.insert(tok).second) out.push_back(std::move(tok));
    }
    return out;
}

}  // namespace ecol
