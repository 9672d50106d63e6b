#include "ecol/embedders.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include "ecol/errors.hpp"
#include "ecol/text.hpp"

namespace ecol {

Embedding Embedding::normalized(std::vector<double> raw) {
    double sq = 0.0;
    for (double x : raw) sq += x * x;
    Embedding e;
    if (sq > 0.0) {
        const double n = std::sqrt(sq);
        for (double& x : raw) x /= n;
        double sq2 = 0.0;
        for (double x : raw) sq2 += x * x;
        e.norm = std::sqrt(sq2);
    }
    e.values = std::move(raw);
    return e;
}

double cosine(const Embedding& a, const Embedding& b) {
    if (a.dim() != b.dim()) {
        throw InvalidArgument("cosine: dimension mismatch " + std::to_string(a.dim()) + " vs " +
                              std::to_string(b.dim()));
    }
    if (a.norm == 0.0 || b.norm == 0.0) return 0.0;
    double dot = 0.0;
    for (std::size_t i = 0; i < a.values.size(); ++i) dot += a.values[i] * b.values[i];
    const double c = dot / (a.norm * b.norm);
    return std::clamp(c, -1.0, 1.0);
}

Embedding hash_trigram_embed(std::string_view text, std::size_t dim) {
    if (dim == 0) throw InvalidArgument("hash_trigram_embed: dim must be >= 1");
    std::vector<double> acc(dim, 0.0);
    const std::string lower = to_lower_ascii(text);
    std::size_t i = 0;
    auto is_space = [](char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; };
    while (i < lower.size()) {
        while (i < lower.size() && is_space(lower[i])) ++i;
        std::size_t j = i;
        while (j < lower.size() && !is_space(lower[j])) ++j;
        if (j - i >= 3) {
            std::string wrapped;
            wrapped.reserve(j - i + 2);
            wrapped.push_back('^');
            wrapped.append(lower, i, j - i);
            wrapped.push_back('$');
            for (std::size_t p = 0; p + 3 <= wrapped.size(); ++p) {
                const std::uint64_t h = fnv1a64(std::string_view(wrapped).substr(p, 3));
                const std::size_t bucket = static_cast<std::size_t>(h % dim);
                const bool negative = ((h / dim) & 1u) != 0;
                acc[bucket] += negative ? -1.0 : 1.0;
            }
        }
        i = j;
    }
    return Embedding::normalized(std::move(acc));
}

HashTrigramEmbedder::HashTrigramEmbedder(std::size_t dim) : dim_(dim) {
    if (dim == 0) throw InvalidArgument("hash embedder dim must be >= 1");
}

// ---------------------------------------------------------------- escaping

std::string escape_text(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    for (char c : text) {
        switch (c) {
            case '\\': out += "\\\\"; break;
            case '\t': out += "\\t"; break;
            case '\n': out += "\\n"; break;
            case '\r': out += "\\r"; break;
            default: out.push_back(c);
        }
    }
    return out;
}

std::string unescape_text(std::string_view escaped) {
    std::string out;
    out.reserve(escaped.size());
    for (std::size_t i = 0; i < escaped.size(); ++i) {
        const char c = escaped[i];
        if (c != '\\') {
            if (c == '\t' || c == '\n' || c == '\r') {
                throw InvalidArgument("unescaped control character in text column");
            }
            out.push_back(c);
            continue;
        }
        if (i + 1 >= escaped.size()) throw InvalidArgument("dangling backslash in text column");
        switch (escaped[++i]) {
            case '\\': out.push_back('\\'); break;
            case 't': out.push_back('\t'); break;
            case 'n': out.push_back('\n'); break;
            case 'r': out.push_back('\r'); break;
            default: throw InvalidArgument(std::string("unknown escape \\") + escaped[i]);
        }
    }
    return out;
}

// ---------------------------------------------------------------- base64

namespace {
constexpr char kB64[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

int b64_value(char c) {
    if (c >= 'A' && c <= 'Z') return c - 'A';
    if (c >= 'a' && c <= 'z') return c - 'a' + 26;
    if (c >= '0' && c <= '9') return c - '0' + 52;
    if (c == '+') return 62;
    if (c == '/') return 63;
    return -1;
}
}  // namespace

std::string base64_encode(const unsigned char* data, std::size_t len) {
    std::string out;
    out.reserve((len + 2) / 3 * 4);
    for (std::size_t i = 0; i < len; i += 3) {
        const std::uint32_t b0 = data[i];
        const std::uint32_t b1 = i + 1 < len ? data[i + 1] : 0;
        const std::uint32_t b2 = i + 2 < len ? data[i + 2] : 0;
        const std::uint32_t v = (b0 << 16) | (b1 << 8) | b2;
        out.push_back(kB64[(v >> 18) & 63]);
        out.push_back(kB64[(v >> 12) & 63]);
        out.push_back(i + 1 < len ? kB64[(v >> 6) & 63] : '=');
        out.push_back(i + 2 < len ? kB64[v & 63] : '=');
    }
    return out;
}

std::vector<unsigned char> base64_decode(std::string_view text) {
    if (text.size() % 4 != 0) throw InvalidArgument("base64 length not a multiple of 4");
    std::vector<unsigned char> out;
    out.reserve(text.size() / 4 * 3);
    for (std::size_t i = 0; i < text.size(); i += 4) {
        int v[4];
        int pad = 0;
        for (int k = 0; k < 4; ++k) {
            const char c = text[i + k];
            if (c == '=') {
                if (i + 4 != text.size() || k < 2) throw InvalidArgument("misplaced base64 padding");
                v[k] = 0;
                ++pad;
            } else {
                if (pad) throw InvalidArgument("misplaced base64 padding");
                v[k] = b64_value(c);
                if (v[k] < 0) throw InvalidArgument("invalid base64 character");
            }
        }
        const std::uint32_t w = (std::uint32_t(v[0]) << 18) | (std::uint32_t(v[1]) << 12) |
                                (std::uint32_t(v[2]) << 6) | std::uint32_t(v[3]);
        out.push_back(static_cast<unsigned char>((w >> 16) & 0xff));
        if (pad < 2) out.push_back(static_cast<unsigned char>((w >> 8) & 0xff));
        if (pad < 1) out.push_back(static_cast<unsigned char>(w & 0xff));
    }
    return out;
}

// ---------------------------------------------------------------- vector file

namespace {

std::vector<unsigned char> floats_to_le(const std::vector<float>& v) {
    std::vector<unsigned char> bytes(v.size() * 4);
    for (std::size_t i = 0; i < v.size(); ++i) {
        std::uint32_t bits;
        std::memcpy(&bits, &v[i], 4);
        for (int b = 0; b < 4; ++b) bytes[i * 4 + b] = static_cast<unsigned char>((bits >> (8 * b)) & 0xff);
    }
    return bytes;
}

std::vector<float> le_to_floats(const std::vector<unsigned char>& bytes) {
    std::vector<float> v(bytes.size() / 4);
    for (std::size_t i = 0; i < v.size(); ++i) {
        std::uint32_t bits = 0;
        for (int b = 0; b < 4; ++b) bits |= std::uint32_t(bytes[i * 4 + b]) << (8 * b);
        std::memcpy(&v[i], &bits, 4);
    }
    return v;
}

Embedding to_embedding(const std::vector<float>& v) {
    std::vector<double> d(v.begin(), v.end());
    return Embedding::normalized(std::move(d));
}

}  // namespace

void write_vector_file(std::ostream& out, std::string_view encoder, std::size_t dim,
                       const std::vector<std::pair<std::string, std::vector<float>>>& entries) {
    out << "dim=" << dim << " count=" << entries.size() << " encoder=" << encoder << '\n';
    for (const auto& [text, vec] : entries) {
        if (vec.size() != dim) throw InvalidArgument("vector for \"" + text + "\" has wrong dim");
        const auto bytes = floats_to_le(vec);
        out << escape_text(text) << '\t' << base64_encode(bytes.data(), bytes.size()) << '\n';
    }
}

PrecomputedVectors::PrecomputedVectors(std::string encoder, std::size_t dim,
                                       std::vector<std::pair<std::string, std::vector<float>>> entries)
    : encoder_(std::move(encoder)), dim_(dim) {
    if (dim_ == 0) throw InvalidArgument("precomputed vectors: dim must be >= 1");
    for (auto& [text, vec] : entries) {
        if (vec.size() != dim_) {
            throw InvalidArgument("precomputed vectors: entry \"" + text + "\" has dim " +
                                  std::to_string(vec.size()) + ", header says " + std::to_string(dim_));
        }
        if (!vectors_.emplace(text, to_embedding(vec)).second) {
            throw InvalidArgument("precomputed vectors: duplicate text \"" + text + "\"");
        }
    }
}

PrecomputedVectors PrecomputedVectors::load(const std::filesystem::path& path,
                                            std::optional<std::size_t> expected_dim) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidArgument("cannot open vector file " + path.string());
    std::string header;
    if (!std::getline(in, header)) throw InvalidArgument("empty vector file " + path.string());
    std::size_t dim = 0, count = 0;
    std::string encoder;
    {
        const auto enc_pos = header.find(" encoder=");
        if (header.rfind("dim=", 0) != 0 || enc_pos == std::string::npos) {
            throw InvalidArgument("bad vector file header: " + header);
        }
        std::istringstream hs(header.substr(0, enc_pos));
        std::string dim_tok, count_tok;
        hs >> dim_tok >> count_tok;
        if (count_tok.rfind("count=", 0) != 0) throw InvalidArgument("bad vector file header: " + header);
        try {
            dim = std::stoul(dim_tok.substr(4));
            count = std::stoul(count_tok.substr(6));
        } catch (const std::exception&) {
            throw InvalidArgument("bad vector file header: " + header);
        }
        encoder = header.substr(enc_pos + 9);
    }
    if (expected_dim && *expected_dim != dim) {
        throw InvalidArgument("vector file dim " + std::to_string(dim) + " does not match configured dim " +
                              std::to_string(*expected_dim));
    }
    std::vector<std::pair<std::string, std::vector<float>>> entries;
    entries.reserve(count);
    std::string line;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto tab = line.rfind('\t');
        if (tab == std::string::npos) {
            throw InvalidArgument("vector file line " + std::to_string(lineno) + ": missing tab");
        }
        auto floats = le_to_floats(base64_decode(std::string_view(line).substr(tab + 1)));
        entries.emplace_back(unescape_text(std::string_view(line).substr(0, tab)), std::move(floats));
    }
    if (entries.size() != count) {
        throw InvalidArgument("vector file declares count=" + std::to_string(count) + " but has " +
                              std::to_string(entries.size()) + " entries");
    }
    return PrecomputedVectors(std::move(encoder), dim, std::move(entries));
}

Embedding PrecomputedVectors::embed(std::string_view text) const {
    auto it = vectors_.find(std::string(text));
    if (it == vectors_.end()) throw MissingVectorError(std::string(text));
    return it->second;
}

bool PrecomputedVectors::contains(std::string_view text) const {
    return vectors_.contains(std::string(text));
}

std::shared_ptr<const Embedder> make_embedder(const EmbedderConfig& cfg) {
    if (cfg.dim == 0) throw InvalidArgument("embedder dim must be >= 1");
    switch (cfg.kind) {
        case EmbedderKind::HashTrigram:
            return std::make_shared<HashTrigramEmbedder>(cfg.dim);
        case EmbedderKind::Precomputed:
            if (!cfg.vectors_path) throw InvalidArgument("precomputed embedder requires a vectors path");
            return std::make_shared<PrecomputedVectors>(PrecomputedVectors::load(*cfg.vectors_path, cfg.dim));
    }
    throw InvalidArgument("unknown embedder kind");
}

void write_text_list(std::ostream& out, const std::vector<std::string>& texts) {
    std::set<std::string> seen;
    for (const auto& t : texts) {
        if (seen.insert(t).second) out << escape_text(t) << '\n';
    }
}

std::vector<std::string> read_text_list(std::istream& in) {
    std::vector<std::string> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        out.push_back(unescape_text(line));
    }
    return out;
}

}  // namespace ecol
