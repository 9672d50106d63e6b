#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace ecol {

/// Dense vector plus its L2 norm (0 for the all-zero vector).
struct Embedding {
    std::vector<double> values;
    double norm = 0.0;

    std::size_t dim() const { return values.size(); }

    /// Scales `raw` to unit length; all-zero input stays zero.
    static Embedding normalized(std::vector<double> raw);
};

/// Cosine similarity clamped to [-1, 1]; 0 if either side is the zero vector.
/// Throws InvalidArgument on dimension mismatch.
double cosine(const Embedding& a, const Embedding& b);

/// Signed feature-hashed bag of character trigrams with ^/$ token markers.
/// Tokens shorter than 3 bytes contribute nothing.
Embedding hash_trigram_embed(std::string_view text, std::size_t dim);

class Embedder {
public:
    virtual ~Embedder() = default;
    virtual Embedding embed(std::string_view text) const = 0;
    virtual std::size_t dim() const = 0;
    virtual std::string name() const = 0;
};

class HashTrigramEmbedder final : public Embedder {
public:
    explicit HashTrigramEmbedder(std::size_t dim = 256);
    Embedding embed(std::string_view text) const override { return hash_trigram_embed(text, dim_); }
    std::size_t dim() const override { return dim_; }
    std::string name() const override { return "hash-trigram-" + std::to_string(dim_); }

private:
    std::size_t dim_;
};

/// Exact-text lookup into vectors produced offline. Unknown text throws
/// MissingVectorError; there is no fallback.
class PrecomputedVectors final : public Embedder {
public:
    PrecomputedVectors(std::string encoder, std::size_t dim,
                       std::vector<std::pair<std::string, std::vector<float>>> entries);

    /// Rejects a header whose dim differs from `expected_dim` when given.
    static PrecomputedVectors load(const std::filesystem::path& path,
                                   std::optional<std::size_t> expected_dim = std::nullopt);

    Embedding embed(std::string_view text) const override;
    std::size_t dim() const override { return dim_; }
    std::string name() const override { return encoder_; }
    std::size_t size() const { return vectors_.size(); }
    bool contains(std::string_view text) const;

private:
    std::string encoder_;
    std::size_t dim_;
    std::unordered_map<std::string, Embedding> vectors_;
};

enum class EmbedderKind { HashTrigram, Precomputed };

struct EmbedderConfig {
    EmbedderKind kind = EmbedderKind::HashTrigram;
    std::size_t dim = 256;
    std::optional<std::filesystem::path> vectors_path;
};

std::shared_ptr<const Embedder> make_embedder(const EmbedderConfig& cfg);

// Text-column escaping shared by the vector file and the text list.
std::string escape_text(std::string_view text);
std::string unescape_text(std::string_view escaped);

std::string base64_encode(const unsigned char* data, std::size_t len);
std::vector<unsigned char> base64_decode(std::string_view text);

/// Writes the vector file format; vectors are stored as little-endian float32.
void write_vector_file(std::ostream& out, std::string_view encoder, std::size_t dim,
                       const std::vector<std::pair<std::string, std::vector<float>>>& entries);

/// One escaped text per line, first occurrence order, duplicates dropped.
void write_text_list(std::ostream& out, const std::vector<std::string>& texts);
std::vector<std::string> read_text_list(std::istream& in);

}  // namespace ecol
