#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "ecol/embedders.hpp"
#include "ecol/retrieval.hpp"
#include "ecol/stats.hpp"

namespace ecol {

enum class Tag { Preference, Project, Technical, Service, Tool };

std::string_view tag_name(Tag t);
Tag parse_tag(std::string_view s);
const std::vector<Tag>& all_tags();
/// service and tool have closed single-token answers; the rest are phrasal.
bool is_lexical_tag(Tag t);

const std::vector<std::string>& answer_vocabulary(Tag t);
const std::vector<std::string>& default_paraphrase_templates();

inline constexpr std::string_view kFixedTemplate = "{entity} uses {answer} for {tag}.";
inline constexpr std::string_view kQueryTemplate = "what does {entity} use for {tag}?";

struct CollisionSpec {
    Tag tag = Tag::Service;
    int K = 4;
    int n_entities = 32;
    std::uint64_t seed = 0;
    bool paraphrase = false;
    std::vector<std::string> paraphrase_templates;  // empty: shipped defaults

    void validate() const;
};

struct CollisionDoc {
    std::string doc_id;
    std::string text;
    std::string entity;
    std::string answer;
    bool is_gold = false;
};

struct CollisionQuery {
    std::string query_id;
    std::string text;
    std::string gold_doc_id;
    std::string entity;
};

struct CollisionCorpus {
    CollisionSpec spec;
    std::vector<CollisionDoc> docs;
    std::vector<CollisionQuery> queries;
};

std::string entity_name(int index, int n_entities);
CollisionCorpus generate(const CollisionSpec& spec);

nlohmann::json corpus_to_json(const CollisionCorpus& c);
/// Doc texts then query texts, duplicates removed.
std::vector<std::string> corpus_texts(const CollisionCorpus& c);

/// Seed of the r-th regeneration of a cell.
std::uint64_t repetition_seed(std::uint64_t seed, int rep);

struct ArmSpec {
    std::string label;
    RetrievalConfig retrieval;
    std::shared_ptr<const Embedder> embedder;
};

/// Fresh single-actor store, ACL off, dedup off; per-query hit@1 indicator.
std::vector<int> run_arm(const CollisionCorpus& corpus, const ArmSpec& arm);

PairedResult run_cell(const CollisionCorpus& corpus, const ArmSpec& a, const ArmSpec& b);

/// run_cell over `repetitions` regenerations, query ids prefixed "r<rep>/".
PairedResult run_cell_repeated(const CollisionSpec& spec, int repetitions, const ArmSpec& a, const ArmSpec& b);

}  // namespace ecol
