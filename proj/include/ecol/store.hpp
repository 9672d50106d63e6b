#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

#include <json.hpp>

#include "ecol/embedders.hpp"
#include "ecol/lexical.hpp"
#include "ecol/lifecycle.hpp"

namespace ecol {

enum class MemoryType { Episode, Fact, Schema };
enum class MemoryState { Active, Suppressed };

std::string_view to_string(MemoryType t);
MemoryType parse_memory_type(std::string_view s);

struct Memory {
    std::string id;
    std::string agent_id;  // "" = system-owned
    MemoryType memory_type = MemoryType::Episode;
    std::string text;
    double salience = 0.5;
    double extraction_confidence = 1.0;
    MemoryState state = MemoryState::Active;
    std::uint64_t created_at = 0;
    std::optional<std::string> schema_id;

    bool operator==(const Memory&) const = default;
};

enum class GrantScope { Own, All };

struct Grant {
    std::string actor;
    GrantScope scope = GrantScope::Own;
    bool federated = false;
};

struct StorageConfig {
    double write_dedup_threshold = 0.92;
    double merge_threshold = 0.95;
    int dedup_pool_unfiltered = 5;
    int dedup_pool_filtered = 32;
    int merge_pool = 20;
    bool acl_enabled = false;
    bool write_dedup_enabled = true;

    void validate() const;
};

enum class EventKind { Remember, Suppress, Lifecycle };
std::string_view to_string(EventKind k);

struct WriteEvent {
    std::string event_id;
    EventKind kind = EventKind::Remember;
    nlohmann::json payload;
    std::uint64_t seq = 0;

    bool operator==(const WriteEvent&) const = default;
};

nlohmann::json event_to_json(const WriteEvent& ev);
WriteEvent event_from_json(const nlohmann::json& j);
nlohmann::json lifecycle_to_json(const LifecycleEvent& ev);
LifecycleEvent lifecycle_from_json(const nlohmann::json& j);

/// Append-only JSONL file, one canonical-JSON record per line. Each append
/// takes the process mutex and an exclusive flock on the file.
class EventLog {
public:
    /// Opens or creates the file. Throws TornRecordError if the existing
    /// content ends in an incomplete or unparseable record.
    explicit EventLog(const std::filesystem::path& path, bool sync = true);
    ~EventLog();
    EventLog(const EventLog&) = delete;
    EventLog& operator=(const EventLog&) = delete;

    /// Assigns seq (previous max + 1) and event_id, writes one line.
    std::uint64_t append(WriteEvent& ev);
    std::uint64_t last_seq() const;
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
    int fd_ = -1;
    bool sync_;
    mutable std::mutex mu_;
    std::uint64_t last_seq_ = 0;
};

/// Parses every line; malformed lines raise ParseError with a 1-based line number.
std::vector<WriteEvent> read_event_log(const std::filesystem::path& path);

/// The comparable, embedder-free part of store state.
struct Projection {
    std::map<std::string, Memory> rows;
    std::vector<LifecycleEvent> lifecycle;
    std::map<std::string, std::uint64_t> rows_per_agent;
    std::uint64_t events_applied = 0;
    std::uint64_t deduped_writes = 0;
    std::uint64_t suppressions = 0;
    std::uint64_t last_seq = 0;

    /// The single mutation path for both live writes and replay.
    void apply(const WriteEvent& ev);
    std::size_t active_rows() const;

    bool operator==(const Projection&) const = default;
};

Projection replay(std::span<const WriteEvent> events);
Projection replay(const std::filesystem::path& log_path);

struct Neighbor {
    std::string id;
    double cos;
};

/// Exact brute-force cosine search over active vectors.
class VectorIndex {
public:
    void add(std::string id, std::string agent, Embedding vec);
    void deactivate(std::string_view id);
    const Embedding* find(std::string_view id) const;

    /// Top `limit` by cosine among active vectors in scope, seeded tie-break.
    std::vector<Neighbor> nearest(const Embedding& q, std::size_t limit, const Scope& scope,
                                  std::uint64_t qseed, std::string_view exclude = {}) const;

private:
    struct Entry {
        std::string id;
        std::string agent;
        Embedding vec;
        bool active;
    };
    std::vector<Entry> entries_;
    std::unordered_map<std::string, std::size_t> by_id_;
};

using RowLookup = std::function<const Memory*(std::string_view)>;

/// First neighbour in the top-N pool that loads, is visible under `writer_scope`
/// and clears the threshold. N widens to dedup_pool_filtered when a scope applies.
std::optional<std::string> dedup_check(const VectorIndex& vectors, const Embedding& candidate,
                                       const Scope& writer_scope, const StorageConfig& cfg,
                                       const RowLookup& lookup);

struct WriteRequest {
    std::string actor;
    std::string text;
    MemoryType memory_type = MemoryType::Episode;
    double salience = 0.5;
    double extraction_confidence = 1.0;
    std::optional<std::string> schema_id;
};

struct WriteResult {
    std::optional<Memory> stored;
    std::optional<std::string> deduped_against;
};

struct MergeReport {
    std::size_t suppressed = 0;
};

class MemoryStore {
public:
    MemoryStore(std::shared_ptr<const Embedder> embedder, StorageConfig cfg,
                std::optional<std::filesystem::path> log_path = std::nullopt, bool sync = true);

    void set_grant(Grant g);
    /// Absent when unfiltered; throws PermissionError for an unknown actor under ACL.
    Scope acl_scope(const std::string& actor) const;

    WriteResult remember(const WriteRequest& req);
    MergeReport mechanical_merge_pass();
    /// Deterministic extractor stub: one FACT per EPISODE id, text copied,
    /// owner inherited from the episode.
    std::vector<Memory> synthesize_facts(const std::vector<std::string>& episode_ids, double confidence);
    std::uint64_t append_lifecycle(const LifecycleEvent& ev);

    // Readers: hold read_lock() across a multi-step read for a consistent view.
    std::shared_lock<std::shared_mutex> read_lock() const { return std::shared_lock(mu_); }
    const Projection& projection() const { return proj_; }
    const InvertedIndex& lexical() const { return lexical_; }
    const VectorIndex& vectors() const { return vectors_; }
    const Embedder& embedder() const { return *embedder_; }
    const StorageConfig& config() const { return cfg_; }
    const Memory* find(std::string_view id) const;
    std::vector<WriteEvent> events() const;
    LifecycleSnapshot lifecycle_snapshot(int deprecate_quorum_k) const;
    const LifecycleSnapshotCache& lifecycle_cache() const { return lifecycle_cache_; }

private:
    std::uint64_t commit(WriteEvent ev);  // caller holds the write lock
    void index_row(const Memory& m, Embedding vec);

    std::shared_ptr<const Embedder> embedder_;
    StorageConfig cfg_;
    std::unique_ptr<EventLog> log_;
    std::map<std::string, Grant> grants_;
    mutable std::shared_mutex mu_;
    Projection proj_;
    std::vector<WriteEvent> events_;
    std::uint64_t mem_seq_ = 0;
    InvertedIndex lexical_;
    VectorIndex vectors_;
    mutable LifecycleSnapshotCache lifecycle_cache_;
};

}  // namespace ecol
