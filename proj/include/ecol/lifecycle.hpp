#pragma once

#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>

namespace ecol {

enum class LifecycleAction { Create, Promote, Deprecate, Recover, BumpVersion };
enum class SchemaStatus { Inferred, Promoted, Deprecated };
enum class ReducerMode { Strict, Lenient };

std::string_view to_string(LifecycleAction a);
std::string_view to_string(SchemaStatus s);
LifecycleAction parse_action(std::string_view s);

struct LifecycleEvent {
    std::string schema_id;
    LifecycleAction action;
    std::string window_id;
    std::optional<std::string> emitter_id;

    bool operator==(const LifecycleEvent&) const = default;
};

struct SchemaState {
    std::string schema_id;
    SchemaStatus status = SchemaStatus::Inferred;
    std::uint64_t version = 1;
    std::string last_window_id;
    std::set<std::string> pending_deprecate_emitters;

    bool operator==(const SchemaState&) const = default;
};

using LifecycleSnapshot = std::map<std::string, SchemaState>;

/// Incremental fold. STRICT throws LifecycleViolation on an offending event;
/// LENIENT drops it and reports false from apply().
class LifecycleReducer {
public:
    LifecycleReducer(ReducerMode mode, int deprecate_quorum_k);

    /// Returns true when the event was accepted (including accepted no-ops).
    bool apply(const LifecycleEvent& ev);

    const LifecycleSnapshot& state() const { return state_; }
    ReducerMode mode() const { return mode_; }
    int quorum() const { return k_; }

private:
    bool reject(const LifecycleEvent& ev, std::string_view why);

    ReducerMode mode_;
    int k_;
    LifecycleSnapshot state_;
};

LifecycleSnapshot reduce_events(std::span<const LifecycleEvent> events, ReducerMode mode,
                                int deprecate_quorum_k);

/// Snapshot keyed on (offset, k, mode). Append-only growth is folded from the
/// cached offset; any key change or a rewritten prefix rebuilds from scratch.
class LifecycleSnapshotCache {
public:
    LifecycleSnapshot get(std::span<const LifecycleEvent> log, int deprecate_quorum_k,
                          ReducerMode mode = ReducerMode::Lenient);

    std::uint64_t hits() const;
    std::uint64_t partial_replays() const;
    std::uint64_t full_rebuilds() const;

private:
    mutable std::mutex mu_;
    std::optional<LifecycleReducer> reducer_;
    std::size_t offset_ = 0;
    std::optional<LifecycleEvent> last_seen_;
    std::uint64_t hits_ = 0, partial_ = 0, full_ = 0;
};

}  // namespace ecol
