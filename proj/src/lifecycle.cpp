#include "ecol/lifecycle.hpp"

#include "ecol/errors.hpp"

namespace ecol {

std::string_view to_string(LifecycleAction a) {
    switch (a) {
        case LifecycleAction::Create: return "CREATE";
        case LifecycleAction::Promote: return "PROMOTE";
        case LifecycleAction::Deprecate: return "DEPRECATE";
        case LifecycleAction::Recover: return "RECOVER";
        case LifecycleAction::BumpVersion: return "BUMP_VERSION";
    }
    return "?";
}

std::string_view to_string(SchemaStatus s) {
    switch (s) {
        case SchemaStatus::Inferred: return "INFERRED";
        case SchemaStatus::Promoted: return "PROMOTED";
        case SchemaStatus::Deprecated: return "DEPRECATED";
    }
    return "?";
}

LifecycleAction parse_action(std::string_view s) {
    if (s == "CREATE") return LifecycleAction::Create;
    if (s == "PROMOTE") return LifecycleAction::Promote;
    if (s == "DEPRECATE") return LifecycleAction::Deprecate;
    if (s == "RECOVER") return LifecycleAction::Recover;
    if (s == "BUMP_VERSION") return LifecycleAction::BumpVersion;
    throw InvalidArgument("unknown lifecycle action " + std::string(s));
}

LifecycleReducer::LifecycleReducer(ReducerMode mode, int deprecate_quorum_k) : mode_(mode), k_(deprecate_quorum_k) {
    if (k_ < 1) throw InvalidArgument("deprecate_quorum_k must be >= 1, got " + std::to_string(k_));
}

bool LifecycleReducer::reject(const LifecycleEvent& ev, std::string_view why) {
    if (mode_ == ReducerMode::Strict) {
        throw LifecycleViolation(std::string(to_string(ev.action)) + " on schema '" + ev.schema_id + "': " +
                                 std::string(why));
    }
    return false;
}

bool LifecycleReducer::apply(const LifecycleEvent& ev) {
    auto it = state_.find(ev.schema_id);
    if (ev.action == LifecycleAction::Create) {
        if (it != state_.end()) return reject(ev, "schema already exists");
        SchemaState s;
        s.schema_id = ev.schema_id;
        s.last_window_id = ev.window_id;
        state_.emplace(ev.schema_id, std::move(s));
        return true;
    }
    if (it == state_.end()) return reject(ev, "unknown schema id");
    SchemaState& s = it->second;

    switch (ev.action) {
        case LifecycleAction::Promote:
            if (s.status != SchemaStatus::Inferred) return reject(ev, "illegal edge from " + std::string(to_string(s.status)));
            s.status = SchemaStatus::Promoted;
            s.last_window_id = ev.window_id;
            s.pending_deprecate_emitters.clear();
            return true;

        case LifecycleAction::Deprecate:
            if (s.status == SchemaStatus::Deprecated) return true;
            if (k_ > 1) {
                if (!ev.emitter_id || ev.emitter_id->empty()) return reject(ev, "emitter_id required under quorum");
                s.pending_deprecate_emitters.insert(*ev.emitter_id);
                if (static_cast<int>(s.pending_deprecate_emitters.size()) < k_) return true;
            }
            s.status = SchemaStatus::Deprecated;
            s.last_window_id = ev.window_id;
            s.pending_deprecate_emitters.clear();
            return true;

        case LifecycleAction::Recover:
            if (s.status != SchemaStatus::Deprecated) return reject(ev, "illegal edge from " + std::string(to_string(s.status)));
            if (ev.window_id == s.last_window_id) return reject(ev, "stale window_id " + ev.window_id);
            s.status = SchemaStatus::Inferred;
            s.last_window_id = ev.window_id;
            s.pending_deprecate_emitters.clear();
            return true;

        case LifecycleAction::BumpVersion:
            ++s.version;
            return true;

        case LifecycleAction::Create:
            break;
    }
    return reject(ev, "unhandled action");
}

LifecycleSnapshot reduce_events(std::span<const LifecycleEvent> events, ReducerMode mode, int deprecate_quorum_k) {
    LifecycleReducer r(mode, deprecate_quorum_k);
    for (const auto& ev : events) r.apply(ev);
    return r.state();
}

LifecycleSnapshot LifecycleSnapshotCache::get(std::span<const LifecycleEvent> log, int k, ReducerMode mode) {
    std::lock_guard lock(mu_);
    const bool key_match = reducer_ && reducer_->quorum() == k && reducer_->mode() == mode;
    const bool prefix_ok = offset_ <= log.size() &&
                           (offset_ == 0 ? !last_seen_ : (last_seen_ && log[offset_ - 1] == *last_seen_));
    if (key_match && prefix_ok) {
        if (offset_ == log.size()) {
            ++hits_;
            return reducer_->state();
        }
        ++partial_;
    } else {
        reducer_.emplace(mode, k);
        offset_ = 0;
        last_seen_.reset();
        ++full_;
    }
    for (; offset_ < log.size(); ++offset_) reducer_->apply(log[offset_]);
    if (offset_ > 0) last_seen_ = log[offset_ - 1];
    return reducer_->state();
}

std::uint64_t LifecycleSnapshotCache::hits() const {
    std::lock_guard lock(mu_);
    return hits_;
}
std::uint64_t LifecycleSnapshotCache::partial_replays() const {
    std::lock_guard lock(mu_);
    return partial_;
}
std::uint64_t LifecycleSnapshotCache::full_rebuilds() const {
    std::lock_guard lock(mu_);
    return full_;
}

}  // namespace ecol
