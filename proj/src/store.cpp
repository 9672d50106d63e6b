#include <algorithm>

#include "ecol/errors.hpp"
#include "ecol/store.hpp"
#include "ecol/text.hpp"

namespace ecol {

using nlohmann::json;

std::string_view to_string(MemoryType t) {
    switch (t) {
        case MemoryType::Episode: return "EPISODE";
        case MemoryType::Fact: return "FACT";
        case MemoryType::Schema: return "SCHEMA";
    }
    return "?";
}

MemoryType parse_memory_type(std::string_view s) {
    if (s == "EPISODE") return MemoryType::Episode;
    if (s == "FACT") return MemoryType::Fact;
    if (s == "SCHEMA") return MemoryType::Schema;
    throw InvalidArgument("unknown memory type " + std::string(s));
}

void StorageConfig::validate() const {
    auto unit = [](double x) { return x > 0.0 && x <= 1.0; };
    if (!unit(write_dedup_threshold) || !unit(merge_threshold)) throw InvalidArgument("thresholds must lie in (0, 1]");
    if (dedup_pool_unfiltered < 1 || dedup_pool_filtered < 1 || merge_pool < 1) {
        throw InvalidArgument("pool sizes must be >= 1");
    }
}

// ---------------------------------------------------------------- Projection

namespace {

json memory_payload(const Memory& m) {
    json p{{"id", m.id},
           {"agent_id", m.agent_id},
           {"type", to_string(m.memory_type)},
           {"text", m.text},
           {"salience", m.salience},
           {"extraction_confidence", m.extraction_confidence}};
    if (m.schema_id) p["schema_id"] = *m.schema_id;
    return p;
}

Memory memory_from_payload(const json& p, std::uint64_t seq) {
    Memory m;
    m.id = p.at("id").get<std::string>();
    m.agent_id = p.at("agent_id").get<std::string>();
    m.memory_type = parse_memory_type(p.at("type").get<std::string>());
    m.text = p.at("text").get<std::string>();
    m.salience = p.at("salience").get<double>();
    m.extraction_confidence = std::clamp(p.at("extraction_confidence").get<double>(), 0.0, 1.0);
    m.created_at = seq;
    if (p.contains("schema_id")) m.schema_id = p.at("schema_id").get<std::string>();
    return m;
}

}  // namespace

void Projection::apply(const WriteEvent& ev) {
    if (ev.seq <= last_seq) throw InvalidArgument("event seq " + std::to_string(ev.seq) + " not increasing");
    switch (ev.kind) {
        case EventKind::Remember: {
            if (ev.payload.contains("deduped_against")) {
                ++deduped_writes;
                break;
            }
            Memory m = memory_from_payload(ev.payload, ev.seq);
            if (rows.contains(m.id)) throw InvalidArgument("duplicate memory id " + m.id);
            ++rows_per_agent[m.agent_id];
            rows.emplace(m.id, std::move(m));
            break;
        }
        case EventKind::Suppress: {
            auto it = rows.find(ev.payload.at("memory_id").get<std::string>());
            if (it != rows.end() && it->second.state == MemoryState::Active) {
                it->second.state = MemoryState::Suppressed;
                ++suppressions;
            }
            break;
        }
        case EventKind::Lifecycle:
            lifecycle.push_back(lifecycle_from_json(ev.payload));
            break;
    }
    last_seq = ev.seq;
    ++events_applied;
}

std::size_t Projection::active_rows() const {
    return static_cast<std::size_t>(
        std::count_if(rows.begin(), rows.end(), [](const auto& kv) { return kv.second.state == MemoryState::Active; }));
}

Projection replay(std::span<const WriteEvent> events) {
    Projection p;
    for (const auto& ev : events) p.apply(ev);
    return p;
}

Projection replay(const std::filesystem::path& log_path) {
    const auto events = read_event_log(log_path);
    return replay(std::span<const WriteEvent>(events));
}

// ---------------------------------------------------------------- VectorIndex

void VectorIndex::add(std::string id, std::string agent, Embedding vec) {
    if (by_id_.contains(id)) throw InvalidArgument("duplicate vector id " + id);
    by_id_.emplace(id, entries_.size());
    entries_.push_back({std::move(id), std::move(agent), std::move(vec), true});
}

void VectorIndex::deactivate(std::string_view id) {
    auto it = by_id_.find(std::string(id));
    if (it != by_id_.end()) entries_[it->second].active = false;
}

const Embedding* VectorIndex::find(std::string_view id) const {
    auto it = by_id_.find(std::string(id));
    return it == by_id_.end() ? nullptr : &entries_[it->second].vec;
}

std::vector<Neighbor> VectorIndex::nearest(const Embedding& q, std::size_t limit, const Scope& scope,
                                           std::uint64_t qseed, std::string_view exclude) const {
    struct Row {
        double cos;
        std::uint64_t tie;
        std::size_t idx;
    };
    std::vector<Row> rows;
    rows.reserve(entries_.size());
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        const auto& e = entries_[i];
        if (!e.active || !in_scope(scope, e.agent) || e.id == exclude) continue;
        rows.push_back({cosine(q, e.vec), tie_key(qseed, e.id), i});
    }
    auto cmp = [this](const Row& a, const Row& b) {
        if (a.cos != b.cos) return a.cos > b.cos;
        if (a.tie != b.tie) return a.tie < b.tie;
        return entries_[a.idx].id < entries_[b.idx].id;
    };
    const std::size_t m = std::min(limit, rows.size());
    std::partial_sort(rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(m), rows.end(), cmp);
    std::vector<Neighbor> out;
    out.reserve(m);
    for (std::size_t i = 0; i < m; ++i) out.push_back({entries_[rows[i].idx].id, rows[i].cos});
    return out;
}

std::optional<std::string> dedup_check(const VectorIndex& vectors, const Embedding& candidate,
                                       const Scope& writer_scope, const StorageConfig& cfg,
                                       const RowLookup& lookup) {
    const int pool = writer_scope ? cfg.dedup_pool_filtered : cfg.dedup_pool_unfiltered;
    for (const auto& n : vectors.nearest(candidate, static_cast<std::size_t>(pool), std::nullopt, 0)) {
        const Memory* row = lookup(n.id);
        if (row == nullptr || row->state != MemoryState::Active) continue;
        if (!in_scope(writer_scope, row->agent_id)) continue;
        if (n.cos >= cfg.write_dedup_threshold) return n.id;
    }
    return std::nullopt;
}

// ---------------------------------------------------------------- MemoryStore

MemoryStore::MemoryStore(std::shared_ptr<const Embedder> embedder, StorageConfig cfg,
                         std::optional<std::filesystem::path> log_path, bool sync)
    : embedder_(std::move(embedder)), cfg_(cfg) {
    if (!embedder_) throw InvalidArgument("store needs an embedder");
    cfg_.validate();
    if (log_path) {
        std::vector<WriteEvent> existing;
        if (std::filesystem::exists(*log_path)) existing = read_event_log(*log_path);
        log_ = std::make_unique<EventLog>(*log_path, sync);
        for (const auto& ev : existing) proj_.apply(ev);
        events_ = std::move(existing);
        mem_seq_ = proj_.last_seq;
        std::vector<const Memory*> ordered;
        for (const auto& [id, m] : proj_.rows) ordered.push_back(&m);
        std::sort(ordered.begin(), ordered.end(), [](auto* a, auto* b) { return a->created_at < b->created_at; });
        for (const Memory* m : ordered) {
            index_row(*m, embedder_->embed(m->text));
            if (m->state == MemoryState::Suppressed) {
                lexical_.deactivate(m->id);
                vectors_.deactivate(m->id);
            }
        }
    }
}

void MemoryStore::set_grant(Grant g) {
    std::unique_lock lock(mu_);
    grants_[g.actor] = std::move(g);
}

Scope MemoryStore::acl_scope(const std::string& actor) const {
    if (!cfg_.acl_enabled) return std::nullopt;
    std::shared_lock lock(mu_);
    auto it = grants_.find(actor);
    if (it == grants_.end()) throw PermissionError("no grant for actor '" + actor + "'");
    if (it->second.scope == GrantScope::All || it->second.federated) return std::nullopt;
    return AgentSet{actor, ""};
}

const Memory* MemoryStore::find(std::string_view id) const {
    auto it = proj_.rows.find(std::string(id));
    return it == proj_.rows.end() ? nullptr : &it->second;
}

std::vector<WriteEvent> MemoryStore::events() const {
    std::shared_lock lock(mu_);
    return events_;
}

LifecycleSnapshot MemoryStore::lifecycle_snapshot(int deprecate_quorum_k) const {
    return lifecycle_cache_.get(proj_.lifecycle, deprecate_quorum_k, ReducerMode::Lenient);
}

std::uint64_t MemoryStore::commit(WriteEvent ev) {
    if (log_) {
        log_->append(ev);
    } else {
        ev.seq = mem_seq_ + 1;
        ev.event_id = "e" + std::to_string(ev.seq);
    }
    mem_seq_ = ev.seq;
    proj_.apply(ev);
    events_.push_back(ev);
    return ev.seq;
}

void MemoryStore::index_row(const Memory& m, Embedding vec) {
    lexical_.add(m.id, m.agent_id, tokenize(m.text));
    vectors_.add(m.id, m.agent_id, std::move(vec));
}

WriteResult MemoryStore::remember(const WriteRequest& req) {
    if (req.text.empty()) throw InvalidArgument("remember: empty text");
    if ((req.memory_type == MemoryType::Schema) != req.schema_id.has_value()) {
        throw InvalidArgument("remember: schema_id must be set iff memory_type is SCHEMA");
    }
    const Scope scope = acl_scope(req.actor);
    Embedding vec = embedder_->embed(req.text);

    std::unique_lock lock(mu_);
    if (cfg_.write_dedup_enabled) {
        auto keeper = dedup_check(vectors_, vec, scope, cfg_, [this](std::string_view id) { return find(id); });
        if (keeper) {
            WriteEvent ev;
            ev.kind = EventKind::Remember;
            ev.payload = json{{"agent_id", req.actor}, {"text", req.text}, {"deduped_against", *keeper}};
            commit(std::move(ev));
            return {std::nullopt, keeper};
        }
    }
    Memory m;
    m.agent_id = req.actor;
    m.id = "m:" + req.actor + ":" + std::to_string(proj_.rows_per_agent[req.actor] + 1);
    m.memory_type = req.memory_type;
    m.text = req.text;
    m.salience = std::clamp(req.salience, 0.0, 1.0);
    m.extraction_confidence = std::clamp(req.extraction_confidence, 0.0, 1.0);
    m.schema_id = req.schema_id;
    WriteEvent ev;
    ev.kind = EventKind::Remember;
    ev.payload = memory_payload(m);
    const auto seq = commit(std::move(ev));
    const Memory& row = proj_.rows.at(m.id);
    index_row(row, std::move(vec));
    Memory out = row;
    out.created_at = seq;
    return {out, std::nullopt};
}

MergeReport MemoryStore::mechanical_merge_pass() {
    std::unique_lock lock(mu_);
    std::vector<const Memory*> ordered;
    for (const auto& [id, m] : proj_.rows) {
        if (m.state == MemoryState::Active) ordered.push_back(&m);
    }
    std::sort(ordered.begin(), ordered.end(), [](auto* a, auto* b) { return a->created_at < b->created_at; });

    MergeReport report;
    auto suppress = [&](const Memory& loser, const Memory& keeper) {
        WriteEvent ev;
        ev.kind = EventKind::Suppress;
        ev.payload = json{{"memory_id", loser.id}, {"keeper", keeper.id}, {"reason", "merge"}};
        commit(std::move(ev));
        lexical_.deactivate(loser.id);
        vectors_.deactivate(loser.id);
        ++report.suppressed;
    };
    for (const Memory* m : ordered) {
        if (m->state != MemoryState::Active) continue;
        const Embedding* v = vectors_.find(m->id);
        if (v == nullptr) continue;
        const auto neighbours = vectors_.nearest(*v, static_cast<std::size_t>(cfg_.merge_pool), std::nullopt, 0, m->id);
        for (const auto& n : neighbours) {
            if (n.cos < cfg_.merge_threshold) break;
            const Memory* other = find(n.id);
            if (other == nullptr || other->state != MemoryState::Active) continue;
            if (other->agent_id != m->agent_id) continue;
            bool m_loses;
            if (m->salience != other->salience) {
                m_loses = m->salience < other->salience;
            } else {
                m_loses = m->created_at > other->created_at;
            }
            if (m_loses) {
                suppress(*m, *other);
                break;
            }
            suppress(*other, *m);
        }
    }
    return report;
}

std::vector<Memory> MemoryStore::synthesize_facts(const std::vector<std::string>& episode_ids, double confidence) {
    std::unique_lock lock(mu_);
    std::vector<Memory> out;
    for (const auto& eid : episode_ids) {
        const Memory* ep = find(eid);
        if (ep == nullptr) throw InvalidArgument("synthesize_facts: unknown memory " + eid);
        if (ep->memory_type != MemoryType::Episode) throw InvalidArgument("synthesize_facts: " + eid + " is not an episode");
        Memory f;
        f.agent_id = ep->agent_id;
        f.id = "m:" + f.agent_id + ":" + std::to_string(proj_.rows_per_agent[f.agent_id] + 1);
        f.memory_type = MemoryType::Fact;
        f.text = ep->text;
        f.salience = ep->salience;
        f.extraction_confidence = std::clamp(confidence, 0.0, 1.0);
        WriteEvent ev;
        ev.kind = EventKind::Remember;
        ev.payload = memory_payload(f);
        ev.payload["source"] = eid;
        commit(std::move(ev));
        const Memory& row = proj_.rows.at(f.id);
        index_row(row, embedder_->embed(row.text));
        out.push_back(row);
    }
    return out;
}

std::uint64_t MemoryStore::append_lifecycle(const LifecycleEvent& lev) {
    std::unique_lock lock(mu_);
    WriteEvent ev;
    ev.kind = EventKind::Lifecycle;
    ev.payload = lifecycle_to_json(lev);
    return commit(std::move(ev));
}

}  // namespace ecol
