#include <fcntl.h>
#include <sys/file.h>
#include <sys/stat.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <fstream>

#include "ecol/errors.hpp"
#include "ecol/store.hpp"

namespace ecol {

using nlohmann::json;

std::string_view to_string(EventKind k) {
    switch (k) {
        case EventKind::Remember: return "REMEMBER";
        case EventKind::Suppress: return "SUPPRESS";
        case EventKind::Lifecycle: return "LIFECYCLE";
    }
    return "?";
}

namespace {
EventKind parse_kind(std::string_view s) {
    if (s == "REMEMBER") return EventKind::Remember;
    if (s == "SUPPRESS") return EventKind::Suppress;
    if (s == "LIFECYCLE") return EventKind::Lifecycle;
    throw InvalidArgument("unknown event kind " + std::string(s));
}

std::string event_id_for(std::uint64_t seq) { return "e" + std::to_string(seq); }
}  // namespace

json event_to_json(const WriteEvent& ev) {
    return json{{"seq", ev.seq}, {"event_id", ev.event_id}, {"kind", to_string(ev.kind)}, {"payload", ev.payload}};
}

WriteEvent event_from_json(const json& j) {
    WriteEvent ev;
    ev.seq = j.at("seq").get<std::uint64_t>();
    ev.kind = parse_kind(j.at("kind").get<std::string>());
    ev.payload = j.at("payload");
    ev.event_id = j.contains("event_id") ? j.at("event_id").get<std::string>() : event_id_for(ev.seq);
    return ev;
}

json lifecycle_to_json(const LifecycleEvent& ev) {
    json j{{"schema_id", ev.schema_id}, {"action", to_string(ev.action)}, {"window_id", ev.window_id}};
    if (ev.emitter_id) j["emitter_id"] = *ev.emitter_id;
    return j;
}

LifecycleEvent lifecycle_from_json(const json& j) {
    LifecycleEvent ev;
    ev.schema_id = j.at("schema_id").get<std::string>();
    ev.action = parse_action(j.at("action").get<std::string>());
    ev.window_id = j.value("window_id", std::string{});
    if (j.contains("emitter_id") && !j.at("emitter_id").is_null()) ev.emitter_id = j.at("emitter_id").get<std::string>();
    return ev;
}

// ---------------------------------------------------------------- EventLog

namespace {

class FileLock {
public:
    explicit FileLock(int fd) : fd_(fd) {
        int rc;
        do {
            rc = ::flock(fd_, LOCK_EX);
        } while (rc != 0 && errno == EINTR);
        if (rc != 0) throw LockError(std::string("flock failed: ") + std::strerror(errno));
    }
    ~FileLock() { ::flock(fd_, LOCK_UN); }
    FileLock(const FileLock&) = delete;
    FileLock& operator=(const FileLock&) = delete;

private:
    int fd_;
};

}  // namespace

EventLog::EventLog(const std::filesystem::path& path, bool sync) : path_(path), sync_(sync) {
    {
        std::ifstream in(path, std::ios::binary);
        if (in) {
            std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
            std::size_t start = 0;
            while (start < content.size()) {
                const auto nl = content.find('\n', start);
                if (nl == std::string::npos) throw TornRecordError(path.string(), start);
                const std::string_view line(content.data() + start, nl - start);
                if (!line.empty()) {
                    try {
                        const auto ev = event_from_json(json::parse(line));
                        if (ev.seq <= last_seq_) throw TornRecordError(path.string(), start);
                        last_seq_ = ev.seq;
                    } catch (const TornRecordError&) {
                        throw;
                    } catch (const std::exception&) {
                        throw TornRecordError(path.string(), start);
                    }
                }
                start = nl + 1;
            }
        }
    }
    fd_ = ::open(path.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
    if (fd_ < 0) throw std::runtime_error("cannot open event log " + path.string() + ": " + std::strerror(errno));
}

EventLog::~EventLog() {
    if (fd_ >= 0) ::close(fd_);
}

std::uint64_t EventLog::append(WriteEvent& ev) {
    std::lock_guard guard(mu_);
    FileLock lock(fd_);
    ev.seq = last_seq_ + 1;
    ev.event_id = event_id_for(ev.seq);
    const std::string line = event_to_json(ev).dump() + "\n";
    std::size_t done = 0;
    while (done < line.size()) {
        const ssize_t n = ::write(fd_, line.data() + done, line.size() - done);
        if (n < 0) {
            if (errno == EINTR) continue;
            throw std::runtime_error(std::string("event log write failed: ") + std::strerror(errno));
        }
        done += static_cast<std::size_t>(n);
    }
    if (sync_ && ::fdatasync(fd_) != 0) {
        throw std::runtime_error(std::string("event log sync failed: ") + std::strerror(errno));
    }
    last_seq_ = ev.seq;
    return ev.seq;
}

std::uint64_t EventLog::last_seq() const {
    std::lock_guard guard(mu_);
    return last_seq_;
}

std::vector<WriteEvent> read_event_log(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open event log " + path.string());
    std::vector<WriteEvent> out;
    std::string line;
    std::size_t lineno = 0;
    std::uint64_t prev = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            out.push_back(event_from_json(json::parse(line)));
        } catch (const std::exception& e) {
            throw ParseError(lineno, e.what());
        }
        if (out.back().seq <= prev) throw ParseError(lineno, "seq not strictly increasing");
        prev = out.back().seq;
    }
    return out;
}

}  // namespace ecol
