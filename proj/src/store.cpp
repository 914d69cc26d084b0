#include "byoc/store.hpp"

#include <algorithm>
#include <cctype>
#include <iomanip>
#include <chrono>
#include <fstream>
#include <mutex>
#include <random>
#include <sstream>
#include <unistd.h>

#include <json.hpp>

#include "byoc/error.hpp"
#include "byoc/serialize.hpp"

namespace byoc::store {

namespace fs = std::filesystem;
using nlohmann::json;

const char* to_string(Kind kind) {
    switch (kind) {
        case Kind::artifact: return "artifact";
        case Kind::session: return "session";
        case Kind::report: return "report";
        case Kind::transcript: return "transcript";
    }
    return "artifact";
}

namespace {

const char* dir_name(Kind kind) {
    switch (kind) {
        case Kind::artifact: return "artifacts";
        case Kind::session: return "sessions";
        case Kind::report: return "reports";
        case Kind::transcript: return "transcripts";
    }
    return "artifacts";
}

std::mutex& write_mutex() {
    static std::mutex mu;
    return mu;
}

std::int64_t wall_clock_ms() {
    return std::chrono::duration_cast<std::chrono::milliseconds>(
               std::chrono::system_clock::now().time_since_epoch())
        .count();
}

void check_id(const std::string& id) {
    const bool ok = !id.empty() && id.size() <= 128 && id.front() != '.' &&
                    std::all_of(id.begin(), id.end(), [](unsigned char c) {
                        return std::isalnum(c) || c == '-' || c == '_' || c == '.';
                    });
    if (!ok) throw Error(ErrorCode::validation, "invalid record id '" + id + "'", {{"id", id}});
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw Error(ErrorCode::io, "cannot read " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_atomic(const fs::path& p, const std::string& data) {
    const fs::path tmp = p.parent_path() / ("." + p.filename().string() + ".tmp" + std::to_string(::getpid()));
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorCode::io, "cannot write " + tmp.string());
        out << data;
        out.flush();
        if (!out) throw Error(ErrorCode::io, "short write to " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, p, ec);
    if (ec) {
        fs::remove(tmp, ec);
        throw Error(ErrorCode::io, "cannot rename into " + p.string());
    }
}

json parse_envelope(const std::string& text, const fs::path& p) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::io, "corrupt record " + p.string() + ": " + e.what());
    }
}

std::string random_id(const char* prefix) {
    static std::mutex mu;
    static std::mt19937_64 rng{std::random_device{}()};
    std::lock_guard lock(mu);
    std::ostringstream ss;
    ss << prefix << std::hex << std::setfill('0') << std::setw(16) << rng();
    return ss.str();
}

}  // namespace

Store::Store(fs::path root, Clock clock) : root_(std::move(root)), clock_(std::move(clock)) {
    if (!clock_) clock_ = wall_clock_ms;
    std::error_code ec;
    for (auto k : {Kind::artifact, Kind::session, Kind::report, Kind::transcript}) {
        fs::create_directories(root_ / dir_name(k), ec);
        if (ec) throw Error(ErrorCode::io, "cannot create store directory " + (root_ / dir_name(k)).string());
    }
}

fs::path Store::path_for(Kind kind, const std::string& id) const {
    check_id(id);
    return root_ / dir_name(kind) / (id + ".json");
}

bool Store::exists(Kind kind, const std::string& id) const { return fs::exists(path_for(kind, id)); }

std::string Store::put(Kind kind, const std::string& id, const std::string& name, const std::string& payload_json,
                       bool replace) {
    const fs::path p = path_for(kind, id);
    json payload;
    try {
        payload = json::parse(payload_json);
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::validation, std::string("payload is not valid JSON: ") + e.what());
    }

    std::lock_guard lock(write_mutex());
    if (!replace && fs::exists(p)) {
        throw Error(ErrorCode::conflict, std::string(to_string(kind)) + " '" + id + "' already exists",
                    {{"id", id}});
    }
    std::uint64_t sequence = 0;
    for (const auto& info : list(kind)) sequence = std::max(sequence, info.sequence);

    json env;
    env["schema_version"] = kSchemaVersion;
    env["kind"] = to_string(kind);
    env["id"] = id;
    env["name"] = name;
    env["created_at_ms"] = clock_();
    env["sequence"] = sequence + 1;
    env["payload"] = std::move(payload);
    write_atomic(p, env.dump(2) + "\n");
    return id;
}

std::string Store::read_envelope(Kind kind, const std::string& id) const {
    const fs::path p = path_for(kind, id);
    if (!fs::exists(p)) {
        throw Error(ErrorCode::not_found, std::string(to_string(kind)) + " '" + id + "' not found", {{"id", id}});
    }
    return read_file(p);
}

std::string Store::payload(Kind kind, const std::string& id) const {
    const fs::path p = path_for(kind, id);
    const json env = parse_envelope(read_envelope(kind, id), p);
    const int version = env.value("schema_version", 0);
    if (version != kSchemaVersion) {
        throw Error(ErrorCode::migration,
                    std::string(to_string(kind)) + " '" + id + "' has schema version " + std::to_string(version) +
                        "; this build reads version " + std::to_string(kSchemaVersion),
                    {{"found", std::to_string(version)}, {"expected", std::to_string(kSchemaVersion)}});
    }
    if (!env.contains("payload")) throw Error(ErrorCode::io, "record " + p.string() + " has no payload");
    return env["payload"].dump(2);
}

std::vector<RecordInfo> Store::list(Kind kind) const {
    std::vector<RecordInfo> out;
    std::error_code ec;
    for (const auto& entry : fs::directory_iterator(root_ / dir_name(kind), ec)) {
        const auto name = entry.path().filename().string();
        if (name.empty() || name.front() == '.' || entry.path().extension() != ".json") continue;
        json env;
        try {
            env = json::parse(read_file(entry.path()));
        } catch (const std::exception&) {
            continue;
        }
        RecordInfo info;
        info.id = env.value("id", entry.path().stem().string());
        info.name = env.value("name", info.id);
        info.kind = kind;
        info.created_at_ms = env.value("created_at_ms", std::int64_t{0});
        info.sequence = env.value("sequence", std::uint64_t{0});
        info.schema_version = env.value("schema_version", 0);
        out.push_back(std::move(info));
    }
    std::sort(out.begin(), out.end(), [](const RecordInfo& a, const RecordInfo& b) {
        if (a.created_at_ms != b.created_at_ms) return a.created_at_ms > b.created_at_ms;
        if (a.sequence != b.sequence) return a.sequence > b.sequence;
        return a.id < b.id;
    });
    return out;
}

std::string Store::save(const classifier::ClassifierArtifact& artifact, bool replace) {
    artifact.spec.validate();
    const std::string id = slugify(artifact.name);
    if (id.empty()) throw Error(ErrorCode::validation, "artifact name '" + artifact.name + "' has no usable characters");
    return put(Kind::artifact, id, artifact.name, artifact_to_json(artifact), replace);
}

classifier::ClassifierArtifact Store::load_artifact(const std::string& id) const {
    return artifact_from_json(payload(Kind::artifact, id));
}

std::string Store::save_session(const std::string& id, const std::string& checkpoint) {
    return put(Kind::session, id, id, checkpoint, true);
}

std::string Store::load_session(const std::string& id) const { return payload(Kind::session, id); }

std::string Store::new_session_id() const {
    for (;;) {
        auto id = random_id("s-");
        if (!exists(Kind::session, id)) return id;
    }
}

std::string Store::save(const evalharness::EvalReport& report, const std::string& id, bool replace) {
    return put(Kind::report, id, classifier::to_string(report.method), report_to_json(report), replace);
}

evalharness::EvalReport Store::load_report(const std::string& id) const {
    return report_from_json(payload(Kind::report, id));
}

std::string Store::new_report_id() const {
    for (;;) {
        auto id = random_id("r-");
        if (!exists(Kind::report, id)) return id;
    }
}

void Store::save_transcript(const std::string& id, const llm::Transcript& transcript) {
    json arr = json::array();
    std::istringstream lines(transcript.to_jsonl());
    for (std::string line; std::getline(lines, line);) {
        if (!line.empty()) arr.push_back(json::parse(line));
    }
    put(Kind::transcript, id, id, arr.dump(), true);
}

llm::Transcript Store::load_transcript(const std::string& id) const {
    const json arr = json::parse(payload(Kind::transcript, id));
    std::string jsonl;
    for (const auto& e : arr) jsonl += e.dump() + "\n";
    return llm::Transcript::from_jsonl(jsonl);
}

std::string slugify(std::string_view name) {
    std::string out;
    bool dash = false;
    for (unsigned char c : name) {
        if (std::isalnum(c) && c < 0x80) {
            if (dash && !out.empty()) out += '-';
            dash = false;
            out += static_cast<char>(std::tolower(c));
        } else {
            dash = true;
        }
    }
    return out;
}

std::string artifact_to_json(const classifier::ClassifierArtifact& artifact) {
    return json(artifact).dump(2);
}

classifier::ClassifierArtifact artifact_from_json(std::string_view text) {
    try {
        auto a = json::parse(text).get<classifier::ClassifierArtifact>();
        a.spec.validate();
        return a;
    } catch (const json::exception& e) {
        throw Error(ErrorCode::validation, std::string("malformed classifier artifact: ") + e.what());
    }
}

std::string report_to_json(const evalharness::EvalReport& report) { return json(report).dump(2); }

evalharness::EvalReport report_from_json(std::string_view text) {
    try {
        return json::parse(text).get<evalharness::EvalReport>();
    } catch (const json::exception& e) {
        throw Error(ErrorCode::validation, std::string("malformed evaluation report: ") + e.what());
    }
}

}  // namespace byoc::store
