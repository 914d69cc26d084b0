#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "byoc/classifier.hpp"
#include "byoc/evalharness.hpp"
#include "byoc/llm.hpp"

namespace byoc::store {

enum class Kind { artifact, session, report, transcript };
const char* to_string(Kind kind);

inline constexpr int kSchemaVersion = 1;

struct RecordInfo {
    std::string id;
    std::string name;
    Kind kind = Kind::artifact;
    std::int64_t created_at_ms = 0;
    std::uint64_t sequence = 0;
    int schema_version = kSchemaVersion;
};

/// Directory of schema-versioned JSON records, one file per record, written
/// via temp file + rename. Safe for concurrent readers; one writer per id.
class Store {
public:
    using Clock = std::function<std::int64_t()>;

    explicit Store(std::filesystem::path root, Clock clock = {});

    const std::filesystem::path& root() const noexcept { return root_; }

    /// Id is the slugified artifact name. Throws conflict when it exists and
    /// `replace` is false.
    std::string save(const classifier::ClassifierArtifact& artifact, bool replace = false);
    classifier::ClassifierArtifact load_artifact(const std::string& id) const;

    std::string save_session(const std::string& id, const std::string& checkpoint);
    std::string load_session(const std::string& id) const;
    std::string new_session_id() const;

    std::string save(const evalharness::EvalReport& report, const std::string& id, bool replace = false);
    evalharness::EvalReport load_report(const std::string& id) const;
    std::string new_report_id() const;

    void save_transcript(const std::string& id, const llm::Transcript& transcript);
    llm::Transcript load_transcript(const std::string& id) const;

    bool exists(Kind kind, const std::string& id) const;
    /// Newest first.
    std::vector<RecordInfo> list(Kind kind) const;

    /// The serialized payload exactly as stored. Throws not_found / migration.
    std::string payload(Kind kind, const std::string& id) const;

    /// Writes a raw payload under a new envelope (used by import).
    std::string put(Kind kind, const std::string& id, const std::string& name, const std::string& payload_json,
                    bool replace);

private:
    std::filesystem::path path_for(Kind kind, const std::string& id) const;
    std::string read_envelope(Kind kind, const std::string& id) const;

    std::filesystem::path root_;
    Clock clock_;
};

/// Lowercase ASCII letters, digits and dashes.
std::string slugify(std::string_view name);

/// Artifact wire format, shared by the store, export/import and the HTTP API.
std::string artifact_to_json(const classifier::ClassifierArtifact& artifact);
classifier::ClassifierArtifact artifact_from_json(std::string_view text);

std::string report_to_json(const evalharness::EvalReport& report);
evalharness::EvalReport report_from_json(std::string_view text);

}  // namespace byoc::store
