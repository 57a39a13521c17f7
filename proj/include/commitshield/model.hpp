// Domain types shared by every stage of the analysis pipeline.
#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace commitshield {

using json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;

/// Base of every error thrown by this library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class MalformedSha : public Error {
public:
    using Error::Error;
};

class MalformedSlug : public Error {
public:
    using Error::Error;
};

/// Raised when a JSON document does not match the expected shape.
class SchemaError : public Error {
public:
    explicit SchemaError(const std::string& what, int line = 0)
        : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what)
        , m_line(line)
    {
    }
    int line() const { return m_line; }

private:
    int m_line;
};

struct CommitRef {
    std::string repo_slug;
    std::string sha;
    std::optional<std::string> web_url;

    /// "owner/name@sha"
    std::string display() const { return repo_slug + "@" + sha; }

    friend bool operator==(const CommitRef& a, const CommitRef& b)
    {
        return a.repo_slug == b.repo_slug && a.sha == b.sha;
    }
};

/// Normalizes (lowercases) the sha and validates both halves.
CommitRef validate_commit_ref(std::string_view slug, std::string_view sha);

/// Same repository and one sha is a prefix of the other (abbreviated shas).
bool same_commit(const CommitRef& a, const CommitRef& b);

enum class Language { c, cpp, other };

Language detect_language(std::string_view path);
bool is_c_family(Language lang);

enum class LineKind { context, added, deleted };

struct LineChange {
    LineKind kind = LineKind::context;
    std::string text;
    std::optional<int> old_lineno;
    std::optional<int> new_lineno;
    // "\ No newline at end of file" followed this line.
    bool no_newline_at_eof = false;

    friend bool operator==(const LineChange&, const LineChange&) = default;
};

struct Hunk {
    int old_start = 0;
    int old_len = 0;
    int new_start = 0;
    int new_len = 0;
    // Text after the closing "@@" (usually the enclosing function heading).
    std::string section;
    std::vector<LineChange> lines;

    /// Number of added plus deleted lines.
    int changed_line_count() const;

    friend bool operator==(const Hunk&, const Hunk&) = default;
};

enum class FileStatus { added, deleted, modified, renamed };

struct FileDiff {
    std::optional<std::string> old_path;
    std::optional<std::string> new_path;
    FileStatus status = FileStatus::modified;
    std::vector<Hunk> hunks;
    Language language = Language::other;
    bool binary = false;

    /// New path when present, otherwise the old one.
    const std::string& path() const;
};

struct ReferencedItem {
    int number = 0;
    std::string title;
    std::string body;
};

struct AttachmentBundle {
    std::vector<ReferencedItem> issues;
    std::vector<ReferencedItem> pull_requests;
    std::vector<std::string> comments;
    // Cross-repository references and URLs found in the message, kept verbatim.
    std::vector<std::string> unresolved_references;

    bool empty() const
    {
        return issues.empty() && pull_requests.empty() && comments.empty() && unresolved_references.empty();
    }
};

struct CommitRecord {
    CommitRef ref;
    std::vector<CommitRef> parents;
    std::string message;
    std::int64_t author_date = 0; // UTC seconds
    std::vector<FileDiff> diffs;
    AttachmentBundle attachments;
};

/// How far a patch is widened before it is shown to the model.
/// x below small_threshold extends by x, x in [small, large] by floor(x/2),
/// anything above large_threshold is not extended.
struct ContextExtensionPolicy {
    int small_threshold = 10;
    int large_threshold = 30;

    int extension(int changed_lines) const;
    void validate() const;
};

/// Line-number presence matrix for one line.
bool satisfies_invariants(const LineChange& line);
/// Length counts and per-line presence for a hunk.
bool satisfies_invariants(const Hunk& hunk);
/// Path/status agreement plus every hunk.
bool satisfies_invariants(const FileDiff& diff);

std::int64_t parse_iso8601_utc(std::string_view text);
std::string format_iso8601_utc(std::int64_t seconds);

std::string to_string(Language lang);
std::string to_string(LineKind kind);
std::string to_string(FileStatus status);
Language language_from_string(std::string_view text);
FileStatus file_status_from_string(std::string_view text);

void to_json(json& j, const CommitRef& v);
void from_json(const json& j, CommitRef& v);
void to_json(json& j, const LineChange& v);
void from_json(const json& j, LineChange& v);
void to_json(json& j, const Hunk& v);
void from_json(const json& j, Hunk& v);
void to_json(json& j, const FileDiff& v);
void from_json(const json& j, FileDiff& v);
void to_json(json& j, const ReferencedItem& v);
void from_json(const json& j, ReferencedItem& v);
void to_json(json& j, const AttachmentBundle& v);
void from_json(const json& j, AttachmentBundle& v);
void to_json(json& j, const CommitRecord& v);
void from_json(const json& j, CommitRecord& v);
void to_json(json& j, const ContextExtensionPolicy& v);
void from_json(const json& j, ContextExtensionPolicy& v);

/// Wraps a document with the top-level "schema_version" field.
json versioned(json document);
/// Throws SchemaError unless the document carries the supported schema version.
void check_schema_version(const json& document);

} // namespace commitshield
