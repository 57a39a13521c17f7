#include "commitshield/model.hpp"

#include <algorithm>
#include <cctype>
#include <ctime>

#include "json_util.hpp"

namespace commitshield {

using detail::optional_from_json;
using detail::optional_to_json;
using detail::required;
using detail::value_or;

namespace {

bool is_lower_hex(char c)
{
    return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f');
}

std::string lowercase(std::string_view text)
{
    std::string out(text);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
    return out;
}

bool ends_with(std::string_view text, std::string_view suffix)
{
    return text.size() >= suffix.size() && text.substr(text.size() - suffix.size()) == suffix;
}

} // namespace

CommitRef validate_commit_ref(std::string_view slug, std::string_view sha)
{
    auto slash = slug.find('/');
    if (slash == std::string_view::npos || slash == 0 || slash + 1 == slug.size()
        || slug.find('/', slash + 1) != std::string_view::npos)
        throw MalformedSlug("repository slug must look like owner/name: \"" + std::string(slug) + "\"");
    for (char c : slug) {
        if (std::isspace(static_cast<unsigned char>(c)))
            throw MalformedSlug("repository slug contains whitespace: \"" + std::string(slug) + "\"");
    }

    std::string normalized = lowercase(sha);
    if (normalized.size() < 7 || normalized.size() > 40)
        throw MalformedSha("sha must be 7 to 40 hex characters: \"" + std::string(sha) + "\"");
    if (!std::all_of(normalized.begin(), normalized.end(), is_lower_hex))
        throw MalformedSha("sha is not hexadecimal: \"" + std::string(sha) + "\"");

    return CommitRef { std::string(slug), normalized, std::nullopt };
}

bool same_commit(const CommitRef& a, const CommitRef& b)
{
    if (a.repo_slug != b.repo_slug || a.sha.empty() || b.sha.empty())
        return false;
    auto n = std::min(a.sha.size(), b.sha.size());
    return a.sha.compare(0, n, b.sha, 0, n) == 0;
}

Language detect_language(std::string_view path)
{
    auto dot = path.rfind('.');
    auto slash = path.rfind('/');
    if (dot == std::string_view::npos || (slash != std::string_view::npos && dot < slash))
        return Language::other;
    std::string ext = lowercase(path.substr(dot));
    // .C and .H are C++ by convention; lowercase() folds them, so check the raw suffix first.
    if (ends_with(path, ".C") || ends_with(path, ".H"))
        return Language::cpp;
    if (ext == ".c" || ext == ".h")
        return Language::c;
    if (ext == ".cc" || ext == ".cpp" || ext == ".cxx" || ext == ".hpp" || ext == ".hh" || ext == ".hxx" || ext == ".c++")
        return Language::cpp;
    return Language::other;
}

bool is_c_family(Language lang)
{
    return lang == Language::c || lang == Language::cpp;
}

int Hunk::changed_line_count() const
{
    return static_cast<int>(std::count_if(lines.begin(), lines.end(),
        [](const LineChange& l) { return l.kind != LineKind::context; }));
}

const std::string& FileDiff::path() const
{
    static const std::string empty;
    if (new_path)
        return *new_path;
    if (old_path)
        return *old_path;
    return empty;
}

int ContextExtensionPolicy::extension(int changed_lines) const
{
    if (changed_lines < small_threshold)
        return std::max(changed_lines, 0);
    if (changed_lines <= large_threshold)
        return changed_lines / 2;
    return 0;
}

void ContextExtensionPolicy::validate() const
{
    if (small_threshold <= 0 || small_threshold >= large_threshold)
        throw Error("context extension thresholds must satisfy 0 < small < large");
}

bool satisfies_invariants(const LineChange& line)
{
    switch (line.kind) {
    case LineKind::added:
        return !line.old_lineno && line.new_lineno;
    case LineKind::deleted:
        return line.old_lineno && !line.new_lineno;
    case LineKind::context:
        return line.old_lineno && line.new_lineno;
    }
    return false;
}

bool satisfies_invariants(const Hunk& hunk)
{
    if (hunk.old_start < 0 || hunk.old_len < 0 || hunk.new_start < 0 || hunk.new_len < 0)
        return false;
    int old_count = 0;
    int new_count = 0;
    for (const auto& line : hunk.lines) {
        if (!satisfies_invariants(line))
            return false;
        if (line.kind != LineKind::added)
            ++old_count;
        if (line.kind != LineKind::deleted)
            ++new_count;
    }
    return old_count == hunk.old_len && new_count == hunk.new_len;
}

bool satisfies_invariants(const FileDiff& diff)
{
    switch (diff.status) {
    case FileStatus::added:
        if (diff.old_path || !diff.new_path)
            return false;
        break;
    case FileStatus::deleted:
        if (diff.new_path || !diff.old_path)
            return false;
        break;
    case FileStatus::renamed:
        if (!diff.old_path || !diff.new_path || *diff.old_path == *diff.new_path)
            return false;
        break;
    case FileStatus::modified:
        if (!diff.old_path && !diff.new_path)
            return false;
        break;
    }
    if (diff.path().empty())
        return false;
    return std::all_of(diff.hunks.begin(), diff.hunks.end(), [](const Hunk& h) { return satisfies_invariants(h); });
}

std::int64_t parse_iso8601_utc(std::string_view text)
{
    std::tm tm {};
    int offset_sign = 0;
    int offset_h = 0;
    int offset_m = 0;
    std::string s(text);
    char tail[8] = {};
    int n = std::sscanf(s.c_str(), "%4d-%2d-%2dT%2d:%2d:%2d%7s", &tm.tm_year, &tm.tm_mon, &tm.tm_mday, &tm.tm_hour,
        &tm.tm_min, &tm.tm_sec, tail);
    if (n < 6)
        throw Error("not an ISO-8601 timestamp: \"" + s + "\"");
    std::string_view rest(tail);
    if (!rest.empty() && rest[0] != 'Z') {
        if ((rest[0] == '+' || rest[0] == '-') && std::sscanf(tail + 1, "%2d:%2d", &offset_h, &offset_m) == 2)
            offset_sign = rest[0] == '+' ? 1 : -1;
        else
            throw Error("bad timezone in timestamp: \"" + s + "\"");
    }
    tm.tm_year -= 1900;
    tm.tm_mon -= 1;
    std::int64_t seconds = timegm(&tm);
    return seconds - offset_sign * (offset_h * 3600 + offset_m * 60);
}

std::string format_iso8601_utc(std::int64_t seconds)
{
    std::time_t t = static_cast<std::time_t>(seconds);
    std::tm tm {};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string to_string(Language lang)
{
    switch (lang) {
    case Language::c:
        return "c";
    case Language::cpp:
        return "cpp";
    case Language::other:
        return "other";
    }
    return "other";
}

std::string to_string(LineKind kind)
{
    switch (kind) {
    case LineKind::context:
        return "context";
    case LineKind::added:
        return "added";
    case LineKind::deleted:
        return "deleted";
    }
    return "context";
}

std::string to_string(FileStatus status)
{
    switch (status) {
    case FileStatus::added:
        return "added";
    case FileStatus::deleted:
        return "deleted";
    case FileStatus::modified:
        return "modified";
    case FileStatus::renamed:
        return "renamed";
    }
    return "modified";
}

Language language_from_string(std::string_view text)
{
    if (text == "c")
        return Language::c;
    if (text == "cpp")
        return Language::cpp;
    if (text == "other")
        return Language::other;
    throw SchemaError("unknown language \"" + std::string(text) + "\"");
}

static LineKind line_kind_from_string(std::string_view text)
{
    if (text == "context")
        return LineKind::context;
    if (text == "added")
        return LineKind::added;
    if (text == "deleted")
        return LineKind::deleted;
    throw SchemaError("unknown line kind \"" + std::string(text) + "\"");
}

FileStatus file_status_from_string(std::string_view text)
{
    if (text == "added")
        return FileStatus::added;
    if (text == "deleted" || text == "removed")
        return FileStatus::deleted;
    if (text == "modified" || text == "changed")
        return FileStatus::modified;
    if (text == "renamed")
        return FileStatus::renamed;
    throw SchemaError("unknown file status \"" + std::string(text) + "\"");
}

void to_json(json& j, const CommitRef& v)
{
    j = json { { "repo_slug", v.repo_slug }, { "sha", v.sha }, { "web_url", optional_to_json(v.web_url) } };
}

void from_json(const json& j, CommitRef& v)
{
    v = validate_commit_ref(required<std::string>(j, "repo_slug"), required<std::string>(j, "sha"));
    v.web_url = optional_from_json<std::string>(j, "web_url");
}

void to_json(json& j, const LineChange& v)
{
    j = json {
        { "kind", to_string(v.kind) },
        { "text", v.text },
        { "old_lineno", optional_to_json(v.old_lineno) },
        { "new_lineno", optional_to_json(v.new_lineno) },
    };
    if (v.no_newline_at_eof)
        j["no_newline_at_eof"] = true;
}

void from_json(const json& j, LineChange& v)
{
    v.kind = line_kind_from_string(required<std::string>(j, "kind"));
    v.text = required<std::string>(j, "text");
    v.old_lineno = optional_from_json<int>(j, "old_lineno");
    v.new_lineno = optional_from_json<int>(j, "new_lineno");
    v.no_newline_at_eof = value_or(j, "no_newline_at_eof", false);
}

void to_json(json& j, const Hunk& v)
{
    j = json {
        { "old_start", v.old_start },
        { "old_len", v.old_len },
        { "new_start", v.new_start },
        { "new_len", v.new_len },
        { "section", v.section },
        { "lines", v.lines },
    };
}

void from_json(const json& j, Hunk& v)
{
    v.old_start = required<int>(j, "old_start");
    v.old_len = required<int>(j, "old_len");
    v.new_start = required<int>(j, "new_start");
    v.new_len = required<int>(j, "new_len");
    v.section = value_or<std::string>(j, "section", "");
    v.lines = value_or<std::vector<LineChange>>(j, "lines", {});
}

void to_json(json& j, const FileDiff& v)
{
    j = json {
        { "old_path", optional_to_json(v.old_path) },
        { "new_path", optional_to_json(v.new_path) },
        { "status", to_string(v.status) },
        { "hunks", v.hunks },
        { "language", to_string(v.language) },
    };
    if (v.binary)
        j["binary"] = true;
}

void from_json(const json& j, FileDiff& v)
{
    v.old_path = optional_from_json<std::string>(j, "old_path");
    v.new_path = optional_from_json<std::string>(j, "new_path");
    v.status = file_status_from_string(required<std::string>(j, "status"));
    v.hunks = value_or<std::vector<Hunk>>(j, "hunks", {});
    v.language = language_from_string(value_or<std::string>(j, "language", to_string(detect_language(v.path()))));
    v.binary = value_or(j, "binary", false);
}

void to_json(json& j, const ReferencedItem& v)
{
    j = json { { "number", v.number }, { "title", v.title }, { "body", v.body } };
}

void from_json(const json& j, ReferencedItem& v)
{
    v.number = required<int>(j, "number");
    if (v.number <= 0)
        throw SchemaError("reference numbers must be positive");
    v.title = value_or<std::string>(j, "title", "");
    v.body = value_or<std::string>(j, "body", "");
}

void to_json(json& j, const AttachmentBundle& v)
{
    j = json {
        { "issues", v.issues },
        { "pull_requests", v.pull_requests },
        { "comments", v.comments },
        { "unresolved_references", v.unresolved_references },
    };
}

void from_json(const json& j, AttachmentBundle& v)
{
    v.issues = value_or<std::vector<ReferencedItem>>(j, "issues", {});
    v.pull_requests = value_or<std::vector<ReferencedItem>>(j, "pull_requests", {});
    v.comments = value_or<std::vector<std::string>>(j, "comments", {});
    v.unresolved_references = value_or<std::vector<std::string>>(j, "unresolved_references", {});
}

void to_json(json& j, const CommitRecord& v)
{
    j = json {
        { "ref", v.ref },
        { "parents", v.parents },
        { "message", v.message },
        { "author_date", v.author_date },
        { "diffs", v.diffs },
        { "attachments", v.attachments },
    };
}

void from_json(const json& j, CommitRecord& v)
{
    v.ref = required<CommitRef>(j, "ref");
    v.parents = value_or<std::vector<CommitRef>>(j, "parents", {});
    v.message = value_or<std::string>(j, "message", "");
    v.author_date = value_or<std::int64_t>(j, "author_date", 0);
    v.diffs = value_or<std::vector<FileDiff>>(j, "diffs", {});
    v.attachments = value_or<AttachmentBundle>(j, "attachments", {});
}

void to_json(json& j, const ContextExtensionPolicy& v)
{
    j = json { { "small_threshold", v.small_threshold }, { "large_threshold", v.large_threshold } };
}

void from_json(const json& j, ContextExtensionPolicy& v)
{
    v.small_threshold = value_or(j, "small_threshold", 10);
    v.large_threshold = value_or(j, "large_threshold", 30);
    v.validate();
}

json versioned(json document)
{
    json out = json::object();
    out["schema_version"] = kSchemaVersion;
    for (auto& [key, value] : document.items())
        out[key] = std::move(value);
    return out;
}

void check_schema_version(const json& document)
{
    if (!document.is_object())
        throw SchemaError("document is not a JSON object");
    auto it = document.find("schema_version");
    if (it == document.end() || !it->is_number_integer() || it->get<int>() != kSchemaVersion)
        throw SchemaError("unsupported or missing schema_version (expected " + std::to_string(kSchemaVersion) + ")");
}

} // namespace commitshield
