// Unified-diff parsing and the context-extension rule applied to hunks.
#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "commitshield/model.hpp"

namespace commitshield {

class MalformedDiff : public Error {
public:
    MalformedDiff(const std::string& what, std::size_t offset)
        : Error(what + " (at byte " + std::to_string(offset) + ")")
        , m_offset(offset)
    {
    }
    std::size_t offset() const { return m_offset; }

private:
    std::size_t m_offset;
};

/// Parses git/forge style unified diff text. Empty input gives no files.
std::vector<FileDiff> parse_unified_diff(std::string_view text);

/// Parses a bare sequence of hunks, as found in the forge's per-file "patch" field.
std::vector<Hunk> parse_hunks(std::string_view text);

/// "@@ -a,b +c,d @@section" followed by the prefixed body lines.
std::string serialize_hunk(const Hunk& hunk);
std::string serialize_hunks(std::span<const Hunk> hunks);
/// File headers ("--- a/..", "+++ b/..") plus hunks.
std::string serialize_file_diff(const FileDiff& diff);

struct DeletedLine {
    int old_lineno = 0;
    std::string text;
};

struct AddedLine {
    int new_lineno = 0;
    // Old-file line after which the insertion sits (0 = top of file).
    int anchor_old_lineno = 0;
    std::string text;
};

struct ChangeLines {
    std::vector<DeletedLine> deleted;
    std::vector<AddedLine> added;

    bool empty() const { return deleted.empty() && added.empty(); }
};

ChangeLines extract_change_lines(const FileDiff& diff);
ChangeLines extract_change_lines(const Hunk& hunk);

/// Inclusive line range. Empty when end < start.
struct LineSpan {
    int start = 0;
    int end = 0;

    bool empty() const { return end < start; }
    bool contains(int line) const { return line >= start && line <= end; }
    bool contains(const LineSpan& other) const { return other.empty() || (other.start >= start && other.end <= end); }
    int size() const { return empty() ? 0 : end - start + 1; }

    friend bool operator==(const LineSpan&, const LineSpan&) = default;
};

enum class HunkSide { old_file, new_file };

struct ExtendedHunk {
    Hunk base;
    HunkSide side = HunkSide::old_file;
    // Extension chosen by the policy before any clamping.
    int nominal_extension = 0;
    int extend_before = 0;
    int extend_after = 0;
    bool clamped_to_function = false;
    // Lines the hunk itself occupies on `side`; empty for pure insertions/removals.
    LineSpan hunk_range;
    LineSpan resolved_range;
};

/// Lines occupied by the hunk on one side of the diff.
LineSpan hunk_span(const Hunk& hunk, HunkSide side);

/// Widens the hunk by the policy's extension for its changed-line count, caps
/// the widening at the enclosing function when one is given, then clamps the
/// result to [1, file_len].
ExtendedHunk extend_context(const Hunk& hunk, const ContextExtensionPolicy& policy,
    std::optional<LineSpan> function_span, int file_len, HunkSide side = HunkSide::old_file);

/// Hunk body surrounded by the extra lines taken from `file_text`, which must be
/// the file on the extension's side.
std::string render_extended(const ExtendedHunk& extended, std::string_view file_text);

/// Splits text into lines without their terminators. A trailing newline does not
/// produce an extra empty line.
std::vector<std::string_view> split_lines(std::string_view text);

void to_json(json& j, const ChangeLines& v);
void to_json(json& j, const LineSpan& v);
void to_json(json& j, const ExtendedHunk& v);

} // namespace commitshield
