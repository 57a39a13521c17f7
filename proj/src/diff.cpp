#include "commitshield/diff.hpp"

#include <algorithm>
#include <charconv>

namespace commitshield {

namespace {

struct RawLine {
    std::string_view text; // without '\n'
    std::size_t offset;
};

std::vector<RawLine> split_with_offsets(std::string_view text)
{
    std::vector<RawLine> lines;
    std::size_t pos = 0;
    while (pos < text.size()) {
        auto nl = text.find('\n', pos);
        if (nl == std::string_view::npos) {
            lines.push_back({ text.substr(pos), pos });
            break;
        }
        lines.push_back({ text.substr(pos, nl - pos), pos });
        pos = nl + 1;
    }
    return lines;
}

bool starts_with(std::string_view text, std::string_view prefix)
{
    return text.substr(0, prefix.size()) == prefix;
}

bool parse_int(std::string_view& text, int& out)
{
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
    if (ec != std::errc() || ptr == text.data())
        return false;
    text.remove_prefix(static_cast<std::size_t>(ptr - text.data()));
    return true;
}

// "start[,len]"; missing length means 1.
bool parse_range(std::string_view& text, int& start, int& len)
{
    if (!parse_int(text, start) || start < 0)
        return false;
    len = 1;
    if (!text.empty() && text.front() == ',') {
        text.remove_prefix(1);
        if (!parse_int(text, len) || len < 0)
            return false;
    }
    return true;
}

bool parse_hunk_header(std::string_view line, Hunk& hunk)
{
    if (!starts_with(line, "@@ -"))
        return false;
    line.remove_prefix(4);
    if (!parse_range(line, hunk.old_start, hunk.old_len))
        return false;
    if (!starts_with(line, " +"))
        return false;
    line.remove_prefix(2);
    if (!parse_range(line, hunk.new_start, hunk.new_len))
        return false;
    if (!starts_with(line, " @@"))
        return false;
    line.remove_prefix(3);
    hunk.section = std::string(line);
    return true;
}

std::string format_range(int start, int len)
{
    if (len == 1)
        return std::to_string(start);
    return std::to_string(start) + "," + std::to_string(len);
}

// Reads hunk body lines starting at lines[index] (the header line).
// Advances index past the hunk, including a trailing no-newline marker.
Hunk read_hunk(const std::vector<RawLine>& lines, std::size_t& index)
{
    Hunk hunk;
    const RawLine& header = lines[index];
    if (!parse_hunk_header(header.text, hunk))
        throw MalformedDiff("bad hunk header \"" + std::string(header.text) + "\"", header.offset);
    ++index;

    int old_remaining = hunk.old_len;
    int new_remaining = hunk.new_len;
    int old_no = hunk.old_start;
    int new_no = hunk.new_start;

    while (old_remaining > 0 || new_remaining > 0) {
        if (index >= lines.size())
            throw MalformedDiff("hunk ends before its line counts are satisfied", header.offset);
        const RawLine& raw = lines[index];
        std::string_view text = raw.text;

        if (starts_with(text, "\\")) {
            if (hunk.lines.empty())
                throw MalformedDiff("no-newline marker before any line", raw.offset);
            hunk.lines.back().no_newline_at_eof = true;
            ++index;
            continue;
        }

        LineChange change;
        char marker = text.empty() ? ' ' : text.front();
        std::string body(text.empty() ? text : text.substr(1));
        switch (marker) {
        case ' ':
            if (old_remaining == 0 || new_remaining == 0)
                throw MalformedDiff("context line exceeds hunk counts", raw.offset);
            change = { LineKind::context, std::move(body), old_no++, new_no++, false };
            --old_remaining;
            --new_remaining;
            break;
        case '-':
            if (old_remaining == 0)
                throw MalformedDiff("deleted line exceeds hunk counts", raw.offset);
            change = { LineKind::deleted, std::move(body), old_no++, std::nullopt, false };
            --old_remaining;
            break;
        case '+':
            if (new_remaining == 0)
                throw MalformedDiff("added line exceeds hunk counts", raw.offset);
            change = { LineKind::added, std::move(body), std::nullopt, new_no++, false };
            --new_remaining;
            break;
        default:
            throw MalformedDiff("unexpected line inside hunk", raw.offset);
        }
        hunk.lines.push_back(std::move(change));
        ++index;
    }

    if (index < lines.size() && starts_with(lines[index].text, "\\")) {
        if (!hunk.lines.empty())
            hunk.lines.back().no_newline_at_eof = true;
        ++index;
    }
    return hunk;
}

// Strips "a/"/"b/" prefixes, surrounding quotes and a trailing tab-separated timestamp.
std::optional<std::string> header_path(std::string_view text, std::string_view prefix)
{
    auto tab = text.find('\t');
    if (tab != std::string_view::npos)
        text = text.substr(0, tab);
    while (!text.empty() && (text.back() == '\r' || text.back() == ' '))
        text.remove_suffix(1);
    if (text.size() >= 2 && text.front() == '"' && text.back() == '"')
        text = text.substr(1, text.size() - 2);
    if (text == "/dev/null")
        return std::nullopt;
    if (starts_with(text, prefix))
        text.remove_prefix(prefix.size());
    return std::string(text);
}

struct FileBuilder {
    std::optional<std::string> git_a;
    std::optional<std::string> git_b;
    bool saw_minus = false;
    bool saw_plus = false;
    std::optional<std::string> minus_path;
    std::optional<std::string> plus_path;
    std::optional<std::string> rename_from;
    std::optional<std::string> rename_to;
    bool is_new = false;
    bool is_deleted = false;
    bool binary = false;
    std::vector<Hunk> hunks;

    FileDiff finish() const
    {
        FileDiff diff;
        if (!is_new) {
            if (rename_from)
                diff.old_path = rename_from;
            else if (saw_minus)
                diff.old_path = minus_path;
            else
                diff.old_path = git_a;
        }
        if (!is_deleted) {
            if (rename_to)
                diff.new_path = rename_to;
            else if (saw_plus)
                diff.new_path = plus_path;
            else
                diff.new_path = git_b;
        }
        if (!diff.old_path && !diff.new_path) {
            diff.old_path = git_a;
            diff.new_path = git_b;
        }
        if (!diff.old_path)
            diff.status = FileStatus::added;
        else if (!diff.new_path)
            diff.status = FileStatus::deleted;
        else if (*diff.old_path != *diff.new_path)
            diff.status = FileStatus::renamed;
        else
            diff.status = FileStatus::modified;
        diff.hunks = hunks;
        diff.binary = binary;
        diff.language = detect_language(diff.path());
        return diff;
    }
};

void parse_git_header(std::string_view text, FileBuilder& file)
{
    // "diff --git a/x b/y": split on the last " b/" for unquoted paths.
    text.remove_prefix(std::string_view("diff --git ").size());
    auto split = text.rfind(" b/");
    if (split == std::string_view::npos) {
        auto space = text.find(' ');
        if (space == std::string_view::npos)
            return;
        split = space;
    }
    file.git_a = header_path(text.substr(0, split), "a/");
    file.git_b = header_path(text.substr(split + 1), "b/");
}

} // namespace

std::vector<std::string_view> split_lines(std::string_view text)
{
    std::vector<std::string_view> lines;
    for (const auto& raw : split_with_offsets(text))
        lines.push_back(raw.text);
    return lines;
}

std::vector<FileDiff> parse_unified_diff(std::string_view text)
{
    std::vector<FileDiff> files;
    auto lines = split_with_offsets(text);
    std::optional<FileBuilder> current;

    auto flush = [&] {
        if (current)
            files.push_back(current->finish());
        current.reset();
    };

    std::size_t i = 0;
    while (i < lines.size()) {
        std::string_view line = lines[i].text;

        if (starts_with(line, "diff --git ")) {
            flush();
            current.emplace();
            parse_git_header(line, *current);
            ++i;
            continue;
        }
        if (starts_with(line, "--- ") && i + 1 < lines.size() && starts_with(lines[i + 1].text, "+++ ")) {
            if (!current || current->saw_minus || !current->hunks.empty()) {
                flush();
                current.emplace();
            }
            current->saw_minus = true;
            current->minus_path = header_path(line.substr(4), "a/");
            current->saw_plus = true;
            current->plus_path = header_path(lines[i + 1].text.substr(4), "b/");
            if (!current->minus_path)
                current->is_new = true;
            if (!current->plus_path)
                current->is_deleted = true;
            i += 2;
            continue;
        }
        if (starts_with(line, "@@ ")) {
            if (!current)
                throw MalformedDiff("hunk without a file header", lines[i].offset);
            current->hunks.push_back(read_hunk(lines, i));
            continue;
        }
        if (current && current->hunks.empty()) {
            if (starts_with(line, "new file mode"))
                current->is_new = true;
            else if (starts_with(line, "deleted file mode"))
                current->is_deleted = true;
            else if (starts_with(line, "rename from "))
                current->rename_from = std::string(line.substr(12));
            else if (starts_with(line, "rename to "))
                current->rename_to = std::string(line.substr(10));
            else if (starts_with(line, "Binary files ") || starts_with(line, "GIT binary patch"))
                current->binary = true;
        }
        // Anything else (commit preamble, index lines, trailing text) is ignored.
        ++i;
    }
    flush();
    return files;
}

std::vector<Hunk> parse_hunks(std::string_view text)
{
    std::vector<Hunk> hunks;
    auto lines = split_with_offsets(text);
    std::size_t i = 0;
    while (i < lines.size()) {
        if (starts_with(lines[i].text, "@@ ")) {
            hunks.push_back(read_hunk(lines, i));
            continue;
        }
        if (!lines[i].text.empty())
            throw MalformedDiff("expected a hunk header", lines[i].offset);
        ++i;
    }
    return hunks;
}

std::string serialize_hunk(const Hunk& hunk)
{
    std::string out = "@@ -" + format_range(hunk.old_start, hunk.old_len) + " +"
        + format_range(hunk.new_start, hunk.new_len) + " @@" + hunk.section + "\n";
    for (const auto& line : hunk.lines) {
        switch (line.kind) {
        case LineKind::context:
            out += ' ';
            break;
        case LineKind::added:
            out += '+';
            break;
        case LineKind::deleted:
            out += '-';
            break;
        }
        out += line.text;
        out += '\n';
        if (line.no_newline_at_eof)
            out += "\\ No newline at end of file\n";
    }
    return out;
}

std::string serialize_hunks(std::span<const Hunk> hunks)
{
    std::string out;
    for (const auto& hunk : hunks)
        out += serialize_hunk(hunk);
    return out;
}

std::string serialize_file_diff(const FileDiff& diff)
{
    std::string out;
    out += "--- " + (diff.old_path ? "a/" + *diff.old_path : std::string("/dev/null")) + "\n";
    out += "+++ " + (diff.new_path ? "b/" + *diff.new_path : std::string("/dev/null")) + "\n";
    if (diff.binary && diff.hunks.empty())
        out += "Binary files differ\n";
    out += serialize_hunks(diff.hunks);
    return out;
}

ChangeLines extract_change_lines(const Hunk& hunk)
{
    ChangeLines out;
    int anchor = hunk.old_len == 0 ? hunk.old_start : hunk.old_start - 1;
    for (const auto& line : hunk.lines) {
        switch (line.kind) {
        case LineKind::context:
            anchor = *line.old_lineno;
            break;
        case LineKind::deleted:
            anchor = *line.old_lineno;
            out.deleted.push_back({ *line.old_lineno, line.text });
            break;
        case LineKind::added:
            out.added.push_back({ *line.new_lineno, std::max(anchor, 0), line.text });
            break;
        }
    }
    return out;
}

ChangeLines extract_change_lines(const FileDiff& diff)
{
    ChangeLines out;
    for (const auto& hunk : diff.hunks) {
        auto part = extract_change_lines(hunk);
        out.deleted.insert(out.deleted.end(), part.deleted.begin(), part.deleted.end());
        out.added.insert(out.added.end(), part.added.begin(), part.added.end());
    }
    return out;
}

LineSpan hunk_span(const Hunk& hunk, HunkSide side)
{
    int start = side == HunkSide::old_file ? hunk.old_start : hunk.new_start;
    int len = side == HunkSide::old_file ? hunk.old_len : hunk.new_len;
    if (len == 0)
        return { start + 1, start }; // insertion point after `start`
    return { start, start + len - 1 };
}

ExtendedHunk extend_context(const Hunk& hunk, const ContextExtensionPolicy& policy,
    std::optional<LineSpan> function_span, int file_len, HunkSide side)
{
    ExtendedHunk out;
    out.base = hunk;
    out.side = side;
    out.hunk_range = hunk_span(hunk, side);
    out.nominal_extension = policy.extension(hunk.changed_line_count());

    const int e = out.nominal_extension;
    int lo = out.hunk_range.start - e;
    int hi = out.hunk_range.end + e;

    if (function_span && !function_span->empty()) {
        // The cap never cuts into the hunk itself.
        int cap_lo = std::min(function_span->start, out.hunk_range.start);
        int cap_hi = std::max(function_span->end, out.hunk_range.end);
        if (lo < cap_lo) {
            lo = cap_lo;
            out.clamped_to_function = true;
        }
        if (hi > cap_hi) {
            hi = cap_hi;
            out.clamped_to_function = true;
        }
    }

    lo = std::max(lo, 1);
    hi = std::min(hi, std::max(file_len, 0));
    out.resolved_range = { lo, hi };
    out.extend_before = std::max(out.hunk_range.start - lo, 0);
    out.extend_after = std::max(hi - out.hunk_range.end, 0);
    return out;
}

std::string render_extended(const ExtendedHunk& extended, std::string_view file_text)
{
    auto file_lines = split_lines(file_text);
    const int n = static_cast<int>(file_lines.size());
    auto emit_range = [&](std::string& out, int from, int to) {
        for (int line = std::max(from, 1); line <= std::min(to, n); ++line) {
            out += ' ';
            out += file_lines[static_cast<std::size_t>(line - 1)];
            out += '\n';
        }
    };

    std::string out;
    emit_range(out, extended.resolved_range.start, extended.hunk_range.start - 1);
    Hunk body = extended.base;
    body.section.clear();
    std::string hunk_text = serialize_hunk(body);
    // Drop the header line; the surrounding lines make it misleading.
    out += hunk_text.substr(hunk_text.find('\n') + 1);
    emit_range(out, extended.hunk_range.end + 1, extended.resolved_range.end);
    return out;
}

void to_json(json& j, const ChangeLines& v)
{
    j = json { { "deleted", json::array() }, { "added", json::array() } };
    for (const auto& d : v.deleted)
        j["deleted"].push_back({ { "old_lineno", d.old_lineno }, { "text", d.text } });
    for (const auto& a : v.added)
        j["added"].push_back({ { "new_lineno", a.new_lineno }, { "anchor_old_lineno", a.anchor_old_lineno }, { "text", a.text } });
}

void to_json(json& j, const LineSpan& v)
{
    j = json::array({ v.start, v.end });
}

void to_json(json& j, const ExtendedHunk& v)
{
    j = json {
        { "base", v.base },
        { "side", v.side == HunkSide::old_file ? "old" : "new" },
        { "nominal_extension", v.nominal_extension },
        { "extend_before", v.extend_before },
        { "extend_after", v.extend_after },
        { "clamped_to_function", v.clamped_to_function },
        { "resolved_range", v.resolved_range },
    };
}

} // namespace commitshield
