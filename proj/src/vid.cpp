#include "commitshield/vid.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <unordered_map>

#include "commitshield/hashing.hpp"
#include "json_util.hpp"

namespace commitshield {

namespace {

struct Candidate {
    std::string sha;
    CandidateSource source;
    std::size_t order;
};

std::optional<LineSpan> function_for_hunk(const SourceModel* model, const Hunk& hunk, HunkSide side)
{
    if (!model)
        return std::nullopt;
    const FunctionInfo* f = nullptr;
    for (const auto& l : hunk.lines) {
        if (side == HunkSide::old_file && l.kind == LineKind::deleted && l.old_lineno) {
            f = model->function_at(*l.old_lineno);
            break;
        }
        if (side == HunkSide::new_file && l.kind == LineKind::added && l.new_lineno) {
            f = model->function_at(*l.new_lineno);
            break;
        }
    }
    if (!f && side == HunkSide::old_file) {
        int anchor = hunk.old_len == 0 ? hunk.old_start : hunk.old_start - 1;
        f = model->function_for_insertion(anchor);
    }
    if (!f && side == HunkSide::new_file) {
        // Pure removal: the surrounding function on the new side.
        int anchor = hunk.new_len == 0 ? hunk.new_start : hunk.new_start - 1;
        f = model->function_for_insertion(anchor);
    }
    if (!f)
        return std::nullopt;
    return LineSpan { f->span.start_line, f->span.end_line };
}

std::string render_changes(const FileDiff& diff)
{
    std::string out = "--- " + diff.path() + "\n";
    for (std::size_t h = 0; h < diff.hunks.size(); ++h) {
        if (h > 0)
            out += "...\n";
        for (const auto& l : diff.hunks[h].lines) {
            if (l.kind == LineKind::deleted)
                out += "-" + l.text + "\n";
            else if (l.kind == LineKind::added)
                out += "+" + l.text + "\n";
        }
    }
    return out;
}

std::string extended_file_text(const FileDiff& diff, std::string_view text, const SourceModel* model,
    const ContextExtensionPolicy& policy, HunkSide side)
{
    int file_len = count_lines(text);
    std::string out;
    for (const auto& hunk : diff.hunks) {
        ExtendedHunk ext = extend_context(hunk, policy, function_for_hunk(model, hunk, side), file_len, side);
        out += "--- " + diff.path() + " lines " + std::to_string(ext.resolved_range.start) + "-"
            + std::to_string(ext.resolved_range.end) + "\n";
        out += render_extended(ext, text);
    }
    return out;
}

std::optional<SourceModel> model_for(const std::string& text, Language language, const std::string& path, Trace& trace,
    const std::string& stage)
{
    if (!is_c_family(language))
        return std::nullopt;
    SourceModel model = parse_source(text, language, path);
    if (model.degraded)
        trace.limit(Limitation::parse_degraded, stage,
            path + ": " + (model.warnings.empty() ? std::string("parse degraded") : model.warnings.front()));
    return model;
}

} // namespace

void VidOptions::validate() const
{
    if (window < 0)
        throw Error("window must not be negative");
    if (max_commits < 1)
        throw Error("max_commits must be at least 1");
}

std::string to_string(CandidateSource source)
{
    switch (source) {
    case CandidateSource::file_history:
        return "file_history";
    case CandidateSource::variable_history:
        return "variable_history";
    case CandidateSource::fallback:
        return "fallback";
    }
    return "file_history";
}

std::string to_string(StopReason reason)
{
    switch (reason) {
    case StopReason::positive_window_exhausted:
        return "positive_window_exhausted";
    case StopReason::history_exhausted:
        return "history_exhausted";
    case StopReason::cap_reached:
        return "cap_reached";
    }
    return "history_exhausted";
}

std::vector<CommitRef> VidReport::predicted() const
{
    std::vector<CommitRef> out;
    for (const auto& c : candidates)
        out.push_back(c.commit);
    return out;
}

VidReport detect_introduction(const CommitRef& fix, PipelineContext& ctx, const VidOptions& options)
{
    options.validate();
    LlmSession session(ctx.backend, ctx.budget);
    Trace trace;
    VidReport report;
    DescribedCommit dc = describe_and_filter(fix, ctx, session, trace);
    const CommitRecord& record = dc.record;
    const std::string& fix_sha = record.ref.sha;
    report.fix_commit = record.ref;
    report.description = dc.description;

    auto finish = [&]() {
        report.limitations = trace.limitations;
        report.trace = trace.events;
        report.prompt_log = session.log();
        return report;
    };

    RepoHandle handle = run_stage("history", [&] { return ctx.repos.ensure_clone(record.ref.repo_slug); });
    std::vector<std::string> parents = run_stage("history", [&] { return ctx.repos.parents(handle, fix_sha); });
    if (parents.empty()) {
        trace.limit(Limitation::new_file_no_parent, "history", "fix commit has no parent; no history to trace");
        report.stop_reason = StopReason::history_exhausted;
        return finish();
    }
    const std::string parent = parents.front();

    // Fix-side evidence and candidate discovery.
    std::string fix_changes;
    std::string fix_context;
    std::set<std::string> tracked_paths;
    std::vector<std::string> file_history;
    std::vector<std::string> variable_history;
    run_stage("history", [&] {
        for (std::size_t index : dc.kept) {
            const FileDiff& diff = record.diffs[index];
            report.relevant_patches.push_back(diff.path());
            fix_changes += render_changes(diff);
            if (diff.status == FileStatus::added || !diff.old_path) {
                trace.limit(Limitation::new_file_no_parent, "history", diff.path() + " is new in the fix; no history");
                continue;
            }
            const std::string& old_path = *diff.old_path;
            if (!ctx.repos.path_exists_at(handle, parent, old_path)) {
                trace.limit(Limitation::new_file_no_parent, "history", old_path + " does not exist in the fix parent");
                continue;
            }
            tracked_paths.insert(old_path);
            tracked_paths.insert(diff.path());
            std::string source = ctx.repos.file_at_revision(handle, parent, old_path).bytes;
            auto model = model_for(source, diff.language, old_path, trace, "history");
            fix_context += extended_file_text(diff, source, model ? &*model : nullptr, ctx.policy, HunkSide::old_file);

            HistoryQuery query { old_path, parent, options.follow_renames, options.max_commits };
            for (const auto& c : ctx.repos.history_of_file(handle, query))
                file_history.push_back(c.sha);

            if (!model)
                continue;
            ChangeLines changes = extract_change_lines(diff);
            KeyVariableResult kv = extract_key_variables(changes, source, diff.language);
            int line_count = count_lines(source);
            for (auto& var : kv.variables) {
                std::set<int> lines { var.source_line };
                if (var.declaration_line)
                    lines.insert(*var.declaration_line);
                for (int line : lines) {
                    if (line < 1 || line > line_count)
                        continue;
                    for (const auto& entry : ctx.repos.line_history(handle, old_path, { line, line }, parent))
                        variable_history.push_back(entry.commit.sha);
                }
                report.key_variables.push_back(std::move(var));
            }
        }
        return 0;
    });

    // Merge newest-first along the fix parent's first-parent lineage.
    std::vector<std::string> lineage = run_stage("history", [&] { return ctx.repos.first_parent_lineage(handle, parent); });
    std::unordered_map<std::string, std::size_t> position;
    for (std::size_t i = 0; i < lineage.size(); ++i)
        position.emplace(lineage[i], i);
    std::map<std::string, Candidate> by_sha;
    auto add = [&](const std::string& sha, CandidateSource source) {
        auto it = position.find(sha);
        std::size_t order = it == position.end() ? lineage.size() + by_sha.size() : it->second;
        auto [slot, inserted] = by_sha.emplace(sha, Candidate { sha, source, order });
        if (!inserted && source == CandidateSource::file_history)
            slot->second.source = CandidateSource::file_history;
    };
    for (const auto& sha : file_history)
        add(sha, CandidateSource::file_history);
    for (const auto& sha : variable_history)
        add(sha, CandidateSource::variable_history);
    std::vector<Candidate> merged;
    for (auto& [sha, c] : by_sha)
        merged.push_back(c);
    std::sort(merged.begin(), merged.end(), [](const Candidate& a, const Candidate& b) { return a.order < b.order; });
    trace.note("history",
        std::to_string(merged.size()) + " candidate commits (" + std::to_string(file_history.size()) + " file-history, "
            + std::to_string(variable_history.size()) + " line-history hits)");

    // Judge.
    bool seen_yes = false;
    int judged_after_yes = 0;
    report.stop_reason = StopReason::history_exhausted;
    std::map<std::string, std::string> patch_hashes;
    for (std::size_t i = 0; i < merged.size(); ++i) {
        if (seen_yes && judged_after_yes >= options.window) {
            report.stop_reason = StopReason::positive_window_exhausted;
            break;
        }
        if (report.examined_count >= options.max_commits) {
            report.stop_reason = StopReason::cap_reached;
            break;
        }
        const Candidate& cand = merged[i];
        CommitRef ref = validate_commit_ref(record.ref.repo_slug, cand.sha);
        ++report.examined_count;

        std::string patch_text = run_stage("vid_judge", [&] { return ctx.repos.commit_patch(handle, cand.sha); });
        if (patch_text.size() > options.max_patch_bytes) {
            trace.limit(Limitation::patch_too_large, "vid_judge",
                cand.sha + ": patch of " + std::to_string(patch_text.size()) + " bytes skipped");
            continue;
        }
        std::string rendered = run_stage("vid_judge", [&] {
            std::vector<FileDiff> diffs = parse_unified_diff(patch_text);
            std::vector<const FileDiff*> chosen;
            for (const auto& d : diffs) {
                if ((d.new_path && tracked_paths.count(*d.new_path)) || (d.old_path && tracked_paths.count(*d.old_path)))
                    chosen.push_back(&d);
            }
            if (chosen.empty()) {
                for (const auto& d : diffs) {
                    if (is_c_family(d.language))
                        chosen.push_back(&d);
                }
            }
            std::string out;
            for (const FileDiff* d : chosen) {
                if (d->binary || d->hunks.empty())
                    continue;
                if (d->status == FileStatus::deleted || !d->new_path) {
                    out += serialize_file_diff(*d);
                    continue;
                }
                std::string text = ctx.repos.file_at_revision(handle, cand.sha, *d->new_path).bytes;
                auto model = model_for(text, d->language, *d->new_path, trace, "vid_judge");
                out += extended_file_text(*d, text, model ? &*model : nullptr, ctx.policy, HunkSide::new_file);
            }
            return out;
        });
        std::string hash = sha256_hex(rendered);
        patch_hashes[cand.sha] = hash;

        VidEvidence evidence { dc.description, fix_changes, fix_context, ref.display(), rendered };
        Verdict verdict = run_stage("vid_judge", [&] {
            return session.ask_verdict(build_vid_prompt(evidence, { fix_sha + ":" + cand.sha, cand.sha }));
        });
        trace.note("vid_judge", cand.sha + " (" + to_string(cand.source) + "): " + to_string(verdict.result));
        VidCandidate judged { ref, verdict, cand.source, hash };
        report.judged.push_back(judged);
        if (seen_yes)
            ++judged_after_yes;
        if (verdict.yes()) {
            seen_yes = true;
            report.candidates.push_back(judged);
        }
    }

    if (report.stop_reason == StopReason::history_exhausted && report.examined_count >= options.max_commits)
        report.stop_reason = StopReason::cap_reached;

    if (!seen_yes && !merged.empty()) {
        const Candidate& newest = merged.front();
        VidCandidate fallback;
        fallback.commit = validate_commit_ref(record.ref.repo_slug, newest.sha);
        fallback.source = CandidateSource::fallback;
        fallback.verdict.result = VerdictResult::no;
        fallback.verdict.analysis = "fallback: no historical commit was judged to introduce the vulnerability, so the "
                                    "most recent historical commit touching the fixed code is reported";
        auto it = patch_hashes.find(newest.sha);
        fallback.extended_patch_hash = it == patch_hashes.end() ? std::string() : it->second;
        report.candidates.push_back(fallback);
        trace.note("fallback", "reporting most recent historical commit " + newest.sha);
    }
    trace.note("vid_judge", "stopped: " + to_string(report.stop_reason) + " after " + std::to_string(report.examined_count)
            + " commits");
    if (session.truncated())
        trace.limit(Limitation::budget_truncated, "budget", "one or more prompts were truncated to fit the token budget");
    return finish();
}

namespace {

CandidateSource source_from_string(const std::string& s)
{
    for (auto c : { CandidateSource::file_history, CandidateSource::variable_history, CandidateSource::fallback }) {
        if (to_string(c) == s)
            return c;
    }
    throw SchemaError("unknown candidate source \"" + s + "\"");
}

StopReason stop_from_string(const std::string& s)
{
    for (auto r : { StopReason::positive_window_exhausted, StopReason::history_exhausted, StopReason::cap_reached }) {
        if (to_string(r) == s)
            return r;
    }
    throw SchemaError("unknown stop reason \"" + s + "\"");
}

} // namespace

void to_json(json& j, const VidCandidate& v)
{
    j = json { { "commit", v.commit }, { "verdict", v.verdict }, { "source", to_string(v.source) },
        { "extended_patch_hash", v.extended_patch_hash } };
}

void from_json(const json& j, VidCandidate& v)
{
    v.commit = detail::required<CommitRef>(j, "commit");
    v.verdict = detail::required<Verdict>(j, "verdict");
    v.source = source_from_string(detail::required<std::string>(j, "source"));
    v.extended_patch_hash = detail::value_or<std::string>(j, "extended_patch_hash", "");
}

void to_json(json& j, const VidReport& v)
{
    json limitations = json::array();
    for (auto l : v.limitations)
        limitations.push_back(to_string(l));
    j = json {
        { "kind", "vid_report" },
        { "template_version", kPromptTemplateVersion },
        { "fix_commit", v.fix_commit },
        { "description", v.description },
        { "relevant_patches", v.relevant_patches },
        { "key_variables", v.key_variables },
        { "candidates", v.candidates },
        { "judged", v.judged },
        { "examined_count", v.examined_count },
        { "stop_reason", to_string(v.stop_reason) },
        { "limitations", limitations },
        { "prompt_log", v.prompt_log },
        { "trace", v.trace },
    };
}

void from_json(const json& j, VidReport& v)
{
    v.fix_commit = detail::required<CommitRef>(j, "fix_commit");
    v.description = detail::value_or<std::string>(j, "description", "");
    v.relevant_patches = detail::value_or<std::vector<std::string>>(j, "relevant_patches", {});
    v.candidates = detail::required<std::vector<VidCandidate>>(j, "candidates");
    v.judged = detail::value_or<std::vector<VidCandidate>>(j, "judged", {});
    v.examined_count = detail::required<int>(j, "examined_count");
    v.stop_reason = stop_from_string(detail::required<std::string>(j, "stop_reason"));
    v.limitations.clear();
    for (const auto& s : detail::value_or<std::vector<std::string>>(j, "limitations", {}))
        v.limitations.push_back(limitation_from_string(s));
    v.prompt_log = detail::value_or<std::vector<PromptLogEntry>>(j, "prompt_log", {});
    v.trace = detail::value_or<std::vector<TraceEvent>>(j, "trace", {});
    if (j.contains("key_variables")) {
        v.key_variables.clear();
        for (const auto& k : j["key_variables"]) {
            KeyVariable kv;
            kv.identifier = detail::required<std::string>(k, "identifier");
            std::string kind = detail::required<std::string>(k, "kind");
            kv.kind = kind == "global" ? KeyVariableKind::global
                : kind == "declared_field" ? KeyVariableKind::declared_field
                                           : KeyVariableKind::assigned;
            kv.source_line = detail::required<int>(k, "source_line");
            kv.declaration_line = detail::optional_from_json<int>(k, "declaration_line");
            v.key_variables.push_back(std::move(kv));
        }
    }
}

} // namespace commitshield
