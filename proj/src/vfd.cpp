#include "commitshield/vfd.hpp"

#include <algorithm>
#include <map>

#include "json_util.hpp"

namespace commitshield {

namespace {

std::string trim(std::string_view text)
{
    std::size_t b = text.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos)
        return {};
    std::size_t e = text.find_last_not_of(" \t\r\n");
    return std::string(text.substr(b, e - b + 1));
}

// Clone and parent worktree for one analysis, created on first use.
class RepoAccess {
public:
    RepoAccess(RepoManager& repos, std::string slug)
        : m_repos(repos)
        , m_slug(std::move(slug))
    {
    }
    ~RepoAccess()
    {
        if (m_handle) {
            try {
                m_repos.release(*m_handle);
            } catch (...) {
            }
        }
    }
    RepoAccess(const RepoAccess&) = delete;
    RepoAccess& operator=(const RepoAccess&) = delete;

    RepoHandle* clone(Trace& trace, const std::string& stage)
    {
        if (!m_handle && !m_failed) {
            try {
                m_handle = m_repos.ensure_clone(m_slug);
            } catch (const RepoError& e) {
                m_failed = true;
                trace.limit(Limitation::new_file_no_parent, stage, std::string("repository unavailable: ") + e.what());
            }
        }
        return m_handle ? &*m_handle : nullptr;
    }

    // Worktree at `parent`; null (with a limitation) when it cannot be made.
    RepoHandle* worktree_at(const std::string& parent, Trace& trace, const std::string& stage)
    {
        RepoHandle* h = clone(trace, stage);
        if (!h)
            return nullptr;
        if (h->owns_worktree && h->current_revision.rfind(parent, 0) == 0)
            return h;
        try {
            m_repos.checkout(*h, parent);
            return h;
        } catch (const RepoError& e) {
            trace.limit(Limitation::new_file_no_parent, stage, std::string("parent checkout failed: ") + e.what());
            return nullptr;
        }
    }

private:
    RepoManager& m_repos;
    std::string m_slug;
    std::optional<RepoHandle> m_handle;
    bool m_failed = false;
};

std::string callee_of(const std::string& qualified)
{
    auto pos = qualified.rfind("::");
    return pos == std::string::npos ? qualified : qualified.substr(pos + 2);
}

} // namespace

std::string to_string(Limitation limitation)
{
    switch (limitation) {
    case Limitation::new_file_no_parent:
        return "new_file_no_parent";
    case Limitation::non_function_change:
        return "non_function_change";
    case Limitation::relevance_fallback:
        return "relevance_fallback";
    case Limitation::parse_degraded:
        return "parse_degraded";
    case Limitation::budget_truncated:
        return "budget_truncated";
    case Limitation::patch_too_large:
        return "patch_too_large";
    }
    return "parse_degraded";
}

Limitation limitation_from_string(std::string_view text)
{
    for (auto l : { Limitation::new_file_no_parent, Limitation::non_function_change, Limitation::relevance_fallback,
             Limitation::parse_degraded, Limitation::budget_truncated, Limitation::patch_too_large }) {
        if (to_string(l) == text)
            return l;
    }
    throw SchemaError("unknown limitation \"" + std::string(text) + "\"");
}

std::string to_string(ScopeClass scope)
{
    switch (scope) {
    case ScopeClass::intra:
        return "intra";
    case ScopeClass::inter:
        return "inter";
    case ScopeClass::file_scope:
        return "file_scope";
    }
    return "file_scope";
}

void Trace::note(std::string stage, std::string message)
{
    events.push_back({ std::move(stage), std::move(message), std::nullopt });
}

void Trace::limit(Limitation flag, std::string stage, std::string message)
{
    events.push_back({ std::move(stage), std::move(message), flag });
    if (!has(flag))
        limitations.push_back(flag);
}

bool Trace::has(Limitation flag) const
{
    return std::find(limitations.begin(), limitations.end(), flag) != limitations.end();
}

DescribedCommit describe_and_filter(const CommitRef& ref, PipelineContext& ctx, LlmSession& session, Trace& trace)
{
    DescribedCommit out;
    out.record = run_stage("fetch", [&] {
        std::vector<std::string> warnings;
        CommitRecord record = ctx.forge.fetch_enriched(ref, &warnings);
        for (auto& w : warnings)
            trace.note("fetch", std::move(w));
        return record;
    });
    const CommitRecord& record = out.record;
    const std::string& sha = record.ref.sha;
    trace.note("fetch",
        "fetched " + record.ref.display() + " with " + std::to_string(record.diffs.size()) + " file diffs, "
            + std::to_string(record.attachments.issues.size()) + " issues, "
            + std::to_string(record.attachments.pull_requests.size()) + " pull requests, "
            + std::to_string(record.attachments.comments.size()) + " comments");

    out.description = run_stage("describe", [&] {
        const auto& a = record.attachments;
        std::string text = trim(session.complete_text(
            build_describe_prompt(record.message, a.issues, a.pull_requests, a.comments, { sha })));
        return text.empty() ? record.message : text;
    });

    std::vector<std::size_t> candidates;
    for (std::size_t i = 0; i < record.diffs.size(); ++i) {
        if (record.diffs[i].binary || record.diffs[i].hunks.empty()) {
            trace.note("relevance", "skipped " + record.diffs[i].path() + " (no textual hunks)");
            continue;
        }
        candidates.push_back(i);
    }
    run_stage("relevance", [&] {
        for (std::size_t i : candidates) {
            const FileDiff& d = record.diffs[i];
            Verdict v = session.ask_verdict(build_relevance_prompt(out.description, d, { sha + ":" + d.path(), sha }));
            trace.note("relevance", d.path() + ": " + to_string(v.result));
            if (v.yes())
                out.kept.push_back(i);
        }
        return 0;
    });
    if (out.kept.empty() && !candidates.empty()) {
        out.kept = candidates;
        trace.limit(Limitation::relevance_fallback, "relevance",
            "no patch was judged relevant to the description; analysing all " + std::to_string(candidates.size())
                + " patches");
    }
    return out;
}

VfdReport detect_fix(const CommitRef& ref, PipelineContext& ctx)
{
    LlmSession session(ctx.backend, ctx.budget);
    Trace trace;
    VfdReport report;
    DescribedCommit dc = describe_and_filter(ref, ctx, session, trace);
    const CommitRecord& record = dc.record;
    const std::string& sha = record.ref.sha;
    report.commit = record.ref;
    report.description = dc.description;

    RepoAccess repo(ctx.repos, record.ref.repo_slug);
    std::optional<std::string> parent;
    if (!record.parents.empty())
        parent = record.parents.front().sha;

    VfdEvidence evidence;
    evidence.description = dc.description;
    std::map<std::string, bool> scanned_callees;

    for (std::size_t index : dc.kept) {
        const FileDiff& diff = record.diffs[index];
        report.relevant_patches.push_back(diff.path());
        evidence.patches.push_back(diff);

        ScopeAnalysis scope;
        scope.path = diff.path();

        auto file_scope = [&](Limitation flag, const std::string& why) {
            scope.classification = ScopeClass::file_scope;
            scope.rationale = why;
            trace.limit(flag, "scope", diff.path() + ": " + why);
            report.scope_results.push_back(scope);
        };

        if (diff.status == FileStatus::added || !diff.old_path) {
            file_scope(Limitation::new_file_no_parent, "file is new in this commit; analysed from the raw patch");
            continue;
        }
        if (!is_c_family(diff.language)) {
            file_scope(Limitation::non_function_change, "not a C/C++ source; analysed from the raw patch");
            continue;
        }
        if (!parent) {
            file_scope(Limitation::new_file_no_parent, "commit has no parent; analysed from the raw patch");
            continue;
        }
        RepoHandle* handle = repo.clone(trace, "scope");
        if (!handle) {
            scope.classification = ScopeClass::file_scope;
            scope.rationale = "parent version unavailable; analysed from the raw patch";
            report.scope_results.push_back(scope);
            continue;
        }

        std::string source;
        try {
            source = ctx.repos.file_at_revision(*handle, *parent, *diff.old_path).bytes;
        } catch (const RepoError& e) {
            file_scope(Limitation::new_file_no_parent, std::string("parent file unavailable: ") + e.what());
            continue;
        }
        SourceModel model = parse_source(source, diff.language, diff.path());
        if (model.degraded)
            trace.limit(Limitation::parse_degraded, "scope",
                diff.path() + ": " + (model.warnings.empty() ? std::string("parse degraded") : model.warnings.front()));

        ChangeLines changes = extract_change_lines(diff);
        std::map<int, FunctionSpan> functions;
        for (const auto& d : changes.deleted) {
            if (const FunctionInfo* f = model.function_at(d.old_lineno))
                functions.emplace(f->span.start_line, f->span);
        }
        for (const auto& a : changes.added) {
            if (const FunctionInfo* f = model.function_for_insertion(a.anchor_old_lineno))
                functions.emplace(f->span.start_line, f->span);
        }
        if (functions.empty()) {
            file_scope(Limitation::non_function_change, "changes lie outside any function");
            continue;
        }
        for (auto& [start, span] : functions)
            scope.functions.push_back(span);

        ScopeVerdict sv = run_stage("scope", [&] {
            return session.ask_scope(build_scope_prompt(diff, scope.functions, { sha + ":" + diff.path(), sha }));
        });
        scope.classification = sv.result == ScopeResult::inter ? ScopeClass::inter : ScopeClass::intra;
        scope.rationale = sv.analysis;
        trace.note("scope", diff.path() + ": " + to_string(scope.classification));
        evidence.functions.insert(evidence.functions.end(), scope.functions.begin(), scope.functions.end());

        if (scope.classification == ScopeClass::inter) {
            RepoHandle* tree = repo.worktree_at(*parent, trace, "call_sites");
            if (tree) {
                for (const auto& f : scope.functions) {
                    if (f.name.rfind("<unnamed@", 0) == 0) {
                        trace.note("call_sites", "function at line " + std::to_string(f.start_line) + " has no name");
                        continue;
                    }
                    std::string callee = callee_of(f.name);
                    if (scanned_callees.count(callee))
                        continue;
                    scanned_callees[callee] = true;
                    CallSiteScan scan = find_call_sites(*tree, callee);
                    for (const auto& file : scan.degraded_files)
                        trace.limit(Limitation::parse_degraded, "call_sites", file + ": textual call-site scan");
                    if (scan.sites.empty() && scan.non_call_references > 0)
                        trace.note("call_sites", callee + " is only referenced outside call expressions ("
                                + std::to_string(scan.non_call_references) + " references)");
                    if (scan.sites.size() > ctx.max_call_sites) {
                        trace.note("call_sites", callee + ": kept " + std::to_string(ctx.max_call_sites) + " of "
                                + std::to_string(scan.sites.size()) + " call sites");
                        scan.sites.resize(ctx.max_call_sites);
                    }
                    trace.note("call_sites", callee + ": " + std::to_string(scan.sites.size()) + " call sites");
                    report.call_contexts.insert(report.call_contexts.end(), scan.sites.begin(), scan.sites.end());
                }
            }
        }
        report.scope_results.push_back(std::move(scope));
    }

    evidence.call_contexts = report.call_contexts;
    report.verdict = run_stage("vfd_final", [&] { return session.ask_verdict(build_vfd_prompt(evidence, { sha })); });
    trace.note("vfd_final", "verdict " + to_string(report.verdict.result));
    if (session.truncated())
        trace.limit(Limitation::budget_truncated, "budget", "one or more prompts were truncated to fit the token budget");

    report.limitations = trace.limitations;
    report.trace = trace.events;
    report.prompt_log = session.log();
    return report;
}

void to_json(json& j, const TraceEvent& v)
{
    j = json { { "stage", v.stage }, { "message", v.message } };
    j["limitation"] = v.limitation ? json(to_string(*v.limitation)) : json(nullptr);
}

void from_json(const json& j, TraceEvent& v)
{
    v.stage = detail::required<std::string>(j, "stage");
    v.message = detail::required<std::string>(j, "message");
    auto l = detail::optional_from_json<std::string>(j, "limitation");
    v.limitation = l ? std::optional(limitation_from_string(*l)) : std::nullopt;
}

void to_json(json& j, const ScopeAnalysis& v)
{
    j = json { { "path", v.path }, { "classification", to_string(v.classification) }, { "functions", v.functions },
        { "rationale", v.rationale } };
    j["hunk_index"] = detail::optional_to_json(v.hunk_index);
}

void from_json(const json& j, ScopeAnalysis& v)
{
    v.path = detail::required<std::string>(j, "path");
    v.hunk_index = detail::optional_from_json<int>(j, "hunk_index");
    std::string c = detail::required<std::string>(j, "classification");
    if (c == "intra")
        v.classification = ScopeClass::intra;
    else if (c == "inter")
        v.classification = ScopeClass::inter;
    else if (c == "file_scope")
        v.classification = ScopeClass::file_scope;
    else
        throw SchemaError("unknown scope classification \"" + c + "\"");
    v.functions = detail::value_or<std::vector<FunctionSpan>>(j, "functions", {});
    v.rationale = detail::value_or<std::string>(j, "rationale", "");
}

namespace {

json limitations_json(const std::vector<Limitation>& list)
{
    json out = json::array();
    for (auto l : list)
        out.push_back(to_string(l));
    return out;
}

std::vector<Limitation> limitations_from(const json& j, const char* key)
{
    std::vector<Limitation> out;
    for (const auto& s : detail::value_or<std::vector<std::string>>(j, key, {}))
        out.push_back(limitation_from_string(s));
    return out;
}

} // namespace

void to_json(json& j, const VfdReport& v)
{
    j = json {
        { "kind", "vfd_report" },
        { "template_version", kPromptTemplateVersion },
        { "commit", v.commit },
        { "verdict", v.verdict },
        { "description", v.description },
        { "relevant_patches", v.relevant_patches },
        { "scope_results", v.scope_results },
        { "call_contexts", v.call_contexts },
        { "limitations", limitations_json(v.limitations) },
        { "prompt_log", v.prompt_log },
        { "trace", v.trace },
    };
}

void from_json(const json& j, VfdReport& v)
{
    v.commit = detail::required<CommitRef>(j, "commit");
    v.verdict = detail::required<Verdict>(j, "verdict");
    v.description = detail::value_or<std::string>(j, "description", "");
    v.relevant_patches = detail::value_or<std::vector<std::string>>(j, "relevant_patches", {});
    v.scope_results = detail::value_or<std::vector<ScopeAnalysis>>(j, "scope_results", {});
    v.call_contexts = detail::value_or<std::vector<CallSiteContext>>(j, "call_contexts", {});
    v.limitations = limitations_from(j, "limitations");
    v.prompt_log = detail::value_or<std::vector<PromptLogEntry>>(j, "prompt_log", {});
    v.trace = detail::value_or<std::vector<TraceEvent>>(j, "trace", {});
}

} // namespace commitshield
