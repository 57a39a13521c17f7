// Vulnerability-fix detection for a single commit.
#pragma once

#include <exception>
#include <optional>
#include <string>
#include <vector>

#include "commitshield/analyzer.hpp"
#include "commitshield/forge.hpp"
#include "commitshield/llm.hpp"
#include "commitshield/model.hpp"
#include "commitshield/repo.hpp"

namespace commitshield {

/// A pipeline stage could not complete; cause() holds the original exception.
class StageFailed : public Error {
public:
    StageFailed(std::string stage, const std::string& cause, std::exception_ptr original = nullptr)
        : Error("stage " + stage + " failed: " + cause)
        , m_stage(std::move(stage))
        , m_cause(std::move(original))
    {
    }
    const std::string& stage() const { return m_stage; }
    std::exception_ptr cause() const { return m_cause; }

private:
    std::string m_stage;
    std::exception_ptr m_cause;
};

enum class Limitation {
    new_file_no_parent,
    non_function_change,
    relevance_fallback,
    parse_degraded,
    budget_truncated,
    patch_too_large,
};

std::string to_string(Limitation limitation);
Limitation limitation_from_string(std::string_view text);

struct TraceEvent {
    std::string stage;
    std::string message;
    std::optional<Limitation> limitation;
};

/// Events and limitation flags gathered while a pipeline runs.
struct Trace {
    std::vector<TraceEvent> events;
    std::vector<Limitation> limitations;

    void note(std::string stage, std::string message);
    /// Records the event and adds the flag once.
    void limit(Limitation flag, std::string stage, std::string message);
    bool has(Limitation flag) const;
};

enum class ScopeClass { intra, inter, file_scope };

std::string to_string(ScopeClass scope);

struct ScopeAnalysis {
    std::string path;
    // Null when the analysis covers the whole file diff.
    std::optional<int> hunk_index;
    ScopeClass classification = ScopeClass::file_scope;
    std::vector<FunctionSpan> functions;
    std::string rationale;
};

struct PipelineContext {
    ForgeClient& forge;
    RepoManager& repos;
    LlmBackend& backend;
    TokenBudget budget {};
    ContextExtensionPolicy policy {};
    // Call sites kept per affected function.
    std::size_t max_call_sites = 100;
};

struct VfdReport {
    CommitRef commit;
    Verdict verdict;
    std::string description;
    std::vector<std::string> relevant_patches;
    std::vector<ScopeAnalysis> scope_results;
    std::vector<CallSiteContext> call_contexts;
    std::vector<Limitation> limitations;
    std::vector<PromptLogEntry> prompt_log;
    std::vector<TraceEvent> trace;
};

VfdReport detect_fix(const CommitRef& ref, PipelineContext& ctx);

// Shared by the fix and introduction pipelines.
struct DescribedCommit {
    CommitRecord record;
    std::string description;
    // Indices into record.diffs kept by the relevance filter (or all, on fallback).
    std::vector<std::size_t> kept;
};

/// Fetch, describe and relevance-filter a commit.
DescribedCommit describe_and_filter(const CommitRef& ref, PipelineContext& ctx, LlmSession& session, Trace& trace);

/// Runs `body`, turning any library error into StageFailed(stage).
template <typename F>
auto run_stage(const std::string& stage, F&& body) -> decltype(body())
{
    try {
        return body();
    } catch (const StageFailed&) {
        throw;
    } catch (const Error& e) {
        throw StageFailed(stage, e.what(), std::current_exception());
    }
}

void to_json(json& j, const TraceEvent& v);
void from_json(const json& j, TraceEvent& v);
void to_json(json& j, const ScopeAnalysis& v);
void from_json(const json& j, ScopeAnalysis& v);
void to_json(json& j, const VfdReport& v);
void from_json(const json& j, VfdReport& v);

} // namespace commitshield
