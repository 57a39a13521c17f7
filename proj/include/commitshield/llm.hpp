// Prompt assembly, token budgeting, verdict parsing and model backends.
#pragma once

#include <chrono>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <semaphore>
#include <string>
#include <string_view>
#include <vector>

#include "commitshield/analyzer.hpp"
#include "commitshield/forge.hpp"
#include "commitshield/model.hpp"

namespace commitshield {

inline constexpr int kPromptTemplateVersion = 1;

class BudgetImpossible : public Error {
public:
    using Error::Error;
};

class Unparseable : public Error {
public:
    using Error::Error;
};

class LlmError : public Error {
public:
    using Error::Error;
};

enum class PromptKind { describe, relevance, scope, vfd_final, vid_judge };
enum class Segment { data, task };

std::string to_string(PromptKind kind);
PromptKind prompt_kind_from_string(std::string_view text);

struct PromptSection {
    std::string label;
    // 0 is never truncated; larger numbers are cut first.
    int priority = 0;
    std::string text;
    Segment segment = Segment::data;
    bool truncated = false;
};

struct Prompt {
    PromptKind kind = PromptKind::describe;
    // Lookup keys for scripted backends, most specific first.
    std::vector<std::string> keys;
    std::vector<PromptSection> sections;
    int estimated_tokens = 0;

    std::string render() const;
    bool truncated() const;
};

/// ceil(bytes / 4)
int estimate_tokens(std::string_view text);

struct TokenBudget {
    int max_tokens = 130000;
    // Tokens removed from a section per truncation step.
    int step_tokens = 1000;
    std::function<int(std::string_view)> estimator = estimate_tokens;
    // Bytes cut per step; matches the default estimator.
    std::size_t bytes_per_token = 4;

    void validate() const;
};

/// Recomputes estimated_tokens.
Prompt finalize(Prompt prompt, const TokenBudget& budget = {});
Prompt enforce_budget(Prompt prompt, const TokenBudget& budget = {});

Prompt build_describe_prompt(std::string_view base_message, const std::vector<ReferencedItem>& issues,
    const std::vector<ReferencedItem>& pull_requests, const std::vector<std::string>& comments,
    std::vector<std::string> keys = {});
Prompt build_relevance_prompt(std::string_view description, const FileDiff& diff, std::vector<std::string> keys = {});
Prompt build_scope_prompt(const FileDiff& diff, const std::vector<FunctionSpan>& functions,
    std::vector<std::string> keys = {});

struct VfdEvidence {
    std::string description;
    std::vector<FileDiff> patches;
    std::vector<FunctionSpan> functions;
    std::vector<CallSiteContext> call_contexts;
};
Prompt build_vfd_prompt(const VfdEvidence& evidence, std::vector<std::string> keys = {});

struct VidEvidence {
    std::string fix_description;
    // Rendered "-"/"+" lines of the fix, per file.
    std::string fix_change_lines;
    std::string fix_context;
    std::string candidate_label;
    std::string candidate_patch;
};
Prompt build_vid_prompt(const VidEvidence& evidence, std::vector<std::string> keys = {});

enum class VerdictResult { yes, no };

struct Verdict {
    VerdictResult result = VerdictResult::no;
    std::string analysis;
    std::string raw;

    bool yes() const { return result == VerdictResult::yes; }
};

enum class ScopeResult { intra, inter };

struct ScopeVerdict {
    ScopeResult result = ScopeResult::intra;
    std::string analysis;
    std::string raw;
};

std::string to_string(VerdictResult result);
std::string to_string(ScopeResult result);

/// First JSON object in the text with exactly "result" and "analysis".
Verdict parse_verdict(std::string_view response);
/// Same contract; result is intra/inter (yes/no read as inter/intra).
ScopeVerdict parse_scope_verdict(std::string_view response);
std::string serialize_verdict(const Verdict& verdict);

class LlmBackend {
public:
    virtual ~LlmBackend() = default;
    virtual std::string complete(const std::string& prompt_text) = 0;
    virtual std::string identity() const = 0;
};

/// Responses keyed by "<kind>:<key>"; a key's value may be a string, an
/// object (sent as JSON text) or an array consumed in order.
class MockBackend : public LlmBackend {
public:
    explicit MockBackend(json scenario);
    static std::shared_ptr<MockBackend> from_file(const std::filesystem::path& path);

    std::string complete(const std::string& prompt_text) override;
    std::string identity() const override { return "mock"; }

    static constexpr std::string_view kDefaultResponse = R"({"result":"no","analysis":"default"})";

private:
    json m_scenario;
    std::mutex m_mutex;
    std::map<std::string, std::size_t> m_cursor;
};

struct HttpBackendConfig {
    // Full chat-completions URL.
    std::string endpoint_url;
    std::string model;
    std::string identity = "deepseek";
    std::string api_key;
    int max_in_flight = 4;
    std::chrono::seconds timeout { 300 };
    int seed = 0;
    int max_attempts = 3;
};

inline constexpr const char* kLlmKeyEnv = "COMMITSHIELD_LLM_KEY";

/// OpenAI-compatible chat-completions client.
class HttpBackend : public LlmBackend {
public:
    using Poster = std::function<HttpResponse(const std::string& body, const HttpHeaders& headers)>;
    using Sleeper = std::function<void(std::chrono::milliseconds)>;

    explicit HttpBackend(HttpBackendConfig config, Poster poster = nullptr, Sleeper sleeper = nullptr);

    std::string complete(const std::string& prompt_text) override;
    std::string identity() const override { return m_config.identity; }

    std::string request_body(const std::string& prompt_text) const;

private:
    HttpBackendConfig m_config;
    Poster m_poster;
    Sleeper m_sleeper;
    std::counting_semaphore<256> m_slots;
};

struct PromptLogEntry {
    PromptKind kind = PromptKind::describe;
    std::string prompt_hash;
    std::string backend_identity;
};

/// One analysis' view of a backend: budgets prompts, retries unparseable
/// verdicts and records every request.
class LlmSession {
public:
    static constexpr int kVerdictRetries = 3;

    LlmSession(LlmBackend& backend, TokenBudget budget = {});

    std::string complete_text(Prompt prompt);
    Verdict ask_verdict(Prompt prompt);
    ScopeVerdict ask_scope(Prompt prompt);

    const std::vector<PromptLogEntry>& log() const { return m_log; }
    bool truncated() const { return m_truncated; }
    const TokenBudget& budget() const { return m_budget; }

private:
    std::string send(Prompt& prompt);
    template <typename Parsed, typename Parser>
    Parsed ask(Prompt prompt, Parser parse);

    LlmBackend& m_backend;
    TokenBudget m_budget;
    std::vector<PromptLogEntry> m_log;
    bool m_truncated = false;
};

void to_json(json& j, const Verdict& v);
void from_json(const json& j, Verdict& v);
void to_json(json& j, const PromptLogEntry& v);
void from_json(const json& j, PromptLogEntry& v);

} // namespace commitshield
