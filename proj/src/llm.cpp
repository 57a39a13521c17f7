#include "commitshield/llm.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <thread>

#include <httplib.h>

#include "commitshield/hashing.hpp"
#include "json_util.hpp"

namespace commitshield {

namespace {

constexpr std::string_view kTruncationMarker = "[truncated]";

std::string lower(std::string_view text)
{
    std::string out(text);
    for (auto& c : out)
        c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

std::string trim(std::string_view text)
{
    std::size_t b = text.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos)
        return {};
    std::size_t e = text.find_last_not_of(" \t\r\n");
    return std::string(text.substr(b, e - b + 1));
}

// Largest prefix length <= n that ends on a UTF-8 code point boundary.
std::size_t utf8_floor(std::string_view text, std::size_t n)
{
    if (n >= text.size())
        return text.size();
    while (n > 0 && (static_cast<unsigned char>(text[n]) & 0xC0) == 0x80)
        --n;
    return n;
}

PromptSection section(std::string label, int priority, std::string text, Segment segment = Segment::data)
{
    return { std::move(label), priority, std::move(text), segment, false };
}

const char* kJsonVerdictFormat
    = "Reply with a single JSON object and nothing else, exactly of the form\n"
      "{\"result\": \"yes\" or \"no\", \"analysis\": \"<your reasoning>\"}";

std::string render_function(const FunctionSpan& f)
{
    return f.body_text;
}

std::string function_label(const FunctionSpan& f)
{
    std::string label = "Function " + f.name;
    if (!f.file.empty())
        label += " in " + f.file;
    return label + " (lines " + std::to_string(f.start_line) + "-" + std::to_string(f.end_line) + ")";
}

std::string join(const std::vector<std::string>& lines)
{
    std::string out;
    for (const auto& l : lines) {
        out += l;
        out += '\n';
    }
    return out;
}

} // namespace

std::string to_string(PromptKind kind)
{
    switch (kind) {
    case PromptKind::describe:
        return "describe";
    case PromptKind::relevance:
        return "relevance";
    case PromptKind::scope:
        return "scope";
    case PromptKind::vfd_final:
        return "vfd_final";
    case PromptKind::vid_judge:
        return "vid_judge";
    }
    return "describe";
}

PromptKind prompt_kind_from_string(std::string_view text)
{
    for (auto k : { PromptKind::describe, PromptKind::relevance, PromptKind::scope, PromptKind::vfd_final,
             PromptKind::vid_judge }) {
        if (to_string(k) == text)
            return k;
    }
    throw SchemaError("unknown prompt kind \"" + std::string(text) + "\"");
}

std::string to_string(VerdictResult result)
{
    return result == VerdictResult::yes ? "yes" : "no";
}

std::string to_string(ScopeResult result)
{
    return result == ScopeResult::intra ? "intra" : "inter";
}

std::string Prompt::render() const
{
    std::string out = "[commitshield prompt kind=" + to_string(kind) + " template=" + std::to_string(kPromptTemplateVersion)
        + "]\n";
    for (const auto& key : keys)
        out += "key: " + key + "\n";
    for (Segment seg : { Segment::data, Segment::task }) {
        out += seg == Segment::data ? "\n## Data\n" : "\n## Task\n";
        for (const auto& s : sections) {
            if (s.segment != seg)
                continue;
            out += "\n### " + s.label + "\n";
            out += s.text;
            if (!s.text.empty() && s.text.back() != '\n')
                out += '\n';
            if (s.truncated) {
                out += kTruncationMarker;
                out += '\n';
            }
        }
    }
    return out;
}

bool Prompt::truncated() const
{
    return std::any_of(sections.begin(), sections.end(), [](const PromptSection& s) { return s.truncated; });
}

int estimate_tokens(std::string_view text)
{
    return static_cast<int>((text.size() + 3) / 4);
}

void TokenBudget::validate() const
{
    if (max_tokens <= 0)
        throw Error("token budget must be positive");
    if (step_tokens <= 0 || bytes_per_token == 0)
        throw Error("truncation step must be positive");
    if (!estimator)
        throw Error("token budget has no estimator");
}

Prompt finalize(Prompt prompt, const TokenBudget& budget)
{
    prompt.estimated_tokens = budget.estimator(prompt.render());
    return prompt;
}

Prompt enforce_budget(Prompt prompt, const TokenBudget& budget)
{
    budget.validate();
    prompt = finalize(std::move(prompt), budget);
    if (prompt.estimated_tokens <= budget.max_tokens)
        return prompt;

    Prompt fixed = prompt;
    fixed.sections.erase(std::remove_if(fixed.sections.begin(), fixed.sections.end(),
                             [](const PromptSection& s) { return s.priority != 0; }),
        fixed.sections.end());
    int floor_tokens = budget.estimator(fixed.render());
    if (floor_tokens > budget.max_tokens)
        throw BudgetImpossible("never-truncated sections need " + std::to_string(floor_tokens) + " tokens, budget is "
            + std::to_string(budget.max_tokens));

    const std::size_t step = static_cast<std::size_t>(budget.step_tokens) * budget.bytes_per_token;
    while (prompt.estimated_tokens > budget.max_tokens) {
        PromptSection* victim = nullptr;
        for (auto& s : prompt.sections) {
            if (s.priority == 0 || s.text.empty())
                continue;
            if (!victim || s.priority > victim->priority
                || (s.priority == victim->priority && s.text.size() >= victim->text.size()))
                victim = &s;
        }
        if (!victim)
            throw BudgetImpossible("prompt cannot be reduced below " + std::to_string(prompt.estimated_tokens) + " tokens");
        std::size_t keep = victim->text.size() > step ? utf8_floor(victim->text, victim->text.size() - step) : 0;
        victim->text.resize(keep);
        victim->truncated = true;
        prompt.estimated_tokens = budget.estimator(prompt.render());
    }
    return prompt;
}

Prompt build_describe_prompt(std::string_view base_message, const std::vector<ReferencedItem>& issues,
    const std::vector<ReferencedItem>& pull_requests, const std::vector<std::string>& comments,
    std::vector<std::string> keys)
{
    Prompt p;
    p.kind = PromptKind::describe;
    p.keys = std::move(keys);
    std::string message = trim(base_message).empty() ? "<no message>" : std::string(base_message);
    p.sections.push_back(section("Commit message", 0, message));

    auto items = [](const std::vector<ReferencedItem>& list, const char* what) {
        std::string out;
        for (const auto& item : list) {
            out += std::string(what) + " #" + std::to_string(item.number) + ": " + item.title + "\n";
            out += item.body;
            if (!item.body.empty() && item.body.back() != '\n')
                out += '\n';
            out += '\n';
        }
        return out;
    };
    if (!issues.empty())
        p.sections.push_back(section("Issues", 2, items(issues, "Issue")));
    if (!pull_requests.empty())
        p.sections.push_back(section("Pull requests", 2, items(pull_requests, "Pull request")));
    if (!comments.empty()) {
        std::string text;
        for (const auto& c : comments)
            text += "- " + c + "\n";
        p.sections.push_back(section("Commit comments", 3, text));
    }

    bool extra = !issues.empty() || !pull_requests.empty() || !comments.empty();
    std::string task = extra
        ? "The data above is a commit message together with the issues, pull requests and comments it refers to. "
          "Generate a more precise and detailed description of the commit: what was wrong before, what the change "
          "does, and what effect it has on program behaviour."
        : "The data above is the only description available for this commit. Expand it into a clearer and more "
          "detailed description of what the change does and why it was likely made.";
    task += "\nAnswer in plain prose. Do not use JSON.";
    p.sections.push_back(section("Instruction", 0, task, Segment::task));
    return finalize(std::move(p));
}

Prompt build_relevance_prompt(std::string_view description, const FileDiff& diff, std::vector<std::string> keys)
{
    Prompt p;
    p.kind = PromptKind::relevance;
    p.keys = std::move(keys);
    p.sections.push_back(section("Commit description", 1, std::string(description)));
    p.sections.push_back(section("Patch of " + diff.path(), 2, serialize_file_diff(diff)));
    p.sections.push_back(section("Task", 0,
        "Decide whether this patch implements the change described above. Patches that only touch comments, "
        "formatting, logging, tests, or unrelated refactoring and features are not related.\n"
        "result is \"yes\" when the patch is related to the description, otherwise \"no\".",
        Segment::task));
    p.sections.push_back(section("Output format", 0, kJsonVerdictFormat, Segment::task));
    return finalize(std::move(p));
}

Prompt build_scope_prompt(const FileDiff& diff, const std::vector<FunctionSpan>& functions, std::vector<std::string> keys)
{
    Prompt p;
    p.kind = PromptKind::scope;
    p.keys = std::move(keys);
    p.sections.push_back(section("Patch of " + diff.path(), 1, serialize_file_diff(diff)));
    for (const auto& f : functions)
        p.sections.push_back(section(function_label(f), 2, render_function(f)));
    p.sections.push_back(section("Task", 0,
        "The functions above contain the modified lines, shown as they were before the patch. Analyse the effect of "
        "the modified lines inside these functions. If the effect is confined to the listed functions, the scope is "
        "\"intra\". If it can reach callers or other functions (return values, parameters, shared state, changed "
        "interfaces), the scope is \"inter\".",
        Segment::task));
    p.sections.push_back(section("Output format", 0,
        "Reply with a single JSON object and nothing else, exactly of the form\n"
        "{\"result\": \"intra\" or \"inter\", \"analysis\": \"<your reasoning>\"}",
        Segment::task));
    return finalize(std::move(p));
}

Prompt build_vfd_prompt(const VfdEvidence& evidence, std::vector<std::string> keys)
{
    Prompt p;
    p.kind = PromptKind::vfd_final;
    p.keys = std::move(keys);
    p.sections.push_back(section("Commit description", 1, evidence.description));
    for (const auto& d : evidence.patches)
        p.sections.push_back(section("Patch of " + d.path(), 1, serialize_file_diff(d)));
    for (const auto& f : evidence.functions)
        p.sections.push_back(section(function_label(f), 2, render_function(f)));
    for (const auto& c : evidence.call_contexts) {
        std::string label = "Call to " + c.callee + " at " + c.file + ":" + std::to_string(c.line);
        if (c.caller)
            label += " in " + c.caller->name;
        p.sections.push_back(section(label, 3, join(c.context_lines)));
    }
    p.sections.push_back(section("Definition", 0,
        "A vulnerability fix is a commit whose code changes remove a security weakness that existed before it, "
        "such as a memory-safety error, missing bounds or input check, integer overflow, use after free, race, "
        "or injection. Adding a new security feature, hardening that does not correct an existing flaw, refactoring, "
        "performance work and ordinary bug fixes without security impact are not vulnerability fixes.",
        Segment::task));
    p.sections.push_back(section("Task", 0,
        "Using the description, the patches, the affected functions and the call sites above, decide whether this "
        "commit fixes a vulnerability. result is \"yes\" for a vulnerability fix, otherwise \"no\".",
        Segment::task));
    p.sections.push_back(section("Output format", 0, kJsonVerdictFormat, Segment::task));
    return finalize(std::move(p));
}

Prompt build_vid_prompt(const VidEvidence& evidence, std::vector<std::string> keys)
{
    Prompt p;
    p.kind = PromptKind::vid_judge;
    p.keys = std::move(keys);
    if (!evidence.fix_description.empty())
        p.sections.push_back(section("Vulnerability fix description", 2, evidence.fix_description));
    p.sections.push_back(section("Lines changed by the fix", 1, evidence.fix_change_lines));
    p.sections.push_back(section("Fix context before the fix", 3, evidence.fix_context));
    p.sections.push_back(section("Candidate commit " + evidence.candidate_label, 2, evidence.candidate_patch));
    p.sections.push_back(section("Definition", 0,
        "A vulnerability-introducing commit is a historical commit whose changes first brought the flawed code into "
        "the program: the lines removed or guarded by the fix, or the code whose behaviour the fix corrects, were "
        "added or altered by that commit in a way that made the weakness reachable.",
        Segment::task));
    p.sections.push_back(section("Task", 0,
        "Compare the candidate commit's patch with the vulnerability fix. Decide whether the candidate introduced the "
        "vulnerability that the fix removes. result is \"yes\" if it did, otherwise \"no\".",
        Segment::task));
    p.sections.push_back(section("Output format", 0, kJsonVerdictFormat, Segment::task));
    return finalize(std::move(p));
}

namespace {

// Every balanced {...} candidate in order of its opening brace.
std::optional<json> first_json_object(std::string_view text, const std::function<bool(const json&)>& accept)
{
    for (std::size_t start = text.find('{'); start != std::string_view::npos; start = text.find('{', start + 1)) {
        int depth = 0;
        bool in_string = false;
        bool escape = false;
        for (std::size_t i = start; i < text.size(); ++i) {
            char c = text[i];
            if (in_string) {
                if (escape)
                    escape = false;
                else if (c == '\\')
                    escape = true;
                else if (c == '"')
                    in_string = false;
                continue;
            }
            if (c == '"')
                in_string = true;
            else if (c == '{')
                ++depth;
            else if (c == '}' && --depth == 0) {
                json parsed = json::parse(text.substr(start, i - start + 1), nullptr, false);
                if (!parsed.is_discarded() && parsed.is_object() && accept(parsed))
                    return parsed;
                break;
            }
        }
    }
    return std::nullopt;
}

bool has_verdict_shape(const json& j)
{
    return j.size() == 2 && j.contains("result") && j.contains("analysis") && j["result"].is_string()
        && j["analysis"].is_string();
}

std::string excerpt(std::string_view text)
{
    std::string out(text.substr(0, 120));
    if (text.size() > 120)
        out += "...";
    return out;
}

} // namespace

Verdict parse_verdict(std::string_view response)
{
    auto obj = first_json_object(response, [](const json& j) {
        if (!has_verdict_shape(j))
            return false;
        std::string r = lower(trim(j["result"].get<std::string>()));
        return r == "yes" || r == "no";
    });
    if (!obj)
        throw Unparseable("no {\"result\": yes|no, \"analysis\"} object in response: " + excerpt(response));
    Verdict v;
    v.result = lower(trim((*obj)["result"].get<std::string>())) == "yes" ? VerdictResult::yes : VerdictResult::no;
    v.analysis = (*obj)["analysis"].get<std::string>();
    v.raw = std::string(response);
    return v;
}

ScopeVerdict parse_scope_verdict(std::string_view response)
{
    auto normalized = [](const json& j) { return lower(trim(j["result"].get<std::string>())); };
    auto obj = first_json_object(response, [&](const json& j) {
        if (!has_verdict_shape(j))
            return false;
        std::string r = normalized(j);
        return r == "intra" || r == "inter" || r == "yes" || r == "no";
    });
    if (!obj)
        throw Unparseable("no {\"result\": intra|inter, \"analysis\"} object in response: " + excerpt(response));
    ScopeVerdict v;
    std::string r = normalized(*obj);
    v.result = r == "inter" || r == "yes" ? ScopeResult::inter : ScopeResult::intra;
    v.analysis = (*obj)["analysis"].get<std::string>();
    v.raw = std::string(response);
    return v;
}

std::string serialize_verdict(const Verdict& verdict)
{
    return json { { "result", to_string(verdict.result) }, { "analysis", verdict.analysis } }.dump();
}

MockBackend::MockBackend(json scenario)
    : m_scenario(std::move(scenario))
{
    if (!m_scenario.is_object())
        throw SchemaError("mock scenario must be a JSON object");
}

std::shared_ptr<MockBackend> MockBackend::from_file(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw Error("cannot open scenario file " + path.string());
    json scenario = json::parse(in, nullptr, false);
    if (scenario.is_discarded())
        throw SchemaError("scenario file " + path.string() + " is not valid JSON");
    return std::make_shared<MockBackend>(std::move(scenario));
}

std::string MockBackend::complete(const std::string& prompt_text)
{
    std::string kind;
    std::vector<std::string> keys;
    std::size_t pos = 0;
    while (pos < prompt_text.size()) {
        std::size_t nl = prompt_text.find('\n', pos);
        std::string_view line(prompt_text.data() + pos, (nl == std::string::npos ? prompt_text.size() : nl) - pos);
        pos = nl == std::string::npos ? prompt_text.size() : nl + 1;
        if (line.rfind("[commitshield prompt kind=", 0) == 0) {
            auto rest = line.substr(26);
            kind = std::string(rest.substr(0, rest.find_first_of(" ]")));
        } else if (line.rfind("key: ", 0) == 0) {
            keys.emplace_back(line.substr(5));
        } else if (line.rfind("## ", 0) == 0) {
            break;
        }
    }
    keys.push_back("*");

    auto respond = [](const json& value) -> std::string { return value.is_string() ? value.get<std::string>() : value.dump(); };
    std::lock_guard guard(m_mutex);
    for (const auto& key : keys) {
        std::string full = kind + ":" + key;
        auto it = m_scenario.find(full);
        if (it == m_scenario.end())
            continue;
        if (it->is_array()) {
            if (it->empty())
                break;
            std::size_t& cursor = m_cursor[full];
            const json& value = (*it)[std::min(cursor, it->size() - 1)];
            ++cursor;
            return respond(value);
        }
        return respond(*it);
    }
    return std::string(kDefaultResponse);
}

HttpBackend::HttpBackend(HttpBackendConfig config, Poster poster, Sleeper sleeper)
    : m_config(std::move(config))
    , m_poster(std::move(poster))
    , m_sleeper(std::move(sleeper))
    , m_slots(std::clamp(m_config.max_in_flight, 1, 256))
{
    if (!m_sleeper)
        m_sleeper = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
    if (!m_poster) {
        if (m_config.endpoint_url.empty())
            throw LlmError("no LLM endpoint configured");
        std::string url = m_config.endpoint_url;
        std::string origin = url;
        std::string path = "/";
        if (auto scheme = url.find("://"); scheme != std::string::npos) {
            if (auto slash = url.find('/', scheme + 3); slash != std::string::npos) {
                origin = url.substr(0, slash);
                path = url.substr(slash);
            }
        }
        auto timeout = m_config.timeout;
        m_poster = [origin, path, timeout](const std::string& body, const HttpHeaders& headers) {
            httplib::Client client(origin);
            client.set_connection_timeout(timeout);
            client.set_read_timeout(timeout);
            httplib::Headers h;
            for (const auto& [k, v] : headers)
                h.emplace(k, v);
            auto result = client.Post(path, h, body, "application/json");
            if (!result)
                throw LlmError("request to " + origin + path + " failed: " + httplib::to_string(result.error()));
            HttpResponse r;
            r.status = result->status;
            r.body = result->body;
            return r;
        };
    }
}

std::string HttpBackend::request_body(const std::string& prompt_text) const
{
    json body {
        { "model", m_config.model },
        { "messages", json::array({ { { "role", "user" }, { "content", prompt_text } } }) },
        { "temperature", 0 },
        { "seed", m_config.seed },
        { "stream", false },
    };
    return body.dump();
}

std::string HttpBackend::complete(const std::string& prompt_text)
{
    HttpHeaders headers { { "Content-Type", "application/json" } };
    if (!m_config.api_key.empty())
        headers.emplace_back("Authorization", "Bearer " + m_config.api_key);
    std::string body = request_body(prompt_text);

    std::chrono::milliseconds backoff { 2000 };
    for (int attempt = 1;; ++attempt) {
        HttpResponse response;
        {
            m_slots.acquire();
            struct Release {
                std::counting_semaphore<256>& s;
                ~Release() { s.release(); }
            } release { m_slots };
            response = m_poster(body, headers);
        }
        bool transient = response.status == 429 || response.status >= 500;
        if (response.status == 200) {
            json parsed = json::parse(response.body, nullptr, false);
            if (parsed.is_discarded())
                throw LlmError("LLM endpoint returned invalid JSON");
            try {
                return parsed.at("choices").at(0).at("message").at("content").get<std::string>();
            } catch (const json::exception&) {
                throw LlmError("LLM response has no choices[0].message.content");
            }
        }
        if (!transient || attempt >= m_config.max_attempts)
            throw LlmError("LLM endpoint answered HTTP " + std::to_string(response.status) + ": " + excerpt(response.body));
        m_sleeper(backoff);
        backoff *= 2;
    }
}

LlmSession::LlmSession(LlmBackend& backend, TokenBudget budget)
    : m_backend(backend)
    , m_budget(std::move(budget))
{
    m_budget.validate();
}

std::string LlmSession::send(Prompt& prompt)
{
    prompt = enforce_budget(std::move(prompt), m_budget);
    if (prompt.truncated())
        m_truncated = true;
    std::string text = prompt.render();
    m_log.push_back({ prompt.kind, sha256_hex(text), m_backend.identity() });
    return m_backend.complete(text);
}

std::string LlmSession::complete_text(Prompt prompt)
{
    return send(prompt);
}

template <typename Parsed, typename Parser>
Parsed LlmSession::ask(Prompt prompt, Parser parse)
{
    for (int attempt = 0;; ++attempt) {
        Prompt current = prompt;
        if (attempt > 0)
            current.sections.push_back(section("Reminder", 0,
                "Your previous answer could not be parsed. Respond with the JSON object only, no other text.",
                Segment::task));
        std::string response = send(current);
        try {
            return parse(response);
        } catch (const Unparseable&) {
            if (attempt >= kVerdictRetries)
                throw;
        }
    }
}

Verdict LlmSession::ask_verdict(Prompt prompt)
{
    return ask<Verdict>(std::move(prompt), [](const std::string& r) { return parse_verdict(r); });
}

ScopeVerdict LlmSession::ask_scope(Prompt prompt)
{
    return ask<ScopeVerdict>(std::move(prompt), [](const std::string& r) { return parse_scope_verdict(r); });
}

void to_json(json& j, const Verdict& v)
{
    j = json { { "result", to_string(v.result) }, { "analysis", v.analysis }, { "raw", v.raw } };
}

void from_json(const json& j, Verdict& v)
{
    std::string r = detail::required<std::string>(j, "result");
    if (r != "yes" && r != "no")
        throw SchemaError("verdict result must be yes or no");
    v.result = r == "yes" ? VerdictResult::yes : VerdictResult::no;
    v.analysis = detail::required<std::string>(j, "analysis");
    v.raw = detail::value_or<std::string>(j, "raw", "");
}

void to_json(json& j, const PromptLogEntry& v)
{
    j = json { { "kind", to_string(v.kind) }, { "prompt_hash", v.prompt_hash }, { "backend_identity", v.backend_identity } };
}

void from_json(const json& j, PromptLogEntry& v)
{
    v.kind = prompt_kind_from_string(detail::required<std::string>(j, "kind"));
    v.prompt_hash = detail::required<std::string>(j, "prompt_hash");
    v.backend_identity = detail::required<std::string>(j, "backend_identity");
}

} // namespace commitshield
