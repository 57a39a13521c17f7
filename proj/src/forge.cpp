#include "commitshield/forge.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <limits>
#include <regex>
#include <sstream>
#include <thread>
#include <unistd.h>

#include <httplib.h>

#include "commitshield/diff.hpp"
#include "commitshield/hashing.hpp"

namespace commitshield {

namespace fs = std::filesystem;

namespace {

bool is_reference_prefix_char(char c)
{
    // Characters that make a '#' part of a cross-repo reference, URL fragment or word.
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '/' || c == '.' || c == '-' || c == '&';
}

std::string lowercase(std::string text)
{
    std::transform(text.begin(), text.end(), text.begin(), [](unsigned char c) { return std::tolower(c); });
    return text;
}

std::string read_file(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file_atomically(const fs::path& path, const std::string& content)
{
    fs::create_directories(path.parent_path());
    static std::atomic<unsigned> counter { 0 };
    fs::path tmp = path;
    tmp += ".tmp." + std::to_string(::getpid()) + "." + std::to_string(counter++);
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        out << content;
        if (!out)
            throw Error("failed to write cache file " + tmp.string());
    }
    fs::rename(tmp, path);
}

std::chrono::seconds retry_after_of(const HttpResponse& response)
{
    if (auto it = response.headers.find("retry-after"); it != response.headers.end()) {
        try {
            return std::chrono::seconds(std::stol(it->second));
        } catch (...) {
        }
    }
    if (auto it = response.headers.find("x-ratelimit-reset"); it != response.headers.end()) {
        try {
            auto reset = std::stoll(it->second);
            auto now = std::chrono::duration_cast<std::chrono::seconds>(
                std::chrono::system_clock::now().time_since_epoch())
                           .count();
            return std::chrono::seconds(std::max<long long>(reset - now, 0));
        } catch (...) {
        }
    }
    return std::chrono::seconds(0);
}

bool is_rate_limited(const HttpResponse& response)
{
    if (response.status == 429)
        return true;
    if (response.status == 403) {
        auto it = response.headers.find("x-ratelimit-remaining");
        return it != response.headers.end() && it->second == "0";
    }
    return false;
}

bool has_next_link(const HttpResponse& response)
{
    auto it = response.headers.find("link");
    return it != response.headers.end() && it->second.find("rel=\"next\"") != std::string::npos;
}

FileDiff file_diff_from_forge(const json& file)
{
    FileDiff diff;
    std::string filename = file.value("filename", "");
    std::string status = file.value("status", "modified");
    if (filename.empty())
        throw SchemaError("forge file entry without filename");

    if (status == "added" || status == "copied") {
        diff.new_path = filename;
        diff.status = FileStatus::added;
    } else if (status == "removed") {
        diff.old_path = filename;
        diff.status = FileStatus::deleted;
    } else if (status == "renamed") {
        diff.old_path = file.value("previous_filename", filename);
        diff.new_path = filename;
        diff.status = *diff.old_path == filename ? FileStatus::modified : FileStatus::renamed;
    } else {
        diff.old_path = filename;
        diff.new_path = filename;
        diff.status = FileStatus::modified;
    }
    diff.language = detect_language(filename);

    auto patch = file.find("patch");
    if (patch != file.end() && patch->is_string()) {
        diff.hunks = parse_hunks(patch->get<std::string>());
    } else {
        int changes = file.value("changes", file.value("additions", 0) + file.value("deletions", 0));
        if (changes > 0)
            throw PatchTooLarge("forge omitted the diff body of " + filename + " (" + std::to_string(changes)
                + " changed lines); the patch is unreadable through the API");
        diff.binary = diff.status != FileStatus::renamed;
    }
    return diff;
}

} // namespace

HttplibTransport::HttplibTransport(std::string base_url, std::chrono::seconds timeout)
    : m_base_url(std::move(base_url))
    , m_timeout(timeout)
{
}

HttpResponse HttplibTransport::get(const std::string& path_and_query, const HttpHeaders& headers)
{
    // The base URL may carry a path prefix (GitHub Enterprise "/api/v3").
    std::string origin = m_base_url;
    std::string prefix;
    if (auto scheme = m_base_url.find("://"); scheme != std::string::npos) {
        if (auto slash = m_base_url.find('/', scheme + 3); slash != std::string::npos) {
            origin = m_base_url.substr(0, slash);
            prefix = m_base_url.substr(slash);
            while (!prefix.empty() && prefix.back() == '/')
                prefix.pop_back();
        }
    }
    httplib::Client client(origin);
    client.set_connection_timeout(m_timeout);
    client.set_read_timeout(m_timeout);
    client.set_follow_location(true);

    httplib::Headers request_headers;
    for (const auto& [name, value] : headers)
        request_headers.emplace(name, value);

    auto result = client.Get(prefix + path_and_query, request_headers);
    if (!result)
        throw NetworkError("request to " + m_base_url + path_and_query + " failed: " + httplib::to_string(result.error()));

    HttpResponse response;
    response.status = result->status;
    response.body = result->body;
    for (const auto& [name, value] : result->headers)
        response.headers[lowercase(name)] = value;
    return response;
}

std::vector<ReferenceNumber> extract_reference_numbers(std::string_view message)
{
    std::vector<ReferenceNumber> out;
    for (std::size_t i = 0; i < message.size(); ++i) {
        if (message[i] != '#')
            continue;
        if (i > 0 && is_reference_prefix_char(message[i - 1]))
            continue;
        std::size_t j = i + 1;
        while (j < message.size() && std::isdigit(static_cast<unsigned char>(message[j])))
            ++j;
        if (j == i + 1)
            continue;
        if (j < message.size() && (std::isalpha(static_cast<unsigned char>(message[j])) || message[j] == '_')) {
            i = j;
            continue;
        }
        long long value = 0;
        bool overflow = false;
        for (std::size_t k = i + 1; k < j; ++k) {
            value = value * 10 + (message[k] - '0');
            if (value > std::numeric_limits<int>::max()) {
                overflow = true;
                break;
            }
        }
        if (!overflow && value > 0) {
            ReferenceNumber ref { static_cast<int>(value) };
            if (std::find(out.begin(), out.end(), ref) == out.end())
                out.push_back(ref);
        }
        i = j - 1;
    }
    return out;
}

std::vector<std::string> extract_unresolved_references(std::string_view message)
{
    static const std::regex pattern(R"((https?://[^\s<>()]+)|([A-Za-z0-9_.-]+/[A-Za-z0-9_.-]+#[0-9]+))");
    std::vector<std::string> out;
    std::string text(message);
    for (auto it = std::sregex_iterator(text.begin(), text.end(), pattern); it != std::sregex_iterator(); ++it) {
        std::string match = it->str();
        while (!match.empty() && (match.back() == '.' || match.back() == ',' || match.back() == ';'))
            match.pop_back();
        if (std::find(out.begin(), out.end(), match) == out.end())
            out.push_back(match);
    }
    return out;
}

std::string truncate_utf8(std::string text, std::size_t max_chars)
{
    std::size_t chars = 0;
    for (std::size_t i = 0; i < text.size(); ++i) {
        if ((static_cast<unsigned char>(text[i]) & 0xC0) != 0x80) {
            if (chars == max_chars) {
                text.resize(i);
                return text;
            }
            ++chars;
        }
    }
    return text;
}

CommitRecord commit_record_from_forge_json(const json& payload, const std::string& repo_slug)
{
    if (!payload.is_object())
        throw SchemaError("commit payload is not an object");
    CommitRecord record;
    record.ref = validate_commit_ref(repo_slug, payload.value("sha", ""));
    if (auto url = payload.find("html_url"); url != payload.end() && url->is_string())
        record.ref.web_url = url->get<std::string>();

    const json& commit = payload.value("commit", json::object());
    record.message = commit.value("message", "");
    const json& author = commit.contains("author") && commit["author"].is_object() ? commit["author"] : json::object();
    if (author.contains("date") && author["date"].is_string())
        record.author_date = parse_iso8601_utc(author["date"].get<std::string>());

    for (const auto& parent : payload.value("parents", json::array()))
        record.parents.push_back(validate_commit_ref(repo_slug, parent.value("sha", "")));
    for (const auto& file : payload.value("files", json::array()))
        record.diffs.push_back(file_diff_from_forge(file));
    return record;
}

ForgeClient::ForgeClient(ForgeConfig config, std::shared_ptr<Transport> transport, Sleeper sleeper)
    : m_config(std::move(config))
    , m_transport(std::move(transport))
    , m_sleeper(std::move(sleeper))
{
    if (!m_transport && !m_config.offline)
        m_transport = std::make_shared<HttplibTransport>(m_config.api_base_url, m_config.request_timeout);
    if (!m_sleeper)
        m_sleeper = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
}

fs::path ForgeClient::cache_path(const std::string& endpoint, const std::string& key) const
{
    return m_config.cache_dir / endpoint / (sha256_hex(key) + ".json");
}

std::string ForgeClient::cached_get(const std::string& endpoint, const std::string& key, const std::function<std::string()>& fetch)
{
    fs::path path = cache_path(endpoint, key);
    if (fs::exists(path))
        return read_file(path);
    if (m_config.offline)
        throw OfflineMiss("offline mode and no cached " + endpoint + " entry for " + key);
    std::string body = fetch();
    write_file_atomically(path, body);
    return body;
}

HttpResponse ForgeClient::request(const std::string& path_and_query)
{
    if (m_config.offline || !m_transport)
        throw OfflineMiss("offline mode forbids network access (" + path_and_query + ")");
    if (!m_config.auth_token || m_config.auth_token->empty())
        throw NetworkError(std::string("no forge token configured (set ") + kForgeTokenEnv + ") and " + path_and_query
            + " is not cached");

    HttpHeaders headers {
        { "Accept", "application/vnd.github+json" },
        { "User-Agent", "commitshield" },
        { "X-GitHub-Api-Version", "2022-11-28" },
        { "Authorization", "Bearer " + *m_config.auth_token },
    };

    std::chrono::seconds last_retry_after { 0 };
    for (int attempt = 0; attempt <= m_config.max_retries; ++attempt) {
        HttpResponse response;
        {
            std::lock_guard lock(m_gate);
            ++m_requests;
            response = m_transport->get(path_and_query, headers);
        }
        if (response.status >= 200 && response.status < 300)
            return response;
        if (response.status == 404 || response.status == 422)
            throw NotFound("forge has no resource at " + path_and_query);

        bool retryable = is_rate_limited(response) || response.status >= 500;
        if (!retryable)
            throw NetworkError("forge answered " + std::to_string(response.status) + " for " + path_and_query);

        last_retry_after = retry_after_of(response);
        if (attempt == m_config.max_retries)
            break;
        auto backoff = m_config.initial_backoff * (1LL << attempt);
        auto wait = std::max<std::chrono::milliseconds>(backoff, last_retry_after);
        m_sleeper(wait);
    }
    throw RateLimited("forge kept refusing " + path_and_query + " after " + std::to_string(m_config.max_retries)
            + " retries",
        last_retry_after);
}

CommitRecord ForgeClient::fetch_commit(const CommitRef& ref)
{
    std::string path = "/repos/" + ref.repo_slug + "/commits/" + ref.sha;
    std::string body = cached_get("commit", ref.repo_slug + "|" + ref.sha, [&] { return request(path).body; });
    json payload;
    try {
        payload = json::parse(body);
    } catch (const json::exception& e) {
        throw SchemaError("commit payload for " + ref.display() + " is not JSON: " + e.what());
    }
    return commit_record_from_forge_json(payload, ref.repo_slug);
}

ResolvedReference ForgeClient::resolve_reference(const std::string& repo_slug, ReferenceNumber number)
{
    if (number.value <= 0)
        throw Error("reference numbers must be positive");
    std::string path = "/repos/" + repo_slug + "/issues/" + std::to_string(number.value);
    std::string body = cached_get("issue", repo_slug + "|" + std::to_string(number.value), [&] { return request(path).body; });
    json payload = json::parse(body);

    ResolvedReference out;
    out.number = number.value;
    out.kind = payload.contains("pull_request") ? ReferenceKind::pull_request : ReferenceKind::issue;
    if (payload.contains("title") && payload["title"].is_string())
        out.title = payload["title"].get<std::string>();
    if (payload.contains("body") && payload["body"].is_string())
        out.body = truncate_utf8(payload["body"].get<std::string>(), kMaxAttachmentChars);
    return out;
}

std::vector<std::string> ForgeClient::fetch_commit_comments(const CommitRef& ref)
{
    std::string base = "/repos/" + ref.repo_slug + "/commits/" + ref.sha + "/comments";
    std::string body = cached_get("comments", ref.repo_slug + "|" + ref.sha, [&] {
        json all = json::array();
        for (int page = 1;; ++page) {
            auto response = request(base + "?per_page=" + std::to_string(m_config.page_size) + "&page=" + std::to_string(page));
            json items = json::parse(response.body);
            if (!items.is_array())
                throw SchemaError("comment page is not an array");
            for (auto& item : items)
                all.push_back(std::move(item));
            bool more = response.headers.count("link") ? has_next_link(response)
                                                       : static_cast<int>(items.size()) == m_config.page_size;
            if (!more || items.empty())
                break;
        }
        return all.dump();
    });

    std::vector<std::string> comments;
    for (const auto& item : json::parse(body)) {
        if (item.contains("body") && item["body"].is_string())
            comments.push_back(truncate_utf8(item["body"].get<std::string>(), kMaxAttachmentChars));
    }
    return comments;
}

CommitRecord ForgeClient::fetch_enriched(const CommitRef& ref, std::vector<std::string>* warnings)
{
    CommitRecord record = fetch_commit(ref);
    for (auto number : extract_reference_numbers(record.message)) {
        try {
            auto resolved = resolve_reference(ref.repo_slug, number);
            ReferencedItem item { resolved.number, resolved.title, resolved.body };
            if (resolved.kind == ReferenceKind::pull_request)
                record.attachments.pull_requests.push_back(std::move(item));
            else
                record.attachments.issues.push_back(std::move(item));
        } catch (const NotFound& e) {
            if (warnings)
                warnings->push_back("dangling reference #" + std::to_string(number.value) + ": " + e.what());
        } catch (const OfflineMiss& e) {
            if (warnings)
                warnings->push_back("reference #" + std::to_string(number.value) + " not cached: " + e.what());
        }
    }
    record.attachments.unresolved_references = extract_unresolved_references(record.message);
    try {
        record.attachments.comments = fetch_commit_comments(ref);
    } catch (const OfflineMiss& e) {
        if (warnings)
            warnings->push_back(std::string("commit comments not cached: ") + e.what());
    }
    return record;
}

ForgeClient::CacheStats ForgeClient::cache_stats(const fs::path& cache_dir)
{
    CacheStats stats;
    if (!fs::exists(cache_dir))
        return stats;
    for (const auto& entry : fs::recursive_directory_iterator(cache_dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".json") {
            ++stats.files;
            stats.bytes += entry.file_size();
        }
    }
    return stats;
}

void ForgeClient::clear_cache(const fs::path& cache_dir)
{
    if (!fs::exists(cache_dir))
        return;
    for (const auto& endpoint : { "commit", "issue", "comments" })
        fs::remove_all(cache_dir / endpoint);
}

} // namespace commitshield
