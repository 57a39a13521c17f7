// Code-forge REST client with a persistent on-disk response cache.
//
// Endpoints (GitHub REST v3 shapes):
//   GET /repos/{slug}/commits/{sha}
//   GET /repos/{slug}/issues/{n}
//   GET /repos/{slug}/commits/{sha}/comments
//
// Every successful response is cached as one JSON file per (endpoint, key
// hash) below cache_dir. Commits are immutable, so entries never expire.
// With offline=true the transport is never touched and a cache miss is an
// OfflineMiss error.
#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "commitshield/model.hpp"

namespace commitshield {

inline constexpr const char* kForgeTokenEnv = "COMMITSHIELD_FORGE_TOKEN";
inline constexpr std::size_t kMaxAttachmentChars = 20000;

struct ForgeConfig {
    std::string api_base_url = "https://api.github.com";
    std::optional<std::string> auth_token;
    std::filesystem::path cache_dir = ".commitshield-cache";
    bool offline = false;
    std::chrono::seconds request_timeout { 30 };
    int max_retries = 5;
    std::chrono::milliseconds initial_backoff { 2000 };
    int page_size = 100;
};

class ForgeError : public Error {
public:
    using Error::Error;
};

class NotFound : public ForgeError {
public:
    using ForgeError::ForgeError;
};

class RateLimited : public ForgeError {
public:
    RateLimited(const std::string& what, std::chrono::seconds retry_after)
        : ForgeError(what)
        , m_retry_after(retry_after)
    {
    }
    std::chrono::seconds retry_after() const { return m_retry_after; }

private:
    std::chrono::seconds m_retry_after;
};

class OfflineMiss : public ForgeError {
public:
    using ForgeError::ForgeError;
};

/// The forge returned the file entry without its diff body.
class PatchTooLarge : public ForgeError {
public:
    using ForgeError::ForgeError;
};

/// Connection failure, unexpected status, or no credentials for a required request.
class NetworkError : public ForgeError {
public:
    using ForgeError::ForgeError;
};

struct HttpResponse {
    int status = 0;
    std::map<std::string, std::string> headers; // lowercase names
    std::string body;
};

using HttpHeaders = std::vector<std::pair<std::string, std::string>>;

/// Performs GET requests against the forge; path_and_query is relative to the API base.
class Transport {
public:
    virtual ~Transport() = default;
    virtual HttpResponse get(const std::string& path_and_query, const HttpHeaders& headers) = 0;
};

class HttplibTransport : public Transport {
public:
    HttplibTransport(std::string base_url, std::chrono::seconds timeout);
    HttpResponse get(const std::string& path_and_query, const HttpHeaders& headers) override;

private:
    std::string m_base_url;
    std::chrono::seconds m_timeout;
};

struct ReferenceNumber {
    int value = 0;
    friend bool operator==(const ReferenceNumber&, const ReferenceNumber&) = default;
};

/// Same-repository "#<digits>" references, deduplicated in order of first appearance.
std::vector<ReferenceNumber> extract_reference_numbers(std::string_view message);

/// Cross-repository "owner/repo#n" references and URLs, verbatim.
std::vector<std::string> extract_unresolved_references(std::string_view message);

/// Cuts text to at most max_chars UTF-8 code points.
std::string truncate_utf8(std::string text, std::size_t max_chars);

enum class ReferenceKind { issue, pull_request };

struct ResolvedReference {
    ReferenceKind kind = ReferenceKind::issue;
    int number = 0;
    std::string title;
    std::string body;
};

class ForgeClient {
public:
    using Sleeper = std::function<void(std::chrono::milliseconds)>;

    /// A null transport means the default HTTP transport built from the config.
    explicit ForgeClient(ForgeConfig config, std::shared_ptr<Transport> transport = nullptr, Sleeper sleeper = nullptr);

    CommitRecord fetch_commit(const CommitRef& ref);
    ResolvedReference resolve_reference(const std::string& repo_slug, ReferenceNumber number);
    std::vector<std::string> fetch_commit_comments(const CommitRef& ref);

    /// fetch_commit plus resolved "#n" references and commit comments. Dangling
    /// references are skipped and reported through `warnings`.
    CommitRecord fetch_enriched(const CommitRef& ref, std::vector<std::string>* warnings = nullptr);

    /// Requests handed to the transport so far (cache hits excluded).
    std::uint64_t network_requests() const { return m_requests.load(); }

    const ForgeConfig& config() const { return m_config; }

    struct CacheStats {
        std::size_t files = 0;
        std::uintmax_t bytes = 0;
    };
    static CacheStats cache_stats(const std::filesystem::path& cache_dir);
    static void clear_cache(const std::filesystem::path& cache_dir);

private:
    std::string cached_get(const std::string& endpoint, const std::string& key, const std::function<std::string()>& fetch);
    HttpResponse request(const std::string& path_and_query);
    std::filesystem::path cache_path(const std::string& endpoint, const std::string& key) const;

    ForgeConfig m_config;
    std::shared_ptr<Transport> m_transport;
    Sleeper m_sleeper;
    std::mutex m_gate;
    std::atomic<std::uint64_t> m_requests { 0 };
};

/// Builds a CommitRecord from a forge commit payload.
CommitRecord commit_record_from_forge_json(const json& payload, const std::string& repo_slug);

} // namespace commitshield
