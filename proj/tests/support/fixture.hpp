// Test helpers: scratch directories, scripted git repositories and a fake forge.
#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "commitshield/forge.hpp"
#include "commitshield/llm.hpp"
#include "commitshield/repo.hpp"
#include "commitshield/vfd.hpp"

namespace cstest {

namespace fs = std::filesystem;
using commitshield::json;

fs::path fixture_dir();
std::string read_text(const fs::path& path);
void write_text(const fs::path& path, const std::string& text);

class TempDir {
public:
    explicit TempDir(const std::string& tag = "cs");
    ~TempDir();
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const fs::path& path() const { return m_path; }

private:
    fs::path m_path;
};

// Path -> new content; nullopt deletes the file.
using FileChanges = std::map<std::string, std::optional<std::string>>;

/// A git repository whose commits get fixed, increasing timestamps.
class GitRepo {
public:
    explicit GitRepo(fs::path dir);

    std::string commit(const FileChanges& changes, const std::string& message);
    std::string rename(const std::string& from, const std::string& to, const std::string& message);
    std::string git(const std::vector<std::string>& args) const;

    const fs::path& dir() const { return m_dir; }

private:
    std::string commit_staged(const std::string& message);

    fs::path m_dir;
    int m_clock = 0;
};

/// The commit in the shape of the forge's single-commit endpoint.
json forge_commit_payload(const GitRepo& repo, const std::string& slug, const std::string& sha);

/// Serves canned bodies by path (query string ignored); everything else is 404.
class FakeTransport : public commitshield::Transport {
public:
    commitshield::HttpResponse get(const std::string& path_and_query, const commitshield::HttpHeaders& headers) override;

    void add(const std::string& path, const std::string& body, int status = 200);
    int calls() const { return m_calls; }

private:
    std::map<std::string, commitshield::HttpResponse> m_routes;
    int m_calls = 0;
};

/// Routes for the commit, an empty comment list and any issues given.
void add_commit_routes(FakeTransport& transport, const std::string& slug, const json& payload);
void add_issue_route(FakeTransport& transport, const std::string& slug, int number, const std::string& title,
    const std::string& body, bool pull_request = false);

/// Writes the commits into the forge cache so later runs can go offline.
void seed_forge_cache(const fs::path& cache_dir, const std::string& slug, const GitRepo& repo,
    const std::vector<std::string>& shas);

/// Origin repositories live under <root>/origin/<owner>/<name>; clones under <root>/work.
struct Workspace {
    TempDir temp { "ws" };
    fs::path origin_root() const { return temp.path() / "origin"; }
    fs::path cache_dir() const { return temp.path() / "cache"; }
    fs::path work_dir() const { return temp.path() / "work"; }
    GitRepo make_repo(const std::string& slug) const;
    commitshield::RepoConfig repo_config() const;
    commitshield::ForgeConfig offline_forge() const;
};

/// Forge, repos, backend and context bundled for pipeline tests.
struct Pipeline {
    Pipeline(const Workspace& ws, json scenario);

    commitshield::ForgeClient forge;
    commitshield::RepoManager repos;
    commitshield::MockBackend backend;
    commitshield::PipelineContext ctx;
};

} // namespace cstest
