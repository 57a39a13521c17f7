#include "fixture.hpp"

#include <atomic>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

#include "commitshield/process.hpp"

namespace cstest {

using namespace commitshield;

namespace {

std::vector<std::string> lines_of(const std::string& text)
{
    std::vector<std::string> out;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line))
        out.push_back(line);
    return out;
}

std::string hunk_body(const std::string& diff)
{
    auto pos = diff.find("\n@@");
    if (diff.rfind("@@", 0) == 0)
        pos = 0;
    else if (pos == std::string::npos)
        return {};
    else
        ++pos;
    std::string body = diff.substr(pos);
    if (!body.empty() && body.back() == '\n')
        body.pop_back();
    return body;
}

} // namespace

fs::path fixture_dir() { return CS_FIXTURE_DIR; }

std::string read_text(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const fs::path& path, const std::string& text)
{
    if (path.has_parent_path())
        fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    out << text;
}

TempDir::TempDir(const std::string& tag)
{
    static std::atomic<int> counter { 0 };
    std::random_device rd;
    m_path = fs::temp_directory_path()
        / ("cstest-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++) + "-"
            + std::to_string(rd() % 100000));
    fs::create_directories(m_path);
}

TempDir::~TempDir()
{
    std::error_code ec;
    fs::remove_all(m_path, ec);
}

GitRepo::GitRepo(fs::path dir)
    : m_dir(std::move(dir))
{
    fs::create_directories(m_dir);
    git({ "init", "--quiet", "--initial-branch=main" });
    git({ "config", "user.name", "Fixture Author" });
    git({ "config", "user.email", "fixture@example.com" });
    git({ "config", "commit.gpgsign", "false" });
    git({ "config", "core.autocrlf", "false" });
}

std::string GitRepo::git(const std::vector<std::string>& args) const
{
    std::vector<std::string> argv { "git" };
    argv.insert(argv.end(), args.begin(), args.end());
    std::string stamp = "@" + std::to_string(1'700'000'000 + m_clock * 3600) + " +0000";
    auto result = run_process(argv, m_dir,
        { { "GIT_AUTHOR_DATE", stamp }, { "GIT_COMMITTER_DATE", stamp }, { "GIT_CONFIG_NOSYSTEM", "1" },
            { "HOME", m_dir.string() } });
    if (!result.ok())
        throw std::runtime_error("git " + (args.empty() ? std::string() : args[0]) + " failed: " + result.err);
    return result.out;
}

std::string GitRepo::commit_staged(const std::string& message)
{
    ++m_clock;
    git({ "commit", "--quiet", "--allow-empty", "-m", message });
    std::string sha = git({ "rev-parse", "HEAD" });
    while (!sha.empty() && (sha.back() == '\n' || sha.back() == ' '))
        sha.pop_back();
    return sha;
}

std::string GitRepo::commit(const FileChanges& changes, const std::string& message)
{
    for (const auto& [path, content] : changes) {
        if (content) {
            write_text(m_dir / path, *content);
            git({ "add", "--", path });
        } else {
            git({ "rm", "--quiet", "--", path });
        }
    }
    return commit_staged(message);
}

std::string GitRepo::rename(const std::string& from, const std::string& to, const std::string& message)
{
    if (fs::path(to).has_parent_path())
        fs::create_directories(m_dir / fs::path(to).parent_path());
    git({ "mv", from, to });
    return commit_staged(message);
}

json forge_commit_payload(const GitRepo& repo, const std::string& slug, const std::string& sha)
{
    std::string info = repo.git({ "show", "-s", "--format=%P%n%aI%n%B", sha });
    auto nl1 = info.find('\n');
    auto nl2 = info.find('\n', nl1 + 1);
    std::string parent_line = info.substr(0, nl1);
    std::string date = info.substr(nl1 + 1, nl2 - nl1 - 1);
    std::string message = info.substr(nl2 + 1);
    while (!message.empty() && message.back() == '\n')
        message.pop_back();

    json parents = json::array();
    std::istringstream ps(parent_line);
    std::string p;
    while (ps >> p)
        parents.push_back({ { "sha", p } });

    json files = json::array();
    std::string base = parents.empty() ? std::string("4b825dc642cb6eb9a060e54bf8d69288fbee4904") : parents[0]["sha"].get<std::string>();
    for (const auto& row : lines_of(repo.git({ "diff", "--name-status", "-M", base, sha }))) {
        std::istringstream fields(row);
        std::string status, first, second;
        std::getline(fields, status, '\t');
        std::getline(fields, first, '\t');
        std::getline(fields, second, '\t');
        json file;
        std::vector<std::string> pathspec { "diff", "-M", base, sha, "--" };
        if (status[0] == 'R') {
            file["status"] = "renamed";
            file["previous_filename"] = first;
            file["filename"] = second;
            pathspec.push_back(first);
            pathspec.push_back(second);
        } else {
            file["status"] = status[0] == 'A' ? "added" : status[0] == 'D' ? "removed" : "modified";
            file["filename"] = first;
            pathspec.push_back(first);
        }
        std::string body = hunk_body(repo.git(pathspec));
        int additions = 0, deletions = 0;
        for (const auto& l : lines_of(body)) {
            if (l.rfind("+", 0) == 0)
                ++additions;
            else if (l.rfind("-", 0) == 0)
                ++deletions;
        }
        file["additions"] = additions;
        file["deletions"] = deletions;
        file["changes"] = additions + deletions;
        if (!body.empty())
            file["patch"] = body;
        files.push_back(file);
    }

    return json {
        { "sha", sha },
        { "html_url", "https://github.com/" + slug + "/commit/" + sha },
        { "commit", { { "message", message }, { "author", { { "name", "Fixture Author" }, { "date", date } } } } },
        { "parents", parents },
        { "files", files },
    };
}

HttpResponse FakeTransport::get(const std::string& path_and_query, const HttpHeaders&)
{
    ++m_calls;
    std::string path = path_and_query.substr(0, path_and_query.find('?'));
    auto it = m_routes.find(path);
    if (it == m_routes.end())
        return { 404, {}, R"({"message":"Not Found"})" };
    return it->second;
}

void FakeTransport::add(const std::string& path, const std::string& body, int status)
{
    m_routes[path] = HttpResponse { status, {}, body };
}

void add_commit_routes(FakeTransport& transport, const std::string& slug, const json& payload)
{
    std::string sha = payload.at("sha").get<std::string>();
    transport.add("/repos/" + slug + "/commits/" + sha, payload.dump());
    transport.add("/repos/" + slug + "/commits/" + sha + "/comments", "[]");
}

void add_issue_route(FakeTransport& transport, const std::string& slug, int number, const std::string& title,
    const std::string& body, bool pull_request)
{
    json issue { { "number", number }, { "title", title }, { "body", body } };
    if (pull_request)
        issue["pull_request"] = { { "url", "https://example.invalid/pr" } };
    transport.add("/repos/" + slug + "/issues/" + std::to_string(number), issue.dump());
}

void seed_forge_cache(const fs::path& cache_dir, const std::string& slug, const GitRepo& repo,
    const std::vector<std::string>& shas)
{
    auto transport = std::make_shared<FakeTransport>();
    for (const auto& sha : shas)
        add_commit_routes(*transport, slug, forge_commit_payload(repo, slug, sha));
    ForgeConfig config;
    config.cache_dir = cache_dir;
    config.auth_token = "fixture-token";
    config.max_retries = 0;
    ForgeClient client(config, transport, [](std::chrono::milliseconds) {});
    for (const auto& sha : shas)
        client.fetch_enriched(validate_commit_ref(slug, sha));
}

GitRepo Workspace::make_repo(const std::string& slug) const { return GitRepo(origin_root() / slug); }

RepoConfig Workspace::repo_config() const
{
    return RepoConfig { work_dir(), (origin_root() / "{slug}").string() };
}

ForgeConfig Workspace::offline_forge() const
{
    ForgeConfig config;
    config.cache_dir = cache_dir();
    config.offline = true;
    return config;
}

Pipeline::Pipeline(const Workspace& ws, json scenario)
    : forge(ws.offline_forge())
    , repos(ws.repo_config())
    , backend(std::move(scenario))
    , ctx { forge, repos, backend }
{
}

} // namespace cstest
