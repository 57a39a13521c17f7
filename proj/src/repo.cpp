#include "commitshield/repo.hpp"

#include <algorithm>
#include <atomic>
#include <cerrno>
#include <cstring>
#include <mutex>
#include <sstream>

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include "commitshield/process.hpp"

namespace commitshield {

namespace fs = std::filesystem;

namespace {

std::mutex g_worktree_mutex;
std::atomic<unsigned> g_worktree_counter { 0 };

const std::vector<std::pair<std::string, std::string>> kGitEnv {
    { "LC_ALL", "C" },
    { "LANG", "C" },
    { "GIT_TERMINAL_PROMPT", "0" },
    { "GIT_CONFIG_NOSYSTEM", "1" },
};

ProcessResult git(const fs::path& dir, std::vector<std::string> args)
{
    std::vector<std::string> argv { "git", "-c", "core.quotepath=off", "--no-pager" };
    if (!dir.empty()) {
        argv.push_back("-C");
        argv.push_back(dir.string());
    }
    argv.insert(argv.end(), args.begin(), args.end());
    return run_process(argv, {}, kGitEnv);
}

std::string git_ok(const fs::path& dir, std::vector<std::string> args)
{
    auto result = git(dir, args);
    if (!result.ok()) {
        std::string cmd;
        for (const auto& a : args)
            cmd += " " + a;
        throw RepoError("git" + cmd + " failed: " + result.err);
    }
    return result.out;
}

std::string trim(std::string text)
{
    while (!text.empty() && (text.back() == '\n' || text.back() == '\r' || text.back() == ' '))
        text.pop_back();
    return text;
}

std::vector<std::string> split_words(const std::string& text)
{
    std::vector<std::string> out;
    std::istringstream in(text);
    std::string word;
    while (in >> word)
        out.push_back(word);
    return out;
}

std::string flat_slug(const std::string& slug)
{
    std::string out = slug;
    std::replace(out.begin(), out.end(), '/', '_');
    return out;
}

// Advisory lock held for the object's lifetime.
class FileLock {
public:
    explicit FileLock(const fs::path& path)
    {
        fs::create_directories(path.parent_path());
        m_fd = ::open(path.c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0644);
        if (m_fd < 0)
            throw RepoError("cannot open lock file " + path.string() + ": " + std::strerror(errno));
        while (::flock(m_fd, LOCK_EX) != 0) {
            if (errno != EINTR)
                throw RepoError("cannot lock " + path.string() + ": " + std::strerror(errno));
        }
    }
    ~FileLock()
    {
        if (m_fd >= 0) {
            ::flock(m_fd, LOCK_UN);
            ::close(m_fd);
        }
    }
    FileLock(const FileLock&) = delete;
    FileLock& operator=(const FileLock&) = delete;

private:
    int m_fd = -1;
};

bool valid_slug(const std::string& slug)
{
    try {
        validate_commit_ref(slug, "0000000");
        return true;
    } catch (const MalformedSlug&) {
        return false;
    }
}

} // namespace

int count_lines(std::string_view text)
{
    int lines = static_cast<int>(std::count(text.begin(), text.end(), '\n'));
    if (!text.empty() && text.back() != '\n')
        ++lines;
    return lines;
}

RepoManager::RepoManager(RepoConfig config)
    : m_config(std::move(config))
{
}

RepoHandle RepoManager::ensure_clone(const std::string& slug)
{
    if (!valid_slug(slug))
        throw CloneFailed("invalid repository slug \"" + slug + "\"");

    fs::path clone_dir = m_config.workdir_root / "repos" / flat_slug(slug);
    FileLock lock(m_config.workdir_root / "locks" / (flat_slug(slug) + ".lock"));

    if (!fs::exists(clone_dir / ".git")) {
        std::string url = m_config.clone_url_template;
        if (auto pos = url.find("{slug}"); pos != std::string::npos)
            url.replace(pos, 6, slug);
        fs::remove_all(clone_dir);
        fs::create_directories(clone_dir.parent_path());
        auto result = git({}, { "clone", "--quiet", "--no-checkout", url, clone_dir.string() });
        if (!result.ok()) {
            fs::remove_all(clone_dir);
            if (result.err.find("No space left") != std::string::npos)
                throw DiskFull("clone of " + slug + " ran out of disk space");
            throw CloneFailed("clone of " + slug + " from " + url + " failed: " + trim(result.err));
        }
    }

    RepoHandle handle;
    handle.slug = slug;
    handle.clone_dir = clone_dir;
    handle.workdir = clone_dir;
    auto head = git(clone_dir, { "rev-parse", "--verify", "--quiet", "HEAD" });
    handle.current_revision = head.ok() ? trim(head.out) : std::string();
    return handle;
}

std::string RepoManager::resolve(const RepoHandle& handle, const std::string& revision) const
{
    auto result = git(handle.clone_dir, { "rev-parse", "--verify", "--quiet", revision + "^{commit}" });
    if (!result.ok() || trim(result.out).empty())
        throw UnknownCommit("unknown commit " + revision + " in " + handle.slug);
    return trim(result.out);
}

std::vector<std::string> RepoManager::parents(const RepoHandle& handle, const std::string& sha) const
{
    std::string full = resolve(handle, sha);
    auto words = split_words(git_ok(handle.clone_dir, { "rev-list", "--parents", "-n", "1", full }));
    if (words.empty())
        return {};
    return { words.begin() + 1, words.end() };
}

std::vector<std::string> RepoManager::first_parent_lineage(const RepoHandle& handle, const std::string& sha) const
{
    std::string full = resolve(handle, sha);
    return split_words(git_ok(handle.clone_dir, { "rev-list", "--first-parent", full }));
}

std::string RepoManager::checkout_parent(RepoHandle& handle, const std::string& commit)
{
    auto ps = parents(handle, commit);
    if (ps.empty())
        throw RootCommit(commit + " in " + handle.slug + " is a root commit");
    checkout(handle, ps.front());
    return ps.front();
}

void RepoManager::checkout(RepoHandle& handle, const std::string& revision)
{
    std::string full = resolve(handle, revision);
    release(handle);

    std::lock_guard guard(g_worktree_mutex);
    FileLock lock(m_config.workdir_root / "locks" / (flat_slug(handle.slug) + ".worktrees.lock"));
    fs::path path = m_config.workdir_root / "worktrees" / flat_slug(handle.slug)
        / (full.substr(0, 12) + "-" + std::to_string(::getpid()) + "-" + std::to_string(g_worktree_counter++));
    fs::create_directories(path.parent_path());
    auto result = git(handle.clone_dir, { "worktree", "add", "--quiet", "--detach", "--force", path.string(), full });
    if (!result.ok()) {
        if (result.err.find("No space left") != std::string::npos)
            throw DiskFull("no space for worktree of " + handle.slug);
        throw RepoError("worktree for " + full + " failed: " + trim(result.err));
    }
    handle.workdir = path;
    handle.current_revision = full;
    handle.owns_worktree = true;
}

void RepoManager::release(RepoHandle& handle)
{
    if (!handle.owns_worktree)
        return;
    std::lock_guard guard(g_worktree_mutex);
    auto result = git(handle.clone_dir, { "worktree", "remove", "--force", handle.workdir.string() });
    if (!result.ok()) {
        std::error_code ec;
        fs::remove_all(handle.workdir, ec);
        git(handle.clone_dir, { "worktree", "prune" });
    }
    handle.workdir = handle.clone_dir;
    handle.owns_worktree = false;
}

bool RepoManager::path_exists_at(const RepoHandle& handle, const std::string& sha, const std::string& path) const
{
    return git(handle.clone_dir, { "cat-file", "-e", sha + ":" + path }).ok();
}

FileContent RepoManager::file_at_revision(const RepoHandle& handle, const std::string& sha, const std::string& path) const
{
    if (!path_exists_at(handle, sha, path))
        throw PathAbsentAtRevision(path + " does not exist at " + sha);
    FileContent content;
    content.bytes = git_ok(handle.clone_dir, { "cat-file", "blob", sha + ":" + path });
    content.line_count = count_lines(content.bytes);
    return content;
}

std::vector<CommitRef> RepoManager::history_of_file(const RepoHandle& handle, const HistoryQuery& query) const
{
    if (query.max_commits && *query.max_commits < 1)
        throw Error("max_commits must be at least 1");
    std::string upto = resolve(handle, query.upto);
    if (!path_exists_at(handle, upto, query.path))
        throw PathAbsentAtRevision(query.path + " does not exist at " + upto);

    std::vector<std::string> args { "log", "--first-parent", "--format=%H" };
    if (query.follow_renames)
        args.push_back("--follow");
    if (query.max_commits)
        args.push_back("--max-count=" + std::to_string(*query.max_commits));
    args.push_back(upto);
    args.push_back("--");
    args.push_back(query.path);

    std::vector<CommitRef> out;
    for (const auto& sha : split_words(git_ok(handle.clone_dir, args)))
        out.push_back(validate_commit_ref(handle.slug, sha));
    return out;
}

std::vector<LineHistoryEntry> RepoManager::line_history(const RepoHandle& handle, const std::string& path, LineSpan range,
    const std::string& upto) const
{
    std::string rev = resolve(handle, upto);
    auto content = file_at_revision(handle, rev, path);
    if (range.empty() || range.start < 1 || range.end > content.line_count)
        throw RangeOutOfBounds("lines " + std::to_string(range.start) + "-" + std::to_string(range.end) + " outside "
            + path + " (" + std::to_string(content.line_count) + " lines)");

    std::string out = git_ok(handle.clone_dir,
        { "log", "--first-parent", "--no-color", "--format=%x00%H",
            "-L" + std::to_string(range.start) + "," + std::to_string(range.end) + ":" + path, rev });

    std::vector<LineHistoryEntry> entries;
    std::size_t pos = 0;
    while ((pos = out.find('\0', pos)) != std::string::npos) {
        std::size_t next = out.find('\0', pos + 1);
        std::string chunk = out.substr(pos + 1, next == std::string::npos ? std::string::npos : next - pos - 1);
        auto nl = chunk.find('\n');
        std::string sha = trim(chunk.substr(0, nl));
        std::string patch = nl == std::string::npos ? std::string() : chunk.substr(nl + 1);
        while (!patch.empty() && patch.front() == '\n')
            patch.erase(patch.begin());
        entries.push_back({ validate_commit_ref(handle.slug, sha), patch });
        pos = next;
    }
    return entries;
}

std::string RepoManager::commit_patch(const RepoHandle& handle, const std::string& sha) const
{
    std::string full = resolve(handle, sha);
    auto ps = parents(handle, full);
    if (ps.empty())
        return git_ok(handle.clone_dir, { "diff-tree", "-p", "--root", "--no-commit-id", "--no-color", "-M", full });
    return git_ok(handle.clone_dir, { "diff", "--no-color", "--no-ext-diff", "-M", ps.front(), full });
}

std::vector<std::string> RepoManager::list_files(const RepoHandle& handle) const
{
    std::string out = git_ok(handle.workdir, { "ls-files", "-z" });
    std::vector<std::string> files;
    std::size_t start = 0;
    while (start < out.size()) {
        auto end = out.find('\0', start);
        if (end == std::string::npos)
            end = out.size();
        if (end > start)
            files.emplace_back(out.substr(start, end - start));
        start = end + 1;
    }
    std::sort(files.begin(), files.end());
    return files;
}

} // namespace commitshield
