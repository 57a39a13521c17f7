// Local repository lifecycle over the git command-line tool.
//
// Each repository is cloned once (full history) below workdir_root/repos.
// Analyses never move the clone's own HEAD: checkout_parent() hands out a
// detached worktree under workdir_root/worktrees that belongs to one handle.
#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "commitshield/diff.hpp"
#include "commitshield/model.hpp"

namespace commitshield {

class RepoError : public Error {
public:
    using Error::Error;
};
class CloneFailed : public RepoError {
public:
    using RepoError::RepoError;
};
class DiskFull : public RepoError {
public:
    using RepoError::RepoError;
};
class UnknownCommit : public RepoError {
public:
    using RepoError::RepoError;
};
class RootCommit : public RepoError {
public:
    using RepoError::RepoError;
};
class PathAbsentAtRevision : public RepoError {
public:
    using RepoError::RepoError;
};
class RangeOutOfBounds : public RepoError {
public:
    using RepoError::RepoError;
};

struct RepoConfig {
    std::filesystem::path workdir_root = ".commitshield-work";
    // "{slug}" is replaced by owner/name.
    std::string clone_url_template = "https://github.com/{slug}.git";
};

struct RepoHandle {
    std::string slug;
    std::filesystem::path clone_dir;
    // Checked-out tree; equals clone_dir until a worktree is assigned.
    std::filesystem::path workdir;
    std::string current_revision;
    bool owns_worktree = false;
};

struct HistoryQuery {
    std::string path;
    std::string upto;
    bool follow_renames = false;
    std::optional<int> max_commits = 500;
};

struct FileContent {
    std::string bytes;
    int line_count = 0;
};

struct LineHistoryEntry {
    CommitRef commit;
    std::string patch_text;
};

class RepoManager {
public:
    explicit RepoManager(RepoConfig config);

    RepoHandle ensure_clone(const std::string& slug);

    /// Puts the handle on a fresh worktree at the first parent of `commit`.
    std::string checkout_parent(RepoHandle& handle, const std::string& commit);
    /// Puts the handle on a fresh worktree at `revision`.
    void checkout(RepoHandle& handle, const std::string& revision);
    /// Removes the handle's worktree, if any.
    void release(RepoHandle& handle);

    /// Full sha of a revision, or UnknownCommit.
    std::string resolve(const RepoHandle& handle, const std::string& revision) const;
    std::vector<std::string> parents(const RepoHandle& handle, const std::string& sha) const;
    /// sha, its first parent, that one's first parent, ... (newest first).
    std::vector<std::string> first_parent_lineage(const RepoHandle& handle, const std::string& sha) const;

    bool path_exists_at(const RepoHandle& handle, const std::string& sha, const std::string& path) const;
    FileContent file_at_revision(const RepoHandle& handle, const std::string& sha, const std::string& path) const;

    std::vector<CommitRef> history_of_file(const RepoHandle& handle, const HistoryQuery& query) const;
    std::vector<LineHistoryEntry> line_history(const RepoHandle& handle, const std::string& path, LineSpan range,
        const std::string& upto) const;
    /// First-parent diff of `sha`; the root commit is diffed against the empty tree.
    std::string commit_patch(const RepoHandle& handle, const std::string& sha) const;

    /// Tracked files of the handle's working tree.
    std::vector<std::string> list_files(const RepoHandle& handle) const;

    const RepoConfig& config() const { return m_config; }

private:
    RepoConfig m_config;
};

int count_lines(std::string_view text);

} // namespace commitshield
