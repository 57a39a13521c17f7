#include "commitshield/process.hpp"

#include <cerrno>
#include <cstring>
#include <map>

#include <fcntl.h>
#include <poll.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

extern char** environ;

namespace commitshield {

namespace {

struct Pipe {
    int fds[2] = { -1, -1 };

    Pipe()
    {
        if (pipe2(fds, O_CLOEXEC) != 0)
            throw ProcessError(std::string("pipe: ") + std::strerror(errno));
    }
    ~Pipe()
    {
        close_read();
        close_write();
    }
    Pipe(const Pipe&) = delete;
    Pipe& operator=(const Pipe&) = delete;

    void close_read()
    {
        if (fds[0] >= 0)
            ::close(fds[0]);
        fds[0] = -1;
    }
    void close_write()
    {
        if (fds[1] >= 0)
            ::close(fds[1]);
        fds[1] = -1;
    }
};

class SpawnActions {
public:
    SpawnActions() { posix_spawn_file_actions_init(&m_actions); }
    ~SpawnActions() { posix_spawn_file_actions_destroy(&m_actions); }
    SpawnActions(const SpawnActions&) = delete;
    SpawnActions& operator=(const SpawnActions&) = delete;
    posix_spawn_file_actions_t* get() { return &m_actions; }

private:
    posix_spawn_file_actions_t m_actions;
};

std::vector<std::string> build_environment(const std::vector<std::pair<std::string, std::string>>& extra)
{
    std::map<std::string, std::string> env;
    for (char** e = environ; e && *e; ++e) {
        std::string_view entry(*e);
        auto eq = entry.find('=');
        if (eq == std::string_view::npos)
            continue;
        env[std::string(entry.substr(0, eq))] = std::string(entry.substr(eq + 1));
    }
    for (const auto& [key, value] : extra)
        env[key] = value;

    std::vector<std::string> out;
    out.reserve(env.size());
    for (const auto& [key, value] : env)
        out.push_back(key + "=" + value);
    return out;
}

} // namespace

ProcessResult run_process(const std::vector<std::string>& argv, const std::filesystem::path& cwd,
    const std::vector<std::pair<std::string, std::string>>& extra_env)
{
    if (argv.empty())
        throw ProcessError("empty command line");

    Pipe out_pipe;
    Pipe err_pipe;
    SpawnActions actions;
    posix_spawn_file_actions_addopen(actions.get(), STDIN_FILENO, "/dev/null", O_RDONLY, 0);
    posix_spawn_file_actions_adddup2(actions.get(), out_pipe.fds[1], STDOUT_FILENO);
    posix_spawn_file_actions_adddup2(actions.get(), err_pipe.fds[1], STDERR_FILENO);

    if (!cwd.empty())
        posix_spawn_file_actions_addchdir_np(actions.get(), cwd.c_str());

    std::vector<std::string> command = argv;
    std::vector<char*> c_argv;
    for (auto& arg : command)
        c_argv.push_back(arg.data());
    c_argv.push_back(nullptr);

    auto env_strings = build_environment(extra_env);
    std::vector<char*> c_env;
    for (auto& entry : env_strings)
        c_env.push_back(entry.data());
    c_env.push_back(nullptr);

    pid_t pid = 0;
    int rc = posix_spawnp(&pid, c_argv[0], actions.get(), nullptr, c_argv.data(), c_env.data());
    if (rc != 0)
        throw ProcessError("failed to start " + argv[0] + ": " + std::strerror(rc));

    out_pipe.close_write();
    err_pipe.close_write();

    ProcessResult result;
    pollfd fds[2] = { { out_pipe.fds[0], POLLIN, 0 }, { err_pipe.fds[0], POLLIN, 0 } };
    std::string* sinks[2] = { &result.out, &result.err };
    int open_streams = 2;
    char buffer[65536];
    while (open_streams > 0) {
        if (poll(fds, 2, -1) < 0) {
            if (errno == EINTR)
                continue;
            break;
        }
        for (int i = 0; i < 2; ++i) {
            if (fds[i].fd < 0 || !(fds[i].revents & (POLLIN | POLLHUP | POLLERR)))
                continue;
            ssize_t n = ::read(fds[i].fd, buffer, sizeof buffer);
            if (n > 0) {
                sinks[i]->append(buffer, static_cast<size_t>(n));
            } else if (n == 0 || errno != EINTR) {
                fds[i].fd = -1;
                --open_streams;
            }
        }
    }

    int status = 0;
    while (waitpid(pid, &status, 0) < 0) {
        if (errno != EINTR)
            throw ProcessError(std::string("waitpid: ") + std::strerror(errno));
    }
    result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : 128 + WTERMSIG(status);
    return result;
}

} // namespace commitshield
