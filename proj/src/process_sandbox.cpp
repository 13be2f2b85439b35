#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cstring>
#include <random>

#include "envforge/errors.hpp"
#include "envforge/sandbox.hpp"
#include "envforge/util.hpp"

namespace envforge {

namespace fs = std::filesystem;

namespace {

fs::path make_workspace_root() {
    auto base = fs::temp_directory_path() / "envforge-sandboxes";
    fs::create_directories(base);
    static std::atomic<unsigned> counter{0};
    std::random_device rd;
    for (int attempt = 0; attempt < 64; ++attempt) {
        auto name = "ws-" + std::to_string(::getpid()) + "-" +
                    std::to_string(counter++) + "-" + std::to_string(rd() & 0xffff);
        auto dir = base / name;
        if (fs::create_directory(dir)) return dir;
    }
    throw SandboxError("cannot allocate a workspace directory");
}

struct CaptureBuffer {
    std::string data;
    bool truncated = false;

    void append(const char* bytes, size_t n, size_t cap) {
        if (data.size() >= cap) {
            truncated = true;
            return;
        }
        size_t take = std::min(n, cap - data.size());
        data.append(bytes, take);
        if (take < n) truncated = true;
    }

    std::string finish(size_t cap) const {
        if (!truncated) return data;
        return data + "\n[output truncated at " + std::to_string(cap) + " bytes]\n";
    }
};

}  // namespace

std::unique_ptr<ProcessSandbox> ProcessSandbox::provision(const SandboxSpec& spec) {
    if (!fs::exists(spec.build_context) || !fs::is_directory(spec.build_context))
        throw SandboxError("build context missing: " + spec.build_context.string());
    if (!fs::exists(spec.build_context / "Dockerfile"))
        throw SandboxError("build context has no Dockerfile: " +
                           spec.build_context.string());
    if (spec.workdir.empty() || spec.workdir[0] != '/')
        throw SandboxError("workdir must be absolute: " + spec.workdir);

    auto sandbox = std::unique_ptr<ProcessSandbox>(new ProcessSandbox());
    sandbox->spec_ = spec;
    sandbox->root_ = make_workspace_root();
    sandbox->state_ = SandboxState::building;
    util::copy_tree(spec.build_context, sandbox->root_);

    // Interpret the Dockerfile's RUN steps so build failures surface the
    // same way as with a real image build. Everything else (FROM, CMD,
    // COPY — the context is already in place) is skipped.
    std::string dockerfile = util::read_text_file(sandbox->root_ / "Dockerfile");
    std::string pending;
    std::vector<std::string> run_steps;
    for (auto& line : util::split_lines(dockerfile)) {
        std::string t = util::trim(line);
        if (!pending.empty()) {
            if (!t.empty() && t.back() == '\\') {
                pending += " " + t.substr(0, t.size() - 1);
                continue;
            }
            pending += " " + t;
            run_steps.push_back(pending);
            pending.clear();
            continue;
        }
        if (t.rfind("RUN ", 0) == 0) {
            std::string cmd = util::trim(t.substr(4));
            if (!cmd.empty() && cmd.back() == '\\') {
                pending = cmd.substr(0, cmd.size() - 1);
            } else {
                run_steps.push_back(cmd);
            }
        }
    }
    sandbox->state_ = SandboxState::running;
    for (const auto& step : run_steps) {
        auto result = sandbox->exec_impl(step, spec.limits.default_timeout_s,
                                         kOutputCapBytes);
        if (result.exit_code != 0) {
            sandbox->state_ = SandboxState::destroyed;
            fs::remove_all(sandbox->root_);
            throw SandboxError("provisioning failed at: RUN " + step +
                               " (exit " + std::to_string(result.exit_code) +
                               ")\n" + result.stderr_text + result.stdout_text);
        }
    }
    return sandbox;
}

ProcessSandbox::~ProcessSandbox() {
    if (state_ != SandboxState::destroyed && !root_.empty()) {
        std::error_code ec;
        fs::remove_all(root_, ec);
    }
}

void ProcessSandbox::destroy() {
    if (!root_.empty()) {
        std::error_code ec;
        fs::remove_all(root_, ec);
    }
    state_ = SandboxState::destroyed;
}

fs::path ProcessSandbox::resolve(const std::string& path) const {
    std::string rel = path;
    if (!rel.empty() && rel[0] == '/') {
        // Absolute paths are interpreted against the configured workdir.
        if (rel.rfind(spec_.workdir, 0) == 0) {
            rel = rel.substr(spec_.workdir.size());
            while (!rel.empty() && rel[0] == '/') rel = rel.substr(1);
        } else {
            throw SandboxError("path escapes the workspace: " + path);
        }
    }
    fs::path target = root_ / rel;
    auto canonical_root = fs::weakly_canonical(root_);
    auto canonical_target = fs::weakly_canonical(target);
    if (canonical_target.string().rfind(canonical_root.string(), 0) != 0)
        throw SandboxError("path escapes the workspace: " + path);
    return target;
}

bool ProcessSandbox::file_exists(const std::string& path) {
    return fs::exists(resolve(path));
}

std::vector<std::string> ProcessSandbox::list_files(const std::string& dir) {
    return util::list_files_recursive(dir.empty() ? root_ : resolve(dir));
}

std::vector<std::uint8_t> ProcessSandbox::read_file_impl(const std::string& path) {
    auto target = resolve(path);
    if (!fs::exists(target)) throw SandboxError("file not found: " + path);
    return util::read_binary_file(target);
}

void ProcessSandbox::write_file_impl(const std::string& path,
                                     const std::vector<std::uint8_t>& content) {
    util::write_binary_file(resolve(path), content);
}

void ProcessSandbox::delete_file_impl(const std::string& path) {
    std::error_code ec;
    fs::remove(resolve(path), ec);
}

ExecResult ProcessSandbox::exec_impl(const std::string& command, int timeout_s,
                                     size_t output_cap) {
    int out_pipe[2], err_pipe[2];
    if (pipe(out_pipe) != 0 || pipe(err_pipe) != 0)
        throw SandboxError("pipe() failed: " + std::string(strerror(errno)));

    auto env_map = base_environment();
    env_map["HOME"] = root_.string();
    std::vector<std::string> env_strings;
    for (const auto& [k, v] : env_map) env_strings.push_back(k + "=" + v);
    std::vector<char*> envp;
    for (auto& s : env_strings) envp.push_back(s.data());
    envp.push_back(nullptr);

    const auto start = std::chrono::steady_clock::now();
    pid_t pid = fork();
    if (pid < 0) throw SandboxError("fork() failed: " + std::string(strerror(errno)));

    if (pid == 0) {
        // Child: own process group so a timeout can kill the whole tree.
        setpgid(0, 0);
        if (chdir(root_.c_str()) != 0) _exit(127);
        int devnull = open("/dev/null", O_RDONLY);
        if (devnull >= 0) dup2(devnull, STDIN_FILENO);
        dup2(out_pipe[1], STDOUT_FILENO);
        dup2(err_pipe[1], STDERR_FILENO);
        close(out_pipe[0]);
        close(out_pipe[1]);
        close(err_pipe[0]);
        close(err_pipe[1]);
        const char* argv[] = {"bash", "-c", command.c_str(), nullptr};
        execve("/bin/bash", const_cast<char* const*>(argv), envp.data());
        _exit(127);
    }

    setpgid(pid, pid);  // mirror the child's call; ignore EACCES after exec
    close(out_pipe[1]);
    close(err_pipe[1]);
    fcntl(out_pipe[0], F_SETFL, O_NONBLOCK);
    fcntl(err_pipe[0], F_SETFL, O_NONBLOCK);

    CaptureBuffer out_buf, err_buf;
    bool timed_out = false;
    const auto deadline = start + std::chrono::seconds(timeout_s);
    int open_fds = 2;
    struct pollfd fds[2] = {{out_pipe[0], POLLIN, 0}, {err_pipe[0], POLLIN, 0}};

    auto drain = [&](int idx, CaptureBuffer& buf) {
        char chunk[8192];
        ssize_t n;
        while ((n = read(fds[idx].fd, chunk, sizeof(chunk))) > 0)
            buf.append(chunk, static_cast<size_t>(n), output_cap);
        if (n == 0) {
            close(fds[idx].fd);
            fds[idx].fd = -1;
            --open_fds;
        }
    };

    while (open_fds > 0) {
        auto now = std::chrono::steady_clock::now();
        if (now >= deadline) {
            timed_out = true;
            kill(-pid, SIGKILL);
            // Keep draining until EOF so the child can be reaped.
        }
        int wait_ms = timed_out
                          ? 100
                          : static_cast<int>(
                                std::chrono::duration_cast<std::chrono::milliseconds>(
                                    deadline - now)
                                    .count() +
                                1);
        int rc = poll(fds, 2, std::max(1, wait_ms));
        if (rc < 0 && errno != EINTR)
            throw SandboxError("poll() failed: " + std::string(strerror(errno)));
        for (int i = 0; i < 2; ++i) {
            if (fds[i].fd >= 0 && (fds[i].revents & (POLLIN | POLLHUP)))
                drain(i, i == 0 ? out_buf : err_buf);
        }
    }

    int status = 0;
    waitpid(pid, &status, 0);
    if (timed_out) kill(-pid, SIGKILL);  // stragglers in the group

    ExecResult result;
    result.timed_out = timed_out;
    if (timed_out)
        result.exit_code = kTimeoutExitCode;
    else if (WIFEXITED(status))
        result.exit_code = WEXITSTATUS(status);
    else if (WIFSIGNALED(status))
        result.exit_code = 128 + WTERMSIG(status);
    else
        result.exit_code = -1;
    result.stdout_text = out_buf.finish(output_cap);
    result.stderr_text = err_buf.finish(output_cap);
    result.duration_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    return result;
}

}  // namespace envforge
