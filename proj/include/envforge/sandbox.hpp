#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace envforge {

struct ResourceLimits {
    int cpu_count = 1;
    std::int64_t memory_bytes = 2LL * 1024 * 1024 * 1024;
    int default_timeout_s = 120;
};

struct SandboxSpec {
    std::filesystem::path build_context;  // must contain a Dockerfile
    std::string workdir = "/workspace";   // absolute path inside the environment
    ResourceLimits limits;
};

enum class SandboxState { building, running, stopped, destroyed };

// Exit code reported when a command exceeds its timeout and the process
// tree is terminated.
constexpr int kTimeoutExitCode = 124;

// stdout/stderr captured per exec are capped at this many bytes each, with
// an explicit truncation marker appended.
constexpr size_t kOutputCapBytes = 64 * 1024;

struct ExecResult {
    int exit_code = 0;
    std::string stdout_text;
    std::string stderr_text;
    double duration_s = 0.0;
    bool timed_out = false;
};

struct SnapshotEntry {
    std::vector<std::uint8_t> content;
    std::string digest;  // sha256 of content
};

// Byte-exact capture of every regular file under one root, the canonical
// test suite used for tamper-proof reward computation.
struct TestSnapshot {
    std::string root;  // e.g. "tests"
    std::map<std::string, SnapshotEntry> entries;  // path relative to root

    std::map<std::string, std::string> digest_set() const;
};

struct DiffStats {
    int files_changed = 0;
    int lines_added = 0;
    int lines_deleted = 0;
    int lines_edited() const { return lines_added + lines_deleted; }
};

struct WorkspaceDiff {
    std::string unified;
    DiffStats stats;
};

// One instance == one handle. Execution is serialized per handle; distinct
// handles are fully independent.
class Sandbox {
public:
    virtual ~Sandbox() = default;

    SandboxState state() const { return state_; }
    const SandboxSpec& spec() const { return spec_; }

    // Runs `bash -c command` in the workdir with a clean environment.
    // Output capped at kOutputCapBytes per stream. Throws StateError unless
    // running.
    ExecResult exec(const std::string& command, int timeout_s);
    ExecResult exec(const std::string& command) {
        return exec(command, spec_.limits.default_timeout_s);
    }

    std::vector<std::uint8_t> read_file(const std::string& path);
    void write_file(const std::string& path, const std::vector<std::uint8_t>& content);
    void write_file(const std::string& path, std::string_view content);
    virtual bool file_exists(const std::string& path) = 0;

    // Regular files under dir (relative, sorted). dir "" = whole workspace.
    virtual std::vector<std::string> list_files(const std::string& dir) = 0;

    // Byte-exact capture of all files under root. Throws SandboxError when
    // root does not exist.
    TestSnapshot snapshot_tests(const std::string& root);

    // Makes root equal the snapshot exactly: extraneous files deleted,
    // missing files recreated, modified files overwritten. Verifies the
    // result and throws SandboxError on any mismatch so rewards are never
    // computed on partial state.
    void restore_tests(const TestSnapshot& snapshot);

    // Initializes version control on first use and commits the current
    // workspace; returns the commit ref usable as a diff baseline.
    std::string commit_baseline(const std::string& label);

    // Unified diff of the current workspace against a baseline ref plus
    // line counts derived from it.
    WorkspaceDiff workspace_diff(const std::string& baseline_ref);

    virtual void stop() { state_ = SandboxState::stopped; }
    virtual void destroy() { state_ = SandboxState::destroyed; }

    // Extra environment variables applied to every exec (the pipeline pins
    // VCS author/date variables here in replay mode for determinism).
    void set_extra_env(const std::map<std::string, std::string>& env);

protected:
    // Primitive operations implemented by backends. Paths are workspace
    // relative; exec_impl receives the full environment to use.
    virtual ExecResult exec_impl(const std::string& command, int timeout_s,
                                 size_t output_cap) = 0;
    virtual std::vector<std::uint8_t> read_file_impl(const std::string& path) = 0;
    virtual void write_file_impl(const std::string& path,
                                 const std::vector<std::uint8_t>& content) = 0;
    virtual void delete_file_impl(const std::string& path) = 0;

    std::map<std::string, std::string> base_environment() const;

    SandboxSpec spec_;
    SandboxState state_ = SandboxState::building;
    std::map<std::string, std::string> extra_env_;
    std::mutex exec_mutex_;
    bool vcs_initialized_ = false;
};

// Process-local backend: plain subprocesses in a temporary directory behind
// the same interface, for running the pipeline and its tests without a
// container runtime. Dockerfile RUN steps from the build context are
// executed during provisioning so build failures surface the same way.
class ProcessSandbox : public Sandbox {
public:
    static std::unique_ptr<ProcessSandbox> provision(const SandboxSpec& spec);
    ~ProcessSandbox() override;

    const std::filesystem::path& root() const { return root_; }
    bool file_exists(const std::string& path) override;
    std::vector<std::string> list_files(const std::string& dir) override;
    void destroy() override;

protected:
    ExecResult exec_impl(const std::string& command, int timeout_s,
                         size_t output_cap) override;
    std::vector<std::uint8_t> read_file_impl(const std::string& path) override;
    void write_file_impl(const std::string& path,
                         const std::vector<std::uint8_t>& content) override;
    void delete_file_impl(const std::string& path) override;

private:
    ProcessSandbox() = default;
    std::filesystem::path resolve(const std::string& path) const;
    std::filesystem::path root_;
};

// ---------------------------------------------------------------------------
// Snapshot on-disk format: content-addressed objects plus a manifest.
//   <dir>/manifest.json   {"version":1, "root":..., "entries":[{path,size,digest}]}
//   <dir>/objects/<digest>
// ---------------------------------------------------------------------------

void save_snapshot(const TestSnapshot& snapshot, const std::filesystem::path& dir);
TestSnapshot load_snapshot(const std::filesystem::path& dir);

}  // namespace envforge
