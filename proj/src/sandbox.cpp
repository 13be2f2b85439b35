#include "envforge/sandbox.hpp"

#include <json.hpp>

#include <algorithm>
#include <sstream>

#include "envforge/errors.hpp"
#include "envforge/util.hpp"

namespace envforge {

using nlohmann::json;

std::map<std::string, std::string> TestSnapshot::digest_set() const {
    std::map<std::string, std::string> out;
    for (const auto& [path, entry] : entries) out[path] = entry.digest;
    return out;
}

// ---------------------------------------------------------------------------
// Shared Sandbox behavior
// ---------------------------------------------------------------------------

void Sandbox::set_extra_env(const std::map<std::string, std::string>& env) {
    extra_env_ = env;
}

std::map<std::string, std::string> Sandbox::base_environment() const {
    std::map<std::string, std::string> env{
        {"PATH", "/usr/local/sbin:/usr/local/bin:/usr/sbin:/usr/bin:/sbin:/bin"},
        {"LANG", "C.UTF-8"},
        {"LC_ALL", "C.UTF-8"},
        {"TERM", "dumb"},
    };
    for (const auto& [k, v] : extra_env_) env[k] = v;
    return env;
}

ExecResult Sandbox::exec(const std::string& command, int timeout_s) {
    if (state_ != SandboxState::running)
        throw StateError("exec on a sandbox that is not running");
    std::lock_guard lock(exec_mutex_);
    return exec_impl(command, timeout_s, kOutputCapBytes);
}

std::vector<std::uint8_t> Sandbox::read_file(const std::string& path) {
    if (state_ != SandboxState::running)
        throw StateError("read_file on a sandbox that is not running");
    return read_file_impl(path);
}

void Sandbox::write_file(const std::string& path,
                         const std::vector<std::uint8_t>& content) {
    if (state_ != SandboxState::running)
        throw StateError("write_file on a sandbox that is not running");
    write_file_impl(path, content);
}

void Sandbox::write_file(const std::string& path, std::string_view content) {
    write_file(path, std::vector<std::uint8_t>(content.begin(), content.end()));
}

TestSnapshot Sandbox::snapshot_tests(const std::string& root) {
    if (state_ != SandboxState::running)
        throw StateError("snapshot on a sandbox that is not running");
    std::lock_guard lock(exec_mutex_);

    TestSnapshot snap;
    snap.root = root;
    auto files = list_files(root);
    if (files.empty() && !file_exists(root))
        throw SandboxError("snapshot root does not exist: " + root);
    for (const auto& rel : files) {
        SnapshotEntry entry;
        entry.content = read_file_impl(root + "/" + rel);
        entry.digest = util::sha256_hex(entry.content);
        snap.entries[rel] = std::move(entry);
    }
    return snap;
}

void Sandbox::restore_tests(const TestSnapshot& snapshot) {
    if (state_ != SandboxState::running)
        throw StateError("restore on a sandbox that is not running");
    std::lock_guard lock(exec_mutex_);

    // Delete extraneous files, then rewrite everything that differs.
    for (const auto& rel : list_files(snapshot.root)) {
        if (!snapshot.entries.count(rel))
            delete_file_impl(snapshot.root + "/" + rel);
    }
    for (const auto& [rel, entry] : snapshot.entries) {
        const std::string path = snapshot.root + "/" + rel;
        bool needs_write = true;
        if (file_exists(path)) {
            auto current = read_file_impl(path);
            needs_write = util::sha256_hex(current) != entry.digest;
        }
        if (needs_write) write_file_impl(path, entry.content);
    }

    // Verify: the restored tree must equal the snapshot digest-for-digest.
    for (const auto& [rel, entry] : snapshot.entries) {
        const std::string path = snapshot.root + "/" + rel;
        if (!file_exists(path) ||
            util::sha256_hex(read_file_impl(path)) != entry.digest)
            throw SandboxError("restore verification failed for " + path);
    }
    for (const auto& rel : list_files(snapshot.root)) {
        if (!snapshot.entries.count(rel))
            throw SandboxError("restore left extraneous file " + snapshot.root +
                               "/" + rel);
    }
}

namespace {

std::string shell_quote(const std::string& s) {
    std::string out = "'";
    for (char c : s) {
        if (c == '\'') out += "'\\''";
        else out += c;
    }
    out += "'";
    return out;
}

}  // namespace

std::string Sandbox::commit_baseline(const std::string& label) {
    if (state_ != SandboxState::running)
        throw StateError("commit_baseline on a sandbox that is not running");
    if (!vcs_initialized_) {
        auto init = exec("git init -q 2>&1 && git config user.email pipeline@local "
                         "&& git config user.name pipeline",
                         60);
        if (init.exit_code != 0)
            throw SandboxError("git init failed: " + init.stderr_text +
                               init.stdout_text);
        vcs_initialized_ = true;
    }
    auto commit = exec("git add -A && git commit -q --allow-empty -m " +
                           shell_quote(label) + " && git rev-parse HEAD",
                       120);
    if (commit.exit_code != 0)
        throw SandboxError("baseline commit failed: " + commit.stderr_text +
                           commit.stdout_text);
    auto lines = util::split_lines(commit.stdout_text);
    if (lines.empty()) throw SandboxError("baseline commit produced no ref");
    return util::trim(lines.back());
}

WorkspaceDiff Sandbox::workspace_diff(const std::string& baseline_ref) {
    if (state_ != SandboxState::running)
        throw StateError("workspace_diff on a sandbox that is not running");
    if (!vcs_initialized_ || baseline_ref.empty())
        throw StateError("workspace_diff without a recorded baseline");

    // Stage everything so new and deleted files count, then diff the index
    // against the baseline. Internal cap is generous: diffs feed statistics.
    constexpr size_t kDiffCap = 8 * 1024 * 1024;
    std::lock_guard lock(exec_mutex_);
    auto stage = exec_impl("git add -A", 120, kDiffCap);
    if (stage.exit_code != 0)
        throw SandboxError("git add failed: " + stage.stderr_text);

    auto diff = exec_impl("git diff --cached --no-color " + baseline_ref, 120, kDiffCap);
    if (diff.exit_code != 0 && diff.exit_code != 1)
        throw SandboxError("git diff failed: " + diff.stderr_text);

    auto numstat = exec_impl("git diff --cached --numstat " + baseline_ref, 120,
                             kDiffCap);
    if (numstat.exit_code != 0 && numstat.exit_code != 1)
        throw SandboxError("git diff --numstat failed: " + numstat.stderr_text);

    WorkspaceDiff out;
    out.unified = diff.stdout_text;
    for (const auto& line : util::split_lines(numstat.stdout_text)) {
        if (util::trim(line).empty()) continue;
        std::istringstream ss(line);
        std::string added, deleted;
        ss >> added >> deleted;
        ++out.stats.files_changed;
        if (added != "-") out.stats.lines_added += std::stoi(added);
        if (deleted != "-") out.stats.lines_deleted += std::stoi(deleted);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Snapshot persistence
// ---------------------------------------------------------------------------

void save_snapshot(const TestSnapshot& snapshot, const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir / "objects");
    json manifest{{"version", 1}, {"root", snapshot.root}};
    json entries = json::array();
    for (const auto& [path, entry] : snapshot.entries) {
        entries.push_back({{"path", path},
                           {"size", entry.content.size()},
                           {"digest", entry.digest}});
        util::write_binary_file(dir / "objects" / entry.digest, entry.content);
    }
    manifest["entries"] = entries;
    util::write_text_file(dir / "manifest.json", manifest.dump(2) + "\n");
}

TestSnapshot load_snapshot(const std::filesystem::path& dir) {
    json manifest = json::parse(util::read_text_file(dir / "manifest.json"));
    TestSnapshot snap;
    snap.root = manifest.at("root").get<std::string>();
    for (const auto& e : manifest.at("entries")) {
        SnapshotEntry entry;
        entry.digest = e.at("digest").get<std::string>();
        entry.content = util::read_binary_file(dir / "objects" / entry.digest);
        if (util::sha256_hex(entry.content) != entry.digest)
            throw SandboxError("snapshot object corrupted: " + entry.digest);
        if (entry.content.size() != e.at("size").get<size_t>())
            throw SandboxError("snapshot size mismatch for " +
                               e.at("path").get<std::string>());
        snap.entries[e.at("path").get<std::string>()] = std::move(entry);
    }
    return snap;
}

}  // namespace envforge
