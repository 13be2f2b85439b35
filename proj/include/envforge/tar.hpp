#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace envforge::tar {

struct Entry {
    std::string path;
    bool is_dir = false;
    std::uint32_t mode = 0644;
    std::vector<std::uint8_t> content;
};

// Minimal ustar writer. Headers carry mtime 0, uid/gid 0 and empty
// user/group names so archives of identical trees are byte-identical.
class Writer {
public:
    explicit Writer(std::ostream& out);
    void add_dir(const std::string& path, std::uint32_t mode = 0755);
    void add_file(const std::string& path, const std::vector<std::uint8_t>& content,
                  std::uint32_t mode = 0644);
    void add_file(const std::string& path, std::string_view content,
                  std::uint32_t mode = 0644);
    void finish();  // end-of-archive marker; called by destructor if needed
    ~Writer();

private:
    void write_header(const std::string& path, std::uint64_t size, std::uint32_t mode,
                      char typeflag);
    std::ostream& out_;
    bool finished_ = false;
};

// Reads every regular-file and directory entry; other entry types are
// skipped. Throws Error on a malformed archive.
std::vector<Entry> read_archive(std::istream& in);
std::vector<Entry> read_archive(const std::vector<std::uint8_t>& bytes);

// Archives a directory tree deterministically (sorted walk, pinned
// metadata). `skip` filters on /-separated paths relative to root.
void pack_directory(const std::filesystem::path& root, std::ostream& out,
                    const std::function<bool(const std::string&)>& skip = {});

void unpack_to_directory(const std::vector<Entry>& entries,
                         const std::filesystem::path& root);

}  // namespace envforge::tar
