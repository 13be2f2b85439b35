#include "envforge/tar.hpp"

#include <algorithm>
#include <cstring>
#include <istream>
#include <ostream>
#include <sstream>

#include "envforge/errors.hpp"
#include "envforge/util.hpp"

namespace envforge::tar {

namespace {

constexpr size_t kBlock = 512;

struct RawHeader {
    char name[100];
    char mode[8];
    char uid[8];
    char gid[8];
    char size[12];
    char mtime[12];
    char chksum[8];
    char typeflag;
    char linkname[100];
    char magic[6];
    char version[2];
    char uname[32];
    char gname[32];
    char devmajor[8];
    char devminor[8];
    char prefix[155];
    char pad[12];
};
static_assert(sizeof(RawHeader) == kBlock);

void write_octal(char* field, size_t len, std::uint64_t value) {
    // len-1 octal digits, zero padded, NUL terminated.
    for (size_t i = 0; i < len - 1; ++i) {
        field[len - 2 - i] = static_cast<char>('0' + (value & 7));
        value >>= 3;
    }
    field[len - 1] = '\0';
}

std::uint64_t read_octal(const char* field, size_t len) {
    std::uint64_t value = 0;
    for (size_t i = 0; i < len; ++i) {
        char c = field[i];
        if (c == '\0' || c == ' ') break;
        if (c < '0' || c > '7') throw Error("tar: bad octal field");
        value = (value << 3) | static_cast<std::uint64_t>(c - '0');
    }
    return value;
}

}  // namespace

Writer::Writer(std::ostream& out) : out_(out) {}

Writer::~Writer() {
    if (!finished_) finish();
}

void Writer::write_header(const std::string& path, std::uint64_t size,
                          std::uint32_t mode, char typeflag) {
    RawHeader h;
    std::memset(&h, 0, sizeof(h));

    std::string name = path;
    std::string prefix;
    if (name.size() > 100) {
        // Split at a '/' so prefix <= 155 and name <= 100.
        size_t split = std::string::npos;
        for (size_t i = 0; i < name.size(); ++i) {
            if (name[i] == '/' && i <= 155 && name.size() - i - 1 <= 100) split = i;
        }
        if (split == std::string::npos)
            throw Error("tar: path too long for ustar: " + path);
        prefix = name.substr(0, split);
        name = name.substr(split + 1);
    }
    std::memcpy(h.name, name.data(), name.size());
    std::memcpy(h.prefix, prefix.data(), prefix.size());
    write_octal(h.mode, sizeof(h.mode), mode);
    write_octal(h.uid, sizeof(h.uid), 0);
    write_octal(h.gid, sizeof(h.gid), 0);
    write_octal(h.size, sizeof(h.size), size);
    write_octal(h.mtime, sizeof(h.mtime), 0);
    h.typeflag = typeflag;
    std::memcpy(h.magic, "ustar", 6);
    h.version[0] = '0';
    h.version[1] = '0';

    std::memset(h.chksum, ' ', sizeof(h.chksum));
    const unsigned char* bytes = reinterpret_cast<const unsigned char*>(&h);
    std::uint64_t sum = 0;
    for (size_t i = 0; i < kBlock; ++i) sum += bytes[i];
    // Conventional checksum form: 6 octal digits, NUL, space.
    for (int i = 5; i >= 0; --i) {
        h.chksum[i] = static_cast<char>('0' + (sum & 7));
        sum >>= 3;
    }
    h.chksum[6] = '\0';
    h.chksum[7] = ' ';

    out_.write(reinterpret_cast<const char*>(&h), kBlock);
}

void Writer::add_dir(const std::string& path, std::uint32_t mode) {
    std::string p = path;
    if (!p.empty() && p.back() != '/') p += '/';
    write_header(p, 0, mode, '5');
}

void Writer::add_file(const std::string& path, const std::vector<std::uint8_t>& content,
                      std::uint32_t mode) {
    write_header(path, content.size(), mode, '0');
    out_.write(reinterpret_cast<const char*>(content.data()),
               static_cast<std::streamsize>(content.size()));
    size_t rem = content.size() % kBlock;
    if (rem) {
        std::vector<char> pad(kBlock - rem, 0);
        out_.write(pad.data(), static_cast<std::streamsize>(pad.size()));
    }
}

void Writer::add_file(const std::string& path, std::string_view content,
                      std::uint32_t mode) {
    add_file(path, std::vector<std::uint8_t>(content.begin(), content.end()), mode);
}

void Writer::finish() {
    std::vector<char> zeros(kBlock * 2, 0);
    out_.write(zeros.data(), static_cast<std::streamsize>(zeros.size()));
    finished_ = true;
}

std::vector<Entry> read_archive(std::istream& in) {
    std::vector<Entry> entries;
    char block[kBlock];
    while (in.read(block, kBlock)) {
        bool all_zero = std::all_of(block, block + kBlock, [](char c) { return c == 0; });
        if (all_zero) break;
        const RawHeader* h = reinterpret_cast<const RawHeader*>(block);
        std::uint64_t size = read_octal(h->size, sizeof(h->size));
        std::string name(h->name, strnlen(h->name, sizeof(h->name)));
        std::string prefix(h->prefix, strnlen(h->prefix, sizeof(h->prefix)));
        std::string path = prefix.empty() ? name : prefix + "/" + name;

        std::vector<std::uint8_t> content(size);
        if (size) {
            if (!in.read(reinterpret_cast<char*>(content.data()),
                         static_cast<std::streamsize>(size)))
                throw Error("tar: truncated archive");
            size_t rem = size % kBlock;
            if (rem) in.ignore(static_cast<std::streamsize>(kBlock - rem));
        }
        char type = h->typeflag;
        if (type == '0' || type == '\0') {
            entries.push_back(Entry{path, false,
                                    static_cast<std::uint32_t>(
                                        read_octal(h->mode, sizeof(h->mode))),
                                    std::move(content)});
        } else if (type == '5') {
            if (!path.empty() && path.back() == '/') path.pop_back();
            entries.push_back(Entry{path, true, 0755, {}});
        }
        // Other types (links, pax headers) are skipped.
    }
    return entries;
}

std::vector<Entry> read_archive(const std::vector<std::uint8_t>& bytes) {
    std::istringstream in(std::string(bytes.begin(), bytes.end()));
    return read_archive(in);
}

void pack_directory(const std::filesystem::path& root, std::ostream& out,
                    const std::function<bool(const std::string&)>& skip) {
    namespace fs = std::filesystem;
    Writer writer(out);

    std::vector<std::string> dirs, files;
    for (auto it = fs::recursive_directory_iterator(root);
         it != fs::recursive_directory_iterator(); ++it) {
        std::string rel = fs::relative(it->path(), root).generic_string();
        if (skip && skip(rel)) {
            if (it->is_directory()) it.disable_recursion_pending();
            continue;
        }
        if (it->is_directory()) dirs.push_back(rel);
        else if (it->is_regular_file()) files.push_back(rel);
    }
    std::sort(dirs.begin(), dirs.end());
    std::sort(files.begin(), files.end());

    for (const auto& d : dirs) writer.add_dir(d);
    for (const auto& f : files) {
        auto content = util::read_binary_file(root / f);
        auto status = fs::status(root / f);
        bool exec = (status.permissions() & fs::perms::owner_exec) != fs::perms::none;
        writer.add_file(f, content, exec ? 0755 : 0644);
    }
    writer.finish();
}

void unpack_to_directory(const std::vector<Entry>& entries,
                         const std::filesystem::path& root) {
    namespace fs = std::filesystem;
    for (const auto& e : entries) {
        fs::path target = root / e.path;
        if (e.is_dir) {
            fs::create_directories(target);
        } else {
            util::write_binary_file(target, e.content);
            if (e.mode & 0100)
                fs::permissions(target, fs::perms::owner_exec | fs::perms::group_exec,
                                fs::perm_options::add);
        }
    }
}

}  // namespace envforge::tar
