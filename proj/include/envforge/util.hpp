#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace envforge::util {

// ---------------------------------------------------------------------------
// Hashing
// ---------------------------------------------------------------------------

std::string sha256_hex(std::string_view data);
std::string sha256_hex(const std::vector<std::uint8_t>& data);

// ---------------------------------------------------------------------------
// Strings
// ---------------------------------------------------------------------------

std::string trim(std::string_view s);
std::string trim_right(std::string_view s);

// Splits on '\n'; a trailing newline does not produce an empty final element.
std::vector<std::string> split_lines(std::string_view text);

std::string join_lines(const std::vector<std::string>& lines);

// CRLF and lone CR are normalized to LF.
std::string normalize_newlines(std::string_view text);

// Removes spaces/tabs at the end of every line.
std::string strip_trailing_whitespace(std::string_view text);

bool icontains(std::string_view haystack, std::string_view needle);

std::string to_lower(std::string_view s);

// Replaces every "{{name}}" with vars.at(name); throws TemplateError when a
// placeholder has no binding.
std::string render_template(std::string_view tmpl,
                            const std::map<std::string, std::string>& vars);

// ---------------------------------------------------------------------------
// Filesystem
// ---------------------------------------------------------------------------

std::string read_text_file(const std::filesystem::path& p);
std::vector<std::uint8_t> read_binary_file(const std::filesystem::path& p);
void write_text_file(const std::filesystem::path& p, std::string_view content);
void write_binary_file(const std::filesystem::path& p,
                       const std::vector<std::uint8_t>& content);

// Regular files under root, as sorted /-separated paths relative to root.
std::vector<std::string> list_files_recursive(const std::filesystem::path& root);

void copy_tree(const std::filesystem::path& from, const std::filesystem::path& to);

}  // namespace envforge::util
