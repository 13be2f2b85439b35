#include "envforge/tokenizer.hpp"

namespace envforge {

namespace {

bool is_word_byte(unsigned char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
           (c >= '0' && c <= '9') || c == '_';
}

bool is_space_byte(unsigned char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

// Length of the UTF-8 sequence starting at i, or 1 for malformed bytes.
size_t sequence_length(std::string_view s, size_t i) {
    unsigned char c = static_cast<unsigned char>(s[i]);
    size_t len = 1;
    if ((c & 0xE0) == 0xC0) len = 2;
    else if ((c & 0xF0) == 0xE0) len = 3;
    else if ((c & 0xF8) == 0xF0) len = 4;
    for (size_t k = 1; k < len; ++k) {
        if (i + k >= s.size() ||
            (static_cast<unsigned char>(s[i + k]) & 0xC0) != 0x80)
            return 1;
    }
    return len;
}

}  // namespace

long count_tokens(std::string_view text) {
    long count = 0;
    bool in_word = false;
    size_t i = 0;
    while (i < text.size()) {
        unsigned char c = static_cast<unsigned char>(text[i]);
        if (c < 0x80) {
            if (is_word_byte(c)) {
                if (!in_word) {
                    ++count;
                    in_word = true;
                }
            } else {
                in_word = false;
                if (!is_space_byte(c)) ++count;
            }
            ++i;
        } else {
            // Non-ASCII codepoint: one token per codepoint.
            in_word = false;
            ++count;
            i += sequence_length(text, i);
        }
    }
    return count;
}

}  // namespace envforge
