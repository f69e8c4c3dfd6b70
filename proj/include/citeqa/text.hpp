#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>

namespace citeqa {

// Decodes the UTF-8 sequence starting at text[pos]. Returns the code point
// and advances pos past it. Invalid bytes decode as U+FFFD and advance by one.
uint32_t utf8_decode(std::string_view text, size_t& pos);

// Appends cp to out as UTF-8.
void utf8_encode(uint32_t cp, std::string& out);

// Replaces invalid UTF-8 sequences with U+FFFD. Valid input is returned
// unchanged.
std::string utf8_sanitize(std::string_view text);

// ASCII + Latin-1 lowercasing of a single code point. Code points outside
// those ranges are returned unchanged.
uint32_t lower_cp(uint32_t cp);

// ASCII-only lowercase of a whole string (bytes >= 0x80 untouched).
std::string ascii_lower(std::string_view s);

bool starts_with_ci(std::string_view s, std::string_view prefix);

// Case-insensitive (ASCII) substring search. Returns npos when absent.
size_t find_ci(std::string_view haystack, std::string_view needle, size_t from = 0);

std::string_view trim(std::string_view s);

// Decodes one HTML/XML character reference beginning at text[pos] (which must
// point at '&'). On success appends the replacement to out, advances pos past
// the ';' and returns true. Unknown references are left for the caller.
bool decode_entity(std::string_view text, size_t& pos, std::string& out);

// Decodes the five XML-predefined entities plus numeric references.
std::string xml_unescape(std::string_view text);

// Appends text to out, collapsing whitespace runs to single spaces. A
// pending-space flag carries separation across calls; onto an empty `out`
// nothing leading is emitted.
class CollapsingWriter {
public:
    explicit CollapsingWriter(std::string& out) : out_(out) {}

    void put(char c) {
        if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v') {
            pending_ = true;
            return;
        }
        flush_pending();
        out_.push_back(c);
    }
    void write(std::string_view s) {
        for (char c : s) put(c);
    }
    // Forces a separating space before the next non-space character.
    void break_word() { pending_ = true; }
    size_t size() const { return out_.size(); }

private:
    void flush_pending() {
        if (pending_ && !out_.empty()) out_.push_back(' ');
        pending_ = false;
    }
    std::string& out_;
    bool pending_ = false;
};

// Collapses all whitespace runs to single spaces and trims the ends.
std::string collapse_whitespace(std::string_view s);

// FNV-1a 64-bit over the bytes of s.
uint64_t fnv1a64(std::string_view s);

// SplitMix64 scramble step, used to derive per-item seeds from a master seed.
uint64_t splitmix64(uint64_t x);

}  // namespace citeqa
