#include "citeqa/text.hpp"

#include <array>
#include <cctype>
#include <unordered_map>

namespace citeqa {

uint32_t utf8_decode(std::string_view text, size_t& pos) {
    const auto* s = reinterpret_cast<const unsigned char*>(text.data());
    size_t n = text.size();
    unsigned char b0 = s[pos];
    if (b0 < 0x80) {
        pos += 1;
        return b0;
    }
    size_t len = 0;
    uint32_t cp = 0;
    uint32_t min_cp = 0;
    if ((b0 & 0xE0) == 0xC0) {
        len = 2;
        cp = b0 & 0x1F;
        min_cp = 0x80;
    } else if ((b0 & 0xF0) == 0xE0) {
        len = 3;
        cp = b0 & 0x0F;
        min_cp = 0x800;
    } else if ((b0 & 0xF8) == 0xF0) {
        len = 4;
        cp = b0 & 0x07;
        min_cp = 0x10000;
    } else {
        pos += 1;
        return 0xFFFD;
    }
    if (pos + len > n) {
        pos += 1;
        return 0xFFFD;
    }
    for (size_t i = 1; i < len; ++i) {
        unsigned char b = s[pos + i];
        if ((b & 0xC0) != 0x80) {
            pos += 1;
            return 0xFFFD;
        }
        cp = (cp << 6) | (b & 0x3F);
    }
    if (cp < min_cp || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) {
        pos += 1;
        return 0xFFFD;
    }
    pos += len;
    return cp;
}

void utf8_encode(uint32_t cp, std::string& out) {
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
}

std::string utf8_sanitize(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    size_t pos = 0;
    while (pos < text.size()) {
        uint32_t cp = utf8_decode(text, pos);
        utf8_encode(cp, out);
    }
    return out;
}

uint32_t lower_cp(uint32_t cp) {
    if (cp >= 'A' && cp <= 'Z') return cp + 0x20;
    // Latin-1 uppercase block, skipping the multiplication sign.
    if (cp >= 0xC0 && cp <= 0xDE && cp != 0xD7) return cp + 0x20;
    return cp;
}

std::string ascii_lower(std::string_view s) {
    std::string out(s);
    for (char& c : out)
        if (c >= 'A' && c <= 'Z') c += 0x20;
    return out;
}

bool starts_with_ci(std::string_view s, std::string_view prefix) {
    if (s.size() < prefix.size()) return false;
    for (size_t i = 0; i < prefix.size(); ++i)
        if (std::tolower(static_cast<unsigned char>(s[i])) !=
            std::tolower(static_cast<unsigned char>(prefix[i])))
            return false;
    return true;
}

size_t find_ci(std::string_view haystack, std::string_view needle, size_t from) {
    if (needle.empty()) return from <= haystack.size() ? from : std::string_view::npos;
    if (haystack.size() < needle.size()) return std::string_view::npos;
    for (size_t i = from; i + needle.size() <= haystack.size(); ++i)
        if (starts_with_ci(haystack.substr(i), needle)) return i;
    return std::string_view::npos;
}

std::string_view trim(std::string_view s) {
    size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

namespace {

const std::unordered_map<std::string, std::string>& named_entities() {
    static const std::unordered_map<std::string, std::string> map = {
        {"amp", "&"},      {"lt", "<"},       {"gt", ">"},
        {"quot", "\""},    {"apos", "'"},     {"nbsp", " "},
        {"ndash", "\xE2\x80\x93"}, {"mdash", "\xE2\x80\x94"},
        {"minus", "\xE2\x88\x92"}, {"hellip", "\xE2\x80\xA6"},
        {"lsquo", "\xE2\x80\x98"}, {"rsquo", "\xE2\x80\x99"},
        {"ldquo", "\xE2\x80\x9C"}, {"rdquo", "\xE2\x80\x9D"},
        {"deg", "\xC2\xB0"},       {"times", "\xC3\x97"},
        {"middot", "\xC2\xB7"},    {"shy", ""},
        {"thinsp", " "},           {"ensp", " "},
        {"emsp", " "},             {"frac12", "\xC2\xBD"},
        {"copy", "\xC2\xA9"},      {"reg", "\xC2\xAE"},
        {"pound", "\xC2\xA3"},     {"euro", "\xE2\x82\xAC"},
        {"cent", "\xC2\xA2"},      {"sect", "\xC2\xA7"},
    };
    return map;
}

}  // namespace

bool decode_entity(std::string_view text, size_t& pos, std::string& out) {
    // text[pos] == '&'. Entity names are short; cap the scan.
    size_t semi = text.find(';', pos + 1);
    if (semi == std::string_view::npos || semi - pos > 12) return false;
    std::string_view name = text.substr(pos + 1, semi - pos - 1);
    if (name.empty()) return false;
    if (name[0] == '#') {
        uint32_t cp = 0;
        bool ok = false;
        if (name.size() > 1 && (name[1] == 'x' || name[1] == 'X')) {
            for (size_t i = 2; i < name.size(); ++i) {
                char c = name[i];
                uint32_t d;
                if (c >= '0' && c <= '9') d = c - '0';
                else if (c >= 'a' && c <= 'f') d = c - 'a' + 10;
                else if (c >= 'A' && c <= 'F') d = c - 'A' + 10;
                else return false;
                cp = cp * 16 + d;
                ok = true;
            }
        } else {
            for (size_t i = 1; i < name.size(); ++i) {
                char c = name[i];
                if (c < '0' || c > '9') return false;
                cp = cp * 10 + (c - '0');
                ok = true;
            }
        }
        if (!ok || cp > 0x10FFFF) return false;
        utf8_encode(cp, out);
        pos = semi + 1;
        return true;
    }
    auto it = named_entities().find(std::string(name));
    if (it == named_entities().end()) return false;
    out += it->second;
    pos = semi + 1;
    return true;
}

std::string xml_unescape(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    size_t pos = 0;
    while (pos < text.size()) {
        if (text[pos] == '&') {
            if (decode_entity(text, pos, out)) continue;
        }
        out.push_back(text[pos]);
        ++pos;
    }
    return out;
}

std::string collapse_whitespace(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    CollapsingWriter w(out);
    w.write(s);
    return out;
}

uint64_t fnv1a64(std::string_view s) {
    uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

uint64_t splitmix64(uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

}  // namespace citeqa
