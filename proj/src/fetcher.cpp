#include "citeqa/fetcher.hpp"

#include <openssl/evp.h>

#include <ctime>
#include <fstream>
#include <thread>
#include <unordered_map>
#include <unordered_set>

#include <httplib.h>
#include <json.hpp>

#include "citeqa/parallel.hpp"
#include "citeqa/text.hpp"

namespace citeqa {

std::string_view to_string(FetchReason reason) {
    switch (reason) {
        case FetchReason::invalid_url: return "invalid_url";
        case FetchReason::not_found: return "not_found";
        case FetchReason::http_error: return "http_error";
        case FetchReason::timeout: return "timeout";
        case FetchReason::connect_error: return "connect_error";
        case FetchReason::too_large: return "too_large";
        case FetchReason::bad_media_type: return "bad_media_type";
        case FetchReason::empty_text: return "empty_text";
    }
    return "unknown";
}

// ---------------------------------------------------------------------------
// URL normalization and hashing
// ---------------------------------------------------------------------------

std::string normalize_url(std::string_view url) {
    size_t scheme_end = url.find("://");
    if (scheme_end == std::string_view::npos) return std::string(url);
    std::string scheme = ascii_lower(url.substr(0, scheme_end));
    std::string_view rest = url.substr(scheme_end + 3);
    size_t frag = rest.find('#');
    if (frag != std::string_view::npos) rest = rest.substr(0, frag);
    size_t path_start = rest.find_first_of("/?");
    std::string_view authority =
        path_start == std::string_view::npos ? rest : rest.substr(0, path_start);
    std::string_view path =
        path_start == std::string_view::npos ? std::string_view() : rest.substr(path_start);
    std::string host = ascii_lower(authority);
    if (scheme == "http" && host.size() > 3 && host.ends_with(":80"))
        host.erase(host.size() - 3);
    else if (scheme == "https" && host.size() > 4 && host.ends_with(":443"))
        host.erase(host.size() - 4);
    std::string out = scheme + "://" + host;
    if (path.empty() || path.front() == '?') out += '/';
    out += path;
    return out;
}

std::string sha256_hex(std::string_view data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr);
    static const char hex[] = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned i = 0; i < len; ++i) {
        out += hex[digest[i] >> 4];
        out += hex[digest[i] & 0xF];
    }
    return out;
}

std::string url_hash(std::string_view url) { return sha256_hex(normalize_url(url)); }

std::filesystem::path mirror_path(const std::filesystem::path& mirror, std::string_view url) {
    std::string h = url_hash(url);
    return mirror / h.substr(0, 2) / h;
}

// ---------------------------------------------------------------------------
// Text extraction
// ---------------------------------------------------------------------------

std::string sniff_media_type(std::string_view body) {
    std::string_view t = trim(body);
    if (t.size() >= 2 && t[0] == '<' &&
        (t[1] == '!' || t[1] == '?' || std::isalpha(static_cast<unsigned char>(t[1]))))
        return "text/html";
    return "text/plain";
}

namespace {

std::string normalize_media_type(std::string_view media_type) {
    size_t semi = media_type.find(';');
    if (semi != std::string_view::npos) media_type = media_type.substr(0, semi);
    return ascii_lower(trim(media_type));
}

// Elements whose content never contributes evidence text.
const char* const kContentlessTags[] = {"script", "style", "nav"};

bool is_block_tag(std::string_view name) {
    static const std::unordered_set<std::string_view> block = {
        "p", "div", "br", "li", "ul", "ol", "dl", "dt", "dd", "h1", "h2", "h3",
        "h4", "h5", "h6", "tr", "td", "th", "table", "thead", "tbody", "section",
        "article", "header", "footer", "aside", "main", "blockquote", "pre", "hr",
        "form", "figure", "figcaption", "title", "body", "html", "head"};
    return block.count(name) > 0;
}

std::string extract_html_text(std::string_view body) {
    std::string out;
    CollapsingWriter w(out);
    size_t i = 0;
    while (i < body.size()) {
        char c = body[i];
        if (c == '<') {
            if (body.substr(i).starts_with("<!--")) {
                size_t end = body.find("-->", i + 4);
                i = end == std::string_view::npos ? body.size() : end + 3;
                continue;
            }
            size_t name_start = i + 1;
            bool closing = name_start < body.size() && body[name_start] == '/';
            if (closing) ++name_start;
            size_t name_end = name_start;
            while (name_end < body.size() &&
                   std::isalnum(static_cast<unsigned char>(body[name_end])))
                ++name_end;
            if (name_end == name_start) {  // not a tag; literal '<'
                w.put('<');
                ++i;
                continue;
            }
            std::string name = ascii_lower(body.substr(name_start, name_end - name_start));
            size_t gt = body.find('>', name_end);
            if (gt == std::string_view::npos) {
                i = body.size();
                continue;
            }
            bool self_closing = body[gt - 1] == '/';
            i = gt + 1;
            if (!closing && !self_closing) {
                for (const char* drop : kContentlessTags) {
                    if (name == drop) {
                        std::string close = "</" + name;
                        size_t end = find_ci(body, close, i);
                        if (end == std::string_view::npos) {
                            i = body.size();
                        } else {
                            size_t end_gt = body.find('>', end);
                            i = end_gt == std::string_view::npos ? body.size() : end_gt + 1;
                        }
                        break;
                    }
                }
            }
            if (is_block_tag(name)) w.break_word();
            continue;
        }
        if (c == '&') {
            std::string decoded;
            size_t probe = i;
            if (decode_entity(body, probe, decoded)) {
                w.write(decoded);
                i = probe;
                continue;
            }
            w.put('&');
            ++i;
            continue;
        }
        w.put(c);
        ++i;
    }
    return out;
}

}  // namespace

std::string extract_text(std::string_view body, std::string_view media_type) {
    std::string mt = normalize_media_type(media_type);
    if (mt == "text/html") return utf8_sanitize(extract_html_text(body));
    return utf8_sanitize(collapse_whitespace(body));
}

// ---------------------------------------------------------------------------
// Fetching
// ---------------------------------------------------------------------------

Fetcher::Fetcher(FetchPolicy policy) : policy_(std::move(policy)) {}

FetchResult fetch(const std::string& url, const FetchPolicy& policy) {
    Fetcher fetcher(policy);
    return fetcher.fetch(url);
}

FetchResult Fetcher::fetch(const std::string& url) {
    if (!is_absolute_http_url(url)) {
        FetchResult r;
        r.reason = FetchReason::invalid_url;
        return r;
    }
    return policy_.offline_mirror.empty() ? fetch_online(url) : fetch_offline(url);
}

FetchResult Fetcher::fetch_offline(const std::string& url) {
    FetchResult r;
    auto path = mirror_path(policy_.offline_mirror, url);
    std::error_code ec;
    if (!std::filesystem::is_regular_file(path, ec)) {
        r.reason = FetchReason::not_found;
        return r;
    }
    auto size = std::filesystem::file_size(path, ec);
    if (ec) {
        r.reason = FetchReason::not_found;
        return r;
    }
    if (size > policy_.max_body_bytes) {
        r.reason = FetchReason::too_large;
        return r;
    }
    std::ifstream in(path, std::ios::binary);
    r.body.assign((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    r.ok = true;
    r.status = 200;
    r.media_type = sniff_media_type(r.body);
    return r;
}

namespace {

struct SplitUrl {
    std::string origin;      // scheme://host[:port]
    std::string host;
    std::string path_query;  // always begins with '/'
};

SplitUrl split_url(const std::string& url) {
    std::string norm = normalize_url(url);
    size_t scheme_end = norm.find("://");
    size_t auth_start = scheme_end + 3;
    size_t path_start = norm.find_first_of("/?", auth_start);
    SplitUrl s;
    if (path_start == std::string::npos) {
        s.origin = norm;
        s.path_query = "/";
    } else {
        s.origin = norm.substr(0, path_start);
        s.path_query = norm.substr(path_start);
    }
    std::string authority = s.origin.substr(auth_start);
    size_t colon = authority.rfind(':');
    s.host = colon == std::string::npos ? authority : authority.substr(0, colon);
    return s;
}

}  // namespace

FetchResult Fetcher::fetch_online(const std::string& url) {
    FetchResult r;
    SplitUrl split = split_url(url);

    auto delay = std::chrono::duration_cast<std::chrono::steady_clock::duration>(
        std::chrono::duration<double>(policy_.per_host_delay_s));

    int attempts = 1 + std::max(0, policy_.max_retries);
    for (int attempt = 0; attempt < attempts; ++attempt) {
        // Reserve the next allowed send slot for this host, then sleep to it.
        std::chrono::steady_clock::time_point slot;
        {
            std::lock_guard<std::mutex> lock(mutex_);
            auto now = std::chrono::steady_clock::now();
            auto it = last_request_.find(split.host);
            slot = it == last_request_.end() ? now : std::max(now, it->second + delay);
            last_request_[split.host] = slot;
        }
        std::this_thread::sleep_until(slot);
        {
            std::lock_guard<std::mutex> lock(mutex_);
            log_.push_back({split.host, std::chrono::steady_clock::now()});
        }

        httplib::Client client(split.origin);
        client.set_connection_timeout(std::chrono::duration<double>(policy_.timeout_s));
        client.set_read_timeout(std::chrono::duration<double>(policy_.timeout_s));
        client.set_follow_location(true);
        client.enable_server_certificate_verification(false);

        std::string body;
        bool oversize = false;
        auto res = client.Get(split.path_query, [&](const char* data, size_t n) {
            if (body.size() + n > policy_.max_body_bytes) {
                oversize = true;
                return false;
            }
            body.append(data, n);
            return true;
        });

        if (oversize) {
            r.reason = FetchReason::too_large;
            return r;
        }
        if (!res) {
            switch (res.error()) {
                case httplib::Error::ConnectionTimeout:
                case httplib::Error::Read:
                case httplib::Error::Write:
                    r.reason = FetchReason::timeout;
                    break;
                default:
                    r.reason = FetchReason::connect_error;
                    break;
            }
            continue;  // transient: retry
        }
        if (res->status == 404) {
            r.reason = FetchReason::not_found;
            return r;
        }
        if (res->status < 200 || res->status >= 300) {
            r.reason = FetchReason::http_error;
            return r;
        }
        r.ok = true;
        r.status = res->status;
        r.body = std::move(body);
        std::string header = res->get_header_value("Content-Type");
        r.media_type = header.empty() ? sniff_media_type(r.body)
                                      : normalize_media_type(header);
        return r;
    }
    return r;  // reason from the last failed attempt
}

std::vector<RequestLogEntry> Fetcher::request_log() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return log_;
}

// ---------------------------------------------------------------------------
// Evidence cache
// ---------------------------------------------------------------------------

EvidenceCache::EvidenceCache(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::filesystem::create_directories(dir_);
}

std::optional<Evidence> EvidenceCache::get(const std::string& url) const {
    std::string h = url_hash(url);
    auto path = dir_ / h.substr(0, 2) / (h + ".json");
    std::ifstream in(path, std::ios::binary);
    if (!in) return std::nullopt;
    nlohmann::json j;
    try {
        in >> j;
        Evidence e;
        e.url = j.at("url").get<std::string>();
        e.text = j.at("text").get<std::string>();
        e.fetched_at = j.at("fetched_at").get<int64_t>();
        e.content_type = j.at("content_type").get<std::string>();
        return e;
    } catch (const nlohmann::json::exception&) {
        return std::nullopt;  // unreadable entry treated as a miss
    }
}

void EvidenceCache::put(const Evidence& evidence) const {
    std::string h = url_hash(evidence.url);
    auto sub = dir_ / h.substr(0, 2);
    std::filesystem::create_directories(sub);
    nlohmann::json j{{"url", evidence.url},
                     {"text", evidence.text},
                     {"fetched_at", evidence.fetched_at},
                     {"content_type", evidence.content_type}};
    auto tmp = sub / (h + ".tmp");
    auto final_path = sub / (h + ".json");
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        out << j.dump();
    }
    std::filesystem::rename(tmp, final_path);
}

// ---------------------------------------------------------------------------
// Reachability funnel
// ---------------------------------------------------------------------------

uint64_t FunnelReport::total_drops() const {
    uint64_t sum = 0;
    for (const auto& [reason, count] : drops) sum += count;
    return sum;
}

std::vector<std::pair<StatementRef, Evidence>> filter_reachable(
    const std::vector<StatementRef>& pairs, Fetcher& fetcher, FunnelReport& report,
    const EvidenceCache* cache, size_t threads) {
    report = FunnelReport{};
    report.input = pairs.size();

    // Unique URLs in first-seen order; each fetched exactly once.
    std::vector<std::string> urls;
    std::unordered_map<std::string, size_t> url_index;
    for (const auto& pair : pairs)
        if (url_index.emplace(pair.url, urls.size()).second) urls.push_back(pair.url);

    struct UrlOutcome {
        bool ok = false;
        Evidence evidence;
        FetchReason reason = FetchReason::invalid_url;
    };
    std::vector<UrlOutcome> outcomes(urls.size());
    bool offline = !fetcher.policy().offline_mirror.empty();

    parallel_for(urls.size(), threads, [&](size_t i) {
        const std::string& url = urls[i];
        UrlOutcome& out = outcomes[i];
        if (cache) {
            if (auto hit = cache->get(url)) {
                out.ok = true;
                out.evidence = std::move(*hit);
                return;
            }
        }
        FetchResult r = fetcher.fetch(url);
        if (!r.ok) {
            out.reason = r.reason;
            return;
        }
        std::string media = normalize_media_type(r.media_type);
        if (media != "text/html" && media != "text/plain") {
            out.reason = FetchReason::bad_media_type;
            return;
        }
        std::string text = extract_text(r.body, media);
        if (text.empty()) {
            out.reason = FetchReason::empty_text;
            return;
        }
        out.ok = true;
        out.evidence.url = url;
        out.evidence.text = std::move(text);
        out.evidence.fetched_at = offline ? 0 : static_cast<int64_t>(std::time(nullptr));
        out.evidence.content_type = media;
        if (cache) cache->put(out.evidence);
    });

    std::vector<std::pair<StatementRef, Evidence>> kept;
    for (const auto& pair : pairs) {
        const UrlOutcome& out = outcomes[url_index[pair.url]];
        if (out.ok) {
            kept.emplace_back(pair, out.evidence);
            ++report.output;
        } else {
            ++report.drops[std::string(to_string(out.reason))];
        }
    }
    return kept;
}

}  // namespace citeqa
