#pragma once

// Reference-URL resolution: online HTTP fetching with per-host rate limits,
// an offline content mirror for reproducible runs, plain-text extraction,
// and the reachability funnel.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "citeqa/wikitext.hpp"

namespace citeqa {

struct FetchPolicy {
    double timeout_s = 10.0;
    int max_retries = 2;              // extra attempts after the first
    double per_host_delay_s = 1.0;    // minimum spacing between same-host requests
    size_t max_body_bytes = 4u << 20;
    std::filesystem::path offline_mirror;  // non-empty → no network at all
};

enum class FetchReason {
    invalid_url,
    not_found,      // offline: no mirror file; online: HTTP 404
    http_error,     // other non-2xx status
    timeout,
    connect_error,  // DNS failure / refused connection
    too_large,
    bad_media_type,
    empty_text,
};

std::string_view to_string(FetchReason reason);

struct FetchResult {
    bool ok = false;
    int status = 0;            // HTTP status; 200 for mirror hits
    std::string media_type;    // normalized, e.g. "text/html"
    std::string body;
    FetchReason reason = FetchReason::invalid_url;  // meaningful when !ok
};

// Lowercases scheme and host, strips a default port and any #fragment;
// path and query are preserved verbatim (empty path becomes "/").
std::string normalize_url(std::string_view url);

// SHA-256 hex digest of the normalized URL.
std::string url_hash(std::string_view url);

// mirror/<first two hex chars>/<full hash>; the file holds raw body bytes.
std::filesystem::path mirror_path(const std::filesystem::path& mirror, std::string_view url);

std::string sha256_hex(std::string_view data);

// Media type for raw mirror bytes: markup-looking content is text/html,
// everything else text/plain.
std::string sniff_media_type(std::string_view body);

// Plain text from a response body. HTML: script/style/nav dropped with their
// content, block tags become word breaks, other tags stripped, entities
// decoded. Bytes that are not valid UTF-8 are replaced, never fatal.
std::string extract_text(std::string_view body, std::string_view media_type);

struct Evidence {
    std::string url;
    std::string text;          // non-empty extracted plain text
    int64_t fetched_at = 0;    // unix seconds; always 0 in offline mode
    std::string content_type;
};

struct RequestLogEntry {
    std::string host;
    std::chrono::steady_clock::time_point at;
};

// One fetching context: owns per-host spacing state and the request log.
class Fetcher {
public:
    explicit Fetcher(FetchPolicy policy);

    FetchResult fetch(const std::string& url);
    const FetchPolicy& policy() const { return policy_; }

    // Online requests actually issued (after rate-limit waits), for spacing
    // assertions. Empty in offline mode.
    std::vector<RequestLogEntry> request_log() const;

private:
    FetchResult fetch_offline(const std::string& url);
    FetchResult fetch_online(const std::string& url);

    FetchPolicy policy_;
    mutable std::mutex mutex_;
    std::map<std::string, std::chrono::steady_clock::time_point> last_request_;
    std::vector<RequestLogEntry> log_;
};

// Convenience one-shot fetch.
FetchResult fetch(const std::string& url, const FetchPolicy& policy);

// Disk cache of extracted evidence keyed by URL hash; lets re-runs skip
// fetching entirely.
class EvidenceCache {
public:
    explicit EvidenceCache(std::filesystem::path dir);

    std::optional<Evidence> get(const std::string& url) const;
    void put(const Evidence& evidence) const;
    const std::filesystem::path& dir() const { return dir_; }

private:
    std::filesystem::path dir_;
};

struct FunnelReport {
    uint64_t input = 0;
    uint64_t output = 0;
    std::map<std::string, uint64_t> drops;  // reason name → count

    uint64_t total_drops() const;
};

// Keeps only pairs whose URL fetches successfully and yields non-empty text.
// Output preserves input order; a URL shared by several pairs is fetched
// once. The report always satisfies output + total drops = input.
std::vector<std::pair<StatementRef, Evidence>> filter_reachable(
    const std::vector<StatementRef>& pairs, Fetcher& fetcher, FunnelReport& report,
    const EvidenceCache* cache = nullptr, size_t threads = 1);

}  // namespace citeqa
