#ifndef SEGFILTER_FETCH_HPP
#define SEGFILTER_FETCH_HPP

// HTTP(S) page retrieval for the command-line tool. Requires cpp-httplib;
// https additionally needs CPPHTTPLIB_OPENSSL_SUPPORT and OpenSSL.

#include <chrono>
#include <cstdlib>
#include <string>
#include <string_view>

#include <httplib.h>

#include "segfilter/error.hpp"

namespace segfilter {

struct FetchConfig {
  std::chrono::seconds timeout{15};
  std::size_t max_bytes = std::size_t{8} << 20;
  std::string user_agent = "segfilter/1.0";
  int max_redirects = 5;

  /// Defaults, with SEGFILTER_UA overriding the user agent when set.
  static FetchConfig from_environment() {
    FetchConfig cfg;
    if (const char* ua = std::getenv("SEGFILTER_UA"); ua != nullptr && *ua != '\0') cfg.user_agent = ua;
    return cfg;
  }

  void validate() const {
    if (timeout.count() <= 0) throw ConfigError("fetch timeout must be positive");
    if (max_redirects < 0) throw ConfigError("max_redirects must be non-negative");
  }
};

struct ParsedUrl {
  std::string scheme;
  std::string origin;  // scheme://host[:port]
  std::string target;  // path and query, at least "/"
};

inline ParsedUrl parse_url(std::string_view url) {
  const auto sep = url.find("://");
  if (sep == std::string_view::npos) throw FetchError(FetchError::Kind::bad_url, "not an absolute URL: " + std::string(url));
  std::string scheme(url.substr(0, sep));
  for (char& c : scheme) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (scheme != "http" && scheme != "https")
    throw FetchError(FetchError::Kind::bad_url, "unsupported URL scheme: " + scheme);
  const std::string_view rest = url.substr(sep + 3);
  const auto path_at = rest.find_first_of("/?#");
  std::string_view authority = rest.substr(0, path_at);
  if (const auto at = authority.rfind('@'); at != std::string_view::npos) authority = authority.substr(at + 1);
  if (authority.empty()) throw FetchError(FetchError::Kind::bad_url, "URL has no host: " + std::string(url));
  std::string target = path_at == std::string_view::npos ? "/" : std::string(rest.substr(path_at));
  if (const auto hash = target.find('#'); hash != std::string::npos) target.erase(hash);
  if (target.empty() || target.front() != '/') target.insert(target.begin(), '/');
  return {scheme, scheme + "://" + std::string(authority), target};
}

/// Resolves a Location header against the URL that produced it.
inline std::string resolve_location(const ParsedUrl& base, const std::string& location) {
  if (location.find("://") != std::string::npos) return location;
  if (location.rfind("//", 0) == 0) return base.scheme + ":" + location;
  if (!location.empty() && location.front() == '/') return base.origin + location;
  std::string dir = base.target.substr(0, base.target.find('?'));
  dir = dir.substr(0, dir.rfind('/') + 1);
  return base.origin + dir + location;
}

inline bool is_html_content_type(std::string_view content_type) {
  if (content_type.empty()) return true;
  std::string mime(content_type.substr(0, content_type.find(';')));
  for (char& c : mime) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  while (!mime.empty() && mime.back() == ' ') mime.pop_back();
  while (!mime.empty() && mime.front() == ' ') mime.erase(mime.begin());
  return mime.empty() || mime == "text/html" || mime == "application/xhtml+xml";
}

/// Downloads an HTML page. Follows up to max_redirects redirects; never
/// returns a truncated body.
inline std::string fetch_url(const std::string& url, const FetchConfig& cfg = FetchConfig::from_environment()) {
  cfg.validate();
  std::string current = url;
  for (int hop = 0;; ++hop) {
    const ParsedUrl parsed = parse_url(current);
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
    if (parsed.scheme == "https")
      throw FetchError(FetchError::Kind::connection_failed, "https support was not compiled in");
#endif
    httplib::Client client(parsed.origin);
    client.set_follow_location(false);
    client.set_connection_timeout(cfg.timeout);
    client.set_read_timeout(cfg.timeout);
    client.set_write_timeout(cfg.timeout);

    int status = 0;
    std::string content_type;
    std::string location;
    std::string body;
    bool too_large = false;

    httplib::Headers headers = {{"User-Agent", cfg.user_agent}, {"Accept", "text/html,application/xhtml+xml"}};
    auto result = client.Get(
        parsed.target, headers,
        [&](const httplib::Response& r) {
          status = r.status;
          content_type = r.get_header_value("Content-Type");
          location = r.get_header_value("Location");
          // Only a 2xx HTML body is worth reading.
          return status >= 200 && status < 300 && is_html_content_type(content_type);
        },
        [&](const char* data, std::size_t len) {
          if (body.size() + len > cfg.max_bytes) {
            too_large = true;
            return false;
          }
          body.append(data, len);
          return true;
        });

    if (too_large)
      throw FetchError(FetchError::Kind::too_large,
                       current + ": body exceeds " + std::to_string(cfg.max_bytes) + " bytes");
    if (status == 0) {
      const auto err = result.error();
      if (err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read)
        throw FetchError(FetchError::Kind::timeout, current + ": " + httplib::to_string(err));
      throw FetchError(FetchError::Kind::connection_failed, current + ": " + httplib::to_string(err));
    }
    if (status >= 300 && status < 400 && !location.empty()) {
      if (hop >= cfg.max_redirects)
        throw FetchError(FetchError::Kind::too_many_redirects,
                         url + ": more than " + std::to_string(cfg.max_redirects) + " redirects");
      current = resolve_location(parsed, location);
      continue;
    }
    if (status < 200 || status >= 300)
      throw FetchError(FetchError::Kind::http_status, current + ": HTTP " + std::to_string(status), status);
    if (!is_html_content_type(content_type))
      throw FetchError(FetchError::Kind::not_html, current + ": content type " + content_type);
    if (!result) {
      const auto err = result.error();
      if (err == httplib::Error::Read)
        throw FetchError(FetchError::Kind::timeout, current + ": " + httplib::to_string(err));
      throw FetchError(FetchError::Kind::connection_failed, current + ": " + httplib::to_string(err));
    }
    return body;
  }
}

} // namespace segfilter

#endif
