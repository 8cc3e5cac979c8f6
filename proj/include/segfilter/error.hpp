#ifndef SEGFILTER_ERROR_HPP
#define SEGFILTER_ERROR_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace segfilter {

/// Root of every exception thrown by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class InputTooLarge : public Error {
public:
  InputTooLarge(std::size_t size, std::size_t cap)
      : Error("input of " + std::to_string(size) + " bytes exceeds the " +
              std::to_string(cap) + " byte cap"),
        size_(size), cap_(cap) {}

  std::size_t size() const noexcept { return size_; }
  std::size_t cap() const noexcept { return cap_; }

private:
  std::size_t size_;
  std::size_t cap_;
};

class ConfigError : public Error {
public:
  using Error::Error;
};

class ProfileError : public Error {
public:
  enum class Kind { malformed, overlapping_tracks, multi_token_keyword, empty_keyword };

  ProfileError(Kind kind, std::string detail, std::string keyword = {})
      : Error(std::move(detail)), kind_(kind), keyword_(std::move(keyword)) {}

  Kind kind() const noexcept { return kind_; }
  const std::string& keyword() const noexcept { return keyword_; }

private:
  Kind kind_;
  std::string keyword_;
};

class EvalError : public Error {
public:
  enum class Kind { missing_label, duplicate_label, empty_session, empty_page, empty_input, malformed };

  EvalError(Kind kind, std::string detail) : Error(std::move(detail)), kind_(kind) {}

  Kind kind() const noexcept { return kind_; }

private:
  Kind kind_;
};

class FetchError : public Error {
public:
  enum class Kind { bad_url, timeout, too_large, http_status, not_html, too_many_redirects, connection_failed };

  FetchError(Kind kind, std::string detail, int status = 0)
      : Error(std::move(detail)), kind_(kind), status_(status) {}

  Kind kind() const noexcept { return kind_; }
  /// HTTP status code, only meaningful for Kind::http_status.
  int status() const noexcept { return status_; }

private:
  Kind kind_;
  int status_;
};

} // namespace segfilter

#endif
