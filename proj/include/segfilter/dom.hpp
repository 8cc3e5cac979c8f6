#ifndef SEGFILTER_DOM_HPP
#define SEGFILTER_DOM_HPP

// Lenient HTML parsing into a small value-type tree, plus the serializer
// that writes it back out.
//
// The tree builder follows a reduced HTML5 recovery model: html, head and
// body are always synthesized, unclosed elements are closed implicitly and
// stray end tags are dropped. Parsing never fails on markup; the only error
// is InputTooLarge.

#include <algorithm>
#include <array>
#include <cerrno>
#include <cstddef>
#include <iconv.h>
#include <optional>
#include <regex>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "segfilter/error.hpp"
#include "segfilter/text.hpp"

namespace segfilter {

enum class NodeKind { element, text, comment };

struct Attribute {
  std::string name;
  std::string value;

  bool operator==(const Attribute&) const = default;
};

struct DomNode {
  NodeKind kind = NodeKind::element;
  std::string tag;                    // elements only, lowercase
  std::vector<Attribute> attributes;  // elements only, names unique
  std::string text;                   // text and comment nodes only
  std::vector<DomNode> children;

  bool operator==(const DomNode&) const = default;

  static DomNode element(std::string tag, std::vector<Attribute> attrs = {},
                         std::vector<DomNode> children = {}) {
    DomNode n;
    n.kind = NodeKind::element;
    n.tag = std::move(tag);
    n.attributes = std::move(attrs);
    n.children = std::move(children);
    return n;
  }

  static DomNode text_node(std::string data) {
    DomNode n;
    n.kind = NodeKind::text;
    n.text = std::move(data);
    return n;
  }

  static DomNode comment(std::string data) {
    DomNode n;
    n.kind = NodeKind::comment;
    n.text = std::move(data);
    return n;
  }

  bool is_element() const noexcept { return kind == NodeKind::element; }
  bool is_element(std::string_view name) const noexcept {
    return kind == NodeKind::element && tag == name;
  }
  bool is_text() const noexcept { return kind == NodeKind::text; }

  const std::string* attribute(std::string_view name) const {
    for (const auto& a : attributes)
      if (a.name == name) return &a.value;
    return nullptr;
  }

  bool has_attribute(std::string_view name) const { return attribute(name) != nullptr; }

  /// Adds the attribute unless one with that name already exists.
  bool add_attribute(std::string name, std::string value) {
    if (has_attribute(name)) return false;
    attributes.push_back({std::move(name), std::move(value)});
    return true;
  }

  /// Replaces the value of an existing attribute, or adds it.
  void set_attribute(std::string_view name, std::string value) {
    for (auto& a : attributes)
      if (a.name == name) {
        a.value = std::move(value);
        return;
      }
    attributes.push_back({std::string(name), std::move(value)});
  }

  bool remove_attribute(std::string_view name) {
    auto it = std::find_if(attributes.begin(), attributes.end(),
                           [&](const Attribute& a) { return a.name == name; });
    if (it == attributes.end()) return false;
    attributes.erase(it);
    return true;
  }
};

using NodePath = std::vector<std::size_t>;

struct PageDocument {
  DomNode root = DomNode::element("html", {}, {DomNode::element("head"), DomNode::element("body")});
  std::optional<std::string> source_url;
  std::size_t raw_byte_length = 0;

  DomNode& head() { return root.children.front(); }
  const DomNode& head() const { return root.children.front(); }
  DomNode& body() { return root.children.back(); }
  const DomNode& body() const { return root.children.back(); }

  /// Resolves a path of child indices starting at body. Returns nullptr when
  /// the path leaves the tree.
  const DomNode* at(const NodePath& path) const {
    const DomNode* n = &body();
    for (std::size_t i : path) {
      if (i >= n->children.size()) return nullptr;
      n = &n->children[i];
    }
    return n;
  }

  DomNode* at(const NodePath& path) {
    return const_cast<DomNode*>(std::as_const(*this).at(path));
  }
};

struct ParseOptions {
  std::size_t max_bytes = std::size_t{8} << 20;
};

namespace html {

inline constexpr std::array<std::string_view, 14> kVoidElements = {
    "area", "base", "br", "col", "embed", "hr", "img", "input", "link", "meta", "param", "source", "track", "wbr"};

// Content is tokenized as raw text: no markup, no entities.
inline constexpr std::array<std::string_view, 7> kRawTextElements = {
    "script", "style", "iframe", "noembed", "noframes", "xmp", "plaintext"};

// Content is tokenized as text with character references.
inline constexpr std::array<std::string_view, 2> kEscapableRawTextElements = {"textarea", "title"};

// Subtrees never rendered as page text.
inline constexpr std::array<std::string_view, 5> kInvisibleElements = {
    "script", "style", "noscript", "template", "iframe"};

template <std::size_t N>
bool contains(const std::array<std::string_view, N>& set, std::string_view name) {
  return std::find(set.begin(), set.end(), name) != set.end();
}

inline bool is_void(std::string_view tag) { return contains(kVoidElements, tag); }
inline bool is_raw_text(std::string_view tag) { return contains(kRawTextElements, tag); }
inline bool is_invisible(std::string_view tag) { return contains(kInvisibleElements, tag); }

} // namespace html

namespace detail {

struct NamedEntity {
  std::string_view name;
  char32_t cp;
};

inline constexpr NamedEntity kEntities[] = {
    {"amp", '&'},       {"lt", '<'},         {"gt", '>'},         {"quot", '"'},       {"apos", '\''},
    {"nbsp", 0xA0},     {"copy", 0xA9},      {"reg", 0xAE},       {"trade", 0x2122},   {"hellip", 0x2026},
    {"mdash", 0x2014},  {"ndash", 0x2013},   {"lsquo", 0x2018},   {"rsquo", 0x2019},   {"sbquo", 0x201A},
    {"ldquo", 0x201C},  {"rdquo", 0x201D},   {"bdquo", 0x201E},   {"laquo", 0xAB},     {"raquo", 0xBB},
    {"middot", 0xB7},   {"bull", 0x2022},    {"deg", 0xB0},       {"plusmn", 0xB1},    {"times", 0xD7},
    {"divide", 0xF7},   {"euro", 0x20AC},    {"pound", 0xA3},     {"yen", 0xA5},       {"cent", 0xA2},
    {"sect", 0xA7},     {"para", 0xB6},      {"iexcl", 0xA1},     {"iquest", 0xBF},    {"frac12", 0xBD},
    {"frac14", 0xBC},   {"frac34", 0xBE},    {"sup2", 0xB2},      {"sup3", 0xB3},      {"shy", 0xAD},
    {"larr", 0x2190},   {"rarr", 0x2192},    {"uarr", 0x2191},    {"darr", 0x2193},    {"thinsp", 0x2009},
    {"ensp", 0x2002},   {"emsp", 0x2003},    {"zwnj", 0x200C},    {"zwj", 0x200D},     {"dagger", 0x2020},
    {"aacute", 0xE1},   {"agrave", 0xE0},    {"acirc", 0xE2},     {"auml", 0xE4},      {"atilde", 0xE3},
    {"aring", 0xE5},    {"aelig", 0xE6},     {"ccedil", 0xE7},    {"eacute", 0xE9},    {"egrave", 0xE8},
    {"ecirc", 0xEA},    {"euml", 0xEB},      {"iacute", 0xED},    {"igrave", 0xEC},    {"icirc", 0xEE},
    {"iuml", 0xEF},     {"ntilde", 0xF1},    {"oacute", 0xF3},    {"ograve", 0xF2},    {"ocirc", 0xF4},
    {"ouml", 0xF6},     {"otilde", 0xF5},    {"oslash", 0xF8},    {"uacute", 0xFA},    {"ugrave", 0xF9},
    {"ucirc", 0xFB},    {"uuml", 0xFC},      {"yacute", 0xFD},    {"yuml", 0xFF},      {"szlig", 0xDF},
    {"Aacute", 0xC1},   {"Agrave", 0xC0},    {"Acirc", 0xC2},     {"Auml", 0xC4},      {"Aring", 0xC5},
    {"Ccedil", 0xC7},   {"Eacute", 0xC9},    {"Egrave", 0xC8},    {"Ntilde", 0xD1},    {"Oacute", 0xD3},
    {"Ouml", 0xD6},     {"Oslash", 0xD8},    {"Uacute", 0xDA},    {"Uuml", 0xDC},
};

// Numeric references in 0x80..0x9F name windows-1252 characters.
inline constexpr char32_t kWindows1252High[32] = {
    0x20AC, 0x81,   0x201A, 0x0192, 0x201E, 0x2026, 0x2020, 0x2021, 0x02C6, 0x2030, 0x0160,
    0x2039, 0x0152, 0x8D,   0x017D, 0x8F,   0x90,   0x2018, 0x2019, 0x201C, 0x201D, 0x2022,
    0x2013, 0x2014, 0x02DC, 0x2122, 0x0161, 0x203A, 0x0153, 0x9D,   0x017E, 0x0178};

inline bool is_ascii_alpha(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); }
inline bool is_ascii_alnum(char c) { return is_ascii_alpha(c) || (c >= '0' && c <= '9'); }
inline char ascii_lower(char c) { return (c >= 'A' && c <= 'Z') ? static_cast<char>(c + 32) : c; }

inline std::string ascii_lowercase(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = ascii_lower(c);
  return out;
}

/// Tries to decode a character reference at s[pos] == '&'. On success
/// appends the character, advances pos past the reference and returns true.
inline bool decode_reference(std::string_view s, std::size_t& pos, std::string& out, bool in_attribute) {
  std::size_t i = pos + 1;
  if (i >= s.size()) return false;
  if (s[i] == '#') {
    ++i;
    const bool hex = i < s.size() && (s[i] == 'x' || s[i] == 'X');
    if (hex) ++i;
    const std::size_t digits_start = i;
    std::uint32_t value = 0;
    while (i < s.size()) {
      const char c = s[i];
      int d = -1;
      if (c >= '0' && c <= '9') d = c - '0';
      else if (hex && c >= 'a' && c <= 'f') d = c - 'a' + 10;
      else if (hex && c >= 'A' && c <= 'F') d = c - 'A' + 10;
      if (d < 0) break;
      if (value <= 0x10FFFF) value = value * (hex ? 16 : 10) + static_cast<std::uint32_t>(d);
      ++i;
    }
    if (i == digits_start) return false;
    if (i < s.size() && s[i] == ';') ++i;
    char32_t cp = value;
    if (cp >= 0x80 && cp <= 0x9F) cp = kWindows1252High[cp - 0x80];
    if (cp == 0 || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) cp = kReplacementChar;
    append_utf8(out, cp);
    pos = i;
    return true;
  }
  std::size_t end = i;
  while (end < s.size() && is_ascii_alnum(s[end]) && end - i < 32) ++end;
  if (end == i) return false;
  const std::string_view name = s.substr(i, end - i);
  const bool has_semicolon = end < s.size() && s[end] == ';';
  for (const auto& e : kEntities) {
    if (e.name != name) continue;
    if (!has_semicolon) {
      // Legacy references without ';' are only honoured for the basic four.
      const bool legacy = name == "amp" || name == "lt" || name == "gt" || name == "quot";
      if (!legacy) return false;
      if (in_attribute && end < s.size() && (is_ascii_alnum(s[end]) || s[end] == '=')) return false;
    }
    append_utf8(out, e.cp);
    pos = has_semicolon ? end + 1 : end;
    return true;
  }
  return false;
}

inline std::string decode_text(std::string_view s, bool in_attribute = false) {
  std::string out;
  out.reserve(s.size());
  for (std::size_t pos = 0; pos < s.size();) {
    if (s[pos] == '&' && decode_reference(s, pos, out, in_attribute)) continue;
    out.push_back(s[pos++]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Byte-level preprocessing: charset, UTF-8 repair, newline normalization.

class IconvHandle {
public:
  IconvHandle(const char* to, const char* from) : cd_(iconv_open(to, from)) {}
  ~IconvHandle() {
    if (valid()) iconv_close(cd_);
  }
  IconvHandle(const IconvHandle&) = delete;
  IconvHandle& operator=(const IconvHandle&) = delete;

  bool valid() const { return cd_ != reinterpret_cast<iconv_t>(-1); }
  iconv_t get() const { return cd_; }

private:
  iconv_t cd_;
};

/// Converts `in` from `charset` to UTF-8; undecodable bytes become U+FFFD.
/// Returns nullopt when iconv does not know the charset.
inline std::optional<std::string> transcode_to_utf8(std::string_view in, const std::string& charset) {
  IconvHandle cd("UTF-8", charset.c_str());
  if (!cd.valid()) return std::nullopt;
  std::string out;
  out.reserve(in.size() * 2);
  char buffer[4096];
  char* src = const_cast<char*>(in.data());
  std::size_t src_left = in.size();
  while (src_left > 0) {
    char* dst = buffer;
    std::size_t dst_left = sizeof buffer;
    const std::size_t rc = iconv(cd.get(), &src, &src_left, &dst, &dst_left);
    out.append(buffer, static_cast<std::size_t>(dst - buffer));
    if (rc == static_cast<std::size_t>(-1)) {
      if (errno == E2BIG) continue;
      // EILSEQ or EINVAL: skip one byte and reset the shift state.
      append_utf8(out, kReplacementChar);
      ++src;
      --src_left;
      iconv(cd.get(), nullptr, nullptr, nullptr, nullptr);
    }
  }
  return out;
}

/// Looks for a charset declaration in the first 1024 bytes.
inline std::optional<std::string> sniff_declared_charset(std::string_view bytes) {
  static const std::regex meta_charset(R"(<meta[^>]*?charset\s*=\s*["']?\s*([A-Za-z0-9_:.\-]+))",
                                       std::regex::icase);
  const std::string prefix(bytes.substr(0, 1024));
  std::smatch m;
  if (std::regex_search(prefix, m, meta_charset)) return ascii_lowercase(m[1].str());
  return std::nullopt;
}

inline std::string decode_input_bytes(std::string_view bytes) {
  if (bytes.size() >= 3 && bytes.substr(0, 3) == "\xEF\xBB\xBF") return sanitize_utf8(bytes.substr(3));
  if (bytes.size() >= 2 && (bytes.substr(0, 2) == "\xFF\xFE" || bytes.substr(0, 2) == "\xFE\xFF")) {
    if (auto s = transcode_to_utf8(bytes, "UTF-16")) return *s;
  }
  if (auto label = sniff_declared_charset(bytes)) {
    std::string cs = *label;
    const bool utf8 = cs == "utf-8" || cs == "utf8" || cs == "unicode-1-1-utf-8" ||
                      cs.rfind("utf-16", 0) == 0;
    if (!utf8) {
      if (cs == "iso-8859-1" || cs == "latin1" || cs == "l1" || cs == "ascii" || cs == "us-ascii" ||
          cs == "iso8859-1" || cs == "cp1252")
        cs = "WINDOWS-1252";
      if (auto s = transcode_to_utf8(bytes, cs)) return *s;
    }
  }
  return sanitize_utf8(bytes);
}

/// The tree always holds UTF-8, so meta charset declarations are rewritten
/// to say so. Otherwise a serialized transcoded page would be misread.
inline void declare_utf8(DomNode& node) {
  if (!node.is_element()) return;
  if (node.tag == "meta") {
    if (const std::string* cs = node.attribute("charset"); cs != nullptr && ascii_lowercase(*cs) != "utf-8")
      node.set_attribute("charset", "utf-8");
    const std::string* equiv = node.attribute("http-equiv");
    const std::string* content = node.attribute("content");
    if (equiv != nullptr && content != nullptr && ascii_lowercase(*equiv) == "content-type") {
      const std::string lowered = ascii_lowercase(*content);
      if (lowered.find("charset") != std::string::npos && lowered.find("charset=utf-8") == std::string::npos)
        node.set_attribute("content", "text/html; charset=utf-8");
    }
  }
  for (auto& c : node.children) declare_utf8(c);
}

inline std::string normalize_newlines(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    const char c = s[i];
    if (c == '\r') {
      out.push_back('\n');
      if (i + 1 < s.size() && s[i + 1] == '\n') ++i;
    } else if (c == '\0') {
      append_utf8(out, kReplacementChar);
    } else {
      out.push_back(c);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Tokenizer.

struct Token {
  enum class Type { start_tag, end_tag, text, comment, doctype };
  Type type;
  std::string name;  // tag name
  std::vector<Attribute> attributes;
  std::string data;  // text / comment data
};

class Tokenizer {
public:
  explicit Tokenizer(std::string_view input) : s_(input) {}

  std::optional<Token> next() {
    if (!raw_end_tag_.empty()) return read_raw_text();
    if (pos_ >= s_.size()) return std::nullopt;
    if (s_[pos_] == '<') {
      if (auto t = read_markup()) return t;
    }
    return read_text();
  }

private:
  bool starts_with_ci(std::size_t at, std::string_view lit) const {
    if (at + lit.size() > s_.size()) return false;
    for (std::size_t i = 0; i < lit.size(); ++i)
      if (ascii_lower(s_[at + i]) != lit[i]) return false;
    return true;
  }

  Token read_text() {
    const std::size_t start = pos_;
    ++pos_;  // a '<' that did not start markup is literal text
    while (pos_ < s_.size() && s_[pos_] != '<') ++pos_;
    return Token{Token::Type::text, {}, {}, decode_text(s_.substr(start, pos_ - start))};
  }

  Token read_raw_text() {
    const std::size_t start = pos_;
    std::size_t end = s_.size();
    for (std::size_t i = pos_; i + 1 < s_.size(); ++i) {
      if (s_[i] != '<' || s_[i + 1] != '/') continue;
      const std::size_t name_at = i + 2;
      if (!starts_with_ci(name_at, raw_end_tag_)) continue;
      const std::size_t after = name_at + raw_end_tag_.size();
      if (after == s_.size() || is_html_space(s_[after]) || s_[after] == '/' || s_[after] == '>') {
        end = i;
        break;
      }
    }
    pos_ = end;
    const bool escapable = raw_escapable_;
    raw_end_tag_.clear();
    std::string_view body = s_.substr(start, end - start);
    if (body.empty()) {
      if (auto t = next()) return *t;
      return Token{Token::Type::text, {}, {}, {}};
    }
    return Token{Token::Type::text, {}, {}, escapable ? decode_text(body) : std::string(body)};
  }

  std::optional<Token> read_markup() {
    const std::size_t lt = pos_;
    if (lt + 1 >= s_.size()) return std::nullopt;
    const char c = s_[lt + 1];
    if (c == '!') {
      if (s_.compare(lt, 4, "<!--") == 0) {
        const std::size_t close = s_.find("-->", lt + 4);
        const std::size_t end = close == std::string_view::npos ? s_.size() : close;
        pos_ = close == std::string_view::npos ? s_.size() : close + 3;
        return Token{Token::Type::comment, {}, {}, std::string(s_.substr(lt + 4, end - lt - 4))};
      }
      if (starts_with_ci(lt + 2, "doctype")) {
        skip_past('>', lt + 2);
        return Token{Token::Type::doctype, {}, {}, {}};
      }
      return bogus_comment(lt + 2);
    }
    if (c == '?') return bogus_comment(lt + 1);
    if (c == '/') {
      if (lt + 2 < s_.size() && is_ascii_alpha(s_[lt + 2])) {
        std::size_t i = lt + 2;
        const std::size_t name_start = i;
        while (i < s_.size() && !is_html_space(s_[i]) && s_[i] != '/' && s_[i] != '>') ++i;
        std::string name = ascii_lowercase(s_.substr(name_start, i - name_start));
        const std::size_t close = s_.find('>', i);
        if (close == std::string_view::npos) {
          pos_ = s_.size();  // EOF inside a tag drops it
          return Token{Token::Type::text, {}, {}, {}};
        }
        pos_ = close + 1;
        return Token{Token::Type::end_tag, std::move(name), {}, {}};
      }
      if (lt + 2 < s_.size() && s_[lt + 2] == '>') {
        pos_ = lt + 3;
        return Token{Token::Type::text, {}, {}, {}};
      }
      if (lt + 2 >= s_.size()) return std::nullopt;
      return bogus_comment(lt + 2);
    }
    if (is_ascii_alpha(c)) return read_start_tag(lt);
    return std::nullopt;
  }

  Token bogus_comment(std::size_t data_start) {
    const std::size_t close = s_.find('>', data_start);
    const std::size_t end = close == std::string_view::npos ? s_.size() : close;
    pos_ = close == std::string_view::npos ? s_.size() : close + 1;
    return Token{Token::Type::comment, {}, {}, std::string(s_.substr(data_start, end - data_start))};
  }

  void skip_past(char ch, std::size_t from) {
    const std::size_t at = s_.find(ch, from);
    pos_ = at == std::string_view::npos ? s_.size() : at + 1;
  }

  Token read_start_tag(std::size_t lt) {
    std::size_t i = lt + 1;
    const std::size_t name_start = i;
    while (i < s_.size() && !is_html_space(s_[i]) && s_[i] != '/' && s_[i] != '>') ++i;
    Token tok{Token::Type::start_tag, ascii_lowercase(s_.substr(name_start, i - name_start)), {}, {}};
    for (;;) {
      while (i < s_.size() && (is_html_space(s_[i]) || s_[i] == '/')) ++i;
      if (i >= s_.size()) {
        pos_ = s_.size();
        return Token{Token::Type::text, {}, {}, {}};
      }
      if (s_[i] == '>') {
        ++i;
        break;
      }
      const std::size_t an_start = i;
      ++i;  // the first character may be '='
      while (i < s_.size() && !is_html_space(s_[i]) && s_[i] != '/' && s_[i] != '>' && s_[i] != '=') ++i;
      std::string name = ascii_lowercase(s_.substr(an_start, i - an_start));
      while (i < s_.size() && is_html_space(s_[i])) ++i;
      std::string value;
      if (i < s_.size() && s_[i] == '=') {
        ++i;
        while (i < s_.size() && is_html_space(s_[i])) ++i;
        if (i < s_.size() && (s_[i] == '"' || s_[i] == '\'')) {
          const char q = s_[i];
          const std::size_t close = s_.find(q, i + 1);
          if (close == std::string_view::npos) {
            pos_ = s_.size();
            return Token{Token::Type::text, {}, {}, {}};
          }
          value = decode_text(s_.substr(i + 1, close - i - 1), true);
          i = close + 1;
        } else {
          const std::size_t v_start = i;
          while (i < s_.size() && !is_html_space(s_[i]) && s_[i] != '>') ++i;
          value = decode_text(s_.substr(v_start, i - v_start), true);
        }
      }
      const bool seen = std::any_of(tok.attributes.begin(), tok.attributes.end(),
                                    [&](const Attribute& a) { return a.name == name; });
      if (!seen) tok.attributes.push_back({std::move(name), std::move(value)});
    }
    pos_ = i;
    if (html::is_raw_text(tok.name) || html::contains(html::kEscapableRawTextElements, tok.name)) {
      raw_end_tag_ = tok.name;
      raw_escapable_ = !html::is_raw_text(tok.name);
    }
    return tok;
  }

  std::string_view s_;
  std::size_t pos_ = 0;
  std::string raw_end_tag_;
  bool raw_escapable_ = false;
};

// ---------------------------------------------------------------------------
// Tree construction.

inline constexpr std::array<std::string_view, 38> kClosesParagraph = {
    "address", "article", "aside",  "blockquote", "center", "details", "dialog", "dir",  "div", "dl",
    "fieldset", "figcaption", "figure", "footer", "form", "h1", "h2", "h3", "h4", "h5", "h6", "header",
    "hgroup",  "hr",      "li",     "main",       "menu",   "nav",     "ol",     "p",    "pre", "section",
    "summary", "table",   "ul",     "dd",         "dt",     "td"};

inline constexpr std::array<std::string_view, 11> kScopeBoundaries = {
    "html", "body", "table", "td", "th", "caption", "template", "button", "object", "marquee", "applet"};

inline constexpr std::array<std::string_view, 8> kHeadElements = {
    "base", "link", "meta", "title", "style", "script", "noscript", "template"};

inline bool is_heading(std::string_view t) {
  return t.size() == 2 && t[0] == 'h' && t[1] >= '1' && t[1] <= '6';
}

class TreeBuilder {
public:
  TreeBuilder() : doc_() { stack_ = {&doc_.root, &doc_.head()}; }

  void feed(Token tok) {
    if (in_head_) {
      feed_in_head(std::move(tok));
    } else {
      feed_in_body(std::move(tok));
    }
  }

  PageDocument finish() && { return std::move(doc_); }

private:
  DomNode& top() { return *stack_.back(); }

  void enter_body() {
    in_head_ = false;
    stack_ = {&doc_.root, &doc_.body()};
  }

  static void merge_attributes(DomNode& target, std::vector<Attribute>& attrs) {
    for (auto& a : attrs) target.add_attribute(std::move(a.name), std::move(a.value));
  }

  void append_text(std::string data) {
    if (data.empty()) return;
    auto& kids = top().children;
    if (!kids.empty() && kids.back().is_text())
      kids.back().text += data;
    else
      kids.push_back(DomNode::text_node(std::move(data)));
  }

  void insert_element(Token& tok) {
    top().children.push_back(DomNode::element(std::move(tok.name), std::move(tok.attributes)));
    DomNode& inserted = top().children.back();
    if (!html::is_void(inserted.tag)) stack_.push_back(&inserted);
  }

  void feed_in_head(Token tok) {
    using T = Token::Type;
    const bool at_head = stack_.size() == 2;
    switch (tok.type) {
      case T::doctype:
        return;
      case T::comment:
        top().children.push_back(DomNode::comment(std::move(tok.data)));
        return;
      case T::text: {
        if (!at_head) {
          append_text(std::move(tok.data));
          return;
        }
        std::size_t i = 0;
        while (i < tok.data.size() && is_html_space(tok.data[i])) ++i;
        if (i == tok.data.size()) return;
        enter_body();
        append_text(tok.data.substr(i));
        return;
      }
      case T::start_tag:
        if (tok.name == "html") {
          merge_attributes(doc_.root, tok.attributes);
          return;
        }
        if (tok.name == "head") return;
        if (tok.name == "body") {
          enter_body();
          merge_attributes(doc_.body(), tok.attributes);
          return;
        }
        if (html::contains(kHeadElements, tok.name)) {
          insert_element(tok);
          return;
        }
        enter_body();
        feed_in_body(std::move(tok));
        return;
      case T::end_tag:
        pop_to(tok.name, 2);
        return;
    }
  }

  void feed_in_body(Token tok) {
    using T = Token::Type;
    switch (tok.type) {
      case T::doctype:
        return;
      case T::comment:
        top().children.push_back(DomNode::comment(std::move(tok.data)));
        return;
      case T::text:
        append_text(std::move(tok.data));
        return;
      case T::start_tag:
        start_tag_in_body(tok);
        return;
      case T::end_tag:
        end_tag_in_body(tok.name);
        return;
    }
  }

  /// Index of the nearest open element named one of `names`, searching down
  /// from the top and stopping at any element in `boundaries`.
  template <typename Names, typename Bounds>
  std::optional<std::size_t> find_in_scope(const Names& names, const Bounds& boundaries) const {
    for (std::size_t i = stack_.size(); i-- > 2;) {
      const std::string& t = stack_[i]->tag;
      if (std::find(std::begin(names), std::end(names), t) != std::end(names)) return i;
      if (std::find(std::begin(boundaries), std::end(boundaries), t) != std::end(boundaries)) return std::nullopt;
    }
    return std::nullopt;
  }

  void pop_to_index(std::size_t i) { stack_.resize(i); }

  void pop_to(std::string_view name, std::size_t floor) {
    for (std::size_t i = stack_.size(); i-- > floor;) {
      if (stack_[i]->tag == name) {
        pop_to_index(i);
        return;
      }
    }
  }

  void start_tag_in_body(Token& tok) {
    const std::string& t = tok.name;
    if (t == "html") {
      merge_attributes(doc_.root, tok.attributes);
      return;
    }
    if (t == "body") {
      merge_attributes(doc_.body(), tok.attributes);
      return;
    }
    if (t == "head") return;

    static constexpr std::string_view p[] = {"p"};
    if (html::contains(kClosesParagraph, t)) {
      if (auto i = find_in_scope(p, kScopeBoundaries)) pop_to_index(*i);
    }
    if (t == "li") {
      static constexpr std::string_view li[] = {"li"};
      static constexpr std::string_view bounds[] = {"ul", "ol", "html", "body", "table", "td", "th",
                                                    "template", "button"};
      if (auto i = find_in_scope(li, bounds)) pop_to_index(*i);
    } else if (t == "dd" || t == "dt") {
      static constexpr std::string_view dd[] = {"dd", "dt"};
      static constexpr std::string_view bounds[] = {"dl", "html", "body", "table", "td", "th",
                                                    "template", "button"};
      if (auto i = find_in_scope(dd, bounds)) pop_to_index(*i);
    } else if (is_heading(t)) {
      if (is_heading(top().tag) && stack_.size() > 2) stack_.pop_back();
    } else if (t == "a") {
      static constexpr std::string_view a[] = {"a"};
      static constexpr std::string_view bounds[] = {"table", "td", "th", "template", "button"};
      if (auto i = find_in_scope(a, bounds)) pop_to_index(*i);
    } else if (t == "td" || t == "th") {
      static constexpr std::string_view cell[] = {"td", "th"};
      static constexpr std::string_view bounds[] = {"tr", "table", "template"};
      if (auto i = find_in_scope(cell, bounds)) pop_to_index(*i);
    } else if (t == "tr") {
      static constexpr std::string_view row[] = {"tr"};
      static constexpr std::string_view bounds[] = {"table", "template"};
      if (auto i = find_in_scope(row, bounds)) pop_to_index(*i);
    } else if (t == "thead" || t == "tbody" || t == "tfoot") {
      static constexpr std::string_view section[] = {"thead", "tbody", "tfoot"};
      static constexpr std::string_view bounds[] = {"table", "template"};
      if (auto i = find_in_scope(section, bounds)) pop_to_index(*i);
    } else if (t == "option") {
      if (top().tag == "option" && stack_.size() > 2) stack_.pop_back();
    } else if (t == "optgroup") {
      if (top().tag == "option" && stack_.size() > 2) stack_.pop_back();
      if (top().tag == "optgroup" && stack_.size() > 2) stack_.pop_back();
    } else if (t == "button") {
      static constexpr std::string_view button[] = {"button"};
      if (auto i = find_in_scope(button, kScopeBoundaries)) pop_to_index(*i);
    }
    insert_element(tok);
  }

  void end_tag_in_body(const std::string& t) {
    if (t == "html" || t == "body" || t == "head") return;
    static constexpr std::string_view bounds[] = {"table", "td", "th", "template", "caption"};
    for (std::size_t i = stack_.size(); i-- > 2;) {
      const std::string& open = stack_[i]->tag;
      if (open == t) {
        pop_to_index(i);
        return;
      }
      if (std::find(std::begin(bounds), std::end(bounds), open) != std::end(bounds)) return;
    }
  }

  PageDocument doc_;
  std::vector<DomNode*> stack_;
  bool in_head_ = true;
};

inline void escape_into(std::string& out, std::string_view s, bool attribute) {
  for (const char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"':
        if (attribute) {
          out += "&quot;";
          break;
        }
        [[fallthrough]];
      default: out.push_back(c);
    }
  }
}

inline void serialize_node(std::string& out, const DomNode& node, bool raw_parent) {
  switch (node.kind) {
    case NodeKind::text:
      if (raw_parent)
        out += node.text;
      else
        escape_into(out, node.text, false);
      return;
    case NodeKind::comment:
      out += "<!--";
      out += node.text;
      out += "-->";
      return;
    case NodeKind::element:
      break;
  }
  out.push_back('<');
  out += node.tag;
  for (const auto& a : node.attributes) {
    out.push_back(' ');
    out += a.name;
    out += "=\"";
    escape_into(out, a.value, true);
    out.push_back('"');
  }
  out.push_back('>');
  if (html::is_void(node.tag)) return;
  const bool raw = html::is_raw_text(node.tag);
  for (const auto& child : node.children) serialize_node(out, child, raw);
  out += "</";
  out += node.tag;
  out.push_back('>');
}

inline void collect_visible(const DomNode& node, std::vector<std::string_view>& pieces) {
  if (node.is_text()) {
    pieces.push_back(node.text);
    return;
  }
  if (!node.is_element() || html::is_invisible(node.tag)) return;
  for (const auto& c : node.children) collect_visible(c, pieces);
}

inline std::string collapse_whitespace(const std::vector<std::string_view>& pieces) {
  std::string out;
  bool pending_space = false;
  for (std::size_t p = 0; p < pieces.size(); ++p) {
    if (p > 0) pending_space = true;
    for (const char c : pieces[p]) {
      if (is_html_space(c)) {
        pending_space = true;
        continue;
      }
      if (pending_space && !out.empty()) out.push_back(' ');
      pending_space = false;
      out.push_back(c);
    }
  }
  return out;
}

} // namespace detail

/// Parses arbitrary bytes into a document. Never fails on malformed markup.
inline PageDocument parse_html(std::string_view input, std::optional<std::string> source_url = std::nullopt,
                               const ParseOptions& options = {}) {
  if (input.size() > options.max_bytes) throw InputTooLarge(input.size(), options.max_bytes);
  const std::string text = detail::normalize_newlines(detail::decode_input_bytes(input));
  detail::Tokenizer tokenizer(text);
  detail::TreeBuilder builder;
  while (auto tok = tokenizer.next()) builder.feed(std::move(*tok));
  PageDocument doc = std::move(builder).finish();
  detail::declare_utf8(doc.root);
  doc.source_url = std::move(source_url);
  doc.raw_byte_length = input.size();
  return doc;
}

inline std::string serialize_html(const DomNode& node) {
  std::string out;
  detail::serialize_node(out, node, false);
  return out;
}

inline std::string serialize_html(const PageDocument& doc) {
  std::string out = "<!DOCTYPE html>";
  detail::serialize_node(out, doc.root, false);
  return out;
}

/// Text a reader would see: descendant text in document order, one space
/// between text nodes, whitespace runs collapsed, trimmed.
inline std::string visible_text(const DomNode& node) {
  std::vector<std::string_view> pieces;
  detail::collect_visible(node, pieces);
  return detail::collapse_whitespace(pieces);
}

inline std::string visible_text(const std::vector<DomNode>& nodes) {
  std::vector<std::string_view> pieces;
  for (const auto& n : nodes) detail::collect_visible(n, pieces);
  return detail::collapse_whitespace(pieces);
}

} // namespace segfilter

#endif
