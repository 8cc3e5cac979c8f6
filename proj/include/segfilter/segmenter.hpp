#ifndef SEGFILTER_SEGMENTER_HPP
#define SEGFILTER_SEGMENTER_HPP

// Block-level page segmentation with text-density merging, and extraction
// of each segment's text / link / image evidence.

#include <cmath>
#include <cstddef>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "segfilter/dom.hpp"
#include "segfilter/error.hpp"
#include "segfilter/text.hpp"

namespace segfilter {

/// Attribute marking a placeholder that replaced a blocked segment.
inline constexpr std::string_view kDummyMarkerAttribute = "data-segfilter";
inline constexpr std::string_view kDummyMarkerValue = "blocked";

inline bool is_dummy_marker(const DomNode& node) {
  if (!node.is_element()) return false;
  const std::string* v = node.attribute(kDummyMarkerAttribute);
  return v != nullptr && *v == kDummyMarkerValue;
}

struct LinkItem {
  std::string href;
  std::vector<std::string> anchor_tokens;
  std::vector<std::string> url_tokens;
  NodePath node_path;

  bool operator==(const LinkItem&) const = default;
};

struct ImageItem {
  std::string src;
  std::vector<std::string> alt_tokens;
  NodePath node_path;

  bool operator==(const ImageItem&) const = default;
};

struct SegmentContent {
  std::vector<std::string> text_tokens;
  std::vector<LinkItem> links;
  std::vector<ImageItem> images;

  bool operator==(const SegmentContent&) const = default;

  /// True when no channel carries any item at all.
  bool empty() const { return text_tokens.empty() && links.empty() && images.empty(); }
};

struct Segment {
  std::size_t index = 0;
  NodePath node_path;           // body-relative path of nodes.front()
  std::vector<DomNode> nodes;   // consecutive siblings, copied from the page
  SegmentContent content;
  double density = 0.0;
  bool is_dummy = false;

  bool operator==(const Segment&) const = default;
};

struct SegmenterConfig {
  std::set<std::string, std::less<>> block_tags = {
      "address", "article", "aside", "blockquote", "div", "dl", "fieldset", "figure",
      "footer",  "form",    "h1",    "h2",         "h3",  "h4", "h5",       "h6",
      "header",  "hr",      "li",    "main",       "nav", "ol", "p",        "pre",
      "section", "table",   "td",    "ul"};
  std::size_t wrap_width = 80;
  double merge_threshold = 2.0;
  bool drop_empty = true;

  void validate() const {
    if (wrap_width < 1) throw ConfigError("wrap_width must be at least 1");
    if (!(merge_threshold >= 0.0)) throw ConfigError("merge_threshold must be non-negative");
  }
};

// Tokens per wrapped line of visible text. Empty text counts as one line.
inline double text_density_of(const std::string& text, std::size_t wrap_width) {
  if (wrap_width < 1) throw ConfigError("wrap_width must be at least 1");
  const std::size_t tokens = tokenize(text).size();
  const std::size_t chars = utf8_length(text);
  const std::size_t lines = chars == 0 ? 1 : (chars + wrap_width - 1) / wrap_width;
  return static_cast<double>(tokens) / static_cast<double>(lines);
}

inline double text_density(const DomNode& block, std::size_t wrap_width) {
  return text_density_of(visible_text(block), wrap_width);
}

inline double text_density(const std::vector<DomNode>& nodes, std::size_t wrap_width) {
  return text_density_of(visible_text(nodes), wrap_width);
}

namespace detail {

class TripleExtractor {
public:
  explicit TripleExtractor(SegmentContent& out) : out_(out) {}

  void walk(const DomNode& node, NodePath& path) {
    switch (node.kind) {
      case NodeKind::comment:
        return;
      case NodeKind::text: {
        auto tokens = tokenize(node.text);
        auto& sink = current_link_ ? out_.links[*current_link_].anchor_tokens : out_.text_tokens;
        sink.insert(sink.end(), std::make_move_iterator(tokens.begin()), std::make_move_iterator(tokens.end()));
        return;
      }
      case NodeKind::element:
        break;
    }
    if (html::is_invisible(node.tag)) return;
    if (node.tag == "img") {
      const std::string* src = node.attribute("src");
      const std::string* alt = node.attribute("alt");
      out_.images.push_back({src ? *src : std::string{}, alt ? tokenize(*alt) : std::vector<std::string>{}, path});
    }
    const auto saved = current_link_;
    if (node.tag == "a") {
      if (const std::string* href = node.attribute("href")) {
        out_.links.push_back({*href, {}, tokenize(*href), path});
        current_link_ = out_.links.size() - 1;
      }
    }
    for (std::size_t i = 0; i < node.children.size(); ++i) {
      path.push_back(i);
      walk(node.children[i], path);
      path.pop_back();
    }
    current_link_ = saved;
  }

private:
  SegmentContent& out_;
  std::optional<std::size_t> current_link_;
};

} // namespace detail

/// Splits the nodes' content into text tokens (outside anchors), links and
/// images. `origin` is the body-relative path of nodes[0]; sibling i is
/// addressed by incrementing its last component. With an empty origin the
/// paths are relative to the list: [i, child, ...].
inline SegmentContent extract_triple(const std::vector<DomNode>& nodes, const NodePath& origin = {}) {
  SegmentContent content;
  detail::TripleExtractor extractor(content);
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    NodePath path = origin;
    if (path.empty())
      path.push_back(i);
    else
      path.back() += i;
    extractor.walk(nodes[i], path);
  }
  return content;
}

namespace detail {

class PageSegmenter {
public:
  PageSegmenter(const SegmenterConfig& cfg) : cfg_(cfg) {}

  std::vector<Segment> run(const DomNode& body) {
    visit_container(body, {});
    return std::move(segments_);
  }

private:
  struct Block {
    std::size_t first;
    std::size_t last;
    double density;
    bool marker;
  };

  bool is_block_tag(const std::string& tag) const { return cfg_.block_tags.count(tag) > 0; }

  bool has_block_descendant(const DomNode& node) {
    if (auto it = memo_.find(&node); it != memo_.end()) return it->second;
    bool found = false;
    for (const auto& c : node.children) {
      if (!c.is_element() || html::is_invisible(c.tag)) continue;
      if (is_block_tag(c.tag) || is_dummy_marker(c) || has_block_descendant(c)) {
        found = true;
        break;
      }
    }
    memo_.emplace(&node, found);
    return found;
  }

  // An anchor wrapping blocks stays whole. Its URL is evidence that belongs
  // to no single child, and de-linking it must not change the segmentation.
  bool is_atomic(const DomNode& node) {
    return node.tag == "a" || (is_block_tag(node.tag) && !has_block_descendant(node));
  }

  static std::vector<DomNode> slice(const DomNode& parent, std::size_t first, std::size_t last) {
    return {parent.children.begin() + static_cast<std::ptrdiff_t>(first),
            parent.children.begin() + static_cast<std::ptrdiff_t>(last) + 1};
  }

  void emit_group(const DomNode& parent, const NodePath& parent_path, std::size_t first, std::size_t last) {
    Segment seg;
    seg.node_path = parent_path;
    seg.node_path.push_back(first);
    seg.nodes = slice(parent, first, last);
    seg.content = extract_triple(seg.nodes, seg.node_path);
    seg.density = text_density(seg.nodes, cfg_.wrap_width);
    if (cfg_.drop_empty && seg.content.empty()) return;
    seg.index = segments_.size();
    segments_.push_back(std::move(seg));
  }

  // Greedy left-to-right merge of adjacent sibling blocks.
  void flush_chain(const DomNode& parent, const NodePath& parent_path, std::vector<Block>& chain) {
    if (chain.empty()) return;
    std::size_t group_first = chain.front().first;
    for (std::size_t i = 1; i < chain.size(); ++i) {
      const Block& prev = chain[i - 1];
      const Block& cur = chain[i];
      const bool merge = !prev.marker && !cur.marker &&
                         std::fabs(prev.density - cur.density) <= cfg_.merge_threshold;
      if (!merge) {
        emit_group(parent, parent_path, group_first, prev.last);
        group_first = cur.first;
      }
    }
    emit_group(parent, parent_path, group_first, chain.back().last);
    chain.clear();
  }

  void visit_container(const DomNode& node, const NodePath& path) {
    constexpr std::size_t no_run = static_cast<std::size_t>(-1);
    std::vector<Block> chain;
    std::size_t run_first = no_run;

    auto flush_run = [&](std::size_t end) {
      if (run_first == no_run) return;
      const std::size_t first = run_first;
      run_first = no_run;
      std::vector<DomNode> run = slice(node, first, end - 1);
      if (extract_triple(run).empty()) return;  // whitespace, comments, br ...
      chain.push_back({first, end - 1, text_density(run, cfg_.wrap_width), false});
    };

    for (std::size_t k = 0; k < node.children.size(); ++k) {
      const DomNode& child = node.children[k];
      const bool structural = child.is_element() && !html::is_invisible(child.tag) &&
                              (is_block_tag(child.tag) || is_dummy_marker(child) || has_block_descendant(child));
      if (!structural) {
        if (run_first == no_run) run_first = k;
        continue;
      }
      flush_run(k);
      if (is_dummy_marker(child)) {
        chain.push_back({k, k, 0.0, true});
      } else if (is_atomic(child)) {
        chain.push_back({k, k, text_density(child, cfg_.wrap_width), false});
      } else {
        flush_chain(node, path, chain);
        NodePath child_path = path;
        child_path.push_back(k);
        visit_container(child, child_path);
      }
    }
    flush_run(node.children.size());
    flush_chain(node, path, chain);
  }

  const SegmenterConfig& cfg_;
  std::vector<Segment> segments_;
  std::unordered_map<const DomNode*, bool> memo_;
};

} // namespace detail

/// Partitions the page body into ordered segments.
///
/// Atomic blocks are block-level elements without block-level descendants,
/// plus implicit blocks wrapping contentful inline runs that sit next to
/// block structure. Adjacent sibling blocks merge while their densities
/// differ by at most `merge_threshold`.
inline std::vector<Segment> segment_page(const PageDocument& doc, const SegmenterConfig& cfg = {}) {
  cfg.validate();
  return detail::PageSegmenter(cfg).run(doc.body());
}

} // namespace segfilter

#endif
