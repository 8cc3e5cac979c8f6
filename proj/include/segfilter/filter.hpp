#ifndef SEGFILTER_FILTER_HPP
#define SEGFILTER_FILTER_HPP

// Scoring segments against a profile and rewriting the page.

#include <algorithm>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "segfilter/dom.hpp"
#include "segfilter/error.hpp"
#include "segfilter/profile.hpp"
#include "segfilter/segmenter.hpp"

namespace segfilter {

/// How keyword matches are counted within one component.
enum class Counting {
  occurrence,  // every matching token occurrence contributes +-1
  unique,      // each distinct matching token contributes +-1 once
};

enum class FilterMode { block, linkhide };

struct SegmentScore {
  int text_weight = 0;
  int link_weight = 0;
  int image_weight = 0;
  int total = 0;

  bool operator==(const SegmentScore&) const = default;
};

enum class DispositionKind { display, block, link_hide };

struct Disposition {
  DispositionKind kind = DispositionKind::display;
  std::vector<NodePath> delinked;  // only for link_hide

  static Disposition display() { return {DispositionKind::display, {}}; }
  static Disposition block() { return {DispositionKind::block, {}}; }
  static Disposition link_hide(std::vector<NodePath> paths) { return {DispositionKind::link_hide, std::move(paths)}; }

  bool operator==(const Disposition&) const = default;
};

inline std::string_view to_string(DispositionKind k) {
  switch (k) {
    case DispositionKind::display: return "display";
    case DispositionKind::block: return "block";
    case DispositionKind::link_hide: return "linkhide";
  }
  return "display";
}

struct FilterConfig {
  FilterMode mode = FilterMode::block;
  std::string dummy_message = "[segment blocked]";
  std::optional<int> threshold_override;
  Counting counting = Counting::occurrence;

  void validate() const {
    if (dummy_message.empty()) throw ConfigError("dummy message must not be empty");
  }
};

struct FilteredSegment {
  Segment segment;
  SegmentScore score;
  Disposition disposition;
};

struct FilteredPage {
  std::vector<FilteredSegment> segments;
  PageDocument document;
};

inline int component_weight(std::span<const std::string> tokens, const ProfileBag& bag,
                            Counting counting = Counting::occurrence) {
  int weight = 0;
  if (counting == Counting::occurrence) {
    for (const auto& t : tokens) weight += bag.polarity(t);
    return weight;
  }
  std::set<std::string_view> seen;
  for (const auto& t : tokens)
    if (seen.insert(t).second) weight += bag.polarity(t);
  return weight;
}

inline int text_weight(const SegmentContent& content, const ProfileBag& bag,
                       Counting counting = Counting::occurrence) {
  return component_weight(content.text_tokens, bag, counting);
}

inline int link_weight(const SegmentContent& content, const ProfileBag& bag,
                       Counting counting = Counting::occurrence) {
  std::vector<std::string> tokens;
  for (const auto& link : content.links) {
    tokens.insert(tokens.end(), link.anchor_tokens.begin(), link.anchor_tokens.end());
    tokens.insert(tokens.end(), link.url_tokens.begin(), link.url_tokens.end());
  }
  return component_weight(tokens, bag, counting);
}

inline int image_weight(const SegmentContent& content, const ProfileBag& bag,
                        Counting counting = Counting::occurrence) {
  std::vector<std::string> tokens;
  for (const auto& img : content.images) tokens.insert(tokens.end(), img.alt_tokens.begin(), img.alt_tokens.end());
  return component_weight(tokens, bag, counting);
}

inline SegmentScore score_content(const SegmentContent& content, const ProfileBag& bag,
                                  Counting counting = Counting::occurrence) {
  SegmentScore s;
  s.text_weight = text_weight(content, bag, counting);
  s.link_weight = link_weight(content, bag, counting);
  s.image_weight = image_weight(content, bag, counting);
  s.total = s.text_weight + s.link_weight + s.image_weight;
  return s;
}

/// Display iff the total reaches the threshold (inclusive).
inline DispositionKind decide(const SegmentScore& score, int threshold) {
  return score.total >= threshold ? DispositionKind::display : DispositionKind::block;
}

inline DomNode make_dummy_node(const FilterConfig& cfg) {
  return DomNode::element("div", {{std::string(kDummyMarkerAttribute), std::string(kDummyMarkerValue)}},
                          {DomNode::text_node(cfg.dummy_message)});
}

/// The placeholder substituted for a blocked segment. Its content is empty
/// so nothing in it is ever scored.
inline Segment make_dummy_segment(const FilterConfig& cfg, std::size_t index) {
  cfg.validate();
  Segment s;
  s.index = index;
  s.nodes.push_back(make_dummy_node(cfg));
  s.is_dummy = true;
  return s;
}

inline bool is_dummy_segment(const Segment& s) {
  return s.is_dummy || (s.nodes.size() == 1 && is_dummy_marker(s.nodes.front()));
}

namespace detail {

inline bool mentions_unliked(const std::vector<std::string>& tokens, const ProfileBag& bag) {
  return std::any_of(tokens.begin(), tokens.end(), [&](const std::string& t) { return bag.polarity(t) < 0; });
}

// Post-order: once a nested offending link loses its href, its text counts
// toward the enclosing anchor, which is then judged with it.
inline void delink_walk(DomNode& node, NodePath& path, const ProfileBag& bag,
                        std::vector<NodePath>& delinked) {
  if (!node.is_element() || html::is_invisible(node.tag)) return;
  for (std::size_t i = 0; i < node.children.size(); ++i) {
    path.push_back(i);
    delink_walk(node.children[i], path, bag, delinked);
    path.pop_back();
  }
  if (node.tag == "a") {
    if (const std::string* href = node.attribute("href")) {
      // Anchor tokens exclude text owned by nested links, as in extraction.
      SegmentContent own = extract_triple({node}, path);
      if (!own.links.empty() &&
          (mentions_unliked(own.links.front().anchor_tokens, bag) || mentions_unliked(tokenize(*href), bag))) {
        node.remove_attribute("href");
        delinked.push_back(path);
      }
    }
  }
}

} // namespace detail

/// Removes href from every anchor in the segment whose anchor or URL tokens
/// hit the unlike track, then re-extracts the triple. The de-linked anchors
/// keep their text, which now counts as plain text.
inline std::pair<Segment, std::vector<NodePath>> apply_link_hiding(const Segment& segment, const ProfileBag& bag) {
  Segment out = segment;
  std::vector<NodePath> delinked;
  for (std::size_t i = 0; i < out.nodes.size(); ++i) {
    NodePath path = segment.node_path;
    if (path.empty())
      path.push_back(i);
    else
      path.back() += i;
    detail::delink_walk(out.nodes[i], path, bag, delinked);
  }
  std::sort(delinked.begin(), delinked.end());
  if (!delinked.empty()) out.content = extract_triple(out.nodes, segment.node_path);
  return {std::move(out), std::move(delinked)};
}

namespace detail {

struct Replacement {
  NodePath path;  // first node of the replaced range
  std::size_t count;
  std::vector<DomNode> nodes;
};

inline void apply_replacement(PageDocument& doc, Replacement& r) {
  NodePath parent_path(r.path.begin(), r.path.end() - 1);
  DomNode* parent = doc.at(parent_path);
  const std::size_t first = r.path.back();
  auto& kids = parent->children;
  const auto begin = kids.begin() + static_cast<std::ptrdiff_t>(first);
  kids.erase(begin, begin + static_cast<std::ptrdiff_t>(r.count));
  kids.insert(kids.begin() + static_cast<std::ptrdiff_t>(first), std::make_move_iterator(r.nodes.begin()),
              std::make_move_iterator(r.nodes.end()));
}

} // namespace detail

/// Segments the page, scores every segment and assembles the filtered page.
///
/// Block mode replaces each below-threshold segment with a dummy. Linkhide
/// mode de-links the offending anchors of every segment and keeps the
/// de-linked version (as LinkHide) whenever its re-scored total reaches the
/// threshold. Otherwise a segment is displayed unchanged if its original
/// total reaches the threshold and blocked if not, so linkhide mode never
/// blocks more than block mode. Dummies already present in the input pass
/// through untouched.
inline FilteredPage filter_page(const PageDocument& doc, const ProfileBag& bag, const SegmenterConfig& scfg = {},
                                const FilterConfig& fcfg = {}) {
  fcfg.validate();
  const int threshold = fcfg.threshold_override.value_or(bag.threshold());
  FilteredPage page;
  page.document = doc;
  std::vector<detail::Replacement> edits;

  for (auto& seg : segment_page(doc, scfg)) {
    if (is_dummy_segment(seg)) {
      page.segments.push_back({std::move(seg), SegmentScore{}, Disposition::display()});
      continue;
    }
    SegmentScore score = score_content(seg.content, bag, fcfg.counting);
    if (fcfg.mode == FilterMode::linkhide) {
      auto [hidden, paths] = apply_link_hiding(seg, bag);
      if (!paths.empty()) {
        SegmentScore rescored = score_content(hidden.content, bag, fcfg.counting);
        if (decide(rescored, threshold) == DispositionKind::display) {
          edits.push_back({hidden.node_path, hidden.nodes.size(), hidden.nodes});
          page.segments.push_back({std::move(hidden), rescored, Disposition::link_hide(std::move(paths))});
          continue;
        }
      }
    }
    if (decide(score, threshold) == DispositionKind::display) {
      page.segments.push_back({std::move(seg), score, Disposition::display()});
      continue;
    }
    edits.push_back({seg.node_path, seg.nodes.size(), {make_dummy_node(fcfg)}});
    page.segments.push_back({std::move(seg), score, Disposition::block()});
  }

  // Later edits never shift the paths of earlier ones.
  for (auto it = edits.rbegin(); it != edits.rend(); ++it) detail::apply_replacement(page.document, *it);
  return page;
}

} // namespace segfilter

#endif
