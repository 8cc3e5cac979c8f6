#ifndef SEGFILTER_REPORT_HPP
#define SEGFILTER_REPORT_HPP

// JSON views of segment listings and score reports.

#include <span>

#include <json.hpp>

#include "segfilter/filter.hpp"
#include "segfilter/segmenter.hpp"

namespace segfilter {

inline nlohmann::ordered_json segment_to_json(const Segment& s) {
  nlohmann::ordered_json j;
  j["index"] = s.index;
  j["node_path"] = s.node_path;
  j["density"] = s.density;
  j["text_tokens"] = s.content.text_tokens;
  j["links"] = nlohmann::ordered_json::array();
  for (const auto& l : s.content.links) {
    nlohmann::ordered_json link;
    link["href"] = l.href;
    link["anchor_tokens"] = l.anchor_tokens;
    link["url_tokens"] = l.url_tokens;
    j["links"].push_back(std::move(link));
  }
  j["images"] = nlohmann::ordered_json::array();
  for (const auto& i : s.content.images) {
    nlohmann::ordered_json img;
    img["src"] = i.src;
    img["alt_tokens"] = i.alt_tokens;
    j["images"].push_back(std::move(img));
  }
  return j;
}

inline nlohmann::ordered_json segments_to_json(std::span<const Segment> segments) {
  auto j = nlohmann::ordered_json::array();
  for (const auto& s : segments) j.push_back(segment_to_json(s));
  return j;
}

inline nlohmann::ordered_json report_to_json(const FilteredPage& page) {
  auto j = nlohmann::ordered_json::array();
  for (const auto& fs : page.segments) {
    nlohmann::ordered_json row;
    row["index"] = fs.segment.index;
    row["text_weight"] = fs.score.text_weight;
    row["link_weight"] = fs.score.link_weight;
    row["image_weight"] = fs.score.image_weight;
    row["total"] = fs.score.total;
    row["disposition"] = std::string(to_string(fs.disposition.kind));
    j.push_back(std::move(row));
  }
  return j;
}

} // namespace segfilter

#endif
