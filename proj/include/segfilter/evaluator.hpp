#ifndef SEGFILTER_EVALUATOR_HPP
#define SEGFILTER_EVALUATOR_HPP

// Session metrics over labelled filter decisions: mean segment count (MSC),
// mean filtered segment count (MFSC), mean false positives / negatives
// (MFP / MFN) and accuracy.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <future>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "segfilter/error.hpp"
#include "segfilter/dom.hpp"
#include "segfilter/filter.hpp"
#include "segfilter/io.hpp"

namespace segfilter {

struct SegmentLabel {
  std::string page_id;
  std::size_t segment_index = 0;
  bool should_block = false;

  bool operator==(const SegmentLabel&) const = default;
};

struct ErrorCounts {
  std::size_t false_positives = 0;
  std::size_t false_negatives = 0;

  bool operator==(const ErrorCounts&) const = default;
};

struct PageResult {
  std::string page_id;
  std::size_t segment_count = 0;
  std::size_t filtered_count = 0;
  std::size_t false_positives = 0;
  std::size_t false_negatives = 0;
};

struct MetricsRow {
  std::string session_id;
  double msc = 0.0;
  double mfsc = 0.0;
  double mfp = 0.0;
  double mfn = 0.0;
  double accuracy_percent = 0.0;
};

struct MetricsSummary {
  double mean_mfsc = 0.0;
  double mean_mfp = 0.0;
  double mean_mfn = 0.0;
  double mean_accuracy = 0.0;
};

/// Rounds half away from zero at `decimals` places.
inline double round_half_up(double value, int decimals) {
  const double scale = std::pow(10.0, decimals);
  // The nudge absorbs binary representation error in values like x.xxx5.
  const double scaled = value * scale;
  const double rounded = std::floor(std::fabs(scaled) + 0.5 + 1e-9);
  return std::copysign(rounded, scaled) / scale;
}

/// 100 * (msc - mfp - mfn) / msc, rounded half-up to three decimals.
inline double accuracy_percent(double msc, double mfp, double mfn) {
  if (!(msc > 0.0)) throw EvalError(EvalError::Kind::empty_page, "accuracy is undefined for a zero segment count");
  return round_half_up(100.0 * (msc - mfp - mfn) / msc, 3);
}

/// Counts wrongly blocked (false positive) and wrongly displayed (false
/// negative) segments. LinkHide counts as displayed.
inline ErrorCounts compare(std::string_view page_id, std::span<const Disposition> dispositions,
                           std::span<const SegmentLabel> labels) {
  std::map<std::size_t, bool> truth;
  for (const auto& l : labels) {
    if (l.page_id != page_id) continue;
    if (!truth.emplace(l.segment_index, l.should_block).second)
      throw EvalError(EvalError::Kind::duplicate_label, "duplicate label for page '" + std::string(page_id) +
                                                            "' segment " + std::to_string(l.segment_index));
  }
  ErrorCounts counts;
  for (std::size_t i = 0; i < dispositions.size(); ++i) {
    auto it = truth.find(i);
    if (it == truth.end())
      throw EvalError(EvalError::Kind::missing_label,
                      "missing label for page '" + std::string(page_id) + "' segment " + std::to_string(i));
    const bool blocked = dispositions[i].kind == DispositionKind::block;
    if (blocked && !it->second) ++counts.false_positives;
    if (!blocked && it->second) ++counts.false_negatives;
  }
  return counts;
}

inline PageResult page_result(std::string page_id, const FilteredPage& page, std::span<const SegmentLabel> labels) {
  std::vector<Disposition> dispositions;
  dispositions.reserve(page.segments.size());
  for (const auto& s : page.segments) dispositions.push_back(s.disposition);
  const ErrorCounts errors = compare(page_id, dispositions, labels);
  PageResult r;
  r.page_id = std::move(page_id);
  r.segment_count = dispositions.size();
  for (const auto& d : dispositions)
    if (d.kind == DispositionKind::block) ++r.filtered_count;
  r.false_positives = errors.false_positives;
  r.false_negatives = errors.false_negatives;
  return r;
}

/// Builds a row from already averaged columns.
inline MetricsRow metrics_from_means(std::string session_id, double msc, double mfsc, double mfp, double mfn) {
  return {std::move(session_id), msc, mfsc, mfp, mfn, accuracy_percent(msc, mfp, mfn)};
}

inline MetricsRow session_metrics(std::string session_id, std::span<const PageResult> pages) {
  if (pages.empty()) throw EvalError(EvalError::Kind::empty_session, "session '" + session_id + "' has no pages");
  double sc = 0, fsc = 0, fp = 0, fn = 0;
  for (const auto& p : pages) {
    if (p.segment_count == 0)
      throw EvalError(EvalError::Kind::empty_page,
                      "page '" + p.page_id + "' in session '" + session_id + "' has no segments");
    sc += static_cast<double>(p.segment_count);
    fsc += static_cast<double>(p.filtered_count);
    fp += static_cast<double>(p.false_positives);
    fn += static_cast<double>(p.false_negatives);
  }
  const auto n = static_cast<double>(pages.size());
  return metrics_from_means(std::move(session_id), sc / n, fsc / n, fp / n, fn / n);
}

/// Column means over sessions, rounded to two decimals.
inline MetricsSummary aggregate(std::span<const MetricsRow> rows) {
  if (rows.empty()) throw EvalError(EvalError::Kind::empty_input, "no metrics rows to aggregate");
  MetricsSummary s;
  for (const auto& r : rows) {
    s.mean_mfsc += r.mfsc;
    s.mean_mfp += r.mfp;
    s.mean_mfn += r.mfn;
    s.mean_accuracy += r.accuracy_percent;
  }
  const auto n = static_cast<double>(rows.size());
  s.mean_mfsc = round_half_up(s.mean_mfsc / n, 2);
  s.mean_mfp = round_half_up(s.mean_mfp / n, 2);
  s.mean_mfn = round_half_up(s.mean_mfn / n, 2);
  s.mean_accuracy = round_half_up(s.mean_accuracy / n, 2);
  return s;
}

// ---------------------------------------------------------------------------
// File formats.

inline std::vector<SegmentLabel> load_labels(std::string_view input) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(input);
  } catch (const nlohmann::json::parse_error& e) {
    throw EvalError(EvalError::Kind::malformed, std::string("labels are not valid JSON: ") + e.what());
  }
  if (!j.is_array()) throw EvalError(EvalError::Kind::malformed, "labels must be a JSON array");
  std::vector<SegmentLabel> labels;
  for (const auto& e : j) {
    if (!e.is_object() || !e.contains("page_id") || !e["page_id"].is_string() || !e.contains("segment_index") ||
        !e["segment_index"].is_number_unsigned() || !e.contains("should_block") || !e["should_block"].is_boolean())
      throw EvalError(EvalError::Kind::malformed,
                      "each label needs page_id (string), segment_index (unsigned) and should_block (bool)");
    labels.push_back({e["page_id"].get<std::string>(), e["segment_index"].get<std::size_t>(),
                      e["should_block"].get<bool>()});
  }
  return labels;
}

struct ManifestPage {
  std::string file;
  std::string labels;
  std::string id;  // defaults to the file's stem
};

struct ManifestSession {
  std::string id;
  std::vector<ManifestPage> pages;
};

inline std::string default_page_id(std::string_view file) {
  const auto slash = file.find_last_of('/');
  std::string_view name = slash == std::string_view::npos ? file : file.substr(slash + 1);
  const auto dot = name.find_last_of('.');
  return std::string(dot == std::string_view::npos || dot == 0 ? name : name.substr(0, dot));
}

inline std::vector<ManifestSession> load_manifest(std::string_view input) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(input);
  } catch (const nlohmann::json::parse_error& e) {
    throw EvalError(EvalError::Kind::malformed, std::string("manifest is not valid JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("sessions") || !j["sessions"].is_array())
    throw EvalError(EvalError::Kind::malformed, "manifest must be an object with a \"sessions\" array");
  std::vector<ManifestSession> sessions;
  for (const auto& s : j["sessions"]) {
    if (!s.is_object() || !s.contains("id") || !s["id"].is_string() || !s.contains("pages") || !s["pages"].is_array())
      throw EvalError(EvalError::Kind::malformed, "each session needs an \"id\" string and a \"pages\" array");
    ManifestSession session{s["id"].get<std::string>(), {}};
    for (const auto& p : s["pages"]) {
      if (!p.is_object() || !p.contains("file") || !p["file"].is_string() || !p.contains("labels") ||
          !p["labels"].is_string())
        throw EvalError(EvalError::Kind::malformed, "each page needs \"file\" and \"labels\" strings");
      ManifestPage page{p["file"].get<std::string>(), p["labels"].get<std::string>(), {}};
      page.id = p.contains("id") && p["id"].is_string() ? p["id"].get<std::string>() : default_page_id(page.file);
      session.pages.push_back(std::move(page));
    }
    sessions.push_back(std::move(session));
  }
  return sessions;
}

/// Fixed-point text, rounded half-up like every other reported value.
inline std::string format_fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, round_half_up(v, decimals));
  return buf;
}

/// Plain-text table laid out like the published results table, followed by
/// the cross-session means.
inline std::string format_metrics_table(std::span<const MetricsRow> rows) {
  const std::vector<std::string> headers = {"Session", "MSC", "MFSC", "MFP", "MFN", "Accuracy(%)"};
  std::vector<std::vector<std::string>> cells;
  for (const auto& r : rows)
    cells.push_back({r.session_id, format_fixed(r.msc, 2), format_fixed(r.mfsc, 2), format_fixed(r.mfp, 2),
                     format_fixed(r.mfn, 2), format_fixed(r.accuracy_percent, 3)});
  if (!rows.empty()) {
    const MetricsSummary s = aggregate(rows);
    double msc = 0;
    for (const auto& r : rows) msc += r.msc;
    cells.push_back({"Mean", format_fixed(msc / static_cast<double>(rows.size()), 2), format_fixed(s.mean_mfsc, 2),
                     format_fixed(s.mean_mfp, 2), format_fixed(s.mean_mfn, 2), format_fixed(s.mean_accuracy, 2)});
  }
  std::vector<std::size_t> width(headers.size());
  for (std::size_t c = 0; c < headers.size(); ++c) {
    width[c] = headers[c].size();
    for (const auto& row : cells) width[c] = std::max(width[c], row[c].size());
  }
  std::string out;
  auto emit = [&](const std::vector<std::string>& row) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c > 0) out += "  ";
      const std::string pad(width[c] - row[c].size(), ' ');
      // First column left-aligned, numbers right-aligned.
      out += c == 0 ? row[c] + pad : pad + row[c];
    }
    while (!out.empty() && out.back() == ' ') out.pop_back();
    out += '\n';
  };
  emit(headers);
  for (const auto& row : cells) emit(row);
  return out;
}

inline nlohmann::ordered_json metrics_to_json(std::span<const MetricsRow> rows) {
  nlohmann::ordered_json j;
  j["sessions"] = nlohmann::ordered_json::array();
  for (const auto& r : rows) {
    nlohmann::ordered_json row;
    row["session"] = r.session_id;
    row["msc"] = r.msc;
    row["mfsc"] = r.mfsc;
    row["mfp"] = r.mfp;
    row["mfn"] = r.mfn;
    row["accuracy"] = r.accuracy_percent;
    j["sessions"].push_back(std::move(row));
  }
  if (!rows.empty()) {
    const MetricsSummary s = aggregate(rows);
    j["summary"] = {{"mean_mfsc", s.mean_mfsc},
                    {"mean_mfp", s.mean_mfp},
                    {"mean_mfn", s.mean_mfn},
                    {"mean_accuracy", s.mean_accuracy}};
  }
  return j;
}

/// Filters every page listed in the manifest and computes one metrics row
/// per session, in manifest order. Paths are relative to the manifest.
inline std::vector<MetricsRow> evaluate_corpus(const std::filesystem::path& manifest_path, const ProfileBag& bag,
                                               const SegmenterConfig& scfg = {}, const FilterConfig& fcfg = {}) {
  const auto sessions = load_manifest(read_file(manifest_path));
  const auto base = manifest_path.parent_path();
  std::vector<MetricsRow> rows;
  for (const auto& session : sessions) {
    std::vector<std::future<PageResult>> pending;
    for (const auto& page : session.pages) {
      pending.push_back(std::async(std::launch::async, [&, page] {
        const PageDocument doc = parse_html(read_file(base / page.file), page.file);
        const auto labels = load_labels(read_file(base / page.labels));
        return page_result(page.id, filter_page(doc, bag, scfg, fcfg), labels);
      }));
    }
    std::vector<PageResult> results;
    for (auto& f : pending) results.push_back(f.get());
    rows.push_back(session_metrics(session.id, results));
  }
  return rows;
}

} // namespace segfilter

#endif
