#ifndef SEGFILTER_CLI_HPP
#define SEGFILTER_CLI_HPP

// The segfilter command line: segment, filter, eval and profile-check.
//
// Exit codes: 0 success, 1 input or validation error, 2 network error.

#include <algorithm>
#include <iostream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "segfilter/dom.hpp"
#include "segfilter/evaluator.hpp"
#include "segfilter/fetch.hpp"
#include "segfilter/filter.hpp"
#include "segfilter/io.hpp"
#include "segfilter/profile.hpp"
#include "segfilter/report.hpp"
#include "segfilter/segmenter.hpp"

namespace segfilter::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 1;
inline constexpr int kExitNetwork = 2;

namespace detail {

struct Options {
  // page source
  std::string input;
  std::string url;
  // segmentation
  std::size_t wrap_width = 80;
  double merge_threshold = 2.0;
  bool keep_empty = false;
  // filtering
  std::string profile;
  std::optional<int> threshold;
  std::string mode = "block";
  std::string dummy_message = "[segment blocked]";
  std::string counting = "occurrence";
  std::string report;
  std::string output;
  // eval
  std::string manifest;
  bool json = false;
};

inline SegmenterConfig segmenter_config(const Options& o) {
  SegmenterConfig cfg;
  cfg.wrap_width = o.wrap_width;
  cfg.merge_threshold = o.merge_threshold;
  cfg.drop_empty = !o.keep_empty;
  return cfg;
}

inline FilterConfig filter_config(const Options& o) {
  FilterConfig cfg;
  cfg.mode = o.mode == "linkhide" ? FilterMode::linkhide : FilterMode::block;
  cfg.dummy_message = o.dummy_message;
  cfg.threshold_override = o.threshold;
  cfg.counting = o.counting == "unique" ? Counting::unique : Counting::occurrence;
  return cfg;
}

inline ProfileBag read_profile(const std::string& path) {
  std::string bytes;
  try {
    bytes = read_file(path);
  } catch (const FileError&) {
    throw FileError("profile not found: " + path, path);
  }
  return load_profile(bytes);
}

inline PageDocument read_page(const Options& o) {
  if (!o.url.empty()) {
    FetchConfig fetch = FetchConfig::from_environment();
    return parse_html(fetch_url(o.url, fetch), o.url, ParseOptions{fetch.max_bytes});
  }
  return parse_html(read_file(o.input), o.input);
}

inline void emit(const std::string& path, const std::string& content, std::ostream& out) {
  if (path.empty() || path == "-")
    out << content;
  else
    write_file_atomic(path, content);
}

inline int run_segment(const Options& o, std::ostream& out) {
  const PageDocument doc = read_page(o);
  const auto segments = segment_page(doc, segmenter_config(o));
  emit(o.output, segments_to_json(segments).dump(2) + "\n", out);
  return kExitOk;
}

inline int run_filter(const Options& o, std::ostream& out) {
  const ProfileBag bag = read_profile(o.profile);
  const PageDocument doc = read_page(o);
  const FilteredPage page = filter_page(doc, bag, segmenter_config(o), filter_config(o));
  // The report goes first so a failure there leaves no output page behind.
  if (!o.report.empty()) write_file_atomic(o.report, report_to_json(page).dump(2) + "\n");
  emit(o.output, serialize_html(page.document), out);
  return kExitOk;
}

inline int run_eval(const Options& o, std::ostream& out) {
  const ProfileBag bag = read_profile(o.profile);
  const auto rows = evaluate_corpus(o.manifest, bag, segmenter_config(o), filter_config(o));
  if (o.json)
    out << metrics_to_json(rows).dump(2) << "\n";
  else
    out << format_metrics_table(rows);
  return kExitOk;
}

inline int run_profile_check(const Options& o, std::ostream& out) {
  const ProfileBag bag = read_profile(o.profile);
  out << o.profile << ": ok (" << bag.like().size() << " like, " << bag.unlike().size()
      << " unlike, threshold " << bag.threshold() << ")\n";
  return kExitOk;
}

inline void add_page_source(CLI::App& cmd, Options& o) {
  auto* input = cmd.add_option("input", o.input, "HTML file to read");
  auto* url = cmd.add_option("--url", o.url, "Fetch the page over http(s) instead of reading a file");
  input->excludes(url);
  url->excludes(input);
}

inline void add_segmenter_flags(CLI::App& cmd, Options& o) {
  cmd.add_option("--wrap-width", o.wrap_width, "Characters per line for text density")
      ->check(CLI::PositiveNumber);
  cmd.add_option("--merge-threshold", o.merge_threshold, "Largest density difference that merges two blocks")
      ->check(CLI::NonNegativeNumber);
  cmd.add_flag("--keep-empty", o.keep_empty, "Keep segments without text, links or images");
}

inline void add_filter_flags(CLI::App& cmd, Options& o) {
  cmd.add_option("--profile", o.profile, "Profile JSON file")->required();
  cmd.add_option("--threshold", o.threshold, "Override the profile's display threshold");
  cmd.add_option("--mode", o.mode, "block or linkhide")->check(CLI::IsMember({"block", "linkhide"}));
  cmd.add_option("--dummy-message", o.dummy_message, "Text shown in place of a blocked segment")
      ->check([](const std::string& v) { return v.empty() ? std::string("must not be empty") : std::string(); });
  cmd.add_option("--counting", o.counting, "occurrence or unique keyword counting")
      ->check(CLI::IsMember({"occurrence", "unique"}));
}

} // namespace detail

/// Runs one command line. `args` excludes the program name.
inline int run(const std::vector<std::string>& args, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  detail::Options o;
  CLI::App app{"Segmentation-based personalized web page filter", "segfilter"};
  app.require_subcommand(1);

  auto* segment = app.add_subcommand("segment", "List a page's segments as JSON");
  detail::add_page_source(*segment, o);
  detail::add_segmenter_flags(*segment, o);
  segment->add_option("-o,--output", o.output, "Write to this file instead of stdout");

  auto* filter = app.add_subcommand("filter", "Filter a page against a profile");
  detail::add_page_source(*filter, o);
  detail::add_segmenter_flags(*filter, o);
  detail::add_filter_flags(*filter, o);
  filter->add_option("--report", o.report, "Write the per-segment score report (JSON) here");
  filter->add_option("-o,--output", o.output, "Write the filtered page here instead of stdout");

  auto* eval = app.add_subcommand("eval", "Compute session metrics over a labelled corpus");
  eval->add_option("--manifest", o.manifest, "Corpus manifest JSON")->required();
  detail::add_segmenter_flags(*eval, o);
  detail::add_filter_flags(*eval, o);
  eval->add_flag("--json", o.json, "Emit JSON instead of a table");

  auto* check = app.add_subcommand("profile-check", "Validate a profile file");
  check->add_option("profile", o.profile, "Profile JSON file")->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "segfilter: " << e.what() << "\n";
    return kExitInput;
  }

  try {
    if (segment->parsed() || filter->parsed()) {
      auto* cmd = segment->parsed() ? segment : filter;
      if (o.input.empty() && o.url.empty()) {
        err << "segfilter " << cmd->get_name() << ": an input file or --url is required\n";
        return kExitInput;
      }
      return segment->parsed() ? detail::run_segment(o, out) : detail::run_filter(o, out);
    }
    if (eval->parsed()) return detail::run_eval(o, out);
    if (check->parsed()) return detail::run_profile_check(o, out);
  } catch (const FetchError& e) {
    err << "segfilter: " << e.what() << "\n";
    return e.kind() == FetchError::Kind::bad_url ? kExitInput : kExitNetwork;
  } catch (const Error& e) {
    err << "segfilter: " << e.what() << "\n";
    return kExitInput;
  }
  err << "segfilter: unknown command\n";
  return kExitInput;
}

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args, out, err);
}

} // namespace segfilter::cli

#endif
