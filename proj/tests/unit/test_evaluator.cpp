#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "segfilter/evaluator.hpp"
#include "test_support.hpp"

using namespace segfilter;

namespace {

std::vector<SegmentLabel> labels(const std::string& page, std::initializer_list<bool> should_block) {
  std::vector<SegmentLabel> out;
  std::size_t i = 0;
  for (bool b : should_block) out.push_back({page, i++, b});
  return out;
}

EvalError::Kind eval_error(auto&& fn) {
  try {
    fn();
  } catch (const EvalError& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no EvalError";
  return EvalError::Kind::malformed;
}

} // namespace

TEST(Compare, Examples) {
  const auto D = Disposition::display(), B = Disposition::block();
  const std::vector<Disposition> d = {B, D, D, B};
  EXPECT_EQ(compare("p", d, labels("p", {true, false, false, true})), (ErrorCounts{0, 0}));
  // One wrongly blocked, two wrongly shown.
  const std::vector<Disposition> e = {B, D, D, D};
  EXPECT_EQ(compare("p", e, labels("p", {false, true, true, false})), (ErrorCounts{1, 2}));
  EXPECT_EQ(compare("p", {}, {}), (ErrorCounts{0, 0}));
}

TEST(Compare, LinkHideCountsAsDisplay) {
  const std::vector<Disposition> d = {Disposition::link_hide({{0}}), Disposition::link_hide({{1}})};
  EXPECT_EQ(compare("p", d, labels("p", {true, false})), (ErrorCounts{0, 1}));
}

TEST(Compare, LabelErrors) {
  const std::vector<Disposition> d = {Disposition::display(), Disposition::display()};
  EXPECT_EQ(eval_error([&] { compare("p", d, labels("p", {false})); }), EvalError::Kind::missing_label);
  // Labels of other pages are not consulted.
  EXPECT_EQ(eval_error([&] { compare("p", d, labels("q", {false, false})); }), EvalError::Kind::missing_label);
  auto dup = labels("p", {false, false});
  dup.push_back({"p", 1, true});
  EXPECT_EQ(eval_error([&] { compare("p", d, dup); }), EvalError::Kind::duplicate_label);
}

TEST(SessionMetrics, PublishedRows) {
  EXPECT_NEAR(metrics_from_means("1", 27.52, 5.2, 1.2, 1.5).accuracy_percent, 90.189, 1e-9);
  EXPECT_NEAR(metrics_from_means("2", 30.25, 3.5, 0.8, 1.2).accuracy_percent, 93.388, 1e-9);
  for (const auto& s : fixtures::kReferenceSessions)
    EXPECT_NEAR(accuracy_percent(s.msc, s.mfp, s.mfn), s.accuracy, 0.0005) << "session " << s.id;
}

TEST(SessionMetrics, ErrorFreeSessionIsPerfect) {
  const std::vector<PageResult> pages = {{"a", 10, 2, 0, 0}, {"b", 7, 1, 0, 0}};
  const auto row = session_metrics("s", pages);
  EXPECT_DOUBLE_EQ(row.msc, 8.5);
  EXPECT_DOUBLE_EQ(row.mfsc, 1.5);
  EXPECT_DOUBLE_EQ(row.accuracy_percent, 100.0);
}

TEST(SessionMetrics, MeansOverPages) {
  const std::vector<PageResult> pages = {{"a", 10, 3, 1, 0}, {"b", 20, 1, 0, 2}};
  const auto row = session_metrics("s", pages);
  EXPECT_DOUBLE_EQ(row.msc, 15.0);
  EXPECT_DOUBLE_EQ(row.mfsc, 2.0);
  EXPECT_DOUBLE_EQ(row.mfp, 0.5);
  EXPECT_DOUBLE_EQ(row.mfn, 1.0);
  EXPECT_DOUBLE_EQ(row.accuracy_percent, 90.0);
}

TEST(SessionMetrics, Errors) {
  EXPECT_EQ(eval_error([] { session_metrics("s", {}); }), EvalError::Kind::empty_session);
  const std::vector<PageResult> empty_page = {{"a", 0, 0, 0, 0}};
  EXPECT_EQ(eval_error([&] { session_metrics("s", empty_page); }), EvalError::Kind::empty_page);
}

TEST(Aggregate, PublishedMeans) {
  const auto s = aggregate(fixtures::reference_rows());
  EXPECT_DOUBLE_EQ(s.mean_mfsc, 3.49);
  EXPECT_DOUBLE_EQ(s.mean_accuracy, 87.59);
  EXPECT_DOUBLE_EQ(s.mean_mfp, 1.36);
  EXPECT_DOUBLE_EQ(s.mean_mfn, 0.97);
}

TEST(Aggregate, SingleRowAndEmpty) {
  const std::vector<MetricsRow> one = {metrics_from_means("x", 20, 2.5, 0.25, 0.75)};
  const auto s = aggregate(one);
  EXPECT_DOUBLE_EQ(s.mean_mfsc, 2.5);
  EXPECT_DOUBLE_EQ(s.mean_mfp, 0.25);
  EXPECT_DOUBLE_EQ(s.mean_mfn, 0.75);
  EXPECT_DOUBLE_EQ(s.mean_accuracy, 95.0);
  EXPECT_EQ(eval_error([] { aggregate({}); }), EvalError::Kind::empty_input);
}

TEST(Aggregate, PermutationInvariant) {
  auto rows = fixtures::reference_rows();
  const auto base = aggregate(rows);
  std::mt19937 rng(5);
  for (int i = 0; i < 50; ++i) {
    std::shuffle(rows.begin(), rows.end(), rng);
    const auto s = aggregate(rows);
    EXPECT_DOUBLE_EQ(s.mean_mfsc, base.mean_mfsc);
    EXPECT_DOUBLE_EQ(s.mean_accuracy, base.mean_accuracy);
  }
}

TEST(RoundHalfUp, Values) {
  EXPECT_DOUBLE_EQ(round_half_up(2.0005, 3), 2.001);
  EXPECT_DOUBLE_EQ(round_half_up(1.005, 2), 1.01);
  EXPECT_DOUBLE_EQ(round_half_up(-1.25, 1), -1.3);
  EXPECT_DOUBLE_EQ(round_half_up(87.5938, 2), 87.59);
}

TEST(LoadLabels, ParsesAndRejects) {
  const auto l = load_labels(R"([{"page_id":"p","segment_index":0,"should_block":true}])");
  ASSERT_EQ(l.size(), 1u);
  EXPECT_EQ(l[0], (SegmentLabel{"p", 0, true}));
  for (const char* bad : {"{}", "[{}]", R"([{"page_id":"p","segment_index":-1,"should_block":true}])",
                          R"([{"page_id":"p","segment_index":0,"should_block":1}])", "nope"})
    EXPECT_EQ(eval_error([&] { load_labels(bad); }), EvalError::Kind::malformed) << bad;
}

TEST(LoadManifest, DefaultsPageIdToStem) {
  const auto m = load_manifest(R"({"sessions":[{"id":"s","pages":[{"file":"pages/p01.html","labels":"l.json"}]}]})");
  ASSERT_EQ(m.size(), 1u);
  ASSERT_EQ(m[0].pages.size(), 1u);
  EXPECT_EQ(m[0].pages[0].id, "p01");
  EXPECT_EQ(eval_error([] { load_manifest(R"({"sessions":{}})"); }), EvalError::Kind::malformed);
}

TEST(FormatMetricsTable, Layout) {
  const std::vector<MetricsRow> rows = {metrics_from_means("1", 27.52, 5.2, 1.2, 1.5),
                                        metrics_from_means("2", 30.25, 3.5, 0.8, 1.2)};
  EXPECT_EQ(format_metrics_table(rows),
            "Session    MSC  MFSC   MFP   MFN  Accuracy(%)\n"
            "1        27.52  5.20  1.20  1.50       90.189\n"
            "2        30.25  3.50  0.80  1.20       93.388\n"
            "Mean     28.89  4.35  1.00  1.35        91.79\n");
}

TEST(EvaluateCorpus, FixtureCorpus) {
  const auto rows = evaluate_corpus(fixtures::corpus_dir() / "manifest.json", fixtures::fixture_profile());
  ASSERT_EQ(rows.size(), 3u);
  // s1: p01-p04, one false positive (p02 navigation).
  EXPECT_EQ(rows[0].session_id, "s1");
  EXPECT_DOUBLE_EQ(rows[0].msc, 9.0);
  EXPECT_DOUBLE_EQ(rows[0].mfsc, 3.25);
  EXPECT_DOUBLE_EQ(rows[0].mfp, 0.25);
  EXPECT_DOUBLE_EQ(rows[0].mfn, 0.0);
  EXPECT_DOUBLE_EQ(rows[0].accuracy_percent, 97.222);
  // s2: p05-p07, one false positive (p05) and one false negative (p07).
  EXPECT_NEAR(rows[1].mfp, 1.0 / 3.0, 1e-12);
  EXPECT_NEAR(rows[1].mfn, 1.0 / 3.0, 1e-12);
  EXPECT_DOUBLE_EQ(rows[1].accuracy_percent, 92.593);
  EXPECT_DOUBLE_EQ(rows[2].accuracy_percent, 100.0);
}

TEST(EvaluateCorpus, PageResultInvariants) {
  const auto bag = fixtures::fixture_profile();
  for (const auto& path : fixtures::html_files(fixtures::corpus_dir() / "pages")) {
    const std::string id = path.stem().string();
    const auto lab = load_labels(read_file(fixtures::corpus_dir() / "labels" / (id + ".json")));
    const auto r = page_result(id, filter_page(parse_html(read_file(path)), bag), lab);
    EXPECT_LE(r.false_positives, r.filtered_count);
    EXPECT_LE(r.false_positives + r.false_negatives, r.segment_count);
  }
}
