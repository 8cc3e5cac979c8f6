#include <gtest/gtest.h>

#include "segfilter/segmenter.hpp"
#include "test_support.hpp"

using namespace segfilter;

namespace {

std::vector<std::string> toks(std::initializer_list<const char*> l) { return {l.begin(), l.end()}; }

std::string words(int n) {
  std::string out;
  for (int i = 0; i < n; ++i) out += (i ? " w" : "w") + std::to_string(i);
  return out;
}

} // namespace

TEST(TextDensity, Examples) {
  EXPECT_DOUBLE_EQ(text_density_of("", 80), 0.0);
  EXPECT_DOUBLE_EQ(text_density(DomNode::element("div"), 80), 0.0);

  // 10 tokens over 120 characters wrap to 2 lines.
  std::string ten;
  for (int i = 0; i < 10; ++i) ten += (i ? " " : "") + std::string(i < 9 ? 11 : 12, static_cast<char>('a' + i));
  ASSERT_EQ(utf8_length(ten), 120u);
  ASSERT_EQ(tokenize(ten).size(), 10u);
  EXPECT_DOUBLE_EQ(text_density_of(ten, 80), 5.0);

  EXPECT_DOUBLE_EQ(text_density_of("one two six", 80), 3.0);
  EXPECT_EQ(utf8_length("one two six!"), 12u);
  EXPECT_DOUBLE_EQ(text_density_of("one two six!", 80), 3.0);
}

TEST(TextDensity, RejectsZeroWrap) { EXPECT_THROW(text_density_of("a", 0), ConfigError); }

TEST(SegmentPage, SingleBlock) {
  const auto segs = segment_page(parse_html("<p>a b c</p>"));
  ASSERT_EQ(segs.size(), 1u);
  EXPECT_EQ(segs[0].content.text_tokens, toks({"a", "b", "c"}));
  EXPECT_EQ(segs[0].node_path, NodePath{0});
  EXPECT_FALSE(segs[0].is_dummy);
}

TEST(SegmentPage, EmptyBody) {
  EXPECT_TRUE(segment_page(parse_html("")).empty());
  EXPECT_TRUE(segment_page(parse_html("<html><body>   <!-- x --> </body></html>")).empty());
}

TEST(SegmentPage, MergeThreshold) {
  const auto doc = parse_html("<p>" + words(10) + "</p><p>" + words(2) + "</p>");
  SegmenterConfig cfg;
  cfg.merge_threshold = 2.0;
  EXPECT_EQ(segment_page(doc, cfg).size(), 2u);
  cfg.merge_threshold = 10.0;
  const auto merged = segment_page(doc, cfg);
  ASSERT_EQ(merged.size(), 1u);
  EXPECT_EQ(merged[0].nodes.size(), 2u);
  EXPECT_EQ(merged[0].content.text_tokens.size(), 12u);
}

TEST(SegmentPage, MergesOnlyAdjacentSiblings) {
  // Densities 3, 4, 9, 8: the middle gap of 5 splits them into two pairs.
  const auto doc =
      parse_html("<p>" + words(3) + "</p><p>" + words(4) + "</p><p>" + words(9) + "</p><p>" + words(8) + "</p>");
  const auto segs = segment_page(doc);
  ASSERT_EQ(segs.size(), 2u);
  EXPECT_EQ(segs[0].nodes.size(), 2u);
  EXPECT_EQ(segs[1].nodes.size(), 2u);
  EXPECT_EQ(segs[1].node_path, NodePath{2});
}

TEST(SegmentPage, ContainersAreNotSegments) {
  const auto segs = segment_page(parse_html("<div><section><p>one</p></section><section><h2>two three four five six seven</h2></section></div>"));
  ASSERT_EQ(segs.size(), 2u);
  EXPECT_EQ(segs[0].node_path, (NodePath{0, 0, 0}));
  EXPECT_EQ(segs[1].node_path, (NodePath{0, 1, 0}));
}

TEST(SegmentPage, InlineRunNextToBlocksIsItsOwnBlock) {
  const auto segs = segment_page(parse_html("<div>lead <b>text</b><p>a b c d e f g h i j</p>tail words</div>"));
  ASSERT_EQ(segs.size(), 3u);
  EXPECT_EQ(segs[0].content.text_tokens, toks({"lead", "text"}));
  EXPECT_EQ(segs[0].nodes.size(), 2u);
  EXPECT_EQ(segs[2].content.text_tokens, toks({"tail", "words"}));
}

TEST(SegmentPage, InvisibleSubtreesAreIgnored) {
  const auto segs = segment_page(parse_html("<div><script>var p = '<p>x</p>';</script><p>shown</p></div>"));
  ASSERT_EQ(segs.size(), 1u);
  EXPECT_EQ(segs[0].content.text_tokens, toks({"shown"}));
}

TEST(SegmentPage, DummyMarkersStandAlone) {
  const auto segs = segment_page(parse_html("<p>one</p><div data-segfilter=\"blocked\">[segment blocked]</div><p>two</p>"));
  ASSERT_EQ(segs.size(), 3u);
  EXPECT_TRUE(is_dummy_marker(segs[1].nodes.front()));
  EXPECT_EQ(segs[1].nodes.size(), 1u);
  for (const auto& s : segs) EXPECT_FALSE(s.is_dummy);
}

TEST(SegmentPage, DropEmpty) {
  const auto doc = parse_html("<section><div></div></section><section><p>x</p></section>");
  EXPECT_EQ(segment_page(doc).size(), 1u);
  SegmenterConfig keep;
  keep.drop_empty = false;
  EXPECT_EQ(segment_page(doc, keep).size(), 2u);
}

TEST(SegmentPage, RejectsBadConfig) {
  SegmenterConfig cfg;
  cfg.merge_threshold = -1;
  EXPECT_THROW(segment_page(parse_html("<p>x</p>"), cfg), ConfigError);
  cfg = {};
  cfg.wrap_width = 0;
  EXPECT_THROW(segment_page(parse_html("<p>x</p>"), cfg), ConfigError);
}

TEST(SegmentPage, FixtureMergesHeadingWithParagraph) {
  const auto segs = segment_page(parse_html(read_file(fixtures::corpus_dir() / "pages" / "p08.html")));
  ASSERT_EQ(segs.size(), 9u);
  EXPECT_EQ(segs[2].content.text_tokens, toks({"market", "news", "stocks", "rose", "today"}));
}

TEST(ExtractTriple, MixedDiv) {
  const DomNode div = DomNode::element(
      "div", {},
      {DomNode::text_node("Hello "), DomNode::element("a", {{"href", "/g"}}, {DomNode::text_node("games")}),
       DomNode::element("img", {{"src", "x.png"}, {"alt", "poker table"}})});
  const auto c = extract_triple({div});
  EXPECT_EQ(c.text_tokens, toks({"hello"}));
  ASSERT_EQ(c.links.size(), 1u);
  EXPECT_EQ(c.links[0].href, "/g");
  EXPECT_EQ(c.links[0].anchor_tokens, toks({"games"}));
  EXPECT_EQ(c.links[0].url_tokens, toks({"g"}));
  EXPECT_EQ(c.links[0].node_path, (NodePath{0, 1}));
  ASSERT_EQ(c.images.size(), 1u);
  EXPECT_EQ(c.images[0].src, "x.png");
  EXPECT_EQ(c.images[0].alt_tokens, toks({"poker", "table"}));
}

TEST(ExtractTriple, TextOnlyAndEmpty) {
  const auto c = extract_triple({DomNode::element("div", {}, {DomNode::text_node("news today")})});
  EXPECT_EQ(c.text_tokens, toks({"news", "today"}));
  EXPECT_TRUE(c.links.empty());
  EXPECT_TRUE(c.images.empty());
  EXPECT_TRUE(extract_triple({DomNode::element("div")}).empty());
}

TEST(ExtractTriple, AnchorWithoutHrefIsText) {
  const auto c = extract_triple(parse_html("<a name=x>casino</a>").body().children);
  EXPECT_EQ(c.text_tokens, toks({"casino"}));
  EXPECT_TRUE(c.links.empty());
}

TEST(ExtractTriple, ImageMissingAlt) {
  const auto c = extract_triple(parse_html("<div><img src=a.png></div>").body().children);
  ASSERT_EQ(c.images.size(), 1u);
  EXPECT_TRUE(c.images[0].alt_tokens.empty());
}

TEST(ExtractTriple, PreservesDocumentOrder) {
  const auto c = extract_triple(
      parse_html("<div><a href=/1>one</a><img src=1 alt=x><a href=/2>two</a><img src=2 alt=y></div>").body().children);
  ASSERT_EQ(c.links.size(), 2u);
  EXPECT_EQ(c.links[0].href, "/1");
  EXPECT_EQ(c.links[1].href, "/2");
  ASSERT_EQ(c.images.size(), 2u);
  EXPECT_EQ(c.images[0].src, "1");
}

TEST(SegmentProperties, PartitionOrderAndDisjointness) {
  SegmenterConfig cfg;
  cfg.drop_empty = false;
  for (std::uint32_t seed = 0; seed < 300; ++seed) {
    fixtures::RandomPage gen(seed);
    const auto doc = parse_html(gen.document());
    const auto segs = segment_page(doc, cfg);
    std::vector<std::string> from_segments;
    for (std::size_t i = 0; i < segs.size(); ++i) {
      EXPECT_EQ(segs[i].index, i);
      if (i > 0) {
        EXPECT_LT(segs[i - 1].node_path, segs[i].node_path) << "seed " << seed;
      }
      auto t = fixtures::all_tokens(segs[i].content);
      from_segments.insert(from_segments.end(), t.begin(), t.end());
      // Each segment's first node is the node at its path.
      const DomNode* first = doc.at(segs[i].node_path);
      ASSERT_NE(first, nullptr);
      EXPECT_EQ(*first, segs[i].nodes.front());
    }
    // A later segment never starts inside an earlier one.
    for (std::size_t i = 1; i < segs.size(); ++i) {
      const NodePath& prev = segs[i - 1].node_path;
      const NodePath& cur = segs[i].node_path;
      const bool inside_prev_range =
          cur.size() >= prev.size() && std::equal(prev.begin(), prev.end() - 1, cur.begin()) &&
          cur[prev.size() - 1] < prev.back() + segs[i - 1].nodes.size();
      EXPECT_FALSE(inside_prev_range) << "seed " << seed;
    }
    std::sort(from_segments.begin(), from_segments.end());
    EXPECT_EQ(from_segments, fixtures::all_tokens(extract_triple(doc.body().children))) << "seed " << seed;
  }
}

TEST(SegmentProperties, Deterministic) {
  for (const auto& path : fixtures::all_fixture_pages()) {
    const auto doc = parse_html(read_file(path));
    EXPECT_EQ(segment_page(doc), segment_page(doc)) << path;
  }
}

TEST(SegmentProperties, NormalizedTokens) {
  for (std::uint32_t seed = 0; seed < 100; ++seed) {
    fixtures::RandomPage gen(seed);
    for (const auto& s : segment_page(parse_html(gen.document())))
      for (const auto& t : fixtures::all_tokens(s.content)) ASSERT_EQ(normalize_token(t), t);
  }
}

TEST(SegmentProperties, RaisingThresholdNeverAddsSegments) {
  for (std::uint32_t seed = 0; seed < 200; ++seed) {
    fixtures::RandomPage gen(seed);
    const auto doc = parse_html(gen.document());
    std::size_t prev = std::numeric_limits<std::size_t>::max();
    for (double theta : {0.0, 0.5, 1.0, 2.0, 4.0, 8.0, 100.0}) {
      SegmenterConfig cfg;
      cfg.merge_threshold = theta;
      const std::size_t n = segment_page(doc, cfg).size();
      EXPECT_LE(n, prev) << "seed " << seed << " theta " << theta;
      prev = n;
    }
  }
}

TEST(SegmentPage, AnchorWrappingBlocksStaysWhole) {
  const auto segs = segment_page(parse_html("<a href=\"/casino/1\"><p>one two</p><p>three</p></a><p>w1 w2 w3 w4 w5 w6 w7 w8 w9</p>"));
  ASSERT_EQ(segs.size(), 2u);
  ASSERT_EQ(segs[0].content.links.size(), 1u);
  EXPECT_EQ(segs[0].content.links[0].url_tokens, toks({"casino", "1"}));
  EXPECT_EQ(segs[0].content.links[0].anchor_tokens, toks({"one", "two", "three"}));
  // Without href the anchor still stays whole.
  EXPECT_EQ(segment_page(parse_html("<a><p>one two</p><p>three</p></a><p>w1 w2 w3 w4 w5 w6 w7 w8 w9</p>")).size(), 2u);
}
