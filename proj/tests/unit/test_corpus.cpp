#include <gtest/gtest.h>

#include <random>
#include <set>

#include "byoc/corpus.hpp"
#include "byoc/error.hpp"
#include "support.hpp"

using namespace byoc;
using namespace byoc::corpus;

namespace {

struct HtmlCase {
    const char* raw;
    const char* expected;
};

// Each expectation worked out by hand from the markup.
const HtmlCase kHtmlCases[] = {
    {"<p>Hello <b>world</b></p>", "Hello world"},
    {"<div>A&amp;B</div><div>C</div>", "A&B\n\nC"},
    {"<p>one</p>\n\n\n<p>two</p>", "one\n\ntwo"},
    {"first<br>second<br/>third", "first\nsecond\nthird"},
    {"<html><head><title>T</title><style>p{color:red}</style></head><body>Body text</body></html>", "Body text"},
    {"before<script>var x = '<p>';</script>after", "beforeafter"},
    {"<p>Caf&eacute; &lt;menu&gt; &#36;5 &#x263A;</p>", "Caf\xC3\xA9 < menu> $5 \xE2\x98\xBA"},
    {"a   b\t\tc <!-- hidden <p> --> d", "a b c d"},
    {"<ul><li>eggs</li><li>milk</li></ul>", "eggs\n\nmilk"},
    {"<table><tr><td>x</td><td>y</td></tr></table>", "x y"},
};

}  // namespace

TEST(Normalize, HandCheckedHtmlFixtures) {
    for (const auto& c : kHtmlCases) {
        EXPECT_EQ(normalize_text(c.raw, TextKind::html), c.expected) << "input: " << c.raw;
    }
}

TEST(Normalize, PlainOnlyFixesLineEndings) {
    EXPECT_EQ(normalize_text("line1\r\nline2", TextKind::plain), "line1\nline2");
    EXPECT_EQ(normalize_text("a\rb  <b>c</b>", TextKind::plain), "a\nb  <b>c</b>");
}

TEST(Normalize, MalformedMarkupNeverThrows) {
    EXPECT_EQ(normalize_text("a < b and c > d", TextKind::html), "a < b and c > d");
    EXPECT_EQ(normalize_text("&lt;b&gt;bold&lt;/b&gt;", TextKind::html), "< b>bold< /b>");
    EXPECT_NO_THROW(normalize_text("<<<>>><p", TextKind::html));
    EXPECT_NO_THROW(normalize_text("<a href=\"x", TextKind::html));
}

TEST(Normalize, LinksKeepAnchorTextAndDropLongUrls) {
    const std::string long_url = "https://example.com/" + std::string(90, 'q');
    EXPECT_EQ(normalize_text("<a href=\"" + long_url + "\">the report</a>", TextKind::html), "the report");
    EXPECT_EQ(normalize_text("see " + long_url + " now", TextKind::html), "see now");
    EXPECT_EQ(normalize_text("see https://ex.com/a now", TextKind::html), "see https://ex.com/a now");
}

TEST(Normalize, IdempotentOnRandomMarkup) {
    const std::vector<std::string> pieces = {"<p>", "</p>", "<div>", "</div>", "<br>", "word", " ", "\n", "\n\n",
                                             "&amp;", "&lt;", "<", ">", "\t", "<b>", "</b>", "x.", "\r\n", "<li>"};
    std::mt19937 rng(7);
    for (int trial = 0; trial < 500; ++trial) {
        std::string raw;
        const int n = 1 + static_cast<int>(rng() % 30);
        for (int i = 0; i < n; ++i) raw += pieces[rng() % pieces.size()];
        for (auto kind : {TextKind::html, TextKind::plain}) {
            const auto once = normalize_text(raw, kind);
            EXPECT_EQ(normalize_text(once, kind), once) << "raw: " << raw;
        }
    }
}

TEST(Dataset, LoadsThreeLinesInOrder) {
    const auto d = parse_dataset(R"({"id":"a","text":"one","label":"X"}
{"id":"b","text":"two","label":"Y"}
{"id":"c","text":"<p>three</p>","label":"X","kind":"html","meta":{"source":"inbox"}}
)");
    ASSERT_EQ(d.size(), 3u);
    EXPECT_EQ(d[0].sample.id, "a");
    EXPECT_EQ(d[1].label, "Y");
    EXPECT_EQ(d[2].sample.text, "three");
    EXPECT_EQ(d[2].sample.meta.at("source"), "inbox");
}

TEST(Dataset, DuplicateIdNamesLine) {
    try {
        parse_dataset("{\"id\":\"a\",\"text\":\"x\"}\n{\"id\":\"a\",\"text\":\"y\"}\n");
        FAIL() << "expected an error";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::validation);
        EXPECT_EQ(e.detail().at("line"), "2");
    }
}

TEST(Dataset, MalformedLineNamesLine) {
    try {
        parse_dataset("{\"id\":\"a\",\"text\":\"x\"}\n\n{not json\n");
        FAIL() << "expected an error";
    } catch (const Error& e) {
        EXPECT_EQ(e.detail().at("line"), "3");
    }
    EXPECT_THROW(parse_dataset("{\"id\":\"a\"}\n"), Error);
    EXPECT_THROW(parse_dataset("{\"id\":\"a\",\"text\":\"<p></p>\",\"kind\":\"html\"}\n"), Error);
}

TEST(Dataset, ThreeHundredRecordFixture) {
    const auto d = load_dataset(byoc::testing::fixture("emails_300.jsonl"), Split::test);
    EXPECT_EQ(d.size(), 300u);
    EXPECT_EQ(d.split(), Split::test);
    std::set<std::string> labels;
    for (const auto& r : d) labels.insert(r.label);
    EXPECT_EQ(labels, (std::set<std::string>{"Important", "Unimportant"}));
}

TEST(Dataset, SaveLoadRoundTripIsByteIdentical) {
    byoc::testing::TempDir dir;
    const auto d = load_dataset(byoc::testing::fixture("emails_300.jsonl"));
    save_dataset(d, dir / "copy.jsonl");
    const auto again = load_dataset(dir / "copy.jsonl");
    EXPECT_EQ(again.size(), d.size());
    for (std::size_t i = 0; i < d.size(); ++i) EXPECT_EQ(again[i], d[i]);
    EXPECT_EQ(serialize_dataset(again), byoc::testing::read_file(dir / "copy.jsonl"));
}

TEST(Split, PartitionsAreDisjointAndDeterministic) {
    std::vector<LabeledSample> v;
    for (int i = 0; i < 30; ++i) v.push_back({{"s" + std::to_string(i), "text " + std::to_string(i), {}}, "X"});
    const Dataset d(v);
    const auto [tr, dv, te] = split_dataset(d, 1, {10, 10, 10});
    ASSERT_EQ(tr.size(), 10u);
    ASSERT_EQ(dv.size(), 10u);
    ASSERT_EQ(te.size(), 10u);
    std::set<std::string> ids;
    for (const auto* part : {&tr, &dv, &te}) {
        for (const auto& r : *part) ids.insert(r.sample.id);
    }
    EXPECT_EQ(ids.size(), 30u);

    const auto [tr2, dv2, te2] = split_dataset(d, 1, {10, 10, 10});
    for (std::size_t i = 0; i < 10; ++i) {
        EXPECT_EQ(tr[i], tr2[i]);
        EXPECT_EQ(te[i], te2[i]);
    }
    const auto [other, u1, u2] = split_dataset(d, 2, {30, 0, 0});
    EXPECT_EQ(other.size(), 30u);
    EXPECT_TRUE(u1.empty());
    EXPECT_TRUE(u2.empty());
    EXPECT_THROW(split_dataset(d, 1, {20, 10, 1}), Error);
}
