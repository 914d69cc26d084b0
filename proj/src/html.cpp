// Markup-to-text reduction for ingested emails.

#include <algorithm>
#include <array>
#include <cctype>
#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>

#include "byoc/corpus.hpp"

namespace byoc::corpus {

namespace {

constexpr std::size_t kMaxUrlLength = 80;

bool is_space(char ch) { return ch == ' ' || ch == '\t' || ch == '\n' || ch == '\r' || ch == '\f' || ch == '\v'; }

bool is_url(std::string_view w) {
    return w.starts_with("http://") || w.starts_with("https://") || w.starts_with("www.");
}

void append_utf8(std::string& out, std::uint32_t cp) {
    if (cp == 0 || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) cp = 0xFFFD;
    if (cp < 0x80) {
        out += static_cast<char>(cp);
    } else if (cp < 0x800) {
        out += static_cast<char>(0xC0 | (cp >> 6));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    } else if (cp < 0x10000) {
        out += static_cast<char>(0xE0 | (cp >> 12));
        out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    } else {
        out += static_cast<char>(0xF0 | (cp >> 18));
        out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
        out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    }
}

// Latin-1 names in code point order from U+00A0.
constexpr std::string_view kLatin1[] = {
    "nbsp", "iexcl", "cent", "pound", "curren", "yen", "brvbar", "sect", "uml", "copy", "ordf", "laquo",
    "not", "shy", "reg", "macr", "deg", "plusmn", "sup2", "sup3", "acute", "micro", "para", "middot", "cedil",
    "sup1", "ordm", "raquo", "frac14", "frac12", "frac34", "iquest", "Agrave", "Aacute", "Acirc", "Atilde",
    "Auml", "Aring", "AElig", "Ccedil", "Egrave", "Eacute", "Ecirc", "Euml", "Igrave", "Iacute", "Icirc",
    "Iuml", "ETH", "Ntilde", "Ograve", "Oacute", "Ocirc", "Otilde", "Ouml", "times", "Oslash", "Ugrave",
    "Uacute", "Ucirc", "Uuml", "Yacute", "THORN", "szlig", "agrave", "aacute", "acirc", "atilde", "auml",
    "aring", "aelig", "ccedil", "egrave", "eacute", "ecirc", "euml", "igrave", "iacute", "icirc", "iuml",
    "eth", "ntilde", "ograve", "oacute", "ocirc", "otilde", "ouml", "divide", "oslash", "ugrave", "uacute",
    "ucirc", "uuml", "yacute", "thorn", "yuml",
};

const std::unordered_map<std::string_view, std::uint32_t>& named_entities() {
    static const std::unordered_map<std::string_view, std::uint32_t> table = [] {
        std::unordered_map<std::string_view, std::uint32_t> t = {
            {"amp", '&'},       {"lt", '<'},        {"gt", '>'},        {"quot", '"'},      {"apos", '\''},
            {"trade", 0x2122},  {"mdash", 0x2014},  {"ndash", 0x2013},  {"hellip", 0x2026}, {"lsquo", 0x2018},
            {"rsquo", 0x2019},  {"ldquo", 0x201C},  {"rdquo", 0x201D},  {"bull", 0x2022},   {"euro", 0x20AC},
            {"zwnj", 0x200C},   {"zwj", 0x200D},    {"thinsp", 0x2009}, {"ensp", 0x2002},   {"emsp", 0x2003},
        };
        for (std::uint32_t i = 0; i < std::size(kLatin1); ++i) t.emplace(kLatin1[i], 0xA0 + i);
        // Treated as a plain space so it separates words.
        t["nbsp"] = ' ';
        return t;
    }();
    return table;
}

// Length of an entity at text[i] ('&') and its decoded value, or 0.
std::size_t decode_entity(std::string_view text, std::size_t i, std::string& out) {
    const std::size_t semi = text.find(';', i + 1);
    if (semi == std::string_view::npos || semi - i > 12 || semi == i + 1) return 0;
    const std::string_view body = text.substr(i + 1, semi - i - 1);
    if (body[0] == '#') {
        std::uint32_t cp = 0;
        bool hex = body.size() > 1 && (body[1] == 'x' || body[1] == 'X');
        const std::string_view digits = body.substr(hex ? 2 : 1);
        if (digits.empty()) return 0;
        for (char ch : digits) {
            int v;
            if (ch >= '0' && ch <= '9') v = ch - '0';
            else if (hex && ch >= 'a' && ch <= 'f') v = ch - 'a' + 10;
            else if (hex && ch >= 'A' && ch <= 'F') v = ch - 'A' + 10;
            else return 0;
            cp = cp * (hex ? 16 : 10) + static_cast<std::uint32_t>(v);
            if (cp > 0x10FFFF) return 0;
        }
        append_utf8(out, cp);
        return semi - i + 1;
    }
    const auto& table = named_entities();
    const auto it = table.find(body);
    if (it == table.end()) return 0;
    append_utf8(out, it->second);
    return semi - i + 1;
}

enum class TagClass { inline_tag, line_break, block, cell, skip_content };

TagClass classify_tag(std::string_view name) {
    static constexpr std::array<std::string_view, 33> blocks = {
        "p",       "div",    "li",     "ul",       "ol",      "tr",     "table",  "h1",     "h2",
        "h3",      "h4",     "h5",     "h6",       "blockquote", "pre", "hr",     "section", "article",
        "header",  "footer", "nav",    "aside",    "form",    "dl",     "dt",     "dd",     "figure",
        "figcaption", "main", "address", "center", "tbody",   "thead"};
    if (name == "br") return TagClass::line_break;
    if (name == "script" || name == "style" || name == "head" || name == "title") return TagClass::skip_content;
    if (name == "td" || name == "th") return TagClass::cell;
    if (std::find(blocks.begin(), blocks.end(), name) != blocks.end()) return TagClass::block;
    return TagClass::inline_tag;
}

// Accumulates words and breaks; a break is 0 (space), 1 (line) or 2 (paragraph).
class TextBuilder {
public:
    void add_char(char ch) { word_ += ch; }
    void add(std::string_view s) { word_ += s; }

    void separator(int level) {
        flush_word();
        pending_ = std::max(pending_, level);
        has_pending_ = true;
    }

    std::string finish() {
        flush_word();
        return std::move(out_);
    }

private:
    void flush_word() {
        if (word_.empty()) return;
        if (is_url(word_) && word_.size() > kMaxUrlLength) {
            word_.clear();
            return;
        }
        if (!out_.empty() && has_pending_) {
            if (pending_ >= 2) out_ += "\n\n";
            else if (pending_ == 1) out_ += '\n';
            else out_ += ' ';
        }
        out_ += word_;
        word_.clear();
        pending_ = 0;
        has_pending_ = false;
    }

    std::string out_;
    std::string word_;
    int pending_ = 0;
    bool has_pending_ = false;
};

// Text between tags: whitespace runs become separators, entities decode.
void emit_text(TextBuilder& b, std::string_view text) {
    std::size_t i = 0;
    while (i < text.size()) {
        const char ch = text[i];
        if (is_space(ch)) {
            int newlines = 0;
            while (i < text.size() && is_space(text[i])) {
                if (text[i] == '\n') ++newlines;
                ++i;
            }
            b.separator(newlines >= 2 ? 2 : newlines);
            continue;
        }
        if (ch == '&') {
            std::string decoded;
            if (const std::size_t len = decode_entity(text, i, decoded); len > 0) {
                for (char d : decoded) {
                    if (d == '\n') b.separator(1);
                    else if (is_space(d)) b.separator(0);
                    else b.add_char(d);
                }
                i += len;
                continue;
            }
        }
        b.add_char(ch);
        ++i;
    }
}

std::string lower(std::string_view s) {
    std::string out(s);
    for (char& ch : out) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    return out;
}

// End of a tag starting at raw[i] == '<' (index one past '>'), or npos.
std::size_t tag_end(std::string_view raw, std::size_t i) {
    char quote = 0;
    for (std::size_t j = i + 1; j < raw.size(); ++j) {
        const char ch = raw[j];
        if (quote) {
            if (ch == quote) quote = 0;
        } else if (ch == '"' || ch == '\'') {
            quote = ch;
        } else if (ch == '>') {
            return j + 1;
        } else if (ch == '<') {
            return std::string_view::npos;
        }
    }
    return std::string_view::npos;
}

std::string strip_html(std::string_view raw) {
    TextBuilder b;
    std::size_t text_start = 0;
    std::size_t i = 0;
    auto flush_text = [&](std::size_t upto) {
        if (upto > text_start) emit_text(b, raw.substr(text_start, upto - text_start));
    };

    while (i < raw.size()) {
        if (raw[i] != '<') {
            ++i;
            continue;
        }
        const char next = i + 1 < raw.size() ? raw[i + 1] : '\0';
        if (raw.substr(i).starts_with("<!--")) {
            const std::size_t close = raw.find("-->", i + 4);
            if (close != std::string_view::npos) {
                flush_text(i);
                i = text_start = close + 3;
                continue;
            }
        }
        const bool tag_like = std::isalpha(static_cast<unsigned char>(next)) || next == '/' || next == '!' || next == '?';
        const std::size_t end = tag_like ? tag_end(raw, i) : std::string_view::npos;
        if (end == std::string_view::npos) {
            ++i;  // stray '<' stays as text
            continue;
        }
        flush_text(i);
        std::size_t k = i + 1;
        const bool closing = raw[k] == '/';
        if (closing) ++k;
        std::size_t name_end = k;
        while (name_end < end && std::isalnum(static_cast<unsigned char>(raw[name_end]))) ++name_end;
        const std::string name = lower(raw.substr(k, name_end - k));
        i = text_start = end;

        switch (classify_tag(name)) {
            case TagClass::inline_tag: break;
            case TagClass::line_break: b.separator(1); break;
            case TagClass::block: b.separator(2); break;
            case TagClass::cell: b.separator(0); break;
            case TagClass::skip_content:
                if (!closing && raw[end - 2] != '/') {
                    const std::string lowered = lower(raw.substr(end));
                    const std::size_t close = lowered.find("</" + name);
                    if (close == std::string::npos) {
                        i = text_start = raw.size();
                    } else {
                        const std::size_t close_end = raw.find('>', end + close);
                        i = text_start = close_end == std::string_view::npos ? raw.size() : close_end + 1;
                    }
                }
                break;
        }
    }
    flush_text(raw.size());
    return b.finish();
}

// Decoded text can spell markup again ("&lt;b&gt;" -> "<b>", "&amp;lt;" ->
// "&lt;"). A space after such a '<' or '&' keeps the output a fixed point.
std::string defuse_markup(std::string s) {
    std::string out;
    out.reserve(s.size());
    std::string scratch;
    for (std::size_t i = 0; i < s.size(); ++i) {
        out += s[i];
        const char next = i + 1 < s.size() ? s[i + 1] : '\0';
        if (s[i] == '<' && (std::isalpha(static_cast<unsigned char>(next)) || next == '/' || next == '!' || next == '?')) {
            out += ' ';
        } else if (s[i] == '&' && decode_entity(s, i, scratch) > 0) {
            out += ' ';
        }
    }
    return out;
}

std::string normalize_line_endings(std::string_view raw) {
    std::string out;
    out.reserve(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
        if (raw[i] == '\r') {
            out += '\n';
            if (i + 1 < raw.size() && raw[i + 1] == '\n') ++i;
        } else {
            out += raw[i];
        }
    }
    return out;
}

}  // namespace

std::string normalize_text(std::string_view raw, TextKind kind) {
    const std::string text = normalize_line_endings(raw);
    if (kind == TextKind::plain) return text;
    return defuse_markup(strip_html(text));
}

}  // namespace byoc::corpus
