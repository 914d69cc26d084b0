#include "byoc/promptkit.hpp"

#include <algorithm>
#include <cctype>
#include <set>

#include "byoc/error.hpp"

namespace byoc::promptkit::detail {
const std::map<std::string_view, std::string_view>& template_resources();
}

namespace byoc::promptkit {

namespace {

const std::set<std::string, std::less<>>& known_placeholders() {
    static const std::set<std::string, std::less<>> names = {
        "class_names",      "classification_task_description", "class_descriptions", "text",
        "qa_pairs",         "model_prediction",                "correct_class",      "user_explanation",
        "class_to_be_updated", "i-1",                          "i",                  "summary_of_previous_sections",
        "current part",     "length_instruction",              "demonstrations"};
    return names;
}

char fold(char ch) {
    const auto b = static_cast<unsigned char>(ch);
    return b < 0x80 ? static_cast<char>(std::tolower(b)) : ch;
}

std::string lower(std::string_view s) {
    std::string out(s);
    for (char& ch : out) ch = fold(ch);
    return out;
}

bool word_char(char ch) {
    const auto b = static_cast<unsigned char>(ch);
    return b >= 0x80 || std::isalnum(b) || ch == '_';
}

std::string_view trim(std::string_view s, std::string_view chars = " \t\r\n") {
    const auto first = s.find_first_not_of(chars);
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(chars);
    return s.substr(first, last - first + 1);
}

}  // namespace

void ClassifierSpec::validate() const {
    if (purpose.empty() || trim(purpose).empty()) throw Error(ErrorCode::validation, "classifier purpose is empty");
    if (classes.size() < 2) {
        throw Error(ErrorCode::validation, "a classifier needs at least 2 classes, got " + std::to_string(classes.size()));
    }
    std::set<std::string> seen;
    for (const auto& c : classes) {
        if (trim(c.name).empty()) throw Error(ErrorCode::validation, "class name is empty");
        if (c.name.find('\n') != std::string::npos || c.name.find('\r') != std::string::npos) {
            throw Error(ErrorCode::validation, "class name contains a newline: " + c.name, {{"class", c.name}});
        }
        if (!seen.insert(lower(c.name)).second) {
            throw Error(ErrorCode::validation, "duplicate class name " + c.name, {{"class", c.name}});
        }
    }
}

const ClassSpec* ClassifierSpec::find(std::string_view name) const {
    for (const auto& c : classes) {
        if (c.name == name) return &c;
    }
    return nullptr;
}

ClassSpec* ClassifierSpec::find(std::string_view name) {
    for (auto& c : classes) {
        if (c.name == name) return &c;
    }
    return nullptr;
}

std::vector<std::string> ClassifierSpec::names() const {
    std::vector<std::string> out;
    out.reserve(classes.size());
    for (const auto& c : classes) out.push_back(c.name);
    return out;
}

void FieldMap::set(std::string label, std::string value) {
    for (auto& [k, v] : items_) {
        if (k == label) {
            v = std::move(value);
            return;
        }
    }
    items_.emplace_back(std::move(label), std::move(value));
}

const std::string* FieldMap::find(std::string_view label) const {
    for (const auto& [k, v] : items_) {
        if (k == label) return &v;
    }
    return nullptr;
}

const std::string& FieldMap::at(std::string_view label) const {
    if (const auto* v = find(label)) return *v;
    throw Error(ErrorCode::parse, "reply has no " + std::string(label) + " field", {{"missing", std::string(label)}});
}

llm::CompletionRequest PromptBundle::request() const {
    llm::CompletionRequest r;
    r.messages = messages;
    r.temperature = temperature;
    r.max_output_tokens = max_output_tokens;
    r.purpose = purpose;
    return r;
}

Template template_for(llm::PurposeTag kind) {
    const auto& res = detail::template_resources();
    const std::string base = llm::to_string(kind);
    const auto sys = res.find(base + ".system");
    const auto usr = res.find(base + ".user");
    if (sys == res.end() || usr == res.end()) {
        throw Error(ErrorCode::config, "no template resource for " + base);
    }
    return {sys->second, usr->second};
}

std::string substitute(std::string_view tmpl, const std::map<std::string, std::string>& values) {
    const auto& known = known_placeholders();
    std::string out;
    out.reserve(tmpl.size() + 256);
    std::size_t i = 0;
    while (i < tmpl.size()) {
        const bool angle = tmpl[i] == '<';
        const bool dollar = tmpl[i] == '$' && i + 1 < tmpl.size() && tmpl[i + 1] == '{';
        if (!angle && !dollar) {
            out += tmpl[i++];
            continue;
        }
        const std::size_t open = i + (angle ? 1 : 2);
        const std::size_t close = tmpl.find(angle ? '>' : '}', open);
        const std::size_t newline = tmpl.find('\n', open);
        if (close == std::string_view::npos || (newline != std::string_view::npos && newline < close)) {
            out += tmpl[i++];
            continue;
        }
        const std::string name(tmpl.substr(open, close - open));
        if (const auto it = values.find(name); it != values.end()) {
            out += it->second;
        } else if (known.contains(name)) {
            throw Error(ErrorCode::validation, "render: no value for placeholder <" + name + ">",
                        {{"placeholder", name}});
        } else {
            out.append(tmpl.substr(i, close + 1 - i));
        }
        i = close + 1;
    }
    return out;
}

std::string render_class_names(const ClassifierSpec& spec) {
    std::string out;
    for (std::size_t i = 0; i < spec.classes.size(); ++i) {
        if (i) out += ", ";
        out += spec.classes[i].name;
    }
    return out;
}

std::string render_class_descriptions(const ClassifierSpec& spec) {
    std::string out;
    for (std::size_t i = 0; i < spec.classes.size(); ++i) {
        if (i) out += '\n';
        out += spec.classes[i].name;
        out += ": ";
        out += spec.classes[i].description;
    }
    return out;
}

std::string render_qa(const std::vector<QAItem>& qa) {
    std::string out;
    for (std::size_t i = 0; i < qa.size(); ++i) {
        if (i) out += "\n\n";
        out += qa[i].question;
        out += '\n';
        out += qa[i].answer;
    }
    return out;
}

std::vector<std::string> schema_for(llm::PurposeTag kind) {
    switch (kind) {
        case llm::PurposeTag::gen_question: return {"Thoughts", "Question", "Explanation"};
        case llm::PurposeTag::interactive_predict:
        case llm::PurposeTag::predict:
        case llm::PurposeTag::baseline: return {"Thoughts", "Class", "Reflection"};
        case llm::PurposeTag::update: return {"Thoughts", "Description", "Reason"};
        case llm::PurposeTag::summarize_chunk: return {};
    }
    return {};
}

PromptBundle render(llm::PurposeTag kind, const RenderContext& ctx) {
    std::map<std::string, std::string> values = ctx.extra;
    if (ctx.spec) {
        values["class_names"] = render_class_names(*ctx.spec);
        values["classification_task_description"] = ctx.spec->purpose;
        values["class_descriptions"] = render_class_descriptions(*ctx.spec);
    }
    if (!ctx.text.empty()) values["text"] = ctx.text;
    values["qa_pairs"] = render_qa(ctx.qa);

    const Template t = template_for(kind);
    PromptBundle b;
    b.purpose = kind;
    b.messages.push_back({llm::Role::system, substitute(t.system, values)});
    b.messages.push_back({llm::Role::user, substitute(t.user, values)});
    b.temperature = llm::default_temperature(kind);
    b.schema = schema_for(kind);
    return b;
}

namespace {

// Schema label index if `line` opens with "<label>:" (case-insensitive, markdown emphasis allowed).
std::optional<std::size_t> label_at(std::string_view line, const std::vector<std::string>& schema,
                                    std::size_t& value_start) {
    const std::size_t lead = line.find_first_not_of(" \t*_#");
    if (lead == std::string_view::npos) return std::nullopt;
    for (std::size_t k = 0; k < schema.size(); ++k) {
        const auto& label = schema[k];
        if (line.size() - lead < label.size()) continue;
        bool same = true;
        for (std::size_t c = 0; c < label.size() && same; ++c) same = fold(line[lead + c]) == fold(label[c]);
        if (!same) continue;
        std::size_t p = lead + label.size();
        while (p < line.size() && (line[p] == ' ' || line[p] == '\t' || line[p] == '*' || line[p] == '_')) ++p;
        if (p < line.size() && line[p] == ':') {
            ++p;
            while (p < line.size() && (line[p] == '*' || line[p] == '_')) ++p;
            value_start = p;
            return k;
        }
    }
    return std::nullopt;
}

}  // namespace

FieldMap parse(llm::PurposeTag kind, std::string_view reply) {
    const auto schema = schema_for(kind);
    std::vector<std::optional<std::string>> values(schema.size());
    std::optional<std::size_t> open;
    std::string current;

    auto close_field = [&] {
        if (open && !values[*open]) values[*open] = std::string(trim(current));
        open.reset();
        current.clear();
    };

    std::size_t pos = 0;
    while (pos <= reply.size()) {
        std::size_t eol = reply.find('\n', pos);
        if (eol == std::string_view::npos) eol = reply.size();
        const std::string_view line = reply.substr(pos, eol - pos);
        std::size_t value_start = 0;
        if (const auto k = label_at(line, schema, value_start)) {
            close_field();
            open = *k;
            current = std::string(line.substr(value_start));
        } else if (open) {
            current += '\n';
            current += line;
        }
        pos = eol + 1;
    }
    close_field();

    FieldMap fields;
    std::string missing;
    for (std::size_t k = 0; k < schema.size(); ++k) {
        if (values[k]) {
            fields.set(schema[k], *values[k]);
        } else {
            if (!missing.empty()) missing += ",";
            missing += schema[k];
        }
    }
    if (!missing.empty()) {
        throw Error(ErrorCode::parse, std::string(llm::to_string(kind)) + " reply is missing " + missing,
                    {{"missing", missing}, {"purpose", llm::to_string(kind)}});
    }
    return fields;
}

std::string synthesize(const FieldMap& fields) {
    std::string out;
    for (const auto& [label, value] : fields.items()) {
        if (!out.empty()) out += '\n';
        out += label;
        out += ": ";
        out += value;
    }
    return out;
}

std::optional<std::string> match_class(std::string_view raw, const ClassifierSpec& spec) {
    const std::string cleaned = lower(trim(raw, " \t\r\n\"'`.,;:!?*()[]{}<>"));
    if (cleaned.empty()) return std::nullopt;
    for (const auto& c : spec.classes) {
        if (lower(c.name) == cleaned) return c.name;
    }

    const std::string hay = lower(raw);
    struct Hit {
        std::size_t cls;
        std::size_t begin;
        std::size_t end;
    };
    std::vector<Hit> hits;
    for (std::size_t k = 0; k < spec.classes.size(); ++k) {
        const std::string needle = lower(spec.classes[k].name);
        if (needle.empty()) continue;
        for (std::size_t p = hay.find(needle); p != std::string::npos; p = hay.find(needle, p + 1)) {
            const std::size_t e = p + needle.size();
            const bool left_ok = p == 0 || !word_char(hay[p - 1]) || !word_char(needle.front());
            const bool right_ok = e == hay.size() || !word_char(hay[e]) || !word_char(needle.back());
            if (left_ok && right_ok) hits.push_back({k, p, e});
        }
    }
    // A hit nested inside a longer class name's hit belongs to the longer name.
    std::set<std::size_t> matched;
    for (const auto& h : hits) {
        const bool nested = std::any_of(hits.begin(), hits.end(), [&](const Hit& o) {
            return o.cls != h.cls && o.begin <= h.begin && h.end <= o.end && (o.end - o.begin) > (h.end - h.begin);
        });
        if (!nested) matched.insert(h.cls);
    }
    if (matched.size() == 1) return spec.classes[*matched.begin()].name;
    return std::nullopt;
}

}  // namespace byoc::promptkit
