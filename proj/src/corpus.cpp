#include "byoc/corpus.hpp"

#include <fstream>
#include <limits>
#include <random>
#include <set>
#include <sstream>

#include <json.hpp>

#include "byoc/error.hpp"

namespace byoc::corpus {

using nlohmann::json;

std::optional<TextKind> parse_text_kind(std::string_view s) {
    if (s == "plain") return TextKind::plain;
    if (s == "html") return TextKind::html;
    return std::nullopt;
}

const char* to_string(Split split) {
    switch (split) {
        case Split::train: return "train";
        case Split::dev: return "dev";
        case Split::test: return "test";
    }
    return "train";
}

Dataset::Dataset(std::vector<LabeledSample> samples, Split split) : samples_(std::move(samples)), split_(split) {
    std::set<std::string_view> seen;
    for (std::size_t i = 0; i < samples_.size(); ++i) {
        const auto& s = samples_[i].sample;
        if (s.id.empty()) throw Error(ErrorCode::validation, "sample " + std::to_string(i) + " has an empty id");
        if (s.text.empty()) throw Error(ErrorCode::validation, "sample " + s.id + " has empty text", {{"id", s.id}});
        if (!seen.insert(s.id).second) {
            throw Error(ErrorCode::validation, "duplicate sample id " + s.id, {{"id", s.id}});
        }
    }
}

namespace {

[[noreturn]] void line_error(std::size_t line, const std::string& what) {
    throw Error(ErrorCode::validation, "line " + std::to_string(line) + ": " + what,
                {{"line", std::to_string(line)}});
}

LabeledSample parse_record(const std::string& raw, std::size_t line) {
    json j;
    try {
        j = json::parse(raw);
    } catch (const json::parse_error& e) {
        line_error(line, std::string("invalid JSON: ") + e.what());
    }
    if (!j.is_object()) line_error(line, "record is not an object");

    auto string_field = [&](const char* key, bool required) -> std::string {
        const auto it = j.find(key);
        if (it == j.end() || it->is_null()) {
            if (required) line_error(line, std::string("missing field '") + key + "'");
            return {};
        }
        if (!it->is_string()) line_error(line, std::string("field '") + key + "' must be a string");
        return it->get<std::string>();
    };

    LabeledSample rec;
    rec.sample.id = string_field("id", true);
    const std::string raw_text = string_field("text", true);
    rec.label = string_field("label", false);
    TextKind kind = TextKind::plain;
    if (const std::string k = string_field("kind", false); !k.empty()) {
        const auto parsed = parse_text_kind(k);
        if (!parsed) line_error(line, "unknown kind '" + k + "'");
        kind = *parsed;
    }
    if (const auto it = j.find("meta"); it != j.end() && !it->is_null()) {
        if (!it->is_object()) line_error(line, "field 'meta' must be an object");
        for (const auto& [k, v] : it->items()) {
            if (!v.is_string()) line_error(line, "meta value '" + k + "' must be a string");
            rec.sample.meta[k] = v.get<std::string>();
        }
    }
    if (rec.sample.id.empty()) line_error(line, "empty id");
    rec.sample.text = normalize_text(raw_text, kind);
    if (rec.sample.text.empty()) line_error(line, "text is empty after normalization");
    return rec;
}

}  // namespace

Dataset parse_dataset(std::string_view jsonl, Split split) {
    std::vector<LabeledSample> samples;
    std::set<std::string> ids;
    std::istringstream in{std::string(jsonl)};
    std::string raw;
    std::size_t line = 0;
    while (std::getline(in, raw)) {
        ++line;
        if (raw.find_first_not_of(" \t\r") == std::string::npos) continue;
        auto rec = parse_record(raw, line);
        if (!ids.insert(rec.sample.id).second) line_error(line, "duplicate id '" + rec.sample.id + "'");
        samples.push_back(std::move(rec));
    }
    return Dataset(std::move(samples), split);
}

Dataset load_dataset(const std::filesystem::path& path, Split split) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::not_found, "cannot open dataset " + path.string(), {{"path", path.string()}});
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_dataset(buf.str(), split);
}

std::string serialize_dataset(const Dataset& d) {
    std::string out;
    for (const auto& rec : d) {
        json j = json::object();
        j["id"] = rec.sample.id;
        j["text"] = rec.sample.text;
        if (!rec.label.empty()) j["label"] = rec.label;
        if (!rec.sample.meta.empty()) j["meta"] = rec.sample.meta;
        out += j.dump();
        out += '\n';
    }
    return out;
}

void save_dataset(const Dataset& d, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::io, "cannot write " + path.string());
    out << serialize_dataset(d);
}

std::tuple<Dataset, Dataset, Dataset> split_dataset(const Dataset& d, std::uint64_t seed, SplitCounts counts) {
    const std::size_t wanted = counts.train + counts.dev + counts.test;
    if (wanted > d.size()) {
        throw Error(ErrorCode::validation,
                    "split counts sum to " + std::to_string(wanted) + " but dataset has " + std::to_string(d.size()));
    }
    // Hand-rolled Fisher-Yates: partitions must not depend on the standard library.
    std::vector<std::size_t> order(d.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::mt19937_64 gen(seed);
    for (std::size_t i = order.size(); i > 1; --i) {
        const std::uint64_t bound = i;
        const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % bound;
        std::uint64_t r;
        do r = gen(); while (r >= limit);
        std::swap(order[i - 1], order[r % bound]);
    }
    auto take = [&](std::size_t from, std::size_t n, Split split) {
        std::vector<LabeledSample> part;
        part.reserve(n);
        for (std::size_t k = from; k < from + n; ++k) part.push_back(d[order[k]]);
        return Dataset(std::move(part), split);
    };
    return {take(0, counts.train, Split::train), take(counts.train, counts.dev, Split::dev),
            take(counts.train + counts.dev, counts.test, Split::test)};
}

}  // namespace byoc::corpus
