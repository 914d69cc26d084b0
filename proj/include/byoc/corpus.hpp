#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

namespace byoc::corpus {

enum class TextKind { plain, html };

std::optional<TextKind> parse_text_kind(std::string_view s);

enum class Split { train, dev, test };

const char* to_string(Split split);

struct Sample {
    std::string id;
    std::string text;
    std::map<std::string, std::string> meta;

    bool operator==(const Sample&) const = default;
};

struct LabeledSample {
    Sample sample;
    std::string label;  // empty for unlabeled records

    bool operator==(const LabeledSample&) const = default;
};

class Dataset {
public:
    Dataset() = default;
    /// Throws validation if ids repeat or any text is empty.
    Dataset(std::vector<LabeledSample> samples, Split split = Split::train);

    const std::vector<LabeledSample>& samples() const noexcept { return samples_; }
    Split split() const noexcept { return split_; }
    std::size_t size() const noexcept { return samples_.size(); }
    bool empty() const noexcept { return samples_.empty(); }
    const LabeledSample& operator[](std::size_t i) const { return samples_[i]; }

    auto begin() const { return samples_.begin(); }
    auto end() const { return samples_.end(); }

private:
    std::vector<LabeledSample> samples_;
    Split split_ = Split::train;
};

/// Strips markup to plain text for `html`; `plain` only normalizes line endings.
/// Block-level elements become paragraph breaks (a blank line), <br> a line
/// break. Never throws: stray angle brackets stay as text. The result is a
/// fixed point: decoded text that would read as markup again gets a space
/// after its "<" or "&".
std::string normalize_text(std::string_view raw, TextKind kind);

/// Parses one JSONL record per line. Errors name the 1-based line number.
Dataset load_dataset(const std::filesystem::path& path, Split split = Split::train);
Dataset parse_dataset(std::string_view jsonl, Split split = Split::train);

std::string serialize_dataset(const Dataset& d);
void save_dataset(const Dataset& d, const std::filesystem::path& path);

struct SplitCounts {
    std::size_t train = 0;
    std::size_t dev = 0;
    std::size_t test = 0;
};

/// Seeded shuffle, then partition the prefix into train/dev/test.
std::tuple<Dataset, Dataset, Dataset> split_dataset(const Dataset& d, std::uint64_t seed,
                                                    SplitCounts counts);

}  // namespace byoc::corpus
