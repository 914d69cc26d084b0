#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "byoc/corpus.hpp"
#include "byoc/llm.hpp"
#include "byoc/promptkit.hpp"
#include "byoc/trainer.hpp"

namespace byoc::testing {

inline promptkit::ClassifierSpec email_spec() {
    promptkit::ClassifierSpec s;
    s.purpose = "Sort my work inbox so I can answer what matters first";
    s.classes = {{"Important", "Emails that need a reply from me this week"},
                 {"Unimportant", "Newsletters, notifications and anything I can ignore"}};
    return s;
}

inline std::string question_reply(const std::string& q, const std::string& why = "It separates the classes") {
    return "Thoughts: The sender matters here.\nQuestion: " + q + "\nExplanation: " + why;
}

inline std::string predict_reply(const std::string& cls, const std::string& reflection = "The text fits it") {
    return "Thoughts: Weighing both classes.\nClass: " + cls + "\nReflection: " + reflection;
}

inline std::string update_reply(const std::string& desc, const std::string& reason = "Broadened with the example") {
    return "Thoughts: The user explained the label.\nDescription: " + desc + "\nReason: " + reason;
}

inline llm::ScriptEntry entry(llm::PurposeTag purpose, std::string reply,
                              std::optional<std::string> contains = std::nullopt) {
    llm::ScriptEntry e;
    e.matcher.purpose = purpose;
    e.matcher.contains = std::move(contains);
    e.reply = std::move(reply);
    return e;
}

inline std::vector<corpus::Sample> four_samples() {
    return {{"e1", "Hi, can you review the Q3 budget draft before Friday? Thanks, Dana", {}},
            {"e2", "Your weekly digest: 12 new posts in the design community.", {}},
            {"e3", "The client meeting moved to 9am tomorrow, please confirm you can attend.", {}},
            {"e4", "Flash sale! 40% off all headphones this weekend only.", {}}};
}

inline const std::vector<std::string>& four_labels() {
    static const std::vector<std::string> labels{"Important", "Unimportant", "Important", "Unimportant"};
    return labels;
}

inline std::string question_text(std::size_t sample, std::size_t j) {
    return "Question " + std::to_string(sample + 1) + "." + std::to_string(j + 1) + ": does the sender expect action?";
}

inline std::string answer_text(std::size_t sample, std::size_t j) {
    return "Answer " + std::to_string(sample + 1) + "." + std::to_string(j + 1);
}

inline std::string updated_description(std::size_t sample, const std::string& cls) {
    return cls + " description after sample " + std::to_string(sample + 1);
}

/// Script for the 2-class, 4-sample run: M questions, one prediction and one
/// update per sample. Sample 2 (index 1) is mispredicted.
inline std::vector<llm::ScriptEntry> training_script(int m = 3) {
    std::vector<llm::ScriptEntry> script;
    const auto& labels = four_labels();
    for (std::size_t k = 0; k < labels.size(); ++k) {
        for (int j = 0; j < m; ++j) {
            script.push_back(entry(llm::PurposeTag::gen_question, question_reply(question_text(k, j))));
        }
        const std::string predicted = k == 1 ? "Important" : labels[k];
        script.push_back(entry(llm::PurposeTag::interactive_predict, predict_reply(predicted, "Reflection " + std::to_string(k + 1))));
        script.push_back(entry(llm::PurposeTag::update, update_reply(updated_description(k, labels[k]))));
    }
    return script;
}

/// Drives a session through every sample with scripted answers and labels.
inline void drive(trainer::TrainingSession& s) {
    const auto& labels = four_labels();
    while (!s.complete()) {
        const std::size_t k = s.cursor();
        const int m = s.config().questions_per_sample;
        for (int j = 0; j < m; ++j) {
            s.next_question();
            s.submit_answer(answer_text(k, static_cast<std::size_t>(j)));
        }
        s.submit_label(labels[k], "Because of sample " + std::to_string(k + 1));
    }
}

class TempDir {
public:
    TempDir() {
        static std::mt19937_64 rng{std::random_device{}()};
        path_ = std::filesystem::temp_directory_path() / ("byoc-test-" + std::to_string(rng()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const std::filesystem::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out << text;
}

inline std::string fixture(const std::string& rel) { return std::string(BYOC_FIXTURES) + "/" + rel; }

/// Deterministic filler of `words` words.
inline std::string words(std::size_t n, const std::string& stem = "word") {
    std::string out;
    for (std::size_t i = 0; i < n; ++i) {
        if (i) out += ' ';
        out += stem + std::to_string(i % 97);
    }
    return out;
}

}  // namespace byoc::testing
