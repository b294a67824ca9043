#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "healthprompt/dataset.hpp"
#include "healthprompt/dk.hpp"
#include "healthprompt/error.hpp"
#include "healthprompt/format.hpp"
#include "healthprompt/random.hpp"
#include "healthprompt/schema.hpp"

namespace healthprompt {

struct PromptSpec {
    std::size_t n_ex = 0;
    DomainKnowledge dk;
    std::uint64_t seed = 0;
    // Reproduce the published prompt exactly: keeps the stray credit-risk
    // sentence, prints query values with a trailing ".0" and ends with "?".
    bool paper_faithful = false;
};

struct Example {
    std::vector<double> x;
    int label = 0;
};

struct Prompt {
    std::string part1_task;
    std::string part2_attributes;
    std::vector<std::string> part3_examples;
    std::string part4_dk;  // empty when the DK variant is none
    std::string part5_question;

    // Parts joined by blank lines; empty parts are skipped.
    std::string text() const {
        std::string out = part1_task + "\n\n" + part2_attributes;
        for (const auto& e : part3_examples) out += "\n\n" + e;
        if (!part4_dk.empty()) out += "\n\n" + part4_dk;
        out += "\n\n" + part5_question;
        return out;
    }
};

// Stratified draw without replacement: ceil(n/2) positives and floor(n/2)
// negatives, interleaved 1,0,1,0,...
inline std::vector<Example> sample_examples(const Dataset& train, std::size_t n_ex, std::uint64_t seed) {
    if (n_ex == 0) return {};
    if (n_ex > train.size()) throw SamplingError("cannot draw " + std::to_string(n_ex) + " examples from " +
                                                 std::to_string(train.size()) + " rows");
    const std::size_t want[2] = {n_ex / 2, n_ex - n_ex / 2};
    std::vector<std::size_t> picked[2];
    for (int c = 0; c < 2; ++c) {
        std::vector<std::size_t> members;
        for (std::size_t i = 0; i < train.size(); ++i) {
            if (train.labels[i] == c) members.push_back(i);
        }
        if (members.size() < want[c]) {
            throw SamplingError("need " + std::to_string(want[c]) + " examples of class " + std::to_string(c) +
                                ", training set has " + std::to_string(members.size()));
        }
        Rng rng = make_rng(derive_seed(seed, static_cast<std::uint64_t>(c)));
        shuffle(members, rng);
        picked[c].assign(members.begin(), members.begin() + static_cast<std::ptrdiff_t>(want[c]));
    }
    std::vector<Example> out;
    out.reserve(n_ex);
    for (std::size_t k = 0; k < want[1]; ++k) {
        out.push_back({train.rows[picked[1][k]], 1});
        if (k < want[0]) out.push_back({train.rows[picked[0][k]], 0});
    }
    return out;
}

template <typename Fmt>
std::string render_instance(std::span<const double> x, const FeatureSchema& schema, Fmt&& fmt) {
    if (x.size() != schema.size()) {
        throw ValidationError("instance has " + std::to_string(x.size()) + " values, schema has " +
                              std::to_string(schema.size()));
    }
    std::string out;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (i) out += ", ";
        out += schema[i].name + ": " + fmt(x[i]);
    }
    return out;
}

// "age: 57, sex: 1, ..." with shortest round-trip decimals.
inline std::string render_instance(std::span<const double> x, const FeatureSchema& schema) {
    return render_instance(x, schema, [](double v) { return shortest_decimal(v); });
}

inline std::string task_text(bool paper_faithful) {
    std::string s =
        "Given the provided input attributes, evaluate the risk of heart disease for the individual.\n"
        "The diagnosis of heart disease (angiographic disease status) is based on the degree of diameter "
        "narrowing in the blood vessels:\n"
        "- 0: Less than 50% diameter narrowing, implying a lower risk.\n"
        "- 1: More than 50% diameter narrowing, indicating a higher risk.\n"
        "If the assessment determines a high risk, the output should be '1'. If the risk is determined to be "
        "low, the output should be '0'.";
    if (paper_faithful) {
        s += "\nEvaluate the credit risk based on given attributes. If good, respond with '1', if bad, respond "
             "with '0'.";
    }
    return s;
}

inline std::string attribute_text(const FeatureSchema& schema) {
    std::string s = "The explanation of each attribute is as follows:";
    for (const auto& f : schema.features()) s += "\n- " + f.description;
    return s;
}

inline std::string example_block(std::size_t i, const Example& e, const FeatureSchema& schema) {
    const auto n = std::to_string(i);
    return "Example " + n + ":\n<Inputs " + n + ">: " + render_instance(e.x, schema) + "\n<Answer " + n +
           ">: " + std::to_string(e.label);
}

inline Prompt assemble_prompt(const FeatureSchema& schema, const PromptSpec& spec, std::span<const Example> examples,
                              std::span<const double> query) {
    if (examples.size() != spec.n_ex) {
        throw ValidationError("prompt: spec asks for " + std::to_string(spec.n_ex) + " examples, got " +
                              std::to_string(examples.size()));
    }
    if ((spec.dk.kind == DkKind::none) != spec.dk.text.empty()) {
        throw ValidationError("prompt: DK text must be empty exactly when the variant is none");
    }
    Prompt p;
    p.part1_task = task_text(spec.paper_faithful);
    p.part2_attributes = attribute_text(schema);
    for (std::size_t i = 0; i < examples.size(); ++i) {
        if (examples[i].label != 0 && examples[i].label != 1) throw ValidationError("prompt: example label not 0/1");
        p.part3_examples.push_back(example_block(i + 1, examples[i], schema));
    }
    if (spec.dk.kind != DkKind::none) p.part4_dk = "Domain Knowledge:\n" + spec.dk.text;
    const std::string inputs = spec.paper_faithful ? render_instance(query, schema, [](double v) { return float_repr(v); })
                                                   : render_instance(query, schema);
    p.part5_question = "Now, given the following inputs, please evaluate the risk of heart disease:\n<Inputs>: " +
                       inputs + (spec.paper_faithful ? "\n<Answer>: ?" : "\n<Answer>:");
    return p;
}

// Writes one UTF-8 text file per prompt, named by position.
inline void export_prompts(const std::filesystem::path& dir, std::span<const Prompt> prompts) {
    std::filesystem::create_directories(dir);
    for (std::size_t i = 0; i < prompts.size(); ++i) {
        const auto path = dir / ("prompt_" + std::to_string(i) + ".txt");
        std::ofstream out(path, std::ios::binary);
        if (!out) throw IoError("cannot write " + path.string());
        out << prompts[i].text() << '\n';
    }
}

}  // namespace healthprompt
