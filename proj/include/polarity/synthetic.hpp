#pragma once

// Generated sentiment corpus with a known answer.
//
// Word classes: positive words ("good0".."goodN"), negative words
// ("bad0".."badN"), fillers ("w000"..), and one negation word. A labeled
// sentence carries exactly one sentiment word; when the negation word stands
// right before it, the sentence takes the opposite polarity. Negation is
// more frequent in negative sentences, so the negative class has the higher
// share of sentences with at least one marker.
//
// Unlabeled sentences are grouped into documents with a mood. Each mood has
// its own filler pool, so sentiment words of one polarity share contexts and
// cluster under any distributional encoder. Labeled sentences use only the
// neutral filler pool.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "polarity/corpus.hpp"
#include "polarity/numerics.hpp"

namespace polarity {

struct SyntheticConfig {
    std::size_t sentiment_words = 30;  // per polarity
    std::size_t mood_fillers = 100;    // per polarity
    std::size_t neutral_fillers = 220;
    std::size_t unlabeled_sentences = 2000;
    std::size_t labeled_sentences = 400;
    std::size_t sentences_per_document = 10;
    double test_fraction = 0.25;
    std::size_t min_length = 4;  // tokens, including the sentiment phrase
    std::size_t max_length = 8;
    double negated_in_negative = 0.3;
    double negated_in_positive = 0.05;
    double negated_in_unlabeled = 0.1;
    std::size_t extra_sentiment_unlabeled = 1;  // further mood words per unlabeled sentence
    std::string negation = "not";

    void validate() const
    {
        if (sentiment_words == 0 || neutral_fillers == 0 || mood_fillers == 0)
            throw std::invalid_argument("SyntheticConfig: word pools must be non-empty");
        if (min_length < 3 || max_length < min_length)
            throw std::invalid_argument("SyntheticConfig: need 3 <= min_length <= max_length");
        if (!(test_fraction > 0 && test_fraction < 1))
            throw std::invalid_argument("SyntheticConfig: test_fraction must lie in (0, 1)");
        if (sentences_per_document == 0 || labeled_sentences < 4)
            throw std::invalid_argument("SyntheticConfig: need documents and at least 4 labeled sentences");
    }

    std::size_t vocabulary_size() const { return 2 * sentiment_words + 2 * mood_fillers + neutral_fillers + 1; }
};

struct SyntheticData {
    TextCorpus unlabeled;
    LabeledDataset train;
    LabeledDataset test;
    NegationLexicon lexicon;
    std::vector<std::string> positive_words;
    std::vector<std::string> negative_words;
};

namespace detail {

inline std::vector<std::string> numbered(const std::string& stem, std::size_t n, int width)
{
    std::vector<std::string> out;
    for (std::size_t i = 0; i < n; ++i) {
        auto digits = std::to_string(i);
        if (static_cast<int>(digits.size()) < width)
            digits.insert(0, static_cast<std::size_t>(width) - digits.size(), '0');
        out.push_back(stem + digits);
    }
    return out;
}

inline const std::string& pick(const std::vector<std::string>& pool, SeededRng& rng)
{
    return pool[rng.below(pool.size())];
}

}  // namespace detail

inline SyntheticData make_synthetic(const SyntheticConfig& cfg, SeededRng& rng)
{
    cfg.validate();
    SyntheticData data;
    data.positive_words = detail::numbered("good", cfg.sentiment_words, 0);
    data.negative_words = detail::numbered("bad", cfg.sentiment_words, 0);
    const auto fillers = detail::numbered("w", 2 * cfg.mood_fillers + cfg.neutral_fillers, 3);
    const std::vector<std::string> pos_mood(fillers.begin(), fillers.begin() + static_cast<std::ptrdiff_t>(cfg.mood_fillers));
    const std::vector<std::string> neg_mood(fillers.begin() + static_cast<std::ptrdiff_t>(cfg.mood_fillers),
                                            fillers.begin() + static_cast<std::ptrdiff_t>(2 * cfg.mood_fillers));
    const std::vector<std::string> neutral(fillers.begin() + static_cast<std::ptrdiff_t>(2 * cfg.mood_fillers),
                                           fillers.end());
    data.lexicon.add_word(cfg.negation);

    // A sentence of the requested polarity: fillers with the sentiment
    // phrase ("word" or "not word") inserted at a random position.
    auto sentence = [&](Polarity p, bool negated, const std::vector<std::string>& mood, double mood_share) {
        const auto len = cfg.min_length + rng.below(cfg.max_length - cfg.min_length + 1);
        const bool word_positive = (p == Polarity::positive) != negated;
        const auto& word = detail::pick(word_positive ? data.positive_words : data.negative_words, rng);
        const std::size_t phrase = negated ? 2 : 1;
        Tokens t;
        for (std::size_t i = 0; i + phrase < len; ++i)
            t.push_back(rng.bernoulli(mood_share) ? detail::pick(mood, rng) : detail::pick(neutral, rng));
        const auto at = static_cast<std::ptrdiff_t>(rng.below(t.size() + 1));
        t.insert(t.begin() + at, word);
        if (negated)
            t.insert(t.begin() + at, cfg.negation);
        return t;
    };

    std::vector<Tokens> doc;
    Polarity mood = Polarity::positive;
    for (std::size_t s = 0; s < cfg.unlabeled_sentences; ++s) {
        if (s % cfg.sentences_per_document == 0) {
            if (!doc.empty())
                data.unlabeled.documents.push_back(std::move(doc));
            doc.clear();
            mood = rng.bernoulli(0.5) ? Polarity::positive : Polarity::negative;
        }
        const auto& pool = mood == Polarity::positive ? pos_mood : neg_mood;
        auto t = sentence(mood, rng.bernoulli(cfg.negated_in_unlabeled), pool, 0.5);
        for (std::size_t k = 0; k < cfg.extra_sentiment_unlabeled; ++k)
            t.insert(t.begin() + static_cast<std::ptrdiff_t>(rng.below(t.size() + 1)),
                     detail::pick(mood == Polarity::positive ? data.positive_words : data.negative_words, rng));
        doc.push_back(std::move(t));
    }
    if (!doc.empty())
        data.unlabeled.documents.push_back(std::move(doc));

    const auto n_test = std::max<std::size_t>(
        2, static_cast<std::size_t>(static_cast<double>(cfg.labeled_sentences) * cfg.test_fraction));
    for (std::size_t i = 0; i < cfg.labeled_sentences; ++i) {
        const auto p = i % 2 == 0 ? Polarity::positive : Polarity::negative;
        const bool negated =
            rng.bernoulli(p == Polarity::positive ? cfg.negated_in_positive : cfg.negated_in_negative);
        auto& split = i < cfg.labeled_sentences - n_test ? data.train : data.test;
        split.examples.push_back({sentence(p, negated, neutral, 0.0), p});
    }
    return data;
}

/// Writes corpus.txt, train.tsv, test.tsv and lexicon.txt into `dir`.
inline void write_synthetic(const SyntheticData& data, const std::filesystem::path& dir)
{
    std::filesystem::create_directories(dir);
    auto open = [&](const char* name) {
        std::ofstream os(dir / name, std::ios::binary);
        if (!os)
            throw std::runtime_error("cannot write '" + (dir / name).string() + "'");
        return os;
    };
    {
        auto os = open("corpus.txt");
        for (std::size_t d = 0; d < data.unlabeled.documents.size(); ++d) {
            if (d)
                os << '\n';
            for (const auto& s : data.unlabeled.documents[d])
                os << join(s) << '\n';
        }
    }
    {
        auto os = open("train.tsv");
        write_labeled_dataset(os, data.train);
    }
    {
        auto os = open("test.tsv");
        write_labeled_dataset(os, data.test);
    }
    {
        auto os = open("lexicon.txt");
        os << "# negation markers of the generated corpus\n";
        for (const auto& w : data.lexicon.words())
            os << w << '\n';
    }
}

}  // namespace polarity
