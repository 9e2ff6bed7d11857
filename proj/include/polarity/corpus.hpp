#pragma once

// Text ingestion: tokenization, vocabularies, sentence streams, labeled
// polarity datasets and negation-marker statistics.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "polarity/unicode.hpp"

namespace polarity {

using Tokens = std::vector<std::string>;
using WordId = std::int32_t;
using IdSeq = std::vector<WordId>;

/// Raised for malformed input files; carries the 1-based line number.
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& source, std::size_t line, const std::string& what)
        : std::runtime_error(source + ":" + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

// ---------------------------------------------------------------------------
// Tokenizer
//
// Lowercases, splits on whitespace and detaches every punctuation character
// as its own token. An apostrophe between two word characters stays inside
// the word, so "don't" and "n't" survive as single tokens.

inline Tokens tokenize(std::string_view line)
{
    const auto cps = unicode::decode(line);
    Tokens out;
    std::string cur;
    auto flush = [&] {
        if (!cur.empty()) {
            out.push_back(std::move(cur));
            cur.clear();
        }
    };
    auto is_word = [](char32_t c) {
        return !unicode::is_space(c) && !unicode::is_punct(c);
    };
    for (std::size_t i = 0; i < cps.size(); ++i) {
        const char32_t c = cps[i];
        if (unicode::is_space(c)) {
            flush();
        } else if (unicode::is_apostrophe(c) && !cur.empty() && i + 1 < cps.size() && is_word(cps[i + 1])) {
            unicode::append_utf8(cur, c);
        } else if (unicode::is_punct(c)) {
            flush();
            std::string p;
            unicode::append_utf8(p, c);
            out.push_back(std::move(p));
        } else {
            unicode::append_utf8(cur, unicode::to_lower(c));
        }
    }
    flush();
    return out;
}

inline std::string join(const Tokens& tokens, std::string_view sep = " ")
{
    std::string s;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (i)
            s += sep;
        s += tokens[i];
    }
    return s;
}

/// 64-bit FNV-1a, used for content fingerprints (vocabularies, files).
class Fnv1a {
public:
    void update(std::string_view s) noexcept
    {
        for (unsigned char c : s) {
            h_ ^= c;
            h_ *= 0x100000001b3ULL;
        }
    }
    void update(std::uint64_t v) noexcept
    {
        for (int i = 0; i < 8; ++i) {
            h_ ^= (v >> (8 * i)) & 0xff;
            h_ *= 0x100000001b3ULL;
        }
    }
    std::uint64_t digest() const noexcept { return h_; }
    std::string hex() const
    {
        std::ostringstream os;
        os << std::hex << std::setw(16) << std::setfill('0') << h_;
        return os.str();
    }

private:
    std::uint64_t h_ = 0xcbf29ce484222325ULL;
};

// ---------------------------------------------------------------------------
// Raw corpora: one sentence per line, a blank line ends a document.

struct TextCorpus {
    std::vector<std::vector<Tokens>> documents;

    std::size_t sentence_count() const
    {
        std::size_t n = 0;
        for (const auto& d : documents)
            n += d.size();
        return n;
    }
};

inline TextCorpus read_corpus(std::istream& in)
{
    TextCorpus corpus;
    std::vector<Tokens> doc;
    std::string line;
    while (std::getline(in, line)) {
        auto tokens = tokenize(line);
        if (tokens.empty()) {
            if (!doc.empty())
                corpus.documents.push_back(std::move(doc));
            doc.clear();
            continue;
        }
        doc.push_back(std::move(tokens));
    }
    if (!doc.empty())
        corpus.documents.push_back(std::move(doc));
    return corpus;
}

inline TextCorpus read_corpus_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open corpus file '" + path + "'");
    return read_corpus(in);
}

// ---------------------------------------------------------------------------
// Vocabulary

class Vocabulary {
public:
    struct Entry {
        std::string word;
        std::uint64_t count;
        friend bool operator==(const Entry&, const Entry&) = default;
    };

    Vocabulary() = default;

    /// Entries must already be in id order; counts are trusted.
    explicit Vocabulary(std::vector<Entry> entries, std::uint64_t min_count = 1)
        : entries_(std::move(entries)), min_count_(min_count)
    {
        index_.reserve(entries_.size());
        for (std::size_t i = 0; i < entries_.size(); ++i) {
            if (entries_[i].count < min_count_)
                throw std::invalid_argument("Vocabulary: entry '" + entries_[i].word + "' below min_count");
            if (!index_.emplace(entries_[i].word, static_cast<WordId>(i)).second)
                throw std::invalid_argument("Vocabulary: duplicate word '" + entries_[i].word + "'");
            total_ += entries_[i].count;
        }
    }

    std::size_t size() const noexcept { return entries_.size(); }
    bool empty() const noexcept { return entries_.empty(); }
    std::uint64_t min_count() const noexcept { return min_count_; }
    std::uint64_t total_count() const noexcept { return total_; }

    const std::vector<Entry>& entries() const noexcept { return entries_; }
    const std::string& word(WordId id) const { return entries_.at(static_cast<std::size_t>(id)).word; }
    std::uint64_t count(WordId id) const { return entries_.at(static_cast<std::size_t>(id)).count; }

    std::optional<WordId> find(std::string_view w) const
    {
        auto it = index_.find(std::string(w));
        if (it == index_.end())
            return std::nullopt;
        return it->second;
    }

    bool contains(WordId id) const noexcept { return id >= 0 && static_cast<std::size_t>(id) < entries_.size(); }

    /// In-vocabulary ids of `tokens`, OOV tokens skipped.
    IdSeq ids(const Tokens& tokens) const
    {
        IdSeq out;
        out.reserve(tokens.size());
        for (const auto& t : tokens)
            if (auto id = find(t))
                out.push_back(*id);
        return out;
    }

    std::string fingerprint() const
    {
        Fnv1a h;
        for (const auto& e : entries_) {
            h.update(e.word);
            h.update(std::string_view("\0", 1));
            h.update(e.count);
        }
        return h.hex();
    }

    void write_tsv(std::ostream& os) const
    {
        for (const auto& e : entries_)
            os << e.word << '\t' << e.count << '\n';
    }

    friend bool operator==(const Vocabulary& a, const Vocabulary& b) { return a.entries_ == b.entries_; }

private:
    std::vector<Entry> entries_;
    std::unordered_map<std::string, WordId> index_;
    std::uint64_t min_count_ = 1;
    std::uint64_t total_ = 0;
};

/// Words with frequency >= min_count, ids by descending count, ties
/// broken lexicographically (byte order).
inline Vocabulary build_vocabulary(const TextCorpus& corpus, std::uint64_t min_count)
{
    if (min_count < 1)
        throw std::invalid_argument("build_vocabulary: min_count must be >= 1");
    std::unordered_map<std::string, std::uint64_t> counts;
    for (const auto& doc : corpus.documents)
        for (const auto& sent : doc)
            for (const auto& tok : sent)
                ++counts[tok];
    std::vector<Vocabulary::Entry> entries;
    for (auto& [w, c] : counts)
        if (c >= min_count)
            entries.push_back({w, c});
    if (entries.empty())
        throw std::invalid_argument("build_vocabulary: no word reaches min_count " + std::to_string(min_count));
    std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
        return a.count != b.count ? a.count > b.count : a.word < b.word;
    });
    return Vocabulary(std::move(entries), min_count);
}

// ---------------------------------------------------------------------------
// Id-mapped sentence stream. OOV tokens are dropped; sentences left empty
// are dropped. Document boundaries and sentence order are preserved, and
// every kept sentence receives a stable id in reading order.

class SentenceStream {
public:
    SentenceStream() = default;

    SentenceStream(const TextCorpus& corpus, const Vocabulary& vocab)
    {
        for (const auto& doc : corpus.documents) {
            std::vector<std::size_t> ids;
            for (const auto& sent : doc) {
                auto seq = vocab.ids(sent);
                if (seq.empty())
                    continue;
                ids.push_back(sentences_.size());
                sentences_.push_back(std::move(seq));
            }
            if (!ids.empty())
                documents_.push_back(std::move(ids));
        }
    }

    /// Builds a stream directly from id sequences, one document per entry.
    explicit SentenceStream(const std::vector<std::vector<IdSeq>>& docs)
    {
        for (const auto& doc : docs) {
            std::vector<std::size_t> ids;
            for (const auto& s : doc) {
                ids.push_back(sentences_.size());
                sentences_.push_back(s);
            }
            documents_.push_back(std::move(ids));
        }
    }

    std::size_t num_sentences() const noexcept { return sentences_.size(); }
    std::size_t num_documents() const noexcept { return documents_.size(); }
    bool empty() const noexcept { return sentences_.empty(); }

    const IdSeq& sentence(std::size_t id) const { return sentences_.at(id); }
    const std::vector<IdSeq>& sentences() const noexcept { return sentences_; }
    /// Sentence ids of each document, in order.
    const std::vector<std::vector<std::size_t>>& documents() const noexcept { return documents_; }

    std::size_t num_tokens() const
    {
        std::size_t n = 0;
        for (const auto& s : sentences_)
            n += s.size();
        return n;
    }

private:
    std::vector<IdSeq> sentences_;
    std::vector<std::vector<std::size_t>> documents_;
};

/// Keep probability of one occurrence of a word under frequency
/// subsampling: min(1, sqrt(threshold / frequency)). A threshold <= 0
/// disables subsampling.
inline double subsample_keep_probability(double word_frequency, double threshold)
{
    if (threshold <= 0)
        return 1.0;
    if (!(word_frequency > 0 && word_frequency <= 1))
        throw std::invalid_argument("subsample_keep_probability: frequency must be in (0, 1]");
    return std::min(1.0, std::sqrt(threshold / word_frequency));
}

/// Per-id keep probabilities for a vocabulary.
inline std::vector<double> keep_probabilities(const Vocabulary& vocab, double threshold)
{
    std::vector<double> keep(vocab.size(), 1.0);
    if (threshold <= 0)
        return keep;
    const double total = static_cast<double>(vocab.total_count());
    for (std::size_t i = 0; i < vocab.size(); ++i)
        keep[i] = subsample_keep_probability(static_cast<double>(vocab.entries()[i].count) / total, threshold);
    return keep;
}

// ---------------------------------------------------------------------------
// Labeled polarity data

enum class Polarity : int { negative = 0, positive = 1 };
inline constexpr std::array<Polarity, 2> all_polarities{Polarity::negative, Polarity::positive};

inline std::string_view to_string(Polarity p) { return p == Polarity::positive ? "positive" : "negative"; }

inline std::optional<Polarity> parse_polarity(std::string_view s)
{
    if (s == "positive")
        return Polarity::positive;
    if (s == "negative")
        return Polarity::negative;
    return std::nullopt;
}

inline int class_index(Polarity p) { return static_cast<int>(p); }

enum class Split { train, test };

struct LabeledExample {
    Tokens tokens;
    Polarity label;
};

struct LabeledDataset {
    std::vector<LabeledExample> examples;
    Split split = Split::train;
    std::size_t discarded = 0;  // rows dropped by the majority rule

    std::size_t size() const noexcept { return examples.size(); }
    std::size_t count(Polarity p) const
    {
        return static_cast<std::size_t>(
            std::count_if(examples.begin(), examples.end(), [p](const auto& e) { return e.label == p; }));
    }
};

namespace detail {

inline std::string_view trim(std::string_view s)
{
    while (!s.empty() && (s.front() == ' ' || s.front() == '\r' || s.front() == '\t'))
        s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\r' || s.back() == '\t'))
        s.remove_suffix(1);
    return s;
}

}  // namespace detail

/// Overall polarity from aspect labels: the majority of positive vs
/// negative votes. Neutral labels never vote; ties and all-neutral rows
/// yield nullopt.
inline std::optional<Polarity> majority_polarity(const std::vector<std::string>& aspect_labels)
{
    int pos = 0, neg = 0;
    for (const auto& l : aspect_labels) {
        if (l == "positive")
            ++pos;
        else if (l == "negative")
            ++neg;
    }
    if (pos == neg)
        return std::nullopt;
    return pos > neg ? Polarity::positive : Polarity::negative;
}

/// Parses `text<TAB>label1[,label2,...]` rows. Blank lines are skipped.
inline LabeledDataset parse_labeled_dataset(std::istream& in, Split split, const std::string& source = "<stream>")
{
    LabeledDataset ds;
    ds.split = split;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (detail::trim(line).empty())
            continue;
        const auto tab = line.rfind('\t');
        if (tab == std::string::npos)
            throw ParseError(source, lineno, "expected text<TAB>labels");
        const std::string_view text(line.data(), tab);
        const std::string_view label_field = detail::trim(std::string_view(line).substr(tab + 1));
        if (label_field.empty())
            throw ParseError(source, lineno, "missing label");
        std::vector<std::string> labels;
        std::size_t start = 0;
        while (start <= label_field.size()) {
            auto comma = label_field.find(',', start);
            if (comma == std::string_view::npos)
                comma = label_field.size();
            auto lab = std::string(detail::trim(label_field.substr(start, comma - start)));
            if (lab != "positive" && lab != "negative" && lab != "neutral")
                throw ParseError(source, lineno, "unknown label '" + lab + "'");
            labels.push_back(std::move(lab));
            start = comma + 1;
        }
        auto tokens = tokenize(text);
        if (tokens.empty())
            throw ParseError(source, lineno, "empty text");
        auto label = majority_polarity(labels);
        if (!label) {
            ++ds.discarded;
            continue;
        }
        ds.examples.push_back({std::move(tokens), *label});
    }
    return ds;
}

inline LabeledDataset load_labeled_dataset(const std::string& path, Split split, std::string_view format = "tsv")
{
    if (format != "tsv")
        throw std::invalid_argument("load_labeled_dataset: unsupported format '" + std::string(format) + "'");
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open dataset file '" + path + "'");
    return parse_labeled_dataset(in, split, path);
}

inline void write_labeled_dataset(std::ostream& os, const LabeledDataset& ds)
{
    for (const auto& ex : ds.examples)
        os << join(ex.tokens) << '\t' << to_string(ex.label) << '\n';
}

// ---------------------------------------------------------------------------
// Negation markers

class NegationLexicon {
public:
    void add_word(std::string_view w) { add_checked(words_, w); }
    void add_prefix(std::string_view p) { add_checked(prefixes_, p); }
    void add_suffix(std::string_view s) { add_checked(suffixes_, s); }

    /// One entry: `word`, `prefix:<string>` or `suffix:<string>`.
    void add_entry(std::string_view entry)
    {
        if (entry.starts_with("prefix:"))
            add_prefix(entry.substr(7));
        else if (entry.starts_with("suffix:"))
            add_suffix(entry.substr(7));
        else
            add_word(entry);
    }

    bool is_marker(const std::string& token) const
    {
        if (std::find(words_.begin(), words_.end(), token) != words_.end())
            return true;
        for (const auto& p : prefixes_)
            if (token.starts_with(p))
                return true;
        for (const auto& s : suffixes_)
            if (token.ends_with(s))
                return true;
        return false;
    }

    std::size_t count_markers(const Tokens& tokens) const
    {
        return static_cast<std::size_t>(
            std::count_if(tokens.begin(), tokens.end(), [this](const auto& t) { return is_marker(t); }));
    }

    const std::vector<std::string>& words() const noexcept { return words_; }
    const std::vector<std::string>& prefixes() const noexcept { return prefixes_; }
    const std::vector<std::string>& suffixes() const noexcept { return suffixes_; }

private:
    static void add_checked(std::vector<std::string>& into, std::string_view raw)
    {
        auto norm = unicode::lowercase(detail::trim(raw));
        if (norm.empty())
            throw std::invalid_argument("NegationLexicon: empty pattern");
        if (std::find(into.begin(), into.end(), norm) == into.end())
            into.push_back(std::move(norm));
    }

    std::vector<std::string> words_;
    std::vector<std::string> prefixes_;
    std::vector<std::string> suffixes_;
};

/// One entry per line; blank lines and lines starting with '#' ignored.
inline NegationLexicon parse_lexicon(std::istream& in, const std::string& source = "<stream>")
{
    NegationLexicon lex;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto t = detail::trim(line);
        if (t.empty() || t.front() == '#')
            continue;
        try {
            lex.add_entry(t);
        } catch (const std::invalid_argument& e) {
            throw ParseError(source, lineno, e.what());
        }
    }
    return lex;
}

inline NegationLexicon load_lexicon(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open lexicon file '" + path + "'");
    return parse_lexicon(in, path);
}

/// Percentages of sentences per class with 0, 1 and >= 2 negation markers.
struct NegationStats {
    static constexpr std::array<std::string_view, 3> bucket_names{"0", "1", ">=2"};

    std::array<std::array<double, 3>, 2> percent{};  // [class][bucket]
    std::array<std::array<std::size_t, 3>, 2> counts{};
    std::array<std::size_t, 2> class_sizes{};

    double at_least_one(Polarity p) const
    {
        const auto& row = percent[static_cast<std::size_t>(class_index(p))];
        return row[1] + row[2];
    }

    void write_tsv(std::ostream& os) const
    {
        os << "class\tbucket\tpercentage\n";
        for (Polarity p : all_polarities) {
            const auto c = static_cast<std::size_t>(class_index(p));
            for (std::size_t b = 0; b < 3; ++b) {
                std::ostringstream v;
                v << std::fixed << std::setprecision(4) << percent[c][b];
                os << to_string(p) << '\t' << bucket_names[b] << '\t' << v.str() << '\n';
            }
        }
    }
};

inline NegationStats negation_stats(const LabeledDataset& ds, const NegationLexicon& lexicon)
{
    if (ds.examples.empty())
        throw std::invalid_argument("negation_stats: empty dataset");
    NegationStats st;
    for (const auto& ex : ds.examples) {
        const auto c = static_cast<std::size_t>(class_index(ex.label));
        const auto n = lexicon.count_markers(ex.tokens);
        ++st.counts[c][std::min<std::size_t>(n, 2)];
        ++st.class_sizes[c];
    }
    for (Polarity p : all_polarities) {
        const auto c = static_cast<std::size_t>(class_index(p));
        if (st.class_sizes[c] == 0)
            throw std::invalid_argument("negation_stats: class '" + std::string(to_string(p)) + "' is empty");
        for (std::size_t b = 0; b < 3; ++b)
            st.percent[c][b] = 100.0 * static_cast<double>(st.counts[c][b]) / static_cast<double>(st.class_sizes[c]);
    }
    return st;
}

}  // namespace polarity
