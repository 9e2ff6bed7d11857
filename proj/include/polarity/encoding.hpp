#pragma once

#include <algorithm>
#include <cstddef>
#include <string_view>
#include <vector>

#include "polarity/corpus.hpp"
#include "polarity/numerics.hpp"

namespace polarity {

/// A sentence vector plus bookkeeping about the words that produced it.
template <typename Real = double>
struct Encoding {
    std::vector<Real> vector;
    std::size_t in_vocabulary = 0;
    std::size_t out_of_vocabulary = 0;

    /// Set when no token was in the vocabulary and the vector is all zeros.
    bool empty_warning() const noexcept { return in_vocabulary == 0; }
};

/// Per-epoch mean training loss, plus the mean loss of one pass over the
/// data at the initial parameters when requested.
struct TrainingLog {
    double initial_loss = 0;
    std::vector<double> epoch_loss;
};

enum class OutputObjective { softmax, negative_sampling };

inline std::string_view to_string(OutputObjective o)
{
    return o == OutputObjective::softmax ? "softmax" : "negative_sampling";
}

namespace detail {

/// Bag-of-words sum of table rows in canonical (sorted id) order.
template <typename Real>
Encoding<Real> sum_rows(const Matrix<Real>& table, const Vocabulary& vocab, const Tokens& tokens)
{
    Encoding<Real> enc;
    enc.vector.assign(table.cols(), Real(0));
    IdSeq ids;
    for (const auto& t : tokens) {
        if (auto id = vocab.find(t))
            ids.push_back(*id);
        else
            ++enc.out_of_vocabulary;
    }
    std::sort(ids.begin(), ids.end());
    for (WordId id : ids)
        axpy(Real(1), table.row(static_cast<std::size_t>(id)), std::span<Real>(enc.vector));
    enc.in_vocabulary = ids.size();
    return enc;
}

}  // namespace detail

}  // namespace polarity
