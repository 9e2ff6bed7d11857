#pragma once

// Skip-gram with negative sampling and additive sentence composition.

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

#include "polarity/corpus.hpp"
#include "polarity/encoding.hpp"
#include "polarity/numerics.hpp"

namespace polarity {

struct SgnsConfig {
    std::size_t dim = 300;
    std::size_t window = 10;
    std::size_t negatives = 5;
    std::size_t epochs = 10;
    double lr = 0.025;
    bool lr_decay = false;
    double threshold = 1e-5;  // subsampling; <= 0 disables
    double noise_power = 0.75;

    void validate() const
    {
        if (dim == 0 || window == 0 || negatives == 0)
            throw std::invalid_argument("SgnsConfig: dim, window and negatives must be >= 1");
        if (!(lr > 0))
            throw std::invalid_argument("SgnsConfig: lr must be positive");
    }
};

template <typename Real = double>
struct SgnsModel {
    Vocabulary vocab;
    SgnsConfig config;
    Matrix<Real> w_in;   // V x d, the word vectors
    Matrix<Real> w_out;  // V x d, context vectors

    std::size_t dim() const noexcept { return w_in.cols(); }
};

/// Draws word ids from unigram counts raised to `power`.
class NoiseSampler {
public:
    NoiseSampler() = default;
    NoiseSampler(const Vocabulary& vocab, double power)
    {
        if (vocab.empty())
            throw std::invalid_argument("NoiseSampler: empty vocabulary");
        cdf_.reserve(vocab.size());
        double acc = 0;
        for (const auto& e : vocab.entries()) {
            acc += std::pow(static_cast<double>(e.count), power);
            cdf_.push_back(acc);
        }
        for (double& c : cdf_)
            c /= acc;
        cdf_.back() = 1.0;
    }

    double probability(WordId id) const
    {
        const auto i = static_cast<std::size_t>(id);
        return i == 0 ? cdf_[0] : cdf_[i] - cdf_[i - 1];
    }

    WordId sample(SeededRng& rng) const
    {
        const double u = rng.uniform();
        auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
        if (it == cdf_.end())
            --it;
        return static_cast<WordId>(it - cdf_.begin());
    }

    std::size_t size() const noexcept { return cdf_.size(); }

private:
    std::vector<double> cdf_;
};

template <typename Real>
struct RowGradient {
    WordId id;
    std::vector<Real> grad;
};

template <typename Real>
struct SgnsPairResult {
    Real loss = 0;
    std::vector<Real> d_in;                   // gradient of W_in[w]
    std::vector<RowGradient<Real>> d_out;     // gradients of touched W_out rows, distinct ids
};

namespace detail {

template <typename Real>
std::vector<Real>& row_grad(std::vector<RowGradient<Real>>& rows, WordId id, std::size_t dim)
{
    for (auto& r : rows)
        if (r.id == id)
            return r.grad;
    rows.push_back({id, std::vector<Real>(dim, Real(0))});
    return rows.back().grad;
}

inline void check_id(std::size_t vocab_size, WordId id, const char* who)
{
    if (id < 0 || static_cast<std::size_t>(id) >= vocab_size)
        throw std::out_of_range(std::string(who) + ": word id " + std::to_string(id) + " out of range");
}

}  // namespace detail

/// Negative-sampling log loss for one (word, context) pair:
///   -log s(in_w . out_c) - sum_n log s(-in_w . out_n)
template <typename Real>
SgnsPairResult<Real> sgns_pair_loss(const SgnsModel<Real>& model, WordId w, WordId c, const std::vector<WordId>& negs)
{
    const std::size_t V = model.w_in.rows();
    const std::size_t d = model.dim();
    detail::check_id(V, w, "sgns_pair_loss");
    detail::check_id(V, c, "sgns_pair_loss");
    for (WordId n : negs)
        detail::check_id(V, n, "sgns_pair_loss");

    SgnsPairResult<Real> res;
    res.d_in.assign(d, Real(0));
    const auto in = model.w_in.row(static_cast<std::size_t>(w));

    auto accumulate = [&](WordId target, Real label) {
        const auto out = model.w_out.row(static_cast<std::size_t>(target));
        const Real score = dot(in, out);
        // label 1: -log s(x), label 0: -log s(-x)
        const Real x = label > 0 ? score : -score;
        res.loss -= log_sigmoid(x);
        const Real g = sigmoid(score) - label;  // d loss / d score
        axpy(g, out, std::span<Real>(res.d_in));
        axpy(g, in, std::span<Real>(detail::row_grad(res.d_out, target, d)));
    };
    accumulate(c, Real(1));
    for (WordId n : negs)
        accumulate(n, Real(0));
    return res;
}

template <typename Real>
void apply_pair_update(SgnsModel<Real>& model, WordId w, const SgnsPairResult<Real>& res, Real lr)
{
    axpy(-lr, std::span<const Real>(res.d_in), model.w_in.row(static_cast<std::size_t>(w)));
    for (const auto& r : res.d_out)
        axpy(-lr, std::span<const Real>(r.grad), model.w_out.row(static_cast<std::size_t>(r.id)));
}

/// Fresh model: word2vec-style init, W_in uniform in +-0.5/d, W_out zero.
template <typename Real = double>
SgnsModel<Real> init_sgns(const Vocabulary& vocab, const SgnsConfig& config, SeededRng& rng)
{
    config.validate();
    if (vocab.empty())
        throw std::invalid_argument("init_sgns: empty vocabulary");
    SgnsModel<Real> m;
    m.vocab = vocab;
    m.config = config;
    m.w_in = uniform_init<Real>(vocab.size(), config.dim, 0.5 / static_cast<double>(config.dim), rng);
    m.w_out = Matrix<Real>(vocab.size(), config.dim);
    return m;
}

namespace detail {

/// Visits every training pair of one pass, with subsampling and negatives
/// drawn from `rng`. visit(w, c, negs) returns the pair loss.
template <typename Visit>
double for_each_sgns_pair(const SentenceStream& stream, const std::vector<double>& keep, const NoiseSampler& noise,
                          const SgnsConfig& cfg, SeededRng& rng, Visit&& visit, std::size_t* pair_count = nullptr)
{
    double total = 0;
    std::size_t pairs = 0;
    IdSeq kept;
    std::vector<WordId> negs(cfg.negatives);
    for (const auto& sent : stream.sentences()) {
        kept.clear();
        for (WordId id : sent)
            if (keep[static_cast<std::size_t>(id)] >= 1.0 || rng.uniform() < keep[static_cast<std::size_t>(id)])
                kept.push_back(id);
        const auto n = static_cast<std::ptrdiff_t>(kept.size());
        const auto win = static_cast<std::ptrdiff_t>(cfg.window);
        for (std::ptrdiff_t i = 0; i < n; ++i) {
            for (std::ptrdiff_t j = std::max<std::ptrdiff_t>(0, i - win); j <= std::min(n - 1, i + win); ++j) {
                if (j == i)
                    continue;
                for (auto& neg : negs)
                    neg = noise.sample(rng);
                total += visit(kept[static_cast<std::size_t>(i)], kept[static_cast<std::size_t>(j)], negs);
                ++pairs;
            }
        }
    }
    if (pair_count)
        *pair_count = pairs;
    return pairs ? total / static_cast<double>(pairs) : 0.0;
}

/// Number of (word, context) pairs in one pass without subsampling.
inline std::size_t count_window_pairs(const SentenceStream& stream, std::size_t window)
{
    std::size_t total = 0;
    for (const auto& s : stream.sentences()) {
        const auto n = s.size();
        for (std::size_t i = 0; i < n; ++i) {
            const auto lo = i >= window ? i - window : 0;
            const auto hi = std::min(n - 1, i + window);
            total += hi - lo;
        }
    }
    return total;
}

}  // namespace detail

/// Mean pair loss over one pass of the stream, no updates.
template <typename Real>
double sgns_stream_loss(const SgnsModel<Real>& model, const SentenceStream& stream, SeededRng& rng)
{
    const NoiseSampler noise(model.vocab, model.config.noise_power);
    const auto keep = keep_probabilities(model.vocab, model.config.threshold);
    return detail::for_each_sgns_pair(stream, keep, noise, model.config, rng,
                                      [&](WordId w, WordId c, const std::vector<WordId>& negs) {
                                          return static_cast<double>(sgns_pair_loss(model, w, c, negs).loss);
                                      });
}

template <typename Real = double>
SgnsModel<Real> train_sgns(const SentenceStream& stream, const Vocabulary& vocab, const SgnsConfig& config,
                           SeededRng& rng, TrainingLog* log = nullptr)
{
    if (vocab.empty())
        throw std::invalid_argument("train_sgns: empty vocabulary");
    if (stream.empty())
        throw std::invalid_argument("train_sgns: empty sentence stream");
    auto model = init_sgns<Real>(vocab, config, rng);
    const NoiseSampler noise(vocab, config.noise_power);
    const auto keep = keep_probabilities(vocab, config.threshold);

    if (log) {
        SeededRng eval_rng(derive_seed(rng.seed(), 0xe7a1));
        log->initial_loss = sgns_stream_loss(model, stream, eval_rng);
        log->epoch_loss.clear();
    }

    const double total_steps =
        static_cast<double>(std::max<std::size_t>(1, config.epochs * detail::count_window_pairs(stream, config.window)));
    double step = 0;
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        const double mean = detail::for_each_sgns_pair(
            stream, keep, noise, config, rng, [&](WordId w, WordId c, const std::vector<WordId>& negs) {
                double lr = config.lr;
                if (config.lr_decay)
                    lr = std::max(config.lr * 1e-4, config.lr * (1.0 - step / total_steps));
                step += 1;
                auto res = sgns_pair_loss(model, w, c, negs);
                apply_pair_update(model, w, res, static_cast<Real>(lr));
                return static_cast<double>(res.loss);
            });
        if (log)
            log->epoch_loss.push_back(mean);
    }
    return model;
}

/// Sum of W_in rows over in-vocabulary tokens; OOV tokens are skipped.
/// Rows are added in ascending id order, so the result is bit-identical
/// for every permutation of the tokens.
template <typename Real>
Encoding<Real> encode_additive(const SgnsModel<Real>& model, const Tokens& tokens)
{
    return detail::sum_rows(model.w_in, model.vocab, tokens);
}

}  // namespace polarity
