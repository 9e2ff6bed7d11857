#pragma once

// Paragraph Vector in its two flavours. DM concatenates the sentence vector
// with the vectors of the k previous words and predicts the next word through
// an output layer (U, b). DBOW predicts each word of the sentence from the
// sentence vector alone, using W as the output table.

#include <algorithm>
#include <stdexcept>
#include <string>
#include <vector>

#include "polarity/corpus.hpp"
#include "polarity/encoding.hpp"
#include "polarity/numerics.hpp"
#include "polarity/sgns.hpp"

namespace polarity {

enum class PvMode { dm, dbow };

inline std::string_view to_string(PvMode m) { return m == PvMode::dm ? "dm" : "dbow"; }

inline PvMode parse_pv_mode(std::string_view s)
{
    if (s == "dm")
        return PvMode::dm;
    if (s == "dbow")
        return PvMode::dbow;
    throw std::invalid_argument("unknown paragraph-vector mode '" + std::string(s) + "' (expected dm or dbow)");
}

struct PvConfig {
    PvMode mode = PvMode::dbow;
    std::size_t dim = 300;
    std::size_t window = 10;  // DM: number of previous words
    std::size_t epochs = 10;
    double lr = 0.025;
    double threshold = 1e-5;  // subsampling; <= 0 disables
    OutputObjective objective = OutputObjective::softmax;
    std::size_t negatives = 5;
    double noise_power = 0.75;

    void validate() const
    {
        if (dim == 0 || (mode == PvMode::dm && window == 0))
            throw std::invalid_argument("PvConfig: dim and window must be >= 1");
        if (!(lr > 0))
            throw std::invalid_argument("PvConfig: lr must be positive");
        if (objective == OutputObjective::negative_sampling && negatives == 0)
            throw std::invalid_argument("PvConfig: negatives must be >= 1");
    }
};

template <typename Real = double>
struct PvModel {
    Vocabulary vocab;
    PvConfig config;
    Matrix<Real> D;  // one row per training sentence
    Matrix<Real> W;  // DM: (V+1) x d input words, last row is the padding word; DBOW: V x d output table
    Matrix<Real> U;  // DM only: V x (1+k)d
    std::vector<Real> b;  // DM only: V

    PvMode mode() const noexcept { return config.mode; }
    std::size_t dim() const noexcept { return D.cols(); }
    std::size_t vocab_size() const noexcept { return vocab.size(); }
    WordId pad_id() const noexcept { return static_cast<WordId>(vocab.size()); }
};

/// Number of trainable scalars. Grows by `dim` per training sentence.
template <typename Real>
std::size_t parameter_count(const PvModel<Real>& m) noexcept
{
    return m.D.size() + m.W.size() + m.U.size() + m.b.size();
}

/// Output-layer gradients are kept as a rank-1 product:
/// d_U = out_scale (x) input and d_b = out_scale for DM, d_W = out_scale (x) doc
/// for DBOW. out_scale is zero for rows the step does not touch.
template <typename Real>
struct PvStepResult {
    Real loss = 0;
    std::vector<Real> d_doc;
    std::vector<RowGradient<Real>> d_words;  // DM window rows, distinct ids
    std::vector<Real> out_scale;
    std::vector<Real> input;  // DM: concatenated input; DBOW: the sentence vector

    Matrix<Real> dense_output_grad() const
    {
        Matrix<Real> g(out_scale.size(), input.size());
        outer_acc(out_scale, input, g);
        return g;
    }
};

namespace detail {

/// Fills res.loss and res.out_scale for logits computed by `score(j)` and
/// returns nothing; the caller turns out_scale into input gradients.
template <typename Real, typename Score>
void output_layer(PvStepResult<Real>& res, std::size_t V, OutputObjective obj, WordId target,
                  const std::vector<WordId>& negs, Score&& score)
{
    res.out_scale.assign(V, Real(0));
    if (obj == OutputObjective::softmax) {
        std::vector<Real> z(V);
        for (std::size_t j = 0; j < V; ++j)
            z[j] = score(j);
        const auto p = softmax(z);
        res.loss = log_sum_exp(std::span<const Real>(z)) - z[static_cast<std::size_t>(target)];
        res.out_scale = p;
        res.out_scale[static_cast<std::size_t>(target)] -= 1;
        return;
    }
    auto term = [&](WordId t, Real label) {
        const Real s = score(static_cast<std::size_t>(t));
        res.loss -= log_sigmoid(label > 0 ? s : -s);
        res.out_scale[static_cast<std::size_t>(t)] += sigmoid(s) - label;
    };
    term(target, Real(1));
    for (WordId n : negs)
        term(n, Real(0));
}

template <typename Real>
void check_pv_ids(const PvModel<Real>& m, WordId target, const std::vector<WordId>& negs, const char* who)
{
    check_id(m.vocab_size(), target, who);
    for (WordId n : negs)
        check_id(m.vocab_size(), n, who);
    if (m.config.objective == OutputObjective::negative_sampling && negs.size() != m.config.negatives)
        throw std::invalid_argument(std::string(who) + ": expected " + std::to_string(m.config.negatives) +
                                    " negatives");
}

template <typename Real>
PvStepResult<Real> dm_step(const PvModel<Real>& m, std::span<const Real> doc, const IdSeq& window, WordId target,
                           const std::vector<WordId>& negs)
{
    if (m.mode() != PvMode::dm)
        throw std::invalid_argument("dm_step_loss: model is not in DM mode");
    const std::size_t k = m.config.window, d = m.dim(), V = m.vocab_size();
    if (window.size() != k)
        throw std::invalid_argument("dm_step_loss: window must hold exactly " + std::to_string(k) + " ids");
    for (WordId w : window)
        check_id(V + 1, w, "dm_step_loss");
    check_pv_ids(m, target, negs, "dm_step_loss");

    PvStepResult<Real> res;
    res.input.reserve((1 + k) * d);
    res.input.insert(res.input.end(), doc.begin(), doc.end());
    for (WordId w : window) {
        const auto r = m.W.row(static_cast<std::size_t>(w));
        res.input.insert(res.input.end(), r.begin(), r.end());
    }
    output_layer(res, V, m.config.objective, target, negs,
                 [&](std::size_t j) { return dot(m.U.row(j), res.input) + m.b[j]; });

    std::vector<Real> d_input((1 + k) * d, Real(0));
    for (std::size_t j = 0; j < V; ++j)
        if (res.out_scale[j] != Real(0))
            axpy(res.out_scale[j], m.U.row(j), d_input);
    res.d_doc.assign(d_input.begin(), d_input.begin() + static_cast<std::ptrdiff_t>(d));
    for (std::size_t p = 0; p < k; ++p) {
        auto& g = row_grad(res.d_words, window[p], d);
        axpy(Real(1), std::span<const Real>(d_input).subspan((1 + p) * d, d), g);
    }
    return res;
}

template <typename Real>
PvStepResult<Real> dbow_step(const PvModel<Real>& m, std::span<const Real> doc, WordId target,
                             const std::vector<WordId>& negs)
{
    if (m.mode() != PvMode::dbow)
        throw std::invalid_argument("dbow_step_loss: model is not in DBOW mode");
    check_pv_ids(m, target, negs, "dbow_step_loss");
    PvStepResult<Real> res;
    res.input.assign(doc.begin(), doc.end());
    output_layer(res, m.vocab_size(), m.config.objective, target, negs,
                 [&](std::size_t j) { return dot(m.W.row(j), res.input); });
    res.d_doc.assign(m.dim(), Real(0));
    for (std::size_t j = 0; j < m.vocab_size(); ++j)
        if (res.out_scale[j] != Real(0))
            axpy(res.out_scale[j], m.W.row(j), res.d_doc);
    return res;
}

inline void check_sentence(std::size_t rows, std::size_t i, const char* who)
{
    if (i >= rows)
        throw std::out_of_range(std::string(who) + ": sentence id " + std::to_string(i) + " out of range");
}

}  // namespace detail

/// One DM prediction: concat(D_i, W[window...]) -> softmax(U x + b)[target].
/// Window ids may use pad_id() for positions before the sentence start.
template <typename Real>
PvStepResult<Real> dm_step_loss(const PvModel<Real>& m, std::size_t i, const IdSeq& window, WordId target,
                                const std::vector<WordId>& negs = {})
{
    detail::check_sentence(m.D.rows(), i, "dm_step_loss");
    return detail::dm_step(m, std::span<const Real>(m.D.row(i)), window, target, negs);
}

/// One DBOW prediction: softmax(W D_i)[target].
template <typename Real>
PvStepResult<Real> dbow_step_loss(const PvModel<Real>& m, std::size_t i, WordId target,
                                  const std::vector<WordId>& negs = {})
{
    detail::check_sentence(m.D.rows(), i, "dbow_step_loss");
    return detail::dbow_step(m, std::span<const Real>(m.D.row(i)), target, negs);
}

/// DM window of the `k` ids preceding position t, left-padded with pad.
inline IdSeq dm_window(const IdSeq& sentence, std::size_t t, std::size_t k, WordId pad)
{
    IdSeq w(k, pad);
    for (std::size_t p = 0; p < k; ++p) {
        const std::size_t back = k - p;
        if (back <= t)
            w[p] = sentence[t - back];
    }
    return w;
}

namespace detail {

template <typename Real>
void apply_output_update(PvModel<Real>& m, const PvStepResult<Real>& res, Real lr)
{
    Matrix<Real>& out = m.mode() == PvMode::dm ? m.U : m.W;
    for (std::size_t j = 0; j < res.out_scale.size(); ++j) {
        if (res.out_scale[j] == Real(0))
            continue;
        axpy(-lr * res.out_scale[j], res.input, out.row(j));
        if (m.mode() == PvMode::dm)
            m.b[j] -= lr * res.out_scale[j];
    }
    for (const auto& g : res.d_words)
        axpy(-lr, g.grad, m.W.row(static_cast<std::size_t>(g.id)));
}

/// Visits every prediction made for one sentence. visit(window, target).
template <typename Visit>
void for_each_pv_target(PvMode mode, const IdSeq& sent, std::size_t k, WordId pad, Visit&& visit)
{
    static const IdSeq no_window;
    for (std::size_t t = 0; t < sent.size(); ++t) {
        if (mode == PvMode::dm)
            visit(dm_window(sent, t, k, pad), sent[t]);
        else
            visit(no_window, sent[t]);
    }
}

template <typename Real>
std::vector<WordId> pv_negatives(const PvModel<Real>& m, const NoiseSampler& noise, SeededRng& rng)
{
    std::vector<WordId> negs;
    if (m.config.objective == OutputObjective::negative_sampling) {
        negs.resize(m.config.negatives);
        for (auto& n : negs)
            n = noise.sample(rng);
    }
    return negs;
}

template <typename Real>
PvStepResult<Real> pv_step(const PvModel<Real>& m, std::span<const Real> doc, const IdSeq& window, WordId target,
                           const std::vector<WordId>& negs)
{
    return m.mode() == PvMode::dm ? dm_step(m, doc, window, target, negs) : dbow_step(m, doc, target, negs);
}

/// One pass over the stream. Updates the model when `lr` > 0; returns the
/// mean step loss.
template <typename Real>
double pv_pass(PvModel<Real>& m, const SentenceStream& stream, const std::vector<double>& keep,
               const NoiseSampler& noise, SeededRng& rng, Real lr)
{
    double total = 0;
    std::size_t steps = 0;
    IdSeq kept;
    for (std::size_t i = 0; i < stream.num_sentences(); ++i) {
        kept.clear();
        for (WordId id : stream.sentence(i))
            if (keep[static_cast<std::size_t>(id)] >= 1.0 || rng.uniform() < keep[static_cast<std::size_t>(id)])
                kept.push_back(id);
        for_each_pv_target(m.mode(), kept, m.config.window, m.pad_id(), [&](const IdSeq& window, WordId target) {
            const auto negs = pv_negatives(m, noise, rng);
            auto res = pv_step(m, std::span<const Real>(m.D.row(i)), window, target, negs);
            total += static_cast<double>(res.loss);
            ++steps;
            if (lr > Real(0)) {
                axpy(-lr, res.d_doc, m.D.row(i));
                apply_output_update(m, res, lr);
            }
        });
    }
    return steps ? total / static_cast<double>(steps) : 0.0;
}

}  // namespace detail

template <typename Real = double>
PvModel<Real> init_pv(const Vocabulary& vocab, std::size_t n_sentences, const PvConfig& config, SeededRng& rng)
{
    config.validate();
    if (vocab.empty())
        throw std::invalid_argument("init_pv: empty vocabulary");
    PvModel<Real> m;
    m.vocab = vocab;
    m.config = config;
    const std::size_t V = vocab.size(), d = config.dim;
    const double bound = 0.5 / static_cast<double>(d);
    m.D = uniform_init<Real>(n_sentences, d, bound, rng);
    if (config.mode == PvMode::dm) {
        m.W = uniform_init<Real>(V + 1, d, bound, rng);
        m.U = Matrix<Real>(V, (1 + config.window) * d);
        m.b.assign(V, Real(0));
    } else {
        m.W = Matrix<Real>(V, d);
    }
    return m;
}

template <typename Real = double>
PvModel<Real> train_pv(const SentenceStream& stream, const Vocabulary& vocab, const PvConfig& config,
                       SeededRng& rng, TrainingLog* log = nullptr)
{
    if (stream.empty())
        throw std::invalid_argument("train_pv: empty sentence stream");
    auto m = init_pv<Real>(vocab, stream.num_sentences(), config, rng);
    const NoiseSampler noise(vocab, config.noise_power);
    const auto keep = keep_probabilities(vocab, config.threshold);
    if (log) {
        SeededRng eval_rng(derive_seed(rng.seed(), 0xe7a1));
        log->initial_loss = detail::pv_pass(m, stream, keep, noise, eval_rng, Real(0));
        log->epoch_loss.clear();
    }
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        const double mean = detail::pv_pass(m, stream, keep, noise, rng, static_cast<Real>(config.lr));
        if (log)
            log->epoch_loss.push_back(mean);
    }
    return m;
}

/// Vector for an unseen sentence: a fresh row drawn with xavier_init and
/// fitted by `steps` passes of SGD over the sentence, all other weights frozen.
/// All-OOV input yields a zero vector with the empty warning set.
template <typename Real>
Encoding<Real> infer_vector(const PvModel<Real>& m, const Tokens& tokens, int steps, double lr, SeededRng& rng)
{
    if (steps <= 0)
        throw std::invalid_argument("infer_vector: steps must be positive");
    if (!(lr >= 0))
        throw std::invalid_argument("infer_vector: lr must be non-negative");
    Encoding<Real> enc;
    IdSeq ids;
    for (const auto& t : tokens) {
        if (auto id = m.vocab.find(t))
            ids.push_back(*id);
        else
            ++enc.out_of_vocabulary;
    }
    enc.in_vocabulary = ids.size();
    if (ids.empty()) {
        enc.vector.assign(m.dim(), Real(0));
        return enc;
    }
    if (m.mode() == PvMode::dbow)
        std::sort(ids.begin(), ids.end());  // positions are ignored; visit in canonical order
    auto row = xavier_init<Real>(1, m.dim(), rng);
    enc.vector.assign(row.flat().begin(), row.flat().end());
    const NoiseSampler noise = m.config.objective == OutputObjective::negative_sampling
                                   ? NoiseSampler(m.vocab, m.config.noise_power)
                                   : NoiseSampler();
    for (int s = 0; s < steps; ++s)
        detail::for_each_pv_target(m.mode(), ids, m.config.window, m.pad_id(), [&](const IdSeq& window, WordId target) {
            const auto negs = detail::pv_negatives(m, noise, rng);
            auto res = detail::pv_step(m, std::span<const Real>(enc.vector), window, target, negs);
            axpy(static_cast<Real>(-lr), res.d_doc, enc.vector);
        });
    return enc;
}

}  // namespace polarity
