#pragma once

// FastSent: a bag-of-words sentence vector (sum of source vectors u_w)
// predicts the words of the neighbouring sentences through their target
// vectors v_c. Context words form a multiset, so repeated words count once
// per occurrence.

#include <algorithm>
#include <map>
#include <stdexcept>
#include <vector>

#include "polarity/corpus.hpp"
#include "polarity/encoding.hpp"
#include "polarity/numerics.hpp"
#include "polarity/sgns.hpp"

namespace polarity {

struct FastSentConfig {
    std::size_t dim = 300;
    std::size_t epochs = 10;
    double lr = 0.025;
    OutputObjective objective = OutputObjective::softmax;
    std::size_t negatives = 5;  // negative_sampling objective only
    double noise_power = 0.75;
};

template <typename Real = double>
struct FastSentModel {
    Vocabulary vocab;
    FastSentConfig config;
    Matrix<Real> u;  // source vectors, V x d
    Matrix<Real> v;  // target vectors, V x d

    std::size_t dim() const noexcept { return u.cols(); }
};

/// Gradient of one sentence's cost. The target-vector gradient is the
/// rank-1 product d_v = v_scale (x) sentence_vector, where v_scale has one
/// entry per vocabulary word (zero for untouched rows).
template <typename Real>
struct FastSentResult {
    Real loss = 0;
    std::vector<RowGradient<Real>> d_u;  // distinct words of S_i
    std::vector<Real> v_scale;
    std::vector<Real> sentence_vector;

    Matrix<Real> dense_d_v() const
    {
        Matrix<Real> g(v_scale.size(), sentence_vector.size());
        outer_acc(v_scale, sentence_vector, g);
        return g;
    }
};

namespace detail {

template <typename Real>
std::vector<Real> sum_id_rows(const Matrix<Real>& table, IdSeq ids)
{
    std::sort(ids.begin(), ids.end());
    std::vector<Real> s(table.cols(), Real(0));
    for (WordId id : ids)
        axpy(Real(1), table.row(static_cast<std::size_t>(id)), s);
    return s;
}

}  // namespace detail

/// Cost of sentence S_i against the words of S_{i-1} and S_{i+1}.
/// `negatives` holds `negatives` draws per context word and is only read
/// under the negative_sampling objective.
template <typename Real>
FastSentResult<Real> fastsent_sentence_cost(const FastSentModel<Real>& model, const IdSeq& sentence,
                                            const IdSeq& context, const std::vector<WordId>& negatives = {})
{
    if (sentence.empty())
        throw std::invalid_argument("fastsent_sentence_cost: empty sentence");
    const std::size_t V = model.u.rows();
    for (WordId id : sentence)
        detail::check_id(V, id, "fastsent_sentence_cost");
    for (WordId id : context)
        detail::check_id(V, id, "fastsent_sentence_cost");

    FastSentResult<Real> res;
    res.sentence_vector = detail::sum_id_rows(model.u, sentence);
    res.v_scale.assign(V, Real(0));
    std::map<WordId, Real> multiplicity;
    for (WordId id : sentence)
        multiplicity[id] += 1;

    std::vector<Real> ds(model.dim(), Real(0));
    if (!context.empty()) {
        if (model.config.objective == OutputObjective::softmax) {
            std::vector<Real> z(V);
            gemv(model.v, res.sentence_vector, z);
            const auto p = softmax(z);
            const Real n = static_cast<Real>(context.size());
            res.loss = n * log_sum_exp(std::span<const Real>(z));
            for (std::size_t j = 0; j < V; ++j)
                res.v_scale[j] = n * p[j];
            IdSeq sorted = context;
            std::sort(sorted.begin(), sorted.end());
            for (WordId c : sorted) {
                res.loss -= z[static_cast<std::size_t>(c)];
                res.v_scale[static_cast<std::size_t>(c)] -= 1;
            }
        } else {
            const std::size_t k = model.config.negatives;
            if (negatives.size() != context.size() * k)
                throw std::invalid_argument("fastsent_sentence_cost: expected negatives per context word");
            for (WordId n : negatives)
                detail::check_id(V, n, "fastsent_sentence_cost");
            auto term = [&](WordId target, Real label) {
                const Real score = dot(model.v.row(static_cast<std::size_t>(target)), res.sentence_vector);
                res.loss -= log_sigmoid(label > 0 ? score : -score);
                res.v_scale[static_cast<std::size_t>(target)] += sigmoid(score) - label;
            };
            for (std::size_t ci = 0; ci < context.size(); ++ci) {
                term(context[ci], Real(1));
                for (std::size_t r = 0; r < k; ++r)
                    term(negatives[ci * k + r], Real(0));
            }
        }
        gemv_t_acc(model.v, res.v_scale, ds);
    }
    for (const auto& [id, mult] : multiplicity) {
        RowGradient<Real> g{id, std::vector<Real>(model.dim(), Real(0))};
        axpy(mult, ds, g.grad);
        res.d_u.push_back(std::move(g));
    }
    return res;
}

template <typename Real>
void apply_fastsent_update(FastSentModel<Real>& model, const FastSentResult<Real>& res, Real lr)
{
    for (const auto& g : res.d_u)
        axpy(-lr, g.grad, model.u.row(static_cast<std::size_t>(g.id)));
    for (std::size_t j = 0; j < res.v_scale.size(); ++j)
        if (res.v_scale[j] != Real(0))
            axpy(-lr * res.v_scale[j], res.sentence_vector, model.v.row(j));
}

/// Context multiset of sentence `pos` within a document: the words of the
/// previous and next sentences, never crossing the document boundary.
inline IdSeq fastsent_context(const SentenceStream& stream, const std::vector<std::size_t>& doc, std::size_t pos)
{
    IdSeq ctx;
    if (pos > 0) {
        const auto& prev = stream.sentence(doc[pos - 1]);
        ctx.insert(ctx.end(), prev.begin(), prev.end());
    }
    if (pos + 1 < doc.size()) {
        const auto& next = stream.sentence(doc[pos + 1]);
        ctx.insert(ctx.end(), next.begin(), next.end());
    }
    return ctx;
}

namespace detail {

inline std::vector<WordId> draw_negatives(const NoiseSampler& noise, std::size_t count, SeededRng& rng)
{
    std::vector<WordId> out(count);
    for (auto& n : out)
        n = noise.sample(rng);
    return out;
}

}  // namespace detail

/// Sum of sentence costs over the whole stream in document order.
template <typename Real>
double fastsent_corpus_loss(const FastSentModel<Real>& model, const SentenceStream& stream, SeededRng& rng)
{
    const bool ns = model.config.objective == OutputObjective::negative_sampling;
    const NoiseSampler noise = ns ? NoiseSampler(model.vocab, model.config.noise_power) : NoiseSampler();
    double total = 0;
    for (const auto& doc : stream.documents())
        for (std::size_t pos = 0; pos < doc.size(); ++pos) {
            const auto ctx = fastsent_context(stream, doc, pos);
            const auto negs = ns ? detail::draw_negatives(noise, ctx.size() * model.config.negatives, rng)
                                 : std::vector<WordId>{};
            total += static_cast<double>(fastsent_sentence_cost(model, stream.sentence(doc[pos]), ctx, negs).loss);
        }
    return total;
}

template <typename Real = double>
FastSentModel<Real> init_fastsent(const Vocabulary& vocab, const FastSentConfig& config, SeededRng& rng)
{
    if (vocab.empty())
        throw std::invalid_argument("init_fastsent: empty vocabulary");
    if (config.dim == 0 || !(config.lr > 0))
        throw std::invalid_argument("FastSentConfig: dim must be >= 1 and lr positive");
    FastSentModel<Real> m;
    m.vocab = vocab;
    m.config = config;
    m.u = uniform_init<Real>(vocab.size(), config.dim, 0.5 / static_cast<double>(config.dim), rng);
    m.v = Matrix<Real>(vocab.size(), config.dim);
    return m;
}

template <typename Real = double>
FastSentModel<Real> train_fastsent(const SentenceStream& stream, const Vocabulary& vocab,
                                   const FastSentConfig& config, SeededRng& rng, TrainingLog* log = nullptr)
{
    const bool has_pair = std::any_of(stream.documents().begin(), stream.documents().end(),
                                      [](const auto& d) { return d.size() >= 2; });
    if (!has_pair)
        throw std::invalid_argument("train_fastsent: no document has two or more sentences");
    auto model = init_fastsent<Real>(vocab, config, rng);
    const bool ns = config.objective == OutputObjective::negative_sampling;
    const NoiseSampler noise = ns ? NoiseSampler(vocab, config.noise_power) : NoiseSampler();

    if (log) {
        SeededRng eval_rng(derive_seed(rng.seed(), 0xe7a1));
        log->initial_loss = fastsent_corpus_loss(model, stream, eval_rng) /
                            static_cast<double>(stream.num_sentences());
        log->epoch_loss.clear();
    }
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        double total = 0;
        for (const auto& doc : stream.documents()) {
            for (std::size_t pos = 0; pos < doc.size(); ++pos) {
                const auto ctx = fastsent_context(stream, doc, pos);
                if (ctx.empty())
                    continue;
                const auto negs = ns ? detail::draw_negatives(noise, ctx.size() * config.negatives, rng)
                                     : std::vector<WordId>{};
                auto res = fastsent_sentence_cost(model, stream.sentence(doc[pos]), ctx, negs);
                apply_fastsent_update(model, res, static_cast<Real>(config.lr));
                total += static_cast<double>(res.loss);
            }
        }
        if (log)
            log->epoch_loss.push_back(total / static_cast<double>(stream.num_sentences()));
    }
    return model;
}

/// Sum of source vectors over in-vocabulary tokens.
template <typename Real>
Encoding<Real> encode_fastsent(const FastSentModel<Real>& model, const Tokens& tokens)
{
    return detail::sum_rows(model.u, model.vocab, tokens);
}

}  // namespace polarity
