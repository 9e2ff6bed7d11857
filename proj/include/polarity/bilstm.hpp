#pragma once

// Supervised bidirectional LSTM classifier. One LSTM reads the sentence left
// to right, another right to left; their final states are concatenated,
// passed through inverted dropout during training, and mapped to two class
// scores.
//
// LSTM update (x input, h and c previous states):
//   i  = sigmoid(Wi x + Ui h + bi)
//   f  = sigmoid(Wf x + Uf h + bf)
//   o  = sigmoid(Wo x + Uo h + bo)
//   g  = tanh(Wg x + Ug h + bg)
//   c' = f * c + i * g
//   h' = o * tanh(c')

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "polarity/corpus.hpp"
#include "polarity/encoding.hpp"
#include "polarity/numerics.hpp"
#include "polarity/probe.hpp"
#include "polarity/sgns.hpp"

namespace polarity {

template <typename Real = double>
struct LstmParams {
    Matrix<Real> Wi, Wf, Wo, Wg;  // H x E
    Matrix<Real> Ui, Uf, Uo, Ug;  // H x H
    Matrix<Real> bi, bf, bo, bg;  // 1 x H

    static LstmParams zeros(std::size_t input, std::size_t hidden)
    {
        LstmParams p;
        p.Wi = p.Wf = p.Wo = p.Wg = Matrix<Real>(hidden, input);
        p.Ui = p.Uf = p.Uo = p.Ug = Matrix<Real>(hidden, hidden);
        p.bi = p.bf = p.bo = p.bg = Matrix<Real>(1, hidden);
        return p;
    }

    std::size_t input_size() const noexcept { return Wi.cols(); }
    std::size_t hidden_size() const noexcept { return Wi.rows(); }

    template <typename F>
    void visit(F&& f)
    {
        visit_impl(*this, f);
    }
    template <typename F>
    void visit(F&& f) const
    {
        visit_impl(*this, f);
    }

private:
    template <typename Self, typename F>
    static void visit_impl(Self& s, F& f)
    {
        f("Wi", s.Wi);
        f("Wf", s.Wf);
        f("Wo", s.Wo);
        f("Wg", s.Wg);
        f("Ui", s.Ui);
        f("Uf", s.Uf);
        f("Uo", s.Uo);
        f("Ug", s.Ug);
        f("bi", s.bi);
        f("bf", s.bf);
        f("bo", s.bo);
        f("bg", s.bg);
    }
};

template <typename Real>
struct LstmTrace {
    std::vector<Real> x, h_prev, c_prev, i, f, o, g, c, tanh_c, h;
};

template <typename Real>
LstmTrace<Real> lstm_forward(const LstmParams<Real>& p, std::span<const Real> x, std::span<const Real> h,
                             std::span<const Real> c)
{
    const std::size_t H = p.hidden_size();
    LstmTrace<Real> t;
    t.x.assign(x.begin(), x.end());
    t.h_prev.assign(h.begin(), h.end());
    t.c_prev.assign(c.begin(), c.end());
    auto gate = [&](const Matrix<Real>& W, const Matrix<Real>& U, const Matrix<Real>& b) {
        std::vector<Real> a(b.flat().begin(), b.flat().end());
        gemv(W, x, a, true);
        gemv(U, h, a, true);
        return a;
    };
    t.i = gate(p.Wi, p.Ui, p.bi);
    t.f = gate(p.Wf, p.Uf, p.bf);
    t.o = gate(p.Wo, p.Uo, p.bo);
    t.g = gate(p.Wg, p.Ug, p.bg);
    t.c.resize(H);
    t.tanh_c.resize(H);
    t.h.resize(H);
    for (std::size_t k = 0; k < H; ++k) {
        t.i[k] = sigmoid(t.i[k]);
        t.f[k] = sigmoid(t.f[k]);
        t.o[k] = sigmoid(t.o[k]);
        t.g[k] = std::tanh(t.g[k]);
        t.c[k] = t.f[k] * c[k] + t.i[k] * t.g[k];
        t.tanh_c[k] = std::tanh(t.c[k]);
        t.h[k] = t.o[k] * t.tanh_c[k];
    }
    return t;
}

template <typename Real>
struct LstmState {
    std::vector<Real> h, c;
};

template <typename Real>
LstmState<Real> lstm_step(const LstmParams<Real>& p, std::span<const Real> x, std::span<const Real> h,
                          std::span<const Real> c)
{
    auto t = lstm_forward(p, x, h, c);
    return {std::move(t.h), std::move(t.c)};
}

/// Accumulates parameter gradients into `g` given dL/dh' and dL/dc', and
/// writes dL/dx, dL/dh, dL/dc for the step's inputs.
template <typename Real>
void lstm_backward(const LstmParams<Real>& p, const LstmTrace<Real>& t, std::span<const Real> dh,
                   std::span<const Real> dc, LstmParams<Real>& g, std::vector<Real>& dx, std::vector<Real>& dh_prev,
                   std::vector<Real>& dc_prev)
{
    const std::size_t H = p.hidden_size();
    dx.assign(p.input_size(), Real(0));
    dh_prev.assign(H, Real(0));
    dc_prev.assign(H, Real(0));
    std::vector<Real> da_i(H), da_f(H), da_o(H), da_g(H);
    for (std::size_t k = 0; k < H; ++k) {
        const Real d_o = dh[k] * t.tanh_c[k];
        const Real d_c = dc[k] + dh[k] * t.o[k] * (Real(1) - t.tanh_c[k] * t.tanh_c[k]);
        dc_prev[k] = d_c * t.f[k];
        da_i[k] = d_c * t.g[k] * t.i[k] * (Real(1) - t.i[k]);
        da_f[k] = d_c * t.c_prev[k] * t.f[k] * (Real(1) - t.f[k]);
        da_o[k] = d_o * t.o[k] * (Real(1) - t.o[k]);
        da_g[k] = d_c * t.i[k] * (Real(1) - t.g[k] * t.g[k]);
    }
    auto back = [&](const std::vector<Real>& da, const Matrix<Real>& W, const Matrix<Real>& U, Matrix<Real>& gW,
                    Matrix<Real>& gU, Matrix<Real>& gb) {
        outer_acc(da, t.x, gW);
        outer_acc(da, t.h_prev, gU);
        axpy(Real(1), da, gb.flat());
        gemv_t_acc(W, da, dx);
        gemv_t_acc(U, da, dh_prev);
    };
    back(da_i, p.Wi, p.Ui, g.Wi, g.Ui, g.bi);
    back(da_f, p.Wf, p.Uf, g.Wf, g.Uf, g.bf);
    back(da_o, p.Wo, p.Uo, g.Wo, g.Uo, g.bo);
    back(da_g, p.Wg, p.Ug, g.Wg, g.Ug, g.bg);
}

struct BiLstmConfig {
    std::size_t hidden = 60;  // per direction
    double lr = 5e-2;
    std::size_t batch = 20;
    std::size_t epochs = 20;
    double dropout = 0.2;

    void validate() const
    {
        if (hidden == 0 || batch == 0)
            throw std::invalid_argument("BiLstmConfig: hidden and batch must be >= 1");
        if (!(lr > 0))
            throw std::invalid_argument("BiLstmConfig: lr must be positive");
        if (!(dropout >= 0 && dropout < 1))
            throw std::invalid_argument("BiLstmConfig: dropout must lie in [0, 1)");
    }
};

/// Embedding rows 0..V-1 follow the vocabulary; row V is the unknown word.
template <typename Real = double>
struct BiLstmParams {
    Matrix<Real> embedding;  // (V+1) x E
    LstmParams<Real> forward;
    LstmParams<Real> backward;
    Matrix<Real> out_w;  // 2 x 2H
    Matrix<Real> out_b;  // 1 x 2

    static BiLstmParams zeros(std::size_t V, std::size_t E, std::size_t H)
    {
        return {Matrix<Real>(V + 1, E), LstmParams<Real>::zeros(E, H), LstmParams<Real>::zeros(E, H),
                Matrix<Real>(kNumClasses, 2 * H), Matrix<Real>(1, kNumClasses)};
    }

    template <typename F>
    void visit(F&& f)
    {
        visit_impl(*this, f);
    }
    template <typename F>
    void visit(F&& f) const
    {
        visit_impl(*this, f);
    }

private:
    template <typename Self, typename F>
    static void visit_impl(Self& s, F& f)
    {
        f("embedding", s.embedding);
        s.forward.visit([&](std::string_view n, auto& m) { f("forward." + std::string(n), m); });
        s.backward.visit([&](std::string_view n, auto& m) { f("backward." + std::string(n), m); });
        f("out_w", s.out_w);
        f("out_b", s.out_b);
    }
};

template <typename Real = double>
struct BiLstmModel {
    Vocabulary vocab;
    BiLstmConfig config;
    BiLstmParams<Real> params;

    WordId unk_id() const noexcept { return static_cast<WordId>(vocab.size()); }
    std::size_t embed_dim() const noexcept { return params.embedding.cols(); }
    std::size_t hidden() const noexcept { return params.forward.hidden_size(); }

    /// Vocabulary id per token; unknown tokens map to unk_id().
    IdSeq ids(const Tokens& tokens) const
    {
        IdSeq out;
        out.reserve(tokens.size());
        for (const auto& t : tokens)
            out.push_back(vocab.find(t).value_or(unk_id()));
        return out;
    }
};

/// Inverted dropout mask: each entry is 0 with probability p, otherwise 1/(1-p).
template <typename Real = double>
std::vector<Real> dropout_mask(std::size_t n, double p, SeededRng& rng)
{
    std::vector<Real> mask(n, Real(1));
    if (p <= 0)
        return mask;
    const auto keep = static_cast<Real>(1.0 / (1.0 - p));
    for (auto& m : mask)
        m = rng.bernoulli(p) ? Real(0) : keep;
    return mask;
}

template <typename Real>
struct BiLstmForward {
    std::vector<LstmTrace<Real>> fwd;  // fwd[t] consumed input t
    std::vector<LstmTrace<Real>> bwd;  // bwd[s] consumed input T-1-s
    std::vector<Real> representation;  // concat(final forward h, final backward h)
    std::vector<Real> mask;            // empty in inference mode
    std::vector<Real> dropped;
    std::array<Real, kNumClasses> scores{};
};

namespace detail {

template <typename Real>
std::vector<LstmTrace<Real>> run_lstm(const LstmParams<Real>& p, const Matrix<Real>& inputs, bool reverse)
{
    const std::size_t T = inputs.rows(), H = p.hidden_size();
    std::vector<LstmTrace<Real>> traces;
    traces.reserve(T);
    std::vector<Real> h(H, Real(0)), c(H, Real(0));
    for (std::size_t s = 0; s < T; ++s) {
        const std::size_t t = reverse ? T - 1 - s : s;
        traces.push_back(lstm_forward(p, inputs.row(t), std::span<const Real>(h), std::span<const Real>(c)));
        h = traces.back().h;
        c = traces.back().c;
    }
    return traces;
}

}  // namespace detail

/// Forward pass over explicit input vectors (one row per position). `mask`
/// is the dropout mask over the 2H representation, or nullptr for inference.
template <typename Real>
BiLstmForward<Real> bilstm_forward_inputs(const BiLstmParams<Real>& p, const Matrix<Real>& inputs,
                                          const std::vector<Real>* mask)
{
    if (inputs.rows() == 0)
        throw std::invalid_argument("bilstm_forward: empty sentence");
    const std::size_t H = p.forward.hidden_size();
    BiLstmForward<Real> f;
    f.fwd = detail::run_lstm(p.forward, inputs, false);
    f.bwd = detail::run_lstm(p.backward, inputs, true);
    f.representation = f.fwd.back().h;
    f.representation.insert(f.representation.end(), f.bwd.back().h.begin(), f.bwd.back().h.end());
    f.dropped = f.representation;
    if (mask) {
        if (mask->size() != 2 * H)
            throw std::invalid_argument("bilstm_forward: dropout mask has the wrong size");
        f.mask = *mask;
        for (std::size_t k = 0; k < 2 * H; ++k)
            f.dropped[k] *= f.mask[k];
    }
    for (std::size_t c = 0; c < kNumClasses; ++c)
        f.scores[c] = p.out_b(0, c) + dot(p.out_w.row(c), f.dropped);
    return f;
}

template <typename Real>
Matrix<Real> gather_embeddings(const BiLstmModel<Real>& m, const IdSeq& ids)
{
    Matrix<Real> x(ids.size(), m.embed_dim());
    for (std::size_t t = 0; t < ids.size(); ++t) {
        const auto row = m.params.embedding.row(static_cast<std::size_t>(ids[t]));
        std::copy(row.begin(), row.end(), x.row(t).begin());
    }
    return x;
}

/// Class scores for a sentence. In train mode a fresh dropout mask is drawn
/// from `rng`; otherwise the pass is deterministic and rng is untouched.
template <typename Real>
BiLstmForward<Real> bilstm_forward(const BiLstmModel<Real>& m, const IdSeq& ids, bool train_mode, SeededRng& rng)
{
    if (ids.empty())
        throw std::invalid_argument("bilstm_forward: empty sentence");
    if (!train_mode)
        return bilstm_forward_inputs(m.params, gather_embeddings(m, ids), static_cast<const std::vector<Real>*>(nullptr));
    const auto mask = dropout_mask<Real>(2 * m.hidden(), m.config.dropout, rng);
    return bilstm_forward_inputs(m.params, gather_embeddings(m, ids), &mask);
}

/// Backpropagates dL/dscores. Parameter gradients (except the embedding
/// table) accumulate into `g`; the return value holds dL/d(input row t).
template <typename Real>
Matrix<Real> bilstm_backward(const BiLstmParams<Real>& p, const BiLstmForward<Real>& f,
                             const std::array<Real, kNumClasses>& dscores, BiLstmParams<Real>& g)
{
    const std::size_t H = p.forward.hidden_size(), T = f.fwd.size();
    std::vector<Real> drep(2 * H, Real(0));
    for (std::size_t c = 0; c < kNumClasses; ++c) {
        axpy(dscores[c], f.dropped, g.out_w.row(c));
        g.out_b(0, c) += dscores[c];
        axpy(dscores[c], p.out_w.row(c), drep);
    }
    if (!f.mask.empty())
        for (std::size_t k = 0; k < 2 * H; ++k)
            drep[k] *= f.mask[k];

    Matrix<Real> dinputs(T, p.forward.input_size());
    auto back = [&](const LstmParams<Real>& cell, const std::vector<LstmTrace<Real>>& traces, std::size_t offset,
                    LstmParams<Real>& gc, bool reverse) {
        std::vector<Real> dh(drep.begin() + static_cast<std::ptrdiff_t>(offset),
                             drep.begin() + static_cast<std::ptrdiff_t>(offset + H));
        std::vector<Real> dc(H, Real(0)), dx, dh_prev, dc_prev;
        for (std::size_t s = T; s-- > 0;) {
            lstm_backward(cell, traces[s], std::span<const Real>(dh), std::span<const Real>(dc), gc, dx, dh_prev,
                          dc_prev);
            const std::size_t t = reverse ? T - 1 - s : s;
            axpy(Real(1), dx, dinputs.row(t));
            dh.swap(dh_prev);
            dc.swap(dc_prev);
        }
    };
    back(p.forward, f.fwd, 0, g.forward, false);
    back(p.backward, f.bwd, H, g.backward, true);
    return dinputs;
}

template <typename Real>
struct BiLstmLossResult {
    Real loss = 0;  // mean cross-entropy over the batch
    BiLstmParams<Real> grads;
    std::size_t correct = 0;
};

/// Mean cross-entropy over a batch. `masks`, when given, supplies one
/// dropout mask per sentence; otherwise the pass runs in inference mode.
template <typename Real>
BiLstmLossResult<Real> bilstm_batch_loss(const BiLstmModel<Real>& m, const std::vector<IdSeq>& sentences,
                                         const std::vector<Polarity>& labels,
                                         const std::vector<std::vector<Real>>* masks = nullptr)
{
    if (sentences.empty() || sentences.size() != labels.size())
        throw std::invalid_argument("bilstm_batch_loss: need a non-empty batch with one label per sentence");
    BiLstmLossResult<Real> res;
    res.grads = BiLstmParams<Real>::zeros(m.vocab.size(), m.embed_dim(), m.hidden());
    const Real inv_n = Real(1) / static_cast<Real>(sentences.size());
    for (std::size_t b = 0; b < sentences.size(); ++b) {
        if (sentences[b].empty())
            throw std::invalid_argument("bilstm_batch_loss: empty sentence");
        const auto f = bilstm_forward_inputs(m.params, gather_embeddings(m, sentences[b]),
                                             masks ? &(*masks)[b] : static_cast<const std::vector<Real>*>(nullptr));
        const auto y = static_cast<std::size_t>(class_index(labels[b]));
        const auto p = softmax(std::span<const Real>(f.scores));
        res.loss += (log_sum_exp(std::span<const Real>(f.scores)) - f.scores[y]) * inv_n;
        res.correct += (p[1] > p[0] ? 1u : 0u) == y;
        std::array<Real, kNumClasses> ds{};
        for (std::size_t c = 0; c < kNumClasses; ++c)
            ds[c] = (p[c] - (c == y ? Real(1) : Real(0))) * inv_n;
        const auto dx = bilstm_backward(m.params, f, ds, res.grads);
        for (std::size_t t = 0; t < sentences[b].size(); ++t)
            axpy(Real(1), dx.row(t), res.grads.embedding.row(static_cast<std::size_t>(sentences[b][t])));
    }
    return res;
}

/// Embedding table from a trained skip-gram model, with the unknown-word row
/// set to the mean word vector.
template <typename Real>
Matrix<Real> embeddings_from_sgns(const SgnsModel<Real>& sgns)
{
    const std::size_t V = sgns.w_in.rows(), E = sgns.w_in.cols();
    Matrix<Real> emb(V + 1, E);
    std::copy(sgns.w_in.flat().begin(), sgns.w_in.flat().end(), emb.flat().begin());
    for (std::size_t w = 0; w < V; ++w)
        axpy(Real(1) / static_cast<Real>(V), sgns.w_in.row(w), emb.row(V));
    return emb;
}

/// Fresh classifier around an SGNS embedding table. Recurrent and output
/// weights use xavier_init; the forget-gate bias starts at 1.
template <typename Real = double>
BiLstmModel<Real> init_bilstm(const SgnsModel<Real>& sgns, const BiLstmConfig& config, SeededRng& rng)
{
    config.validate();
    BiLstmModel<Real> m;
    m.vocab = sgns.vocab;
    m.config = config;
    const std::size_t E = sgns.dim(), H = config.hidden;
    m.params = BiLstmParams<Real>::zeros(sgns.vocab.size(), E, H);
    m.params.embedding = embeddings_from_sgns(sgns);
    for (auto* cell : {&m.params.forward, &m.params.backward}) {
        cell->visit([&](std::string_view name, Matrix<Real>& t) {
            if (name[0] != 'b')
                t = xavier_init<Real>(t.rows(), t.cols(), rng);
        });
        cell->bf.fill(Real(1));
    }
    m.params.out_w = xavier_init<Real>(kNumClasses, 2 * H, rng);
    return m;
}

struct BiLstmTrainLog {
    std::vector<double> epoch_loss;
    std::vector<double> train_accuracy;  // under dropout, as seen during the epoch
};

/// Minibatch SGD on mean cross-entropy; embeddings are fine-tuned.
template <typename Real = double>
BiLstmModel<Real> train_bilstm(const LabeledDataset& data, const SgnsModel<Real>& sgns, const BiLstmConfig& config,
                               SeededRng& rng, BiLstmTrainLog* log = nullptr)
{
    for (Polarity p : all_polarities)
        if (data.count(p) == 0)
            throw std::invalid_argument("train_bilstm: training data has no '" + std::string(to_string(p)) +
                                        "' examples");
    auto m = init_bilstm(sgns, config, rng);
    std::vector<IdSeq> sentences;
    std::vector<Polarity> labels;
    for (const auto& ex : data.examples) {
        if (ex.tokens.empty())
            throw std::invalid_argument("train_bilstm: empty sentence in training data");
        sentences.push_back(m.ids(ex.tokens));
        labels.push_back(ex.label);
    }
    std::vector<std::size_t> order(sentences.size());
    std::iota(order.begin(), order.end(), 0);
    std::vector<IdSeq> bx;
    std::vector<Polarity> by;
    std::vector<std::vector<Real>> masks;
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        rng.shuffle(order);
        double total = 0;
        std::size_t correct = 0, batches = 0;
        for (std::size_t start = 0; start < order.size(); start += config.batch) {
            bx.clear();
            by.clear();
            masks.clear();
            for (std::size_t k = start; k < std::min(order.size(), start + config.batch); ++k) {
                bx.push_back(sentences[order[k]]);
                by.push_back(labels[order[k]]);
                masks.push_back(dropout_mask<Real>(2 * config.hidden, config.dropout, rng));
            }
            auto r = bilstm_batch_loss(m, bx, by, &masks);
            total += static_cast<double>(r.loss);
            correct += r.correct;
            ++batches;
            std::vector<Matrix<Real>*> grads;
            r.grads.visit([&](std::string_view, Matrix<Real>& t) { grads.push_back(&t); });
            std::size_t k = 0;
            m.params.visit(
                [&](std::string_view, Matrix<Real>& t) { sgd_step(t, *grads[k++], static_cast<Real>(config.lr)); });
        }
        if (log) {
            log->epoch_loss.push_back(total / static_cast<double>(batches));
            log->train_accuracy.push_back(static_cast<double>(correct) / static_cast<double>(order.size()));
        }
    }
    return m;
}

template <typename Real>
Prediction<Real> bilstm_predict(const BiLstmModel<Real>& m, const Tokens& tokens)
{
    SeededRng unused(0);
    const auto f = bilstm_forward(m, m.ids(tokens), false, unused);
    const auto p = softmax(std::span<const Real>(f.scores));
    Prediction<Real> out{p[1] > p[0] ? Polarity::positive : Polarity::negative, {}};
    std::copy(p.begin(), p.end(), out.probs.begin());
    return out;
}

template <typename Real>
ClassificationReport evaluate_bilstm(const BiLstmModel<Real>& m, const LabeledDataset& data)
{
    std::vector<Polarity> preds, golds;
    for (const auto& ex : data.examples) {
        preds.push_back(bilstm_predict(m, ex.tokens).label);
        golds.push_back(ex.label);
    }
    return classification_report(preds, golds);
}

}  // namespace polarity
