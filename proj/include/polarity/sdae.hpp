#pragma once

// Sequential denoising autoencoder: a GRU encoder reads a corrupted sentence,
// a GRU decoder started from the encoder's final state reconstructs the clean
// sentence followed by an end symbol.
//
// GRU update (x input, h previous state):
//   z  = sigmoid(Wz x + Uz h + bz)
//   r  = sigmoid(Wr x + Ur h + br)
//   n  = tanh(Wn x + Un (r * h) + bn)
//   h' = (1 - z) * n + z * h

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "polarity/corpus.hpp"
#include "polarity/encoding.hpp"
#include "polarity/numerics.hpp"

namespace polarity {

struct CorruptionConfig {
    double p_delete = 0.1;
    double p_swap = 0.1;

    void validate() const
    {
        if (!(p_delete >= 0 && p_delete <= 1) || !(p_swap >= 0 && p_swap <= 1))
            throw std::invalid_argument("CorruptionConfig: probabilities must lie in [0, 1]");
    }
};

/// Counters for one corruption call, used to measure empirical rates.
struct CorruptionStats {
    std::size_t input_tokens = 0;
    std::size_t deleted = 0;
    std::size_t pairs = 0;    // non-overlapping bigrams considered
    std::size_t swapped = 0;
    bool restored_one = false;  // everything was deleted, one token kept
};

/// Deletes each token with p_delete, then walks the survivors left to right
/// in non-overlapping pairs (0,1), (2,3), ... and swaps each pair with
/// p_swap. If every token was deleted, one uniformly chosen original token
/// is kept.
template <typename T>
std::vector<T> corrupt(const std::vector<T>& tokens, const CorruptionConfig& cfg, SeededRng& rng,
                       CorruptionStats* stats = nullptr)
{
    cfg.validate();
    std::vector<T> out;
    out.reserve(tokens.size());
    for (const auto& t : tokens)
        if (!rng.bernoulli(cfg.p_delete))
            out.push_back(t);
    CorruptionStats st;
    st.input_tokens = tokens.size();
    st.deleted = tokens.size() - out.size();
    if (out.empty() && !tokens.empty()) {
        out.push_back(tokens[rng.below(tokens.size())]);
        st.restored_one = true;
    }
    for (std::size_t i = 0; i + 1 < out.size(); i += 2) {
        ++st.pairs;
        if (rng.bernoulli(cfg.p_swap)) {
            std::swap(out[i], out[i + 1]);
            ++st.swapped;
        }
    }
    if (stats)
        *stats = st;
    return out;
}

template <typename Real = double>
struct GruParams {
    Matrix<Real> Wz, Wr, Wn;  // H x E
    Matrix<Real> Uz, Ur, Un;  // H x H
    Matrix<Real> bz, br, bn;  // 1 x H

    static GruParams zeros(std::size_t input, std::size_t hidden)
    {
        GruParams p;
        p.Wz = p.Wr = p.Wn = Matrix<Real>(hidden, input);
        p.Uz = p.Ur = p.Un = Matrix<Real>(hidden, hidden);
        p.bz = p.br = p.bn = Matrix<Real>(1, hidden);
        return p;
    }

    std::size_t input_size() const noexcept { return Wz.cols(); }
    std::size_t hidden_size() const noexcept { return Wz.rows(); }

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
        f("Wz", s.Wz);
        f("Wr", s.Wr);
        f("Wn", s.Wn);
        f("Uz", s.Uz);
        f("Ur", s.Ur);
        f("Un", s.Un);
        f("bz", s.bz);
        f("br", s.br);
        f("bn", s.bn);
    }
};

/// Everything the backward pass needs from one forward step.
template <typename Real>
struct GruTrace {
    std::vector<Real> x, h_prev, z, r, n, rh, h;
};

template <typename Real>
GruTrace<Real> gru_forward(const GruParams<Real>& p, std::span<const Real> x, std::span<const Real> h)
{
    const std::size_t H = p.hidden_size();
    GruTrace<Real> t;
    t.x.assign(x.begin(), x.end());
    t.h_prev.assign(h.begin(), h.end());
    t.z.assign(p.bz.flat().begin(), p.bz.flat().end());
    t.r.assign(p.br.flat().begin(), p.br.flat().end());
    t.n.assign(p.bn.flat().begin(), p.bn.flat().end());
    gemv(p.Wz, x, t.z, true);
    gemv(p.Uz, h, t.z, true);
    gemv(p.Wr, x, t.r, true);
    gemv(p.Ur, h, t.r, true);
    for (std::size_t i = 0; i < H; ++i) {
        t.z[i] = sigmoid(t.z[i]);
        t.r[i] = sigmoid(t.r[i]);
    }
    t.rh.resize(H);
    for (std::size_t i = 0; i < H; ++i)
        t.rh[i] = t.r[i] * h[i];
    gemv(p.Wn, x, t.n, true);
    gemv(p.Un, t.rh, t.n, true);
    t.h.resize(H);
    for (std::size_t i = 0; i < H; ++i) {
        t.n[i] = std::tanh(t.n[i]);
        t.h[i] = (Real(1) - t.z[i]) * t.n[i] + t.z[i] * h[i];
    }
    return t;
}

template <typename Real>
std::vector<Real> gru_step(const GruParams<Real>& p, std::span<const Real> x, std::span<const Real> h)
{
    return gru_forward(p, x, h).h;
}

/// Accumulates parameter gradients into `g` and returns dL/dx, dL/dh_prev
/// through the out-parameters, given dL/dh' = dh.
template <typename Real>
void gru_backward(const GruParams<Real>& p, const GruTrace<Real>& t, std::span<const Real> dh, GruParams<Real>& g,
                  std::vector<Real>& dx, std::vector<Real>& dh_prev)
{
    const std::size_t H = p.hidden_size();
    dx.assign(p.input_size(), Real(0));
    dh_prev.assign(H, Real(0));
    std::vector<Real> da_n(H), da_z(H), da_r(H), drh(H, Real(0));
    for (std::size_t i = 0; i < H; ++i) {
        const Real dn = dh[i] * (Real(1) - t.z[i]);
        const Real dz = dh[i] * (t.h_prev[i] - t.n[i]);
        dh_prev[i] = dh[i] * t.z[i];
        da_n[i] = dn * (Real(1) - t.n[i] * t.n[i]);
        da_z[i] = dz * t.z[i] * (Real(1) - t.z[i]);
    }
    outer_acc(da_n, t.x, g.Wn);
    outer_acc(da_n, t.rh, g.Un);
    axpy(Real(1), da_n, g.bn.flat());
    gemv_t_acc(p.Wn, da_n, dx);
    gemv_t_acc(p.Un, da_n, drh);
    for (std::size_t i = 0; i < H; ++i) {
        dh_prev[i] += drh[i] * t.r[i];
        da_r[i] = drh[i] * t.h_prev[i] * t.r[i] * (Real(1) - t.r[i]);
    }
    outer_acc(da_z, t.x, g.Wz);
    outer_acc(da_z, t.h_prev, g.Uz);
    axpy(Real(1), da_z, g.bz.flat());
    gemv_t_acc(p.Wz, da_z, dx);
    gemv_t_acc(p.Uz, da_z, dh_prev);
    outer_acc(da_r, t.x, g.Wr);
    outer_acc(da_r, t.h_prev, g.Ur);
    axpy(Real(1), da_r, g.br.flat());
    gemv_t_acc(p.Wr, da_r, dx);
    gemv_t_acc(p.Ur, da_r, dh_prev);
}

struct SdaeConfig {
    std::size_t embed = 100;
    std::size_t hidden = 2400;
    std::size_t epochs = 5;
    double lr = 0.01;
    double clip = 5.0;  // global gradient-norm clip per sentence; <= 0 disables
    CorruptionConfig corruption;

    void validate() const
    {
        if (embed == 0 || hidden == 0)
            throw std::invalid_argument("SdaeConfig: embed and hidden must be >= 1");
        if (!(lr > 0))
            throw std::invalid_argument("SdaeConfig: lr must be positive");
        corruption.validate();
    }
};

/// All trainable tensors. Embedding rows 0..V-1 are words, row V is the
/// decoder's start symbol. Output classes 0..V-1 are words, class V is the
/// end symbol.
template <typename Real = double>
struct SdaeParams {
    Matrix<Real> embedding;  // (V+1) x E
    GruParams<Real> encoder;
    GruParams<Real> decoder;
    Matrix<Real> out_w;  // (V+1) x H
    Matrix<Real> out_b;  // 1 x (V+1)

    static SdaeParams zeros(std::size_t V, std::size_t E, std::size_t H)
    {
        SdaeParams p;
        p.embedding = Matrix<Real>(V + 1, E);
        p.encoder = GruParams<Real>::zeros(E, H);
        p.decoder = GruParams<Real>::zeros(E, H);
        p.out_w = Matrix<Real>(V + 1, H);
        p.out_b = Matrix<Real>(1, V + 1);
        return p;
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
        s.encoder.visit([&](std::string_view n, auto& m) { f("encoder." + std::string(n), m); });
        s.decoder.visit([&](std::string_view n, auto& m) { f("decoder." + std::string(n), m); });
        f("out_w", s.out_w);
        f("out_b", s.out_b);
    }
};

template <typename Real = double>
struct SdaeModel {
    Vocabulary vocab;
    SdaeConfig config;
    SdaeParams<Real> params;

    std::size_t vocab_size() const noexcept { return vocab.size(); }
    WordId start_id() const noexcept { return static_cast<WordId>(vocab.size()); }
    WordId end_id() const noexcept { return static_cast<WordId>(vocab.size()); }
    std::size_t hidden() const noexcept { return params.encoder.hidden_size(); }
};

template <typename Real>
struct SdaeLossResult {
    Real loss = 0;  // mean cross-entropy per decoded position
    SdaeParams<Real> grads;
    std::size_t correct = 0;    // argmax hits under teacher forcing
    std::size_t positions = 0;  // original length + 1
};

namespace detail {

inline void check_sequence(const IdSeq& ids, std::size_t V, const char* who)
{
    for (WordId id : ids)
        if (id < 0 || static_cast<std::size_t>(id) >= V)
            throw std::out_of_range(std::string(who) + ": word id " + std::to_string(id) + " out of range");
}

template <typename Real>
std::vector<Real> encode_ids(const SdaeParams<Real>& p, const IdSeq& ids, std::vector<GruTrace<Real>>* traces)
{
    std::vector<Real> h(p.encoder.hidden_size(), Real(0));
    for (WordId id : ids) {
        auto t = gru_forward(p.encoder, std::span<const Real>(p.embedding.row(static_cast<std::size_t>(id))),
                             std::span<const Real>(h));
        h = t.h;
        if (traces)
            traces->push_back(std::move(t));
    }
    return h;
}

}  // namespace detail

/// Teacher-forced reconstruction loss of `original` from `corrupted`, with
/// gradients for every parameter.
template <typename Real>
SdaeLossResult<Real> sdae_loss(const SdaeModel<Real>& model, const IdSeq& original, const IdSeq& corrupted,
                               bool want_grads = true)
{
    if (original.empty())
        throw std::invalid_argument("sdae_loss: empty original sentence");
    if (corrupted.empty())
        throw std::invalid_argument("sdae_loss: empty corrupted sentence");
    const std::size_t V = model.vocab_size();
    detail::check_sequence(original, V, "sdae_loss");
    detail::check_sequence(corrupted, V, "sdae_loss");
    const auto& p = model.params;
    const std::size_t H = model.hidden(), E = p.embedding.cols();

    std::vector<GruTrace<Real>> enc;
    const auto h_enc = detail::encode_ids(p, corrupted, &enc);

    SdaeLossResult<Real> res;
    const std::size_t T = original.size() + 1;
    res.positions = T;
    std::vector<GruTrace<Real>> dec;
    std::vector<std::vector<Real>> dlogits;
    std::vector<Real> h = h_enc;
    for (std::size_t t = 0; t < T; ++t) {
        const WordId in = t == 0 ? model.start_id() : original[t - 1];
        const auto target = static_cast<std::size_t>(t < original.size() ? original[t] : model.end_id());
        auto tr = gru_forward(p.decoder, std::span<const Real>(p.embedding.row(static_cast<std::size_t>(in))),
                              std::span<const Real>(h));
        h = tr.h;
        std::vector<Real> logits(p.out_b.flat().begin(), p.out_b.flat().end());
        gemv(p.out_w, h, logits, true);
        res.loss += log_sum_exp(std::span<const Real>(logits)) - logits[target];
        const auto best = static_cast<std::size_t>(std::max_element(logits.begin(), logits.end()) - logits.begin());
        res.correct += best == target;
        if (want_grads) {
            auto g = softmax(logits);
            g[target] -= 1;
            for (auto& v : g)
                v /= static_cast<Real>(T);
            dlogits.push_back(std::move(g));
            dec.push_back(std::move(tr));
        }
    }
    res.loss /= static_cast<Real>(T);
    if (!want_grads)
        return res;

    res.grads = SdaeParams<Real>::zeros(V, E, H);
    auto& g = res.grads;
    std::vector<Real> dh(H, Real(0)), dx, dh_prev;
    for (std::size_t t = T; t-- > 0;) {
        const auto& tr = dec[t];
        outer_acc(dlogits[t], tr.h, g.out_w);
        axpy(Real(1), dlogits[t], g.out_b.flat());
        gemv_t_acc(p.out_w, dlogits[t], dh);
        gru_backward(p.decoder, tr, std::span<const Real>(dh), g.decoder, dx, dh_prev);
        const WordId in = t == 0 ? model.start_id() : original[t - 1];
        axpy(Real(1), dx, g.embedding.row(static_cast<std::size_t>(in)));
        dh = dh_prev;
    }
    for (std::size_t t = enc.size(); t-- > 0;) {
        gru_backward(p.encoder, enc[t], std::span<const Real>(dh), g.encoder, dx, dh_prev);
        axpy(Real(1), dx, g.embedding.row(static_cast<std::size_t>(corrupted[t])));
        dh = dh_prev;
    }
    return res;
}

template <typename Real = double>
SdaeModel<Real> init_sdae(const Vocabulary& vocab, const SdaeConfig& config, SeededRng& rng)
{
    config.validate();
    if (vocab.empty())
        throw std::invalid_argument("init_sdae: empty vocabulary");
    SdaeModel<Real> m;
    m.vocab = vocab;
    m.config = config;
    const std::size_t V = vocab.size(), E = config.embed, H = config.hidden;
    m.params = SdaeParams<Real>::zeros(V, E, H);
    m.params.embedding = uniform_init<Real>(V + 1, E, 0.1, rng);
    for (auto* gru : {&m.params.encoder, &m.params.decoder})
        gru->visit([&](std::string_view name, Matrix<Real>& t) {
            if (name[0] != 'b')
                t = xavier_init<Real>(t.rows(), t.cols(), rng);
        });
    m.params.out_w = xavier_init<Real>(V + 1, H, rng);
    return m;
}

/// Scales `g` so its global L2 norm is at most `max_norm`; returns the
/// norm before scaling.
template <typename Real>
double clip_global_norm(SdaeParams<Real>& g, double max_norm)
{
    double sq = 0;
    g.visit([&](std::string_view, const Matrix<Real>& t) { sq += static_cast<double>(squared_norm(t.flat())); });
    const double norm = std::sqrt(sq);
    if (max_norm > 0 && norm > max_norm) {
        const auto s = static_cast<Real>(max_norm / norm);
        g.visit([&](std::string_view, Matrix<Real>& t) {
            for (auto& v : t.flat())
                v *= s;
        });
    }
    return norm;
}

template <typename Real>
void apply_sdae_update(SdaeParams<Real>& p, SdaeParams<Real>& g, Real lr)
{
    std::vector<Matrix<Real>*> grads;
    g.visit([&](std::string_view, Matrix<Real>& t) { grads.push_back(&t); });
    std::size_t k = 0;
    p.visit([&](std::string_view, Matrix<Real>& t) { sgd_step(t, *grads[k++], lr); });
}

template <typename Real = double>
SdaeModel<Real> train_sdae(const SentenceStream& stream, const Vocabulary& vocab, const SdaeConfig& config,
                           SeededRng& rng, TrainingLog* log = nullptr)
{
    if (stream.empty())
        throw std::invalid_argument("train_sdae: empty sentence stream");
    auto m = init_sdae<Real>(vocab, config, rng);
    if (log) {
        double total = 0;
        for (const auto& s : stream.sentences())
            total += static_cast<double>(sdae_loss(m, s, s, false).loss);
        log->initial_loss = total / static_cast<double>(stream.num_sentences());
        log->epoch_loss.clear();
    }
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        double total = 0;
        for (const auto& s : stream.sentences()) {
            const auto noisy = corrupt(s, config.corruption, rng);
            auto res = sdae_loss(m, s, noisy);
            clip_global_norm(res.grads, config.clip);
            apply_sdae_update(m.params, res.grads, static_cast<Real>(config.lr));
            total += static_cast<double>(res.loss);
        }
        if (log)
            log->epoch_loss.push_back(total / static_cast<double>(stream.num_sentences()));
    }
    return m;
}

/// Fraction of decoded positions (words plus end symbol) whose argmax under
/// teacher forcing matches the clean sentence, encoding the clean sentence.
template <typename Real>
double reconstruction_accuracy(const SdaeModel<Real>& m, const SentenceStream& stream)
{
    std::size_t hits = 0, total = 0;
    for (const auto& s : stream.sentences()) {
        const auto r = sdae_loss(m, s, s, false);
        hits += r.correct;
        total += r.positions;
    }
    return total ? static_cast<double>(hits) / static_cast<double>(total) : 0.0;
}

/// Final encoder state on the clean sentence. OOV tokens are skipped; an
/// all-OOV sentence gives a zero vector with the empty warning set.
template <typename Real>
Encoding<Real> encode_sdae(const SdaeModel<Real>& m, const Tokens& tokens)
{
    if (tokens.empty())
        throw std::invalid_argument("encode_sdae: empty sentence");
    Encoding<Real> enc;
    IdSeq ids;
    for (const auto& t : tokens) {
        if (auto id = m.vocab.find(t))
            ids.push_back(*id);
        else
            ++enc.out_of_vocabulary;
    }
    enc.in_vocabulary = ids.size();
    enc.vector = detail::encode_ids<Real>(m.params, ids, nullptr);
    return enc;
}

}  // namespace polarity
