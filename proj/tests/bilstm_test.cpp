#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "gradcheck.hpp"
#include "polarity/bilstm.hpp"

using namespace polarity;
using polarity::testing::gradient_check;
using polarity::testing::ParamBlock;

namespace {

Vocabulary toy_vocab(std::size_t n)
{
    std::vector<Vocabulary::Entry> e;
    for (std::size_t i = 0; i < n; ++i)
        e.push_back({"w" + std::to_string(i), 10 * (n - i)});
    return Vocabulary(std::move(e));
}

SgnsModel<double> random_sgns(std::size_t V, std::size_t d, SeededRng& rng)
{
    SgnsModel<double> m;
    m.vocab = toy_vocab(V);
    m.config.dim = d;
    m.w_in = uniform_init<double>(V, d, 0.5, rng);
    m.w_out = Matrix<double>(V, d);
    return m;
}

BiLstmModel<double> random_model(std::size_t V, std::size_t E, std::size_t H, SeededRng& rng, double scale = 0.6)
{
    BiLstmModel<double> m;
    m.vocab = toy_vocab(V);
    m.config.hidden = H;
    m.params = BiLstmParams<double>::zeros(V, E, H);
    m.params.visit([&](std::string_view, Matrix<double>& t) { t = uniform_init<double>(t.rows(), t.cols(), scale, rng); });
    return m;
}

IdSeq random_ids(std::size_t n, std::size_t upper, SeededRng& rng)
{
    IdSeq ids(n);
    for (auto& id : ids)
        id = static_cast<WordId>(rng.below(upper));
    return ids;
}

template <typename Params>
std::vector<ParamBlock> blocks_of(Params& p, Params& g)
{
    std::vector<std::vector<double>> grads;
    g.visit([&](std::string_view, Matrix<double>& t) { grads.push_back(t.data()); });
    std::vector<ParamBlock> blocks;
    std::size_t k = 0;
    p.visit([&](std::string_view, Matrix<double>& t) { blocks.push_back({t.flat(), grads[k++]}); });
    return blocks;
}

LabeledDataset toy_dataset()
{
    // "good"-type words mark positive sentences, "bad"-type words negative.
    const std::vector<std::string> pos{"w0", "w1", "w2"}, neg{"w3", "w4", "w5"}, filler{"w6", "w7", "w8", "w9"};
    SeededRng rng(99);
    LabeledDataset ds;
    for (int i = 0; i < 20; ++i) {
        const bool positive = i % 2 == 0;
        Tokens t;
        for (int k = 0; k < 4; ++k)
            t.push_back(filler[rng.below(filler.size())]);
        t.insert(t.begin() + static_cast<std::ptrdiff_t>(rng.below(4)),
                 (positive ? pos : neg)[rng.below(3)]);
        ds.examples.push_back({t, positive ? Polarity::positive : Polarity::negative});
    }
    return ds;
}

}  // namespace

TEST(Lstm, ZeroWeightsAndStatesGiveZero)
{
    const auto p = LstmParams<double>::zeros(3, 4);
    const std::vector<double> x{1, -2, 3}, zero(4, 0.0);
    const auto s = lstm_step(p, std::span<const double>(x), std::span<const double>(zero), std::span<const double>(zero));
    EXPECT_EQ(s.h, zero);
}

TEST(Lstm, HiddenStateBounded)
{
    SeededRng rng(1);
    auto p = LstmParams<double>::zeros(2, 5);
    p.visit([&](std::string_view, Matrix<double>& t) { t = uniform_init<double>(t.rows(), t.cols(), 4.0, rng); });
    std::vector<double> h(5, 0.0), c(5, 0.0);
    for (int step = 0; step < 50; ++step) {
        const std::vector<double> x{rng.uniform(-5, 5), rng.uniform(-5, 5)};
        auto s = lstm_step(p, std::span<const double>(x), std::span<const double>(h), std::span<const double>(c));
        h = s.h;
        c = s.c;
        for (double v : h)
            EXPECT_LT(std::abs(v), 1.0);
    }
}

TEST(Lstm, StepGradientMatchesFiniteDifferences)
{
    SeededRng rng(2);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t E = 1 + rng.below(4), H = 1 + rng.below(4);
        auto p = LstmParams<double>::zeros(E, H);
        p.visit([&](std::string_view, Matrix<double>& t) { t = uniform_init<double>(t.rows(), t.cols(), 0.8, rng); });
        std::vector<double> x(E), h(H), c(H), a(H), b(H);
        for (auto* v : {&x, &h, &c, &a, &b})
            for (auto& e : *v)
                e = rng.uniform(-1, 1);
        auto loss = [&] {
            const auto s = lstm_step(p, std::span<const double>(x), std::span<const double>(h), std::span<const double>(c));
            return dot(a, s.h) + dot(b, s.c);
        };
        auto g = LstmParams<double>::zeros(E, H);
        std::vector<double> dx, dh, dc;
        lstm_backward(p, lstm_forward(p, std::span<const double>(x), std::span<const double>(h), std::span<const double>(c)),
                      std::span<const double>(a), std::span<const double>(b), g, dx, dh, dc);
        auto blocks = blocks_of(p, g);
        blocks.push_back({std::span<double>(x), dx});
        blocks.push_back({std::span<double>(h), dh});
        blocks.push_back({std::span<double>(c), dc});
        EXPECT_LE(gradient_check(loss, blocks), 1e-4) << "trial " << trial;
    }
}

TEST(BiLstm, BackwardBranchReadsReversedSentence)
{
    SeededRng rng(3);
    auto m = random_model(8, 3, 4, rng);
    m.params.backward = m.params.forward;
    const IdSeq ids{1, 4, 2, 7, 0};
    IdSeq rev(ids.rbegin(), ids.rend());
    SeededRng unused(0);
    const auto a = bilstm_forward(m, ids, false, unused);
    const auto b = bilstm_forward(m, rev, false, unused);
    const std::size_t H = 4;
    EXPECT_TRUE(std::equal(a.representation.begin() + H, a.representation.end(), b.representation.begin()));
    EXPECT_TRUE(std::equal(a.representation.begin(), a.representation.begin() + H, b.representation.begin() + H));
}

TEST(BiLstm, InferenceIsDeterministicAndOrderSensitive)
{
    SeededRng rng(4);
    auto m = random_model(8, 3, 4, rng);
    SeededRng r1(0), r2(5);
    const auto a = bilstm_forward(m, IdSeq{1, 2, 3}, false, r1);
    EXPECT_EQ(a.scores, bilstm_forward(m, IdSeq{1, 2, 3}, false, r2).scores);
    EXPECT_NE(a.scores, bilstm_forward(m, IdSeq{2, 1, 3}, false, r1).scores);
    EXPECT_THROW(bilstm_forward(m, IdSeq{}, false, r1), std::invalid_argument);
}

TEST(BiLstm, DropoutRateAndScaling)
{
    SeededRng rng(5);
    std::size_t zeros = 0;
    const std::size_t n = 100000;
    const auto mask = dropout_mask<double>(n, 0.2, rng);
    for (double v : mask) {
        if (v == 0)
            ++zeros;
        else
            EXPECT_DOUBLE_EQ(v, 1.25);
    }
    EXPECT_NEAR(static_cast<double>(zeros) / n, 0.2, 0.02);
}

TEST(BiLstm, FullModelGradientMatchesFiniteDifferences)
{
    SeededRng rng(6);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t V = 10, E = 1 + rng.below(3), H = 4;
        auto m = random_model(V, E, H, rng);
        std::vector<IdSeq> sents;
        std::vector<Polarity> labels;
        std::vector<std::vector<double>> masks;
        const auto batch = 1 + rng.below(3);
        for (std::size_t b = 0; b < batch; ++b) {
            sents.push_back(random_ids(1 + rng.below(4), V + 1, rng));
            labels.push_back(rng.bernoulli(0.5) ? Polarity::positive : Polarity::negative);
            masks.push_back(dropout_mask<double>(2 * H, 0.2, rng));
        }
        auto r = bilstm_batch_loss(m, sents, labels, &masks);
        const double err = gradient_check([&] { return bilstm_batch_loss(m, sents, labels, &masks).loss; },
                                          blocks_of(m.params, r.grads));
        EXPECT_LE(err, 1e-4) << "trial " << trial;
    }
}

TEST(BiLstm, UnknownRowIsMeanSgnsVector)
{
    SeededRng rng(7);
    const auto sgns = random_sgns(4, 3, rng);
    const auto emb = embeddings_from_sgns(sgns);
    ASSERT_EQ(emb.rows(), 5u);
    for (std::size_t j = 0; j < 3; ++j) {
        double mean = 0;
        for (std::size_t w = 0; w < 4; ++w)
            mean += sgns.w_in(w, j) / 4;
        EXPECT_NEAR(emb(4, j), mean, 1e-15);
        EXPECT_EQ(emb(1, j), sgns.w_in(1, j));
    }
    BiLstmModel<double> m;
    m.vocab = sgns.vocab;
    EXPECT_EQ(m.ids(Tokens{"w2", "zzz"}), (IdSeq{2, 4}));
}

TEST(BiLstmTrain, OverfitsToyDatasetDeterministically)
{
    SeededRng srng(8);
    const auto sgns = random_sgns(10, 8, srng);
    const auto ds = toy_dataset();
    BiLstmConfig cfg;
    cfg.hidden = 8;
    cfg.batch = 1;  // 20 sentences in one batch would give only 20 updates
    SeededRng r1(9), r2(9);
    BiLstmTrainLog log;
    const auto m = train_bilstm(ds, sgns, cfg, r1, &log);
    const auto again = train_bilstm(ds, sgns, cfg, r2);
    EXPECT_EQ(m.params.out_w, again.params.out_w);
    EXPECT_EQ(m.params.embedding, again.params.embedding);
    EXPECT_GE(evaluate_bilstm(m, ds).accuracy, 0.95);
    EXPECT_LT(log.epoch_loss.back(), log.epoch_loss.front());
}

TEST(BiLstmTrain, SingleClassRejected)
{
    SeededRng rng(10);
    const auto sgns = random_sgns(4, 3, rng);
    LabeledDataset ds;
    ds.examples.push_back({Tokens{"w0"}, Polarity::positive});
    ds.examples.push_back({Tokens{"w1"}, Polarity::positive});
    EXPECT_THROW(train_bilstm(ds, sgns, BiLstmConfig{}, rng), std::invalid_argument);
}
