#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "gradcheck.hpp"
#include "polarity/sdae.hpp"

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

SdaeModel<double> random_model(std::size_t V, std::size_t E, std::size_t H, SeededRng& rng, double scale = 0.6)
{
    SdaeModel<double> m;
    m.vocab = toy_vocab(V);
    m.config.embed = E;
    m.config.hidden = H;
    m.params = SdaeParams<double>::zeros(V, E, H);
    m.params.visit([&](std::string_view, Matrix<double>& t) { t = uniform_init<double>(t.rows(), t.cols(), scale, rng); });
    return m;
}

IdSeq random_ids(std::size_t n, std::size_t V, SeededRng& rng)
{
    IdSeq ids(n);
    for (auto& id : ids)
        id = static_cast<WordId>(rng.below(V));
    return ids;
}

std::vector<ParamBlock> blocks_of(SdaeParams<double>& p, SdaeParams<double>& g)
{
    std::vector<std::vector<double>> grads;
    g.visit([&](std::string_view, Matrix<double>& t) { grads.push_back(t.data()); });
    std::vector<ParamBlock> blocks;
    std::size_t k = 0;
    p.visit([&](std::string_view, Matrix<double>& t) { blocks.push_back({t.flat(), grads[k++]}); });
    return blocks;
}

std::vector<ParamBlock> blocks_of(GruParams<double>& p, GruParams<double>& g)
{
    std::vector<std::vector<double>> grads;
    g.visit([&](std::string_view, Matrix<double>& t) { grads.push_back(t.data()); });
    std::vector<ParamBlock> blocks;
    std::size_t k = 0;
    p.visit([&](std::string_view, Matrix<double>& t) { blocks.push_back({t.flat(), grads[k++]}); });
    return blocks;
}

std::vector<Matrix<double>> flatten(const SdaeParams<double>& p)
{
    std::vector<Matrix<double>> out;
    p.visit([&](std::string_view, const Matrix<double>& t) { out.push_back(t); });
    return out;
}

// Sentences drawn from a small vocabulary for copy-task training.
std::vector<std::vector<IdSeq>> copy_corpus(std::size_t n, std::size_t V, SeededRng& rng)
{
    std::vector<IdSeq> sents;
    for (std::size_t i = 0; i < n; ++i)
        sents.push_back(random_ids(2 + rng.below(3), V, rng));
    return {sents};
}

}  // namespace

TEST(Corrupt, ZeroProbabilitiesAreIdentity)
{
    SeededRng rng(1);
    const CorruptionConfig none{0.0, 0.0};
    for (int trial = 0; trial < 200; ++trial) {
        const auto s = random_ids(rng.below(12), 9, rng);
        EXPECT_EQ(corrupt(s, none, rng), s);
    }
}

TEST(Corrupt, SwapEveryPairLeftToRight)
{
    SeededRng rng(1);
    const CorruptionConfig swap_all{0.0, 1.0};
    EXPECT_EQ(corrupt(Tokens{"a", "b", "c", "d"}, swap_all, rng), (Tokens{"b", "a", "d", "c"}));
    EXPECT_EQ(corrupt(Tokens{"a", "b", "c"}, swap_all, rng), (Tokens{"b", "a", "c"}));
    EXPECT_EQ(corrupt(Tokens{"a"}, swap_all, rng), (Tokens{"a"}));
}

TEST(Corrupt, SwapsPreserveMultiset)
{
    SeededRng rng(2);
    for (int trial = 0; trial < 200; ++trial) {
        auto s = random_ids(rng.below(10), 6, rng);
        auto c = corrupt(s, CorruptionConfig{0.0, rng.uniform()}, rng);
        std::sort(s.begin(), s.end());
        std::sort(c.begin(), c.end());
        EXPECT_EQ(c, s);
    }
}

TEST(Corrupt, EmpiricalRates)
{
    SeededRng rng(3);
    const CorruptionConfig cfg{0.1, 0.1};
    std::size_t tokens = 0, deleted = 0, pairs = 0, swapped = 0;
    while (tokens < 100000) {
        CorruptionStats st;
        corrupt(random_ids(20, 50, rng), cfg, rng, &st);
        tokens += st.input_tokens;
        deleted += st.deleted;
        pairs += st.pairs;
        swapped += st.swapped;
    }
    EXPECT_NEAR(static_cast<double>(deleted) / static_cast<double>(tokens), 0.1, 0.01);
    EXPECT_NEAR(static_cast<double>(swapped) / static_cast<double>(pairs), 0.1, 0.02);
}

TEST(Corrupt, FullDeletionKeepsOneToken)
{
    SeededRng rng(4);
    const Tokens s{"a", "b", "c"};
    CorruptionStats st;
    const auto out = corrupt(s, CorruptionConfig{1.0, 0.0}, rng, &st);
    ASSERT_EQ(out.size(), 1u);
    EXPECT_NE(std::find(s.begin(), s.end(), out[0]), s.end());
    EXPECT_TRUE(st.restored_one);
    EXPECT_TRUE(corrupt(Tokens{}, CorruptionConfig{1.0, 0.0}, rng).empty());
}

TEST(Corrupt, DeterministicAndValidated)
{
    SeededRng a(5), b(5);
    const auto s = random_ids(30, 8, a);
    random_ids(30, 8, b);
    EXPECT_EQ(corrupt(s, CorruptionConfig{}, a), corrupt(s, CorruptionConfig{}, b));
    EXPECT_THROW(corrupt(s, CorruptionConfig{1.5, 0.0}, a), std::invalid_argument);
}

TEST(Gru, ZeroWeightsZeroStateStayZero)
{
    const auto p = GruParams<double>::zeros(3, 4);
    const std::vector<double> x{1, 2, 3}, h(4, 0.0);
    EXPECT_EQ(gru_step(p, std::span<const double>(x), std::span<const double>(h)), std::vector<double>(4, 0.0));
}

TEST(Gru, StateStaysInOpenUnitInterval)
{
    SeededRng rng(6);
    auto p = GruParams<double>::zeros(3, 5);
    p.visit([&](std::string_view, Matrix<double>& t) { t = uniform_init<double>(t.rows(), t.cols(), 3.0, rng); });
    std::vector<double> h(5, 0.0);
    for (int step = 0; step < 50; ++step) {
        std::vector<double> x{rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(-5, 5)};
        h = gru_step(p, std::span<const double>(x), std::span<const double>(h));
        for (double v : h) {
            EXPECT_GT(v, -1.0);
            EXPECT_LT(v, 1.0);
        }
    }
}

TEST(Gru, StepGradientMatchesFiniteDifferences)
{
    SeededRng rng(7);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t E = 1 + rng.below(4), H = 1 + rng.below(5);
        auto p = GruParams<double>::zeros(E, H);
        p.visit([&](std::string_view, Matrix<double>& t) { t = uniform_init<double>(t.rows(), t.cols(), 0.8, rng); });
        std::vector<double> x(E), h(H), c(H);
        for (auto& v : x)
            v = rng.uniform(-1, 1);
        for (auto& v : h)
            v = rng.uniform(-0.9, 0.9);
        for (auto& v : c)
            v = rng.uniform(-1, 1);
        auto loss = [&] { return dot(c, gru_step(p, std::span<const double>(x), std::span<const double>(h))); };
        auto g = GruParams<double>::zeros(E, H);
        std::vector<double> dx, dh;
        gru_backward(p, gru_forward(p, std::span<const double>(x), std::span<const double>(h)),
                     std::span<const double>(c), g, dx, dh);
        auto blocks = blocks_of(p, g);
        blocks.push_back({std::span<double>(x), dx});
        blocks.push_back({std::span<double>(h), dh});
        EXPECT_LE(gradient_check(loss, blocks), 1e-4) << "trial " << trial;
    }
}

TEST(SdaeLoss, ZeroParamsGiveLogOfClassCount)
{
    SeededRng rng(8);
    auto m = random_model(6, 3, 4, rng);
    m.params.visit([](std::string_view, Matrix<double>& t) { t.fill(0); });
    EXPECT_NEAR(sdae_loss(m, IdSeq{1, 2, 3}, IdSeq{2}).loss, std::log(7.0), 1e-12);
}

TEST(SdaeLoss, Errors)
{
    SeededRng rng(8);
    auto m = random_model(4, 2, 3, rng);
    EXPECT_THROW(sdae_loss(m, IdSeq{}, IdSeq{1}), std::invalid_argument);
    EXPECT_THROW(sdae_loss(m, IdSeq{1}, IdSeq{}), std::invalid_argument);
    EXPECT_THROW(sdae_loss(m, IdSeq{4}, IdSeq{1}), std::out_of_range);
}

TEST(SdaeLoss, FullModelGradientMatchesFiniteDifferences)
{
    SeededRng rng(9);
    for (int trial = 0; trial < 20; ++trial) {
        auto m = random_model(5, 3, 4, rng);
        const auto original = random_ids(1 + rng.below(4), 5, rng);
        const auto noisy = corrupt(original, CorruptionConfig{0.3, 0.5}, rng);
        auto r = sdae_loss(m, original, noisy);
        const double err =
            gradient_check([&] { return sdae_loss(m, original, noisy, false).loss; }, blocks_of(m.params, r.grads));
        EXPECT_LE(err, 1e-4) << "trial " << trial;
    }
}

TEST(SdaeTrain, CopyTaskLearnsAndIsDeterministic)
{
    SeededRng data_rng(10);
    SentenceStream stream(copy_corpus(60, 6, data_rng));
    SdaeConfig cfg;
    cfg.embed = 6;
    cfg.hidden = 24;
    cfg.lr = 0.5;
    cfg.epochs = 60;
    cfg.corruption = {0.0, 0.0};
    TrainingLog log;
    SeededRng r1(11), r2(11);
    auto m = train_sdae(stream, toy_vocab(6), cfg, r1, &log);
    auto again = train_sdae(stream, toy_vocab(6), cfg, r2);
    EXPECT_EQ(flatten(m.params), flatten(again.params));
    EXPECT_GE(reconstruction_accuracy(m, stream), 0.9);
    EXPECT_LT(log.epoch_loss.back(), 0.8 * log.epoch_loss.front());
}

TEST(SdaeTrain, CleanInputReconstructsBetterThanCorrupted)
{
    SeededRng data_rng(12);
    SentenceStream stream(copy_corpus(60, 6, data_rng));
    SdaeConfig cfg;
    cfg.embed = 6;
    cfg.hidden = 24;
    cfg.lr = 0.5;
    cfg.epochs = 40;
    cfg.corruption = {0.1, 0.1};
    SeededRng rng(13);
    auto m = train_sdae(stream, toy_vocab(6), cfg, rng);
    double clean = 0, noisy = 0;
    SeededRng crng(14);
    for (const auto& s : stream.sentences()) {
        clean += sdae_loss(m, s, s, false).loss;
        noisy += sdae_loss(m, s, corrupt(s, CorruptionConfig{0.5, 1.0}, crng), false).loss;
    }
    EXPECT_LE(clean, noisy);
}

TEST(SdaeTrain, EmptyStreamRejected)
{
    SeededRng rng(1);
    EXPECT_THROW(train_sdae(SentenceStream{}, toy_vocab(3), SdaeConfig{}, rng), std::invalid_argument);
}

TEST(SdaeEncode, OrderSensitiveAndDeterministic)
{
    SeededRng rng(15);
    auto m = random_model(5, 3, 4, rng);
    const auto ab = encode_sdae(m, Tokens{"w0", "w1"}).vector;
    EXPECT_NE(ab, encode_sdae(m, Tokens{"w1", "w0"}).vector);
    EXPECT_EQ(ab, encode_sdae(m, Tokens{"w0", "w1"}).vector);
}

TEST(SdaeEncode, SingleTokenIsOneStepFromZero)
{
    SeededRng rng(16);
    auto m = random_model(5, 3, 4, rng);
    const std::vector<double> zero(4, 0.0);
    EXPECT_EQ(encode_sdae(m, Tokens{"w2"}).vector,
              gru_step(m.params.encoder, std::span<const double>(m.params.embedding.row(2)),
                       std::span<const double>(zero)));
    EXPECT_THROW(encode_sdae(m, Tokens{}), std::invalid_argument);
    const auto oov = encode_sdae(m, Tokens{"zzz"});
    EXPECT_TRUE(oov.empty_warning());
    EXPECT_EQ(oov.vector, zero);
}
