#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "polarity/numerics.hpp"

using namespace polarity;

TEST(Sigmoid, ZeroIsHalf) { EXPECT_DOUBLE_EQ(sigmoid(0.0), 0.5); }

TEST(Sigmoid, SaturatesWithoutOverflow)
{
    EXPECT_GE(sigmoid(-1000.0), 0.0);
    EXPECT_LT(sigmoid(-1000.0), 1e-300);
    EXPECT_DOUBLE_EQ(sigmoid(1000.0), 1.0);
    EXPECT_TRUE(std::isfinite(log_sigmoid(-1000.0)));
    EXPECT_NEAR(log_sigmoid(-1000.0), -1000.0, 1e-9);
}

TEST(Sigmoid, Symmetry)
{
    SeededRng rng(3);
    for (int i = 0; i < 1000; ++i) {
        const double x = rng.uniform(-50, 50);
        EXPECT_NEAR(sigmoid(x) + sigmoid(-x), 1.0, 1e-15);
    }
}

TEST(Softmax, UniformForEqualInputs)
{
    auto p = softmax(std::vector<double>{0, 0});
    EXPECT_DOUBLE_EQ(p[0], 0.5);
    EXPECT_DOUBLE_EQ(p[1], 0.5);
}

TEST(Softmax, LogInputsGiveProportions)
{
    auto p = softmax(std::vector<double>{std::log(1.0), std::log(2.0), std::log(3.0)});
    EXPECT_NEAR(p[0], 1.0 / 6, 1e-15);
    EXPECT_NEAR(p[1], 2.0 / 6, 1e-15);
    EXPECT_NEAR(p[2], 3.0 / 6, 1e-15);
}

TEST(Softmax, ShiftInvariance)
{
    std::vector<double> v{1.5, -2.0, 0.25, 7.0};
    auto a = softmax(v);
    for (double& x : v)
        x += 123.0;
    auto b = softmax(v);
    for (std::size_t i = 0; i < v.size(); ++i)
        EXPECT_NEAR(a[i], b[i], 1e-14);
}

TEST(Softmax, PropertySumsToOneAndNonNegative)
{
    SeededRng rng(11);
    for (int trial = 0; trial < 500; ++trial) {
        std::vector<double> v(1 + rng.below(40));
        const double scale = std::pow(10.0, rng.uniform(-3, 3));
        for (double& x : v)
            x = scale * rng.uniform(-1, 1);
        auto p = softmax(v);
        double s = 0;
        for (double x : p) {
            EXPECT_GE(x, 0.0);
            s += x;
        }
        EXPECT_NEAR(s, 1.0, 1e-12);
    }
}

TEST(Softmax, EmptyThrows) { EXPECT_THROW(softmax(std::vector<double>{}), std::invalid_argument); }

TEST(Xavier, WithinBound)
{
    SeededRng rng(1);
    auto m = xavier_init(30, 70, rng);
    const double bound = std::sqrt(6.0 / 100.0);
    for (double v : m.flat()) {
        EXPECT_LE(v, bound);
        EXPECT_GE(v, -bound);
    }
}

TEST(Xavier, SameSeedSameMatrix)
{
    SeededRng a(42), b(42);
    EXPECT_EQ(xavier_init(10, 5, a), xavier_init(10, 5, b));
}

TEST(Xavier, EmpiricalMeanNearZero)
{
    SeededRng rng(5);
    auto m = xavier_init(1000, 100, rng);  // 1e5 draws
    double s = 0;
    for (double v : m.flat())
        s += v;
    EXPECT_NEAR(s / static_cast<double>(m.size()), 0.0, 0.01);
}

TEST(Xavier, RejectsZeroShape)
{
    SeededRng rng(1);
    EXPECT_THROW(xavier_init(0, 3, rng), std::invalid_argument);
}

TEST(Rng, StreamIsFixed)
{
    // mt19937_64 with default seed produces 9981545732273789042 as its
    // 10000th output per the C++ standard; check our wrapper exposes it.
    SeededRng rng(5489u);
    std::uint64_t v = 0;
    for (int i = 0; i < 10000; ++i)
        v = rng.next_u64();
    EXPECT_EQ(v, 9981545732273789042ULL);
}

TEST(Rng, BelowIsInRange)
{
    SeededRng rng(9);
    for (int i = 0; i < 10000; ++i)
        EXPECT_LT(rng.below(7), 7u);
}

TEST(Sgd, ZeroGradientLeavesParam)
{
    Matrix<double> p(2, 3, 1.5), g(2, 3, 0.0);
    auto before = p;
    sgd_step(p, g, 0.1);
    EXPECT_EQ(p, before);
}

TEST(Sgd, Arithmetic)
{
    Matrix<double> p(1, 1, 1.0), g(1, 1, 1.0);
    sgd_step(p, g, 0.01);
    EXPECT_DOUBLE_EQ(p(0, 0), 0.99);
}

TEST(Sgd, TwoStepsEqualOneSummedStep)
{
    SeededRng rng(2);
    auto p1 = xavier_init(4, 4, rng);
    auto g1 = xavier_init(4, 4, rng);
    auto g2 = xavier_init(4, 4, rng);
    auto p2 = p1;
    sgd_step(p1, g1, 0.05);
    sgd_step(p1, g2, 0.05);
    Matrix<double> gs = g1;
    axpy(1.0, g2.flat(), gs.flat());
    sgd_step(p2, gs, 0.05);
    for (std::size_t i = 0; i < p1.size(); ++i)
        EXPECT_NEAR(p1.flat()[i], p2.flat()[i], 1e-15);
}

TEST(Sgd, ShapeMismatchThrows)
{
    Matrix<double> p(2, 2), g(2, 3);
    EXPECT_THROW(sgd_step(p, g, 0.1), std::invalid_argument);
}

TEST(FiniteDifference, QuadraticGradient)
{
    auto f = [](std::span<const double> x) { return x[0] * x[0] + x[1] * x[1]; };
    std::vector<double> x{1, 2};
    auto g = finite_difference_gradient(f, x, 1e-5);
    EXPECT_NEAR(g[0], 2.0, 1e-6);
    EXPECT_NEAR(g[1], 4.0, 1e-6);
}

TEST(FiniteDifference, ConstantGivesZero)
{
    auto g = finite_difference_gradient([](std::span<const double>) { return 3.0; }, std::vector<double>{1, 2, 3});
    for (double v : g)
        EXPECT_EQ(v, 0.0);
}

TEST(FiniteDifference, LinearRecoversCoefficients)
{
    const std::vector<double> c{0.5, -2.0, 3.25};
    auto f = [&](std::span<const double> x) { return c[0] * x[0] + c[1] * x[1] + c[2] * x[2]; };
    auto g = finite_difference_gradient(f, std::vector<double>{0.1, 0.2, 0.3}, 1e-3);
    for (std::size_t i = 0; i < c.size(); ++i)
        EXPECT_NEAR(g[i], c[i], 1e-10);
}

TEST(FiniteDifference, NonFiniteThrows)
{
    auto f = [](std::span<const double> x) { return x[0] > 0 ? std::nan("") : 0.0; };
    EXPECT_THROW(finite_difference_gradient(f, std::vector<double>{0.0}, 1e-5), std::domain_error);
}

TEST(Serialization, BinaryRoundTripBothDtypes)
{
    SeededRng rng(8);
    auto m = xavier_init(3, 5, rng);
    std::stringstream ss;
    write_matrix(ss, m);
    EXPECT_EQ(ss.str().size(), 4u + 8 + 8 + 4 + 15 * 8);
    EXPECT_EQ(read_matrix<double>(ss), m);

    Matrix<float> mf(2, 2, std::vector<float>{1.f, -2.5f, 3.f, 0.125f});
    std::stringstream sf;
    write_matrix(sf, mf);
    auto back = read_matrix<double>(sf);
    EXPECT_EQ(back(0, 1), -2.5);
    EXPECT_EQ(back(1, 1), 0.125);
}

TEST(Serialization, HeaderIsLittleEndian)
{
    Matrix<double> m(1, 2, std::vector<double>{1.0, 2.0});
    std::stringstream ss;
    write_matrix(ss, m);
    const std::string s = ss.str();
    EXPECT_EQ(s.substr(0, 4), "PPMX");
    EXPECT_EQ(static_cast<unsigned char>(s[4]), 1u);  // rows
    EXPECT_EQ(static_cast<unsigned char>(s[12]), 2u);  // cols
    EXPECT_EQ(static_cast<unsigned char>(s[20]), 2u);  // dtype f64
    // 1.0 = 0x3FF0000000000000, last payload byte of the first value
    EXPECT_EQ(static_cast<unsigned char>(s[24 + 7]), 0x3Fu);
}

TEST(Serialization, BadMagicThrows)
{
    std::stringstream ss("XXXX");
    EXPECT_THROW(read_matrix<double>(ss), std::runtime_error);
}

TEST(Serialization, TsvExport)
{
    Matrix<double> m(2, 2, std::vector<double>{1.0, 0.5, -2.0, 3.0});
    std::ostringstream os;
    write_matrix_tsv(os, m);
    EXPECT_EQ(os.str(), "1\t0.5\n-2\t3\n");
}
