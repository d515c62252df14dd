#include "support.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace pmc;
using namespace pmc::test;

TEST(Truncation, Examples)
{
    EXPECT_EQ(truncate(5.0, 2.0), 2.0);
    EXPECT_EQ(truncate(-3.0, 1.0), -1.0);
    EXPECT_EQ(truncate(0.3, 1.0), 0.3);
    EXPECT_EQ(pmc::remainder(7.0, 2.0), 5.0);
    EXPECT_EQ(pmc::remainder(-7.0, 2.0), -5.0);
    EXPECT_EQ(pmc::remainder(1.5, 2.0), 0.0);
    EXPECT_THROW(truncate(1.0, 0.0), std::invalid_argument);
    EXPECT_THROW(truncate(1.0, -2.0), std::invalid_argument);
}

TEST(Truncation, Properties)
{
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> s_dist(-50.0, 50.0), k_dist(0.01, 20.0);
    for (int i = 0; i < 2000; ++i) {
        double const s = s_dist(rng), k = k_dist(rng);
        double const t = truncate(s, k);
        EXPECT_LE(std::abs(t), std::min(std::abs(s), k));
        EXPECT_GE(t * s, 0.0);
        EXPECT_DOUBLE_EQ(t + pmc::remainder(s, k), s);
    }
}

TEST(SDeltaK, Examples)
{
    EXPECT_DOUBLE_EQ(s_delta_k(0.75, 1.0, 0.5), 0.5);
    EXPECT_EQ(s_delta_k(-2.0, 1.0, 0.5), -1.0);
    EXPECT_EQ(s_delta_k(0.3, 1.0, 0.5), 0.0);
    EXPECT_THROW(s_delta_k(0.0, 1.0, 2.0), std::invalid_argument);
    EXPECT_THROW(s_delta_k(0.0, 1.0, 0.0), std::invalid_argument);
}

TEST(SDeltaK, MonotoneAndOdd)
{
    for (double k : {0.5, 1.0, 3.0}) {
        for (double d : {0.1, 0.5}) {
            double prev = -2.0;
            for (double s = -5.0; s <= 5.0; s += 0.01) {
                double const v = s_delta_k(s, k, d);
                EXPECT_GE(v, prev);
                EXPECT_EQ(v, -s_delta_k(-s, k, d));
                prev = v;
            }
        }
    }
}

TEST(GTrunc, Examples)
{
    EXPECT_EQ(g_trunc(power_absorption(4.0, 1.0), 1.5, 2.0), 2.0);
    EXPECT_EQ(g_trunc(identity_absorption(), 2.0, 0.5), 0.5);
    EXPECT_NEAR(g_trunc(identity_absorption(), 1.01, 150.0), 100.0, 1e-10);
    EXPECT_THROW(g_trunc(identity_absorption(), 1.0, 1.0), std::invalid_argument);
    EXPECT_THROW(g_trunc(identity_absorption(), 0.5, 1.0), std::invalid_argument);
}

TEST(GTrunc, SignAndBound)
{
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> s_dist(-100.0, 100.0), p_dist(1.001, 3.0);
    for (auto const& g : {identity_absorption(), power_absorption(3.0, 2.0), arctan_absorption(), power_absorption(1.5, 0.5)}) {
        for (int i = 0; i < 500; ++i) {
            double const s = s_dist(rng), p = p_dist(rng);
            double const v = g_trunc(g, p, s);
            EXPECT_GE(v * s, 0.0);
            EXPECT_LE(std::abs(v), 1.0 / (p - 1.0) * (1.0 + 1e-15));
        }
    }
}

TEST(Absorption, RegistryAndAntiderivatives)
{
    EXPECT_EQ(absorption_from_name("identity").name(), "identity");
    EXPECT_EQ(absorption_from_name(" power( 3 , 2 ) ").name(), "power");
    EXPECT_EQ(absorption_from_name("atan").name(), "atan");
    EXPECT_EQ(absorption_from_name("zero").name(), "zero");
    EXPECT_THROW(absorption_from_name("cubic"), std::invalid_argument);
    EXPECT_THROW(absorption_from_name("power(3)"), std::invalid_argument);
    EXPECT_THROW(power_absorption(1.0, 1.0), std::invalid_argument);
    EXPECT_THROW(linear_absorption(0.0), std::invalid_argument);

    auto const p = power_absorption(3.0, 2.0);
    EXPECT_DOUBLE_EQ(p(-2.0), -8.0);
    EXPECT_DOUBLE_EQ(p.antiderivative(-2.0), 16.0 / 3.0);
    EXPECT_DOUBLE_EQ(p.derivative(2.0), 8.0);
}

TEST(Absorption, DeclaredFlagsMatchSpotChecks)
{
    for (auto const& g : {identity_absorption(), power_absorption(3.0, 1.0), power_absorption(1.5, 2.0), linear_absorption(20.0),
                          arctan_absorption(), zero_absorption()}) {
        auto const chk = verify_flags(g);
        EXPECT_TRUE(chk.consistent_with(g.flags())) << g.name();
        EXPECT_TRUE(chk.messages.empty()) << g.name();
    }
    EXPECT_TRUE(identity_absorption().flags().coercive);
    EXPECT_TRUE(power_absorption(2.0, 1.0).flags().coercive);
    EXPECT_FALSE(arctan_absorption().flags().coercive);
    EXPECT_FALSE(verify_flags(arctan_absorption()).coercive_sampled);
}

TEST(Absorption, MisdeclaredFlagsAreCaught)
{
    AbsorptionSpec wrong_sign("neg", [](double s) { return -s; }, [](double s) { return -0.5 * s * s; }, [](double) { return -1.0; },
                              AbsorptionFlags{true, true, false, false});
    EXPECT_FALSE(verify_flags(wrong_sign).sign_ok);

    AbsorptionSpec bad_growth("lin", [](double s) { return s; }, [](double s) { return 0.5 * s * s; }, [](double) { return 1.0; },
                              AbsorptionFlags{}, PowerGrowth{1.0, 3.0});
    EXPECT_FALSE(verify_flags(bad_growth).growth_ok);
}

TEST(Absorption, QuadratureFallbackForAntiderivative)
{
    AbsorptionSpec g("cube", [](double s) { return s * s * s; }, nullptr, nullptr, AbsorptionFlags{});
    EXPECT_NEAR(g.antiderivative(2.0), 4.0, 1e-10);
    EXPECT_NEAR(g.antiderivative(-1.5), std::pow(1.5, 4) / 4.0, 1e-10);
    EXPECT_NEAR(g.derivative(1.0), 3.0, 1e-6);
}

TEST(TruncatedAbsorption, AntiderivativeMatchesQuadrature)
{
    for (auto const& g : {identity_absorption(), power_absorption(3.0, 1.0), arctan_absorption()}) {
        for (double cap : {0.5, 2.0, 100.0}) {
            TruncatedAbsorption const gp(g, cap);
            for (double s : {-7.0, -1.0, -0.2, 0.0, 0.3, 1.7, 9.0}) {
                double const ref = detail::integrate_1d([&](double t) { return gp.value(t); }, 0.0, s);
                EXPECT_NEAR(gp.antiderivative(s), ref, 1e-9 * (1.0 + std::abs(ref))) << g.name() << " cap " << cap << " s " << s;
                EXPECT_LE(std::abs(gp.value(s)), cap);
            }
        }
    }
    TruncatedAbsorption const unbounded(identity_absorption(), std::numeric_limits<double>::infinity());
    EXPECT_EQ(unbounded.value(1e6), 1e6);
}

TEST(Datum, TruncationExamples)
{
    auto const f = datum_trunc(DatumSpec::constant(5.0), 3.0);
    EXPECT_EQ(f.evaluate({0.2, 0.4}), 3.0);

    auto g = radial(0.01, 1.0, 101, 3);
    DatumSpec const inv([](Point const& x) { return 1.0 / x[0]; }, IntegrabilityClass::LNweak);
    auto const t = datum_trunc(inv, 10.0).sample(g);
    for (std::size_t k = 0; k < g->node_count(); ++k) EXPECT_DOUBLE_EQ(t[k], std::min(1.0 / g->coordinate(k), 10.0));
    EXPECT_THROW(datum_trunc(inv, 0.0), std::invalid_argument);

    // Nested truncations keep the smaller cap.
    EXPECT_EQ(datum_trunc(datum_trunc(inv, 4.0), 8.0).evaluate({0.01, 0.0}), 4.0);
}

TEST(Datum, TruncatedL1NormsIncreaseToTheFullNorm)
{
    // f = r^{-1/2} on (0,1); int_0^1 r^{-1/2} dr = 2.
    auto g = interval(1e-8, 1.0, 200001);
    DatumSpec const f([](Point const& x) { return 1.0 / std::sqrt(x[0]); }, IntegrabilityClass::L1);
    double prev = 0.0;
    for (double n : {1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0, 128.0}) {
        double const v = integrate(datum_trunc(f, n).sample(g));
        // int_0^1 min(r^{-1/2}, n) dr = 2 - 1/n
        EXPECT_NEAR(v, 2.0 - 1.0 / n, 1e-4);
        EXPECT_GE(v, prev);
        prev = v;
    }
}

TEST(Datum, SampledDatumRespectsGrid)
{
    auto g1 = interval(0.0, 1.0, 5);
    auto g2 = interval(0.0, 1.0, 6);
    DatumSpec const s(ScalarField(g1, 2.0));
    EXPECT_FALSE(s.is_analytic());
    EXPECT_EQ(s.sample(g1)[3], 2.0);
    EXPECT_THROW(s.sample(g2), std::invalid_argument);
    EXPECT_EQ(to_string(IntegrabilityClass::LNweak), "LNweak");
}
