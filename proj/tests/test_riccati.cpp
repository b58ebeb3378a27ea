#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"

using namespace twistring;

namespace {

MeanField random_field(std::mt19937_64& rng, double scale = 0.6)
{
    std::normal_distribution<double> n(0.0, scale);
    MeanField w;
    for (auto& c : w.w_hat) c = cplx(n(rng), n(rng));
    return w;
}

cplx random_disk_point(std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> r(0.0, 0.95), ang(0.0, two_pi);
    return std::polar(std::sqrt(r(rng)), ang(rng));
}

ModelParams ring_params()
{
    ModelParams p;
    p.K2 = 1.0;
    p.K3 = 0.3;
    p.A = 0.9;
    p.B = 0.1;
    p.alpha2 = std::numbers::pi / 2 - 0.1;
    p.alpha3 = 0.4;
    return p;
}

} // namespace

TEST(Riccati, PreservesUnitModulus)
{
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> ang(0.0, two_pi), rho(-4.0, 4.0);
    for (int i = 0; i < 50; ++i) {
        const auto w = random_field(rng);
        const double ratio = rho(rng);
        std::vector<double> xs;
        for (int j = 1; j <= 20; ++j) xs.push_back(j / 20.0);
        for (cplx a : riccati_samples(w, ratio, std::polar(1.0, ang(rng)), 0.0, xs))
            EXPECT_NEAR(std::abs(a), 1.0, 1e-8);
    }
}

TEST(Riccati, MatchesRk4Oracle)
{
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> rho(-4.0, 4.0);
    for (int i = 0; i < 10; ++i) {
        const auto w = random_field(rng);
        const double ratio = rho(rng);
        const cplx a0 = random_disk_point(rng);
        EXPECT_LT(std::abs(riccati_solve(w, ratio, a0, 0.0, 1.0) - oracle::riccati_rk4(w, ratio, a0, 0.0, 1.0)), 1e-9);
        EXPECT_LT(std::abs(riccati_solve(w, ratio, a0, 1.0, 0.0) - oracle::riccati_rk4(w, ratio, a0, 1.0, 0.0)), 1e-9);
    }
}

TEST(Riccati, RejectsNonFiniteRatio)
{
    std::mt19937_64 rng(3);
    const auto w = random_field(rng);
    EXPECT_THROW(riccati_solve(w, std::numeric_limits<double>::infinity(), 0.0, 0.0, 1.0), NumericalError);
}

TEST(Mobius, PeriodMapPredictsHeldOutOrbits)
{
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> rho(-4.0, 4.0), ang(0.0, two_pi);
    for (int i = 0; i < 30; ++i) {
        const auto w = random_field(rng);
        const double ratio = rho(rng);
        const auto m = mobius_of(w, ratio);
        for (int j = 0; j < 3; ++j) {
            const cplx z = j == 0 ? std::polar(1.0, ang(rng)) : random_disk_point(rng);
            EXPECT_LT(std::abs(m(z) - riccati_solve(w, ratio, z, 0.0, 1.0)), 1e-7);
        }
    }
}

TEST(Mobius, FeasibilityCriterionClassifiesFixedPoints)
{
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> mag(0.0, 0.99), ang(0.0, two_pi);
    int on_circle = 0, interior = 0;
    for (int i = 0; i < 2000; ++i) {
        const MobiusMap m{std::polar(mag(rng), ang(rng)), ang(rng)};
        if (std::abs(m.margin()) < 1e-6) continue;
        const auto [z1, z2] = oracle::mobius_fixed_points(m);
        const bool both_unit = std::abs(std::abs(z1) - 1.0) < 1e-8 && std::abs(std::abs(z2) - 1.0) < 1e-8;
        const bool one_inside = std::min(std::abs(z1), std::abs(z2)) < 1.0 - 1e-8;
        if (m.margin() > 0.0) {
            EXPECT_TRUE(both_unit) << "margin " << m.margin();
            ++on_circle;
        } else {
            EXPECT_TRUE(one_inside) << "margin " << m.margin();
            ++interior;
        }
    }
    EXPECT_GT(on_circle, 100);
    EXPECT_GT(interior, 100);
}

TEST(Mobius, FixedPointsAndMultipliers)
{
    std::mt19937_64 rng(6);
    // theta in (-pi, pi], the range produced by mobius_of.
    std::uniform_real_distribution<double> mag(0.05, 0.99), ang(-std::numbers::pi, std::numbers::pi);
    int checked = 0;
    while (checked < 200) {
        const MobiusMap m{std::polar(mag(rng), ang(rng)), ang(rng)};
        if (m.margin() < 1e-3) {
            if (m.margin() <= 0.0) {
                try {
                    mobius_fixed_point(m, 1, FixedPointSide::stable);
                    ADD_FAILURE() << "expected OperatorUndefined";
                } catch (const NumericalError& e) {
                    EXPECT_EQ(e.kind(), Failure::OperatorUndefined);
                }
            }
            continue;
        }
        const auto [o1, o2] = oracle::mobius_fixed_points(m);
        for (int sgn : {1, -1})
            for (auto side : {FixedPointSide::stable, FixedPointSide::unstable}) {
                const cplx z = mobius_fixed_point(m, sgn, side);
                EXPECT_LT(std::abs(m(z) - z), 1e-10);
                EXPECT_LT(std::min(std::abs(z - o1), std::abs(z - o2)), 1e-10);
                const double mult = mobius_multiplier(m, z);
                if (fixed_point_attracts_forward(sgn, side))
                    EXPECT_LT(mult, 1.0);
                else
                    EXPECT_GT(mult, 1.0);
            }
        EXPECT_NE(mobius_fixed_point(m, 1, FixedPointSide::stable), mobius_fixed_point(m, 1, FixedPointSide::unstable));
        EXPECT_EQ(mobius_fixed_point(m, 1, FixedPointSide::stable), mobius_fixed_point(m, -1, FixedPointSide::unstable));
        ++checked;
    }
}

TEST(SolutionOperator, BothSidesReturnPeriodicFixedPoints)
{
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> rho(-4.0, 4.0);
    int checked = 0;
    for (int i = 0; i < 400 && checked < 20; ++i) {
        const auto w = random_field(rng);
        const double ratio = rho(rng);
        const auto m = mobius_of(w, ratio);
        if (m.margin() < 1e-2) continue;
        for (int sgn : {1, -1}) {
            const auto u = solution_operator_U(w, ratio, sgn, 64);
            const auto v = unstable_solution_operator(w, ratio, sgn, 64);
            for (const auto* prof : {&u, &v}) {
                ASSERT_EQ(prof->a.size(), 64u);
                EXPECT_LT(std::abs(prof->map(prof->a[0]) - prof->a[0]), 1e-8);
                EXPECT_LT(std::abs(riccati_solve(w, ratio, prof->a[0], 0.0, 1.0) - prof->a[0]), 1e-8);
                EXPECT_LT(std::abs(riccati_solve(w, ratio, prof->a[0], 0.0, 0.5) - prof->a[32]), 1e-8);
                for (cplx a : prof->a) EXPECT_NEAR(std::abs(a), 1.0, 1e-8);
            }
            EXPECT_GT(std::abs(u.a[0] - v.a[0]), 1e-6);
        }
        ++checked;
    }
    EXPECT_EQ(checked, 20);
}

TEST(SolutionOperator, UndefinedWithoutUnitCircleFixedPoints)
{
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> rho(-4.0, 4.0);
    int seen = 0;
    for (int i = 0; i < 400 && seen < 5; ++i) {
        const auto w = random_field(rng);
        const double ratio = rho(rng);
        if (mobius_of(w, ratio).margin() > -1e-3) continue;
        try {
            solution_operator_U(w, ratio, 1, 16);
            ADD_FAILURE();
        } catch (const NumericalError& e) {
            EXPECT_EQ(e.kind(), Failure::OperatorUndefined);
        }
        ++seen;
    }
    EXPECT_EQ(seen, 5);
}

TEST(WaveMoments, MatchQuadratureOfProfile)
{
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> rho(-4.0, 4.0);
    int checked = 0;
    for (int i = 0; i < 400 && checked < 5; ++i) {
        const auto w = random_field(rng);
        const double ratio = rho(rng);
        if (mobius_of(w, ratio).margin() < 1e-2) continue;
        const int sgn = ratio > 0 ? 1 : -1;
        const auto mom = wave_moments(w, ratio, sgn);
        const auto prof = solution_operator_U(w, ratio, sgn, 4096);
        for (int k = 0; k < 5; ++k) {
            cplx psi{}, phi{};
            for (std::size_t j = 0; j < prof.a.size(); ++j) {
                const double b = basis(static_cast<double>(j) / 4096.0)[k];
                psi += prof.a[j] * b;
                phi += prof.a[j] * prof.a[j] * b;
            }
            EXPECT_LT(std::abs(psi / 4096.0 - mom.psi[k]), 1e-8);
            EXPECT_LT(std::abs(phi / 4096.0 - mom.phi[k]), 1e-8);
        }
        ++checked;
    }
    EXPECT_EQ(checked, 5);
}

TEST(Convolve, MatchesDirectQuadrature)
{
    const auto p = ring_params();
    const std::size_t M = 48;
    std::mt19937_64 rng(10);
    std::normal_distribution<double> n;
    std::vector<cplx> u(M);
    for (auto& v : u) v = cplx(n(rng), n(rng));
    const auto fast = convolve(u, p);
    for (std::size_t j = 0; j < M; ++j) {
        cplx acc{};
        for (std::size_t l = 0; l < M; ++l) {
            double d = static_cast<double>(j) / M - static_cast<double>(l) / M;
            d -= std::floor(d);
            acc += kernel_eval(p, d) * u[l];
        }
        EXPECT_LT(std::abs(acc / static_cast<double>(M) - fast[j]), 1e-13);
    }
}

TEST(OaRhs, TwistedStateRotatesRigidly)
{
    const auto p = ring_params();
    const std::size_t M = 64;
    std::vector<cplx> z(M);
    for (std::size_t j = 0; j < M; ++j) z[j] = std::polar(1.0, two_pi * static_cast<double>(j) / M);
    const auto f = oa_rhs(z, p);
    const double omega = twisted_frequency(p, 1);
    for (std::size_t j = 0; j < M; ++j) EXPECT_LT(std::abs(f[j] - I * omega * z[j]), 1e-13);
}
