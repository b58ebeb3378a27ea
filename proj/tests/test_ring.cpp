#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"

using namespace twistring;

namespace {

ModelParams stable_params()
{
    ModelParams p;
    p.K2 = 1.0;
    p.K3 = 0.1;
    p.A = 0.9;
    p.B = 0.1;
    p.alpha2 = std::numbers::pi / 2 - 0.1;
    return p;
}

ModelParams random_params(std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> u(-1.0, 1.0), ang(0.0, two_pi);
    ModelParams p;
    p.K2 = 2 * u(rng);
    p.K3 = 2 * u(rng);
    p.A = u(rng);
    p.B = u(rng);
    p.alpha2 = ang(rng);
    p.alpha3 = ang(rng);
    p.omega = u(rng);
    return p;
}

// Complex Fourier coefficient of mode ell of the deviation from the q-twist.
cplx mode_coefficient(const PhaseVector& th, int q, int ell)
{
    const std::size_t n = th.size();
    double mean = 0.0;
    std::vector<double> d(n);
    for (std::size_t k = 0; k < n; ++k) {
        d[k] = th[k] - two_pi * q * static_cast<double>(k) / static_cast<double>(n);
        mean += d[k];
    }
    mean /= static_cast<double>(n);
    cplx c{};
    for (std::size_t k = 0; k < n; ++k)
        c += (d[k] - mean) * std::polar(1.0, -two_pi * ell * static_cast<double>(k) / static_cast<double>(n));
    return c / static_cast<double>(n);
}

double slope(const std::vector<double>& t, const std::vector<double>& y)
{
    double tm = 0, ym = 0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        tm += t[i];
        ym += y[i];
    }
    tm /= static_cast<double>(t.size());
    ym /= static_cast<double>(t.size());
    double num = 0, den = 0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        num += (t[i] - tm) * (y[i] - ym);
        den += (t[i] - tm) * (t[i] - tm);
    }
    return num / den;
}

} // namespace

TEST(RingRhs, MatchesBruteForceSmallRings)
{
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> ang(0.0, two_pi);
    for (std::size_t n = 3; n <= 16; ++n) {
        for (int rep = 0; rep < 3; ++rep) {
            const auto p = random_params(rng);
            std::vector<double> th(n);
            for (auto& t : th) t = 4 * ang(rng) - 8.0;
            const auto fast = ring_rhs(th, p);
            const auto slow = oracle::rhs_brute(th, p);
            for (std::size_t k = 0; k < n; ++k) EXPECT_NEAR(fast[k], slow[k], 1e-12) << "n = " << n << ", k = " << k;
        }
    }
}

TEST(RingRhs, EightOscillators)
{
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> ang(0.0, two_pi);
    ModelParams p = stable_params();
    p.K3 = 0.8;
    p.alpha3 = 0.4;
    std::vector<double> th(8);
    for (auto& t : th) t = ang(rng);
    const auto fast = ring_rhs(th, p);
    const auto slow = oracle::rhs_brute(th, p);
    for (std::size_t k = 0; k < 8; ++k) EXPECT_NEAR(fast[k], slow[k], 1e-12);
}

TEST(RingRhs, TwistedStateIsRelativeEquilibrium)
{
    for (int q : {1, 2, -1}) {
        ModelParams p = stable_params();
        p.K3 = 0.7;
        p.alpha3 = 0.3;
        const auto th = perturb_twisted(q, 1, 0.0, 512);
        const auto f = ring_rhs(th, p);
        const double omega = twisted_frequency(p, q);
        for (double v : f) ASSERT_NEAR(v, omega, 1e-10) << "q = " << q;
    }
}

TEST(RingRhs, ZeroCouplingGivesIntrinsicFrequency)
{
    ModelParams p;
    p.K2 = 0.0;
    p.K3 = 0.0;
    p.A = 0.5;
    p.omega = 1.7;
    std::vector<double> th{0.1, 2.0, -1.0, 4.0, 3.3};
    for (double v : ring_rhs(th, p)) EXPECT_EQ(v, 1.7);
}

TEST(RingRhs, PhaseShiftEquivariance)
{
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> ang(0.0, two_pi);
    const auto p = random_params(rng);
    std::vector<double> th(37), sh(37);
    for (auto& t : th) t = ang(rng);
    for (std::size_t k = 0; k < th.size(); ++k) sh[k] = th[k] + 1.234;
    const auto a = ring_rhs(th, p), b = ring_rhs(sh, p);
    for (std::size_t k = 0; k < th.size(); ++k) EXPECT_NEAR(a[k], b[k], 1e-12);
}

TEST(RingRhs, RotationEquivariance)
{
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> ang(0.0, two_pi);
    const auto p = random_params(rng);
    const std::size_t n = 24;
    std::vector<double> th(n), rot(n);
    for (auto& t : th) t = ang(rng);
    for (std::size_t k = 0; k < n; ++k) rot[(k + 1) % n] = th[k];
    const auto a = ring_rhs(th, p), b = ring_rhs(rot, p);
    for (std::size_t k = 0; k < n; ++k) EXPECT_NEAR(b[(k + 1) % n], a[k], 1e-12);
}

TEST(RingRhs, RejectsTinyRings) { EXPECT_THROW(Ring(2), NumericalError); }

TEST(Integrate, TwistedStateRotatesRigidly)
{
    const auto p = stable_params();
    const auto th0 = perturb_twisted(1, 1, 0.0, 512);
    const auto tr = integrate(th0, p, 10.0, 1e-2, 100);
    const double omega = twisted_frequency(p, 1);
    const auto& last = tr.states.back();
    EXPECT_DOUBLE_EQ(tr.times.back(), 10.0);
    for (std::size_t k = 0; k < last.size(); ++k) {
        EXPECT_NEAR(last[k] - th0[k], last[0] - th0[0], 1e-6);
        EXPECT_NEAR(last[k] - th0[k], omega * 10.0, 1e-8);
    }
}

TEST(Integrate, FreeRotation)
{
    ModelParams p;
    p.K2 = 0.0;
    p.omega = 1.0;
    const std::vector<double> th0{0.0, 1.0, 2.0, 3.0};
    const auto tr = integrate(th0, p, 1.0, 1e-2);
    for (std::size_t k = 0; k < 4; ++k) EXPECT_NEAR(tr.states.back()[k], th0[k] + 1.0, 1e-12);
    EXPECT_EQ(tr.times.size(), 101u);
    for (std::size_t i = 1; i < tr.times.size(); ++i) EXPECT_GT(tr.times[i], tr.times[i - 1]);
}

TEST(Integrate, Deterministic)
{
    const auto p = stable_params();
    const auto th0 = perturb_twisted(1, 2, 0.1, 64);
    const auto a = integrate(th0, p, 5.0, 1e-2, 50), b = integrate(th0, p, 5.0, 1e-2, 50);
    EXPECT_EQ(a.states, b.states);
}

TEST(Integrate, NonFiniteAborts)
{
    ModelParams p = stable_params();
    p.omega = std::numeric_limits<double>::infinity();
    EXPECT_THROW(integrate(perturb_twisted(1, 1, 0.0, 8), p, 1.0, 0.1), NumericalError);
    EXPECT_THROW(integrate(perturb_twisted(1, 1, 0.0, 8), stable_params(), 1.0, 0.0), NumericalError);
}

TEST(PerturbTwisted, Formula)
{
    const auto th = perturb_twisted(1, 1, 0.1, 8);
    for (std::size_t k = 0; k < 8; ++k) {
        const double x = static_cast<double>(k) / 8.0;
        EXPECT_DOUBLE_EQ(th[k], two_pi * x - 0.2 * std::cos(two_pi * x));
    }
    const auto flat = perturb_twisted(2, 3, 0.0, 10);
    for (std::size_t k = 0; k < 10; ++k) EXPECT_DOUBLE_EQ(flat[k], two_pi * 2 * static_cast<double>(k) / 10.0);
    EXPECT_EQ(winding_number(flat), 2);
    EXPECT_THROW(perturb_twisted(1, 0, 0.1, 8), NumericalError);
}

TEST(Drift, SyntheticTravellingProfile)
{
    const double s = 0.0792, omega = 0.445;
    const std::size_t n = 256;
    Trajectory tr;
    for (int i = 0; i <= 50; ++i) {
        const double t = i * 1.0;
        PhaseVector th(n);
        for (std::size_t k = 0; k < n; ++k) {
            const double y = static_cast<double>(k) / static_cast<double>(n) - s * t;
            th[k] = omega * t + two_pi * y + 0.3 * std::sin(two_pi * y);
        }
        tr.times.push_back(t);
        tr.states.push_back(th);
    }
    const auto d = estimate_drift(tr);
    EXPECT_NEAR(d.s, s, 0.01 * s);
    EXPECT_NEAR(d.Omega, omega, 0.01 * omega);
    EXPECT_TRUE(d.coherent);
    EXPECT_FALSE(d.uniform);
}

TEST(Drift, UniformTwistReportsZeroSpeed)
{
    const auto p = stable_params();
    const auto tr = integrate(perturb_twisted(1, 1, 0.0, 128), p, 10.0, 1e-2, 100);
    const auto d = estimate_drift(tr);
    EXPECT_EQ(d.s, 0.0);
    EXPECT_TRUE(d.uniform);
    EXPECT_NEAR(d.Omega, twisted_frequency(p, 1), 1e-8);
}

TEST(Drift, NeedsTwoSnapshots)
{
    Trajectory tr;
    tr.times = {0.0};
    tr.states = {PhaseVector(8, 0.0)};
    EXPECT_THROW(estimate_drift(tr), NumericalError);
}

TEST(Linearisation, SmallPerturbationDecaysAtPredictedRate)
{
    const auto p = stable_params();
    const double rate = twist_eigenvalue(p, 1).real();
    ASSERT_LT(rate, 0.0);
    const auto tr = integrate(perturb_twisted(1, 1, 1e-4, 512), p, 120.0, 1e-2, 50);
    std::vector<double> t, y;
    for (std::size_t i = 0; i < tr.times.size(); ++i) {
        t.push_back(tr.times[i]);
        y.push_back(std::log(std::abs(mode_coefficient(tr.states[i], 1, 1))));
    }
    EXPECT_NEAR(slope(t, y), rate, 0.05 * std::abs(rate));
}

TEST(Linearisation, ModeTwoOscillatesAtImaginaryPart)
{
    ModelParams p = stable_params();
    p.K3 = 0.5;
    p.B = 0.3;
    const cplx lam = twist_eigenvalue(p, 2);
    ASSERT_LT(lam.real(), 0.0);
    const auto tr = integrate(perturb_twisted(1, 2, 0.05, 512), p, 60.0, 1e-2, 10);
    std::vector<double> t, ph;
    double prev = 0.0, acc = 0.0;
    for (std::size_t i = 0; i < tr.times.size(); ++i) {
        const double a = std::arg(mode_coefficient(tr.states[i], 1, 2));
        acc += i == 0 ? 0.0 : std::remainder(a - prev, two_pi);
        prev = a;
        t.push_back(tr.times[i]);
        ph.push_back(acc);
    }
    EXPECT_NEAR(std::abs(slope(t, ph)), std::abs(lam.imag()), 0.02 * std::abs(lam.imag()));
}
