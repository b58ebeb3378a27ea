#pragma once

// Finite ring of N phase oscillators with pairwise and triplet coupling.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "errors.hpp"
#include "model.hpp"

namespace twistring {

using PhaseVector = std::vector<double>;

struct Trajectory {
    std::vector<double> times;
    std::vector<PhaseVector> states;
    ModelParams params;
};

/// O(N) right-hand side of the ring. The kernel has three harmonics, so each
/// kernel-weighted mean C_m(k) = (1/N) sum_j G((k-j)/N) exp(i m theta_j)
/// reduces to three global sums.
class Ring {
public:
    explicit Ring(std::size_t n) : n_(n), cos_(n), sin_(n), e1_(n), e2_(n)
    {
        if (n < 3)
            throw NumericalError(Failure::InvalidArgument, "ring needs N >= 3 oscillators");
        for (std::size_t k = 0; k < n; ++k) {
            const double a = two_pi * static_cast<double>(k) / static_cast<double>(n);
            cos_[k] = std::cos(a);
            sin_[k] = std::sin(a);
        }
    }

    std::size_t size() const noexcept { return n_; }

    void rhs(std::span<const double> theta, const ModelParams& p, std::span<double> out)
    {
        const double inv_n = 1.0 / static_cast<double>(n_);
        cplx m1[3]{}, m2[3]{};
        for (std::size_t j = 0; j < n_; ++j) {
            const cplx e = std::polar(1.0, theta[j]);
            const cplx e2 = e * e;
            e1_[j] = e;
            e2_[j] = e2;
            m1[0] += e;
            m1[1] += cos_[j] * e;
            m1[2] += sin_[j] * e;
            m2[0] += e2;
            m2[1] += cos_[j] * e2;
            m2[2] += sin_[j] * e2;
        }
        for (auto& m : m1) m *= inv_n;
        for (auto& m : m2) m *= inv_n;

        const cplx lag2 = std::polar(p.K2, p.alpha2);
        const cplx lag3 = std::polar(p.K3, p.alpha3);
        for (std::size_t k = 0; k < n_; ++k) {
            const double c = cos_[k], s = sin_[k];
            const cplx c1 = m1[0] + p.A * (c * m1[1] + s * m1[2]) + p.B * (s * m1[1] - c * m1[2]);
            const cplx c2 = m2[0] + p.A * (c * m2[1] + s * m2[2]) + p.B * (s * m2[1] - c * m2[2]);
            const cplx back = std::conj(e1_[k]);
            out[k] = p.omega + std::imag(lag2 * back * c1) + std::imag(lag3 * back * c2 * std::conj(c1));
        }
    }

    PhaseVector rhs(std::span<const double> theta, const ModelParams& p)
    {
        PhaseVector out(n_);
        rhs(theta, p, out);
        return out;
    }

private:
    std::size_t n_;
    std::vector<double> cos_, sin_;
    std::vector<cplx> e1_, e2_;
};

inline PhaseVector ring_rhs(std::span<const double> theta, const ModelParams& p)
{
    Ring ring(theta.size());
    return ring.rhs(theta, p);
}

/// Classical RK4 with a fixed step. The step is adjusted to dt' = T / ceil(T/dt)
/// so that the final sample lands exactly on T. Phases stay lifted to R.
inline Trajectory integrate(const PhaseVector& theta0, const ModelParams& p, double T, double dt,
                            std::size_t sample_every = 1)
{
    if (!(dt > 0.0) || !(T > 0.0))
        throw NumericalError(Failure::InvalidArgument, "integrate: need T > 0 and dt > 0");
    if (sample_every == 0) sample_every = 1;

    Ring ring(theta0.size());
    const std::size_t n = theta0.size();
    const auto steps = static_cast<std::size_t>(std::ceil(T / dt - 1e-9));
    const double h = T / static_cast<double>(steps);

    Trajectory traj;
    traj.params = p;
    traj.times.push_back(0.0);
    traj.states.push_back(theta0);

    PhaseVector y = theta0, k1(n), k2(n), k3(n), k4(n), tmp(n);
    for (std::size_t step = 1; step <= steps; ++step) {
        ring.rhs(y, p, k1);
        for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + 0.5 * h * k1[i];
        ring.rhs(tmp, p, k2);
        for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + 0.5 * h * k2[i];
        ring.rhs(tmp, p, k3);
        for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + h * k3[i];
        ring.rhs(tmp, p, k4);
        for (std::size_t i = 0; i < n; ++i) {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            if (!std::isfinite(y[i]))
                throw NumericalError(Failure::NonFinite, "integrate: non-finite phase at oscillator "
                                                             + std::to_string(i) + ", t = "
                                                             + std::to_string(static_cast<double>(step) * h));
        }
        if (step % sample_every == 0 || step == steps) {
            traj.times.push_back(step == steps ? T : static_cast<double>(step) * h);
            traj.states.push_back(y);
        }
    }
    return traj;
}

inline double wrap_angle(double a)
{
    a = std::fmod(a, two_pi);
    return a < 0.0 ? a + two_pi : a;
}

/// Winding number of a phase profile, from wrapped nearest-neighbour increments.
inline int winding_number(std::span<const double> theta)
{
    const std::size_t n = theta.size();
    double total = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double d = theta[(k + 1) % n] - theta[k];
        total += std::remainder(d, two_pi);
    }
    return static_cast<int>(std::lround(total / two_pi));
}

/// theta_k = 2 pi q k/N - 2 r cos(2 pi l k/N): the leading-order shape of a
/// mode-l Hopf perturbation of the q-twisted state.
inline PhaseVector perturb_twisted(int q, int ell, double r, std::size_t n)
{
    if (ell < 1) throw NumericalError(Failure::InvalidArgument, "perturb_twisted: ell must be >= 1");
    PhaseVector theta(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double x = static_cast<double>(k) / static_cast<double>(n);
        theta[k] = two_pi * q * x - 2.0 * r * std::cos(two_pi * ell * x);
    }
    return theta;
}

struct DriftEstimate {
    double s = 0.0;
    double Omega = 0.0;
    double peak_correlation = 1.0;
    bool coherent = true;
    bool uniform = false;
};

namespace detail {

// Shift (in units of the ring length, in (-1/2, 1/2]) maximising the
// circular correlation between exp(i theta) at two times, plus the peak value.
inline std::pair<double, double> best_shift(std::span<const cplx> z1, std::span<const cplx> z2, bool& flat)
{
    const std::size_t n = z1.size();
    std::vector<double> corr(n);
    for (std::size_t m = 0; m < n; ++m) {
        cplx acc{};
        for (std::size_t k = 0; k < n; ++k) acc += std::conj(z1[(k + n - m) % n]) * z2[k];
        corr[m] = std::abs(acc) / static_cast<double>(n);
    }
    const auto [lo, hi] = std::minmax_element(corr.begin(), corr.end());
    flat = (*hi - *lo) < 1e-9;

    // Symmetric profiles produce several equal peaks; prefer the smallest shift.
    std::size_t best = 0;
    double best_abs = 1e300;
    for (std::size_t m = 0; m < n; ++m) {
        if (corr[m] < *hi - 1e-9 * std::max(1.0, *hi)) continue;
        const double shift = std::abs(std::remainder(static_cast<double>(m), static_cast<double>(n)));
        if (shift < best_abs) {
            best_abs = shift;
            best = m;
        }
    }
    const double cm = corr[(best + n - 1) % n], c0 = corr[best], cp = corr[(best + 1) % n];
    const double denom = cm - 2.0 * c0 + cp;
    const double offset = denom < 0.0 ? 0.5 * (cm - cp) / denom : 0.0;
    const double shift = std::remainder(static_cast<double>(best) + offset, static_cast<double>(n));
    return {shift / static_cast<double>(n), c0};
}

} // namespace detail

/// Drift speed s and frequency Omega of a profile Theta(x, t) = Omega t +
/// Theta0(x - s t). Consecutive snapshots are aligned by circular
/// cross-correlation of exp(i theta); s is the least-squares slope of the
/// accumulated shift. Snapshots must be close enough that |s dt| stays well
/// below half the profile period. Uniform twists are shift-degenerate and
/// report s = 0.
inline DriftEstimate estimate_drift(const Trajectory& traj, double t_from = 0.0)
{
    std::size_t first = 0;
    while (first < traj.times.size() && traj.times[first] < t_from) ++first;
    if (traj.states.size() < first + 2)
        throw NumericalError(Failure::InvalidArgument, "estimate_drift: need at least two snapshots");

    const std::size_t n = traj.states[first].size();
    auto phasors = [n](const PhaseVector& th) {
        std::vector<cplx> z(n);
        for (std::size_t k = 0; k < n; ++k) z[k] = std::polar(1.0, th[k]);
        return z;
    };

    DriftEstimate est;
    std::vector<double> t, disp;
    t.push_back(traj.times[first]);
    disp.push_back(0.0);
    bool all_flat = true;
    auto prev = phasors(traj.states[first]);
    for (std::size_t i = first + 1; i < traj.states.size(); ++i) {
        auto cur = phasors(traj.states[i]);
        bool flat = false;
        const auto [shift, peak] = detail::best_shift(prev, cur, flat);
        all_flat = all_flat && flat;
        est.peak_correlation = std::min(est.peak_correlation, peak);
        t.push_back(traj.times[i]);
        disp.push_back(disp.back() + shift);
        prev = std::move(cur);
    }
    est.coherent = est.peak_correlation >= 0.9;
    est.uniform = all_flat;

    if (!all_flat) {
        double tm = 0.0, dm = 0.0;
        for (std::size_t i = 0; i < t.size(); ++i) {
            tm += t[i];
            dm += disp[i];
        }
        tm /= static_cast<double>(t.size());
        dm /= static_cast<double>(t.size());
        double num = 0.0, den = 0.0;
        for (std::size_t i = 0; i < t.size(); ++i) {
            num += (t[i] - tm) * (disp[i] - dm);
            den += (t[i] - tm) * (t[i] - tm);
        }
        est.s = num / den;
    }

    // Mean lifted phase advances by Omega dt - 2 pi q s dt for a drifting
    // profile of winding q.
    const auto& a = traj.states[first];
    const auto& b = traj.states.back();
    double mean_adv = 0.0;
    for (std::size_t k = 0; k < n; ++k) mean_adv += b[k] - a[k];
    mean_adv /= static_cast<double>(n);
    const double span = traj.times.back() - traj.times[first];
    const int q = winding_number(a);
    est.Omega = mean_adv / span + two_pi * q * est.s;
    return est;
}

} // namespace twistring
