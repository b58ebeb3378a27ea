#pragma once

// Travelling waves z(x, t) = a(x - s t) exp(i Omega t) on the Ott-Antonsen
// manifold. The profile solves the complex Riccati equation
//     a' = w(x) + i rho a - conj(w(x)) a^2,   rho = Omega / s,
// whose period map is a Moebius transformation; its fixed points on the
// unit circle give the periodic profiles.

#include <array>
#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "dop853.hpp"
#include "errors.hpp"
#include "model.hpp"

namespace twistring {

/// psi_1..psi_5 = 1, cos 2 pi x, sin 2 pi x, cos 4 pi x, sin 4 pi x.
inline std::array<double, 5> basis(double x)
{
    const double c = std::cos(two_pi * x), s = std::sin(two_pi * x);
    return {1.0, c, s, c * c - s * s, 2.0 * s * c};
}

struct MeanField {
    std::array<cplx, 5> w_hat{};

    cplx operator()(double x) const
    {
        const auto psi = basis(x);
        cplx w{};
        for (int k = 0; k < 5; ++k) w += w_hat[k] * psi[k];
        return w;
    }

    bool finite() const
    {
        for (const auto& c : w_hat)
            if (!std::isfinite(c.real()) || !std::isfinite(c.imag())) return false;
        return true;
    }
};

/// M(z) = e^{i theta} (z + b) / (conj(b) z + 1).
struct MobiusMap {
    cplx b;
    double theta = 0.0;

    cplx operator()(cplx z) const { return std::polar(1.0, theta) * (z + b) / (std::conj(b) * z + 1.0); }

    /// |b| - |sin(theta/2)|; both fixed points lie on the unit circle iff > 0.
    double margin() const { return std::abs(b) - std::abs(std::sin(theta / 2.0)); }
};

enum class FixedPointSide { stable, unstable };

struct WaveProfile {
    std::vector<cplx> a;
    double ratio = 0.0;
    FixedPointSide side = FixedPointSide::stable;
    MobiusMap map;
};

inline constexpr double riccati_blowup = 1e6;

namespace detail {

inline Dop853Options riccati_options() { return {1e-12, 1e-12, 0.0, 200000}; }

inline void check_blowup(double x, cplx a)
{
    if (!(std::abs(a) <= riccati_blowup))
        throw NumericalError(Failure::BlowUp, "riccati: |a| exceeded 1e6 near x = " + std::to_string(x));
}

} // namespace detail

using Scalar1 = Eigen::Matrix<cplx, 1, 1>;

inline Dop853<Scalar1> riccati_stepper(const MeanField& w, double ratio)
{
    return Dop853<Scalar1>(
        [w, ratio](double x, const Scalar1& y, Scalar1& dy) {
            const cplx wx = w(x);
            dy[0] = wx + I * ratio * y[0] - std::conj(wx) * y[0] * y[0];
        },
        detail::riccati_options());
}

/// Integrates the Riccati equation from a(x_start) = a0 to x_end (either direction).
inline cplx riccati_solve(const MeanField& w, double ratio, cplx a0, double x_start, double x_end)
{
    if (!std::isfinite(ratio)) throw NumericalError(Failure::InvalidArgument, "riccati_solve: non-finite ratio (s = 0?)");
    auto stepper = riccati_stepper(w, ratio);
    Scalar1 y;
    y[0] = a0;
    double x = x_start;
    stepper.advance(x, y, x_end, [](double xx, const Scalar1& yy) { detail::check_blowup(xx, yy[0]); });
    return y[0];
}

/// Solution sampled at the given increasing (or decreasing) abscissae.
inline std::vector<cplx> riccati_samples(const MeanField& w, double ratio, cplx a0, double x_start,
                                         const std::vector<double>& xs)
{
    auto stepper = riccati_stepper(w, ratio);
    Scalar1 y;
    y[0] = a0;
    double x = x_start;
    std::vector<cplx> out;
    out.reserve(xs.size());
    for (double xe : xs) {
        stepper.advance(x, y, xe, [](double xx, const Scalar1& yy) { detail::check_blowup(xx, yy[0]); });
        out.push_back(y[0]);
    }
    return out;
}

/// Period map from two orbits: zeta1 = a(1) with a(0) = 1 and zeta0 = a(-1)
/// with a(0) = 0. Then b = -zeta0 and e^{i theta} = (conj(zeta0) - 1)/(zeta0 - 1) zeta1.
inline MobiusMap mobius_of(const MeanField& w, double ratio)
{
    const cplx z1 = riccati_solve(w, ratio, 1.0, 0.0, 1.0);
    const cplx z0 = riccati_solve(w, ratio, 0.0, 0.0, -1.0);
    if (std::abs(std::abs(z1) - 1.0) > 1e-8)
        throw NumericalError(Failure::NoConvergence, "mobius_of: |zeta1| deviates from 1 by "
                                                         + std::to_string(std::abs(std::abs(z1) - 1.0)));
    if (std::abs(z0 - 1.0) < 1e-14) throw NumericalError(Failure::Degenerate, "mobius_of: zeta0 = 1");
    const cplx e = (std::conj(z0) - 1.0) / (z0 - 1.0) * z1;
    return {-z0, std::arg(e)};
}

/// Fixed point of the period map on the unit circle. For s > 0 the stable
/// operator takes the '-' root, for s < 0 the '+' root; the unstable
/// operator takes the other one.
inline cplx mobius_fixed_point(const MobiusMap& m, int s_sign, FixedPointSide side)
{
    const double sh = std::sin(m.theta / 2.0);
    const double b2 = std::norm(m.b);
    if (!(m.margin() > 0.0))
        throw NumericalError(Failure::OperatorUndefined, "operator undefined: |b| <= |sin(theta/2)| (margin "
                                                             + std::to_string(m.margin()) + ")");
    double sign = s_sign > 0 ? -1.0 : 1.0;
    if (side == FixedPointSide::unstable) sign = -sign;
    const double root = std::sqrt(b2 - sh * sh);
    return (I * sh + sign * root) / b2 * m.b * std::polar(1.0, m.theta / 2.0);
}

/// |M'(z)|: the period map contracts near z iff this is below one.
inline double mobius_multiplier(const MobiusMap& m, cplx z)
{
    return (1.0 - std::norm(m.b)) / std::norm(std::conj(m.b) * z + 1.0);
}

/// The '-' root repels under the forward period map and the '+' root
/// attracts. Deciding this from the root label rather than from
/// mobius_multiplier() stays reliable when |b| rounds to 1.
inline bool fixed_point_attracts_forward(int s_sign, FixedPointSide side)
{
    const bool minus_root = (s_sign > 0) == (side == FixedPointSide::stable);
    return !minus_root;
}

/// Periodic profile a(x_j), x_j = j/M, from the selected fixed point. The
/// orbit is integrated in whichever direction the fixed point attracts, so
/// errors in a(0) decay instead of growing over the period.
inline WaveProfile solution_operator(const MeanField& w, double ratio, int s_sign, std::size_t M,
                                     FixedPointSide side = FixedPointSide::stable)
{
    if (M < 2) throw NumericalError(Failure::InvalidArgument, "solution_operator: need M >= 2");
    WaveProfile prof;
    prof.ratio = ratio;
    prof.side = side;
    prof.map = mobius_of(w, ratio);
    const cplx a0 = mobius_fixed_point(prof.map, s_sign, side);
    const bool forward = fixed_point_attracts_forward(s_sign, side);

    std::vector<double> xs(M);
    for (std::size_t j = 0; j < M; ++j)
        xs[j] = forward ? static_cast<double>(j + 1) / static_cast<double>(M)
                        : 1.0 - static_cast<double>(j + 1) / static_cast<double>(M);
    auto vals = riccati_samples(w, ratio, a0, forward ? 0.0 : 1.0, xs);
    if (std::abs(vals.back() - a0) > 1e-8)
        throw NumericalError(Failure::NoConvergence, "solution_operator: profile not periodic (|a(1) - a(0)| = "
                                                         + std::to_string(std::abs(vals.back() - a0)) + ")");
    prof.a.resize(M);
    prof.a[0] = a0;
    for (std::size_t j = 1; j < M; ++j) prof.a[j] = forward ? vals[j - 1] : vals[M - 1 - j];
    return prof;
}

inline WaveProfile solution_operator_U(const MeanField& w, double ratio, int s_sign, std::size_t M)
{
    return solution_operator(w, ratio, s_sign, M, FixedPointSide::stable);
}

inline WaveProfile unstable_solution_operator(const MeanField& w, double ratio, int s_sign, std::size_t M)
{
    return solution_operator(w, ratio, s_sign, M, FixedPointSide::unstable);
}

/// Unnormalised L2 moments Psi_k = <a, psi_k> and Phi_k = <a^2, psi_k> of the
/// periodic profile, integrated alongside the Riccati equation.
struct WaveMoments {
    std::array<cplx, 5> psi{};
    std::array<cplx, 5> phi{};
    MobiusMap map;
    cplx a0;
};

inline WaveMoments wave_moments(const MeanField& w, double ratio, int s_sign,
                                FixedPointSide side = FixedPointSide::stable)
{
    using Vec = Eigen::Matrix<cplx, 11, 1>;
    WaveMoments out;
    out.map = mobius_of(w, ratio);
    out.a0 = mobius_fixed_point(out.map, s_sign, side);

    Dop853<Vec> stepper(
        [&w, ratio](double x, const Vec& y, Vec& dy) {
            const auto psi = basis(x);
            cplx wx{};
            for (int k = 0; k < 5; ++k) wx += w.w_hat[k] * psi[k];
            const cplx a = y[0], a2 = a * a;
            dy[0] = wx + I * ratio * a - std::conj(wx) * a2;
            for (int k = 0; k < 5; ++k) {
                dy[1 + k] = a * psi[k];
                dy[6 + k] = a2 * psi[k];
            }
        },
        detail::riccati_options());
    // Integrate towards the attracting side of the fixed point; a backward
    // sweep from x = 1 accumulates minus the integrals.
    const bool forward = fixed_point_attracts_forward(s_sign, side);
    // One extra period in the attracting direction polishes a(0); when the
    // multiplier is huge this is far more accurate than the closed form.
    out.a0 = riccati_solve(w, ratio, out.a0, forward ? 0.0 : 1.0, forward ? 1.0 : 0.0);
    Vec y = Vec::Zero();
    y[0] = out.a0;
    double x = forward ? 0.0 : 1.0;
    stepper.advance(x, y, forward ? 1.0 : 0.0, [](double xx, const Vec& yy) { detail::check_blowup(xx, yy[0]); });
    const double sign = forward ? 1.0 : -1.0;
    for (int k = 0; k < 5; ++k) {
        out.psi[k] = sign * y[1 + k];
        out.phi[k] = sign * y[6 + k];
    }
    return out;
}

/// Kernel convolution of sampled periodic data via the three-term projection
/// with trapezoidal inner products on the uniform grid x_j = j/M.
inline std::vector<cplx> convolve(const std::vector<cplx>& u, const ModelParams& p)
{
    const std::size_t M = u.size();
    cplx m0{}, mc{}, ms{};
    for (std::size_t j = 0; j < M; ++j) {
        const double x = static_cast<double>(j) / static_cast<double>(M);
        m0 += u[j];
        mc += u[j] * std::cos(two_pi * x);
        ms += u[j] * std::sin(two_pi * x);
    }
    m0 /= static_cast<double>(M);
    mc /= static_cast<double>(M);
    ms /= static_cast<double>(M);
    const cplx c2 = p.A * mc - p.B * ms, c3 = p.A * ms + p.B * mc;
    std::vector<cplx> out(M);
    for (std::size_t j = 0; j < M; ++j) {
        const double x = static_cast<double>(j) / static_cast<double>(M);
        out[j] = m0 + c2 * std::cos(two_pi * x) + c3 * std::sin(two_pi * x);
    }
    return out;
}

/// Right-hand side of the Ott-Antonsen equation on a uniform periodic grid.
inline std::vector<cplx> oa_rhs(const std::vector<cplx>& z, const ModelParams& p)
{
    const std::size_t M = z.size();
    std::vector<cplx> zc(M), z2(M), zc2(M);
    for (std::size_t j = 0; j < M; ++j) {
        zc[j] = std::conj(z[j]);
        z2[j] = z[j] * z[j];
        zc2[j] = zc[j] * zc[j];
    }
    const auto Gz = convolve(z, p), Gzc = convolve(zc, p), Gz2 = convolve(z2, p), Gzc2 = convolve(zc2, p);
    const cplx e2 = std::exp(I * p.alpha2), e3 = std::exp(I * p.alpha3);
    std::vector<cplx> out(M);
    for (std::size_t j = 0; j < M; ++j) {
        out[j] = p.K2 / 2.0 * (e2 * Gz[j] - std::conj(e2) * z2[j] * Gzc[j])
            + p.K3 / 2.0 * (e3 * Gz2[j] * Gzc[j] - std::conj(e3) * z2[j] * Gzc2[j] * Gz[j]);
    }
    return out;
}

} // namespace twistring
