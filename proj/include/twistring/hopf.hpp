#pragma once

// Hopf bifurcations of the 1-twisted state: the third-order coefficient zeta
// (closed form and a finite-difference Galerkin estimate), classification
// and first-order predictions of the emerging waves.

#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "errors.hpp"
#include "galerkin.hpp"
#include "model.hpp"
#include "spectral.hpp"

namespace twistring {

enum class Criticality { supercritical, subcritical };

inline const char* name(Criticality c) { return c == Criticality::supercritical ? "supercritical" : "subcritical"; }

struct HopfData {
    int ell = 1;
    Param free = Param::B;
    double value = 0.0;
    ModelParams params;
    cplx lambda;
    cplx dlambda_dparam;
    /// zeta used for classification (Galerkin estimate).
    cplx zeta;
    /// zeta from the published rational-trigonometric formulas, verbatim.
    cplx zeta_closed_form;
    double d2_dr2 = 0.0;
    double drift_speed = 0.0;
    Criticality criticality = Criticality::supercritical;
    std::vector<std::string> warnings;
};

/// Closed-form zeta for l = 1, 2, 3, in the convention of lambda_l^+ (conjugate
/// it when Im lambda_l^+ < 0). Meaningful only at a Hopf point.
inline cplx zeta_closed_form(const ModelParams& p, int ell)
{
    require_analysis_params(p, "zeta_closed_form");
    const double K2 = p.K2, K3 = p.K3, A = p.A, B = p.B;
    const double a2 = p.alpha2, a3 = p.alpha3;
    const double c2 = std::cos(a2), s2 = std::sin(a2), c3 = std::cos(a3), s3 = std::sin(a3);
    const double c22 = std::cos(2 * a2), s22 = std::sin(2 * a2), c33 = std::cos(2 * a3), s33 = std::sin(2 * a3);
    const double A2 = A * A, A3 = A2 * A, B2 = B * B, B3 = B2 * B;
    const cplx i = I;

    cplx num, den;
    switch (ell) {
    case 1: {
        const cplx t2 = 0.5 * K2 * K2
            * (s22 * (16.0 * A2 + 59.0 * i * A * B - 80.0 * A + 11.0 * B2 - 48.0 * i * B + 64.0)
               + c22 * (16.0 * i * A2 + A * (5.0 * B - 16.0 * i) + (28.0 - 33.0 * i * B) * B)
               + 48.0 * i * A2 + 27.0 * A * B - 112.0 * i * A + 65.0 * i * B2 - 28.0 * B + 128.0 * i);
        const cplx sq = (-2.0 * B + i) * (-2.0 * B + i);
        const cplx t23 = -2.0 * i * K3 * K2
            * (2.0 * c2
                   * (4.0 * c3 * (4.0 * A3 + A2 * (-3.0 - i * B) + A * sq - i * B3 - 3.0 * B2 + 5.0 * i * B + 4.0)
                      - i * s3
                          * (6.0 * A3 + A2 * (-12.0 + 5.0 * i * B) + A * (5.0 * B2 + 4.0 * i * B + 4.0) + 6.0 * i * B3
                             + 4.0 * B2 - 20.0 * i * B - 16.0))
               + s2
                   * (c3 * (40.0 * A2 * (B + i) + A * (43.0 * B + 24.0 * i) + 40.0 * B3 + 51.0 * i * B2 - 8.0 * B - 32.0 * i)
                      + s3
                          * (20.0 * A3 + A2 * (-72.0 + 19.0 * i * B) + A * (22.0 * B2 - 13.0 * i * B + 40.0)
                             + 25.0 * i * B3 - 19.0 * B2 + 56.0 * i * B + 32.0)));
        const cplx t3 = 4.0 * K3 * K3 * (B - i * A)
            * (-10.0 * A3 + 9.0 * i * A2 * B + 8.0 * A2
               + s33 * (6.0 * i * A3 + 5.0 * A2 * B + A * (5.0 * i * B2 + 6.0 * B - 8.0 * i) + 4.0 * B * (B2 - 2.0 * i * B - 2.0))
               + c33 * (2.0 * A3 + A2 * (-8.0 - 5.0 * i * B) + A * (B2 - 6.0 * i * B - 8.0) - 4.0 * i * B * (B2 - 4.0 * i * B - 2.0))
               - 9.0 * A * B2 + 10.0 * i * A * B + 8.0 * i * B3 + 12.0 * B2 - 16.0 * i * B);
        num = t2 + t23 + t3;
        den = 16.0
            * (K2 * (c2 * (-B - i * A) - s2 * (A + 3.0 * i * B - 4.0))
               + 2.0 * K3 * (A + i * B) * (i * c3 + s3 * (A - i * B - 1.0)));
        break;
    }
    case 2: {
        const cplx t2 = -0.5 * K2 * K2
            * (i * s22 * (A2 - 4.0 * i * A * B + 3.0 * B2) + c22 * (A2 - 2.0 * i * A * B - 3.0 * B2) + 3.0 * A2
               + 4.0 * i * A * B + 9.0 * B2);
        const cplx t23 = K3 * K2
            * (c2 * (i * s3 * (2.0 * A2 + 9.0 * i * A * B - B2) + c3 * (8.0 * A2 + 11.0 * i * A * B - 9.0 * B2))
               + s2 * (B + i * A) * (11.0 * A * c3 + s3 * (-10.0 * B + 7.0 * i * A)));
        const cplx t3 = K3 * K3
            * (c33 * (3.0 * A2 + 10.0 * i * A * B - 3.0 * B2) - 9.0 * A2
               + i * s33 * (3.0 * A + i * B) * (3.0 * A + i * B) + 8.0 * i * A * B - 9.0 * B2);
        num = t2 + t23 + t3;
        den = 2.0 * K2 * (s2 * (B + i * A) + c2 * (A + i * B)) + 4.0 * i * K3 * (A * s3 + B * c3);
        break;
    }
    case 3:
        num = B * (c2 - c3)
            * (2.0 * K2 * (B * c2 - A * s2)
               + K3 * (s3 * (-A2 - 6.0 * i * A * B + B2) + i * c3 * (3.0 * A2 + 2.0 * i * A * B - 3.0 * B2)));
        den = 8.0 * (A * c2 + B * s2);
        break;
    default:
        throw NumericalError(Failure::NoClosedForm, "no closed-form zeta for l = " + std::to_string(ell));
    }
    if (std::abs(den) < 1e-14 * std::max(1.0, std::abs(num)))
        throw NumericalError(Failure::Degenerate, "resonant/degenerate denominator in closed-form zeta");
    return num / den;
}

/// zeta = -<D3G[v,v,vbar], v'> - <D2G[vbar, (2i kappa - J)^{-1} D2G[v,v]], v'>
///        + 2 <D2G[v, J^{-1} D2G[v,vbar]], v'>
/// with J, D2G, D3G of the Galerkin model obtained by central differences
/// (steps h and h/2, Richardson-extrapolated), v = w_l + i u_l oriented so
/// that J v = lambda v with Im lambda > 0, and v' the left eigenvector with
/// v'^T v = 1.
inline cplx zeta_oracle(const ModelParams& p, int ell, int modes = 8, double h = 1e-3)
{
    if (ell < 1 || ell > modes)
        throw NumericalError(Failure::InvalidArgument, "zeta_oracle: need 1 <= l <= modes");
    using Eigen::MatrixXd;
    using Eigen::VectorXcd;
    using Eigen::VectorXd;

    GalerkinModel G(p, modes);
    const Eigen::Index n = G.dim();
    const VectorXd G0 = G(VectorXd::Zero(n));

    MatrixXd J(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        auto d = [&](double hh) {
            VectorXd e = VectorXd::Zero(n);
            e[j] = hh;
            return VectorXd((G(e) - G(-e)) / (2.0 * hh));
        };
        J.col(j) = (4.0 * d(h / 2) - d(h)) / 3.0;
    }

    VectorXcd v = VectorXcd::Zero(n);
    v[ell - 1] = 1.0;
    v[modes + ell - 1] = I;
    cplx lam = v.dot(J.cast<cplx>() * v) / v.squaredNorm();
    if (lam.imag() < 0.0) {
        v = v.conjugate().eval();
        lam = std::conj(lam);
    }
    if (std::abs(lam.imag()) < 1e-10)
        throw NumericalError(Failure::Degenerate, "zeta_oracle: critical eigenvalue is real");

    Eigen::EigenSolver<MatrixXd> left(J.transpose());
    Eigen::Index best = 0;
    for (Eigen::Index k = 1; k < n; ++k)
        if (std::abs(left.eigenvalues()[k] - lam) < std::abs(left.eigenvalues()[best] - lam)) best = k;
    VectorXcd vp = left.eigenvectors().col(best);
    const cplx pair = (vp.transpose() * v)(0);
    if (std::abs(pair) < 1e-12) throw NumericalError(Failure::Singular, "zeta_oracle: left eigenvector orthogonal to v");
    vp /= pair;

    auto S2 = [&](const VectorXd& u, double hh) { return VectorXd((G(hh * u) - 2.0 * G0 + G(-hh * u)) / (hh * hh)); };
    auto D2r = [&](const VectorXd& x, const VectorXd& y) {
        auto f = [&](double hh) { return VectorXd((S2(x + y, hh) - S2(x - y, hh)) / 4.0); };
        return VectorXd((4.0 * f(h / 2) - f(h)) / 3.0);
    };
    auto D2 = [&](const VectorXcd& a, const VectorXcd& b) {
        const VectorXd ar = a.real(), ai = a.imag(), br = b.real(), bi = b.imag();
        const VectorXd re = D2r(ar, br) - D2r(ai, bi);
        const VectorXd im = D2r(ar, bi) + D2r(ai, br);
        VectorXcd out(n);
        out.real() = re;
        out.imag() = im;
        return out;
    };
    auto T3 = [&](const VectorXd& u) {
        auto t = [&](double hh) {
            return VectorXd((G(2 * hh * u) - 2.0 * G(hh * u) + 2.0 * G(-hh * u) - G(-2 * hh * u)) / (2.0 * hh * hh * hh));
        };
        return VectorXd((4.0 * t(h / 2) - t(h)) / 3.0);
    };

    const VectorXd pr = v.real(), qi = v.imag();
    const VectorXd Tppp = T3(pr), Tqqq = T3(qi), Tp = T3(pr + qi), Tm = T3(pr - qi);
    const VectorXd Tppq = (Tp - Tm - 2.0 * Tqqq) / 6.0;
    const VectorXd Tpqq = (Tp + Tm - 2.0 * Tppp) / 6.0;
    VectorXcd D3(n);
    D3.real() = Tppp + Tpqq;
    D3.imag() = Tppq + Tqqq;

    const double kappa = lam.imag();
    const Eigen::MatrixXcd shifted = cplx(0.0, 2.0 * kappa) * Eigen::MatrixXcd::Identity(n, n) - J.cast<cplx>();
    Eigen::FullPivLU<Eigen::MatrixXcd> lu_shift(shifted);
    Eigen::FullPivLU<MatrixXd> lu_J(J);
    if (lu_shift.rcond() < 1e-12) throw NumericalError(Failure::Singular, "zeta_oracle: 2i kappa - J is singular");
    if (lu_J.rcond() < 1e-12) throw NumericalError(Failure::Singular, "zeta_oracle: J is singular");

    const VectorXcd vv = D2(v, v);
    const VectorXcd vvb = D2(v, v.conjugate());
    const VectorXcd x1 = lu_shift.solve(vv);
    VectorXcd x2(n);
    x2.real() = lu_J.solve(VectorXd(vvb.real()));
    x2.imag() = lu_J.solve(VectorXd(vvb.imag()));

    auto pairing = [&](const VectorXcd& u) { return (vp.transpose() * u)(0); };
    return -pairing(D3) - pairing(D2(v.conjugate(), x1)) + 2.0 * pairing(D2(v, x2));
}

/// Locates the Hopf point in `free` and assembles the first-order data of the
/// bifurcating waves. The second parameter derivative is
/// d2p/dr2 = Re(zeta) / Re(d lambda/dp). With `mode` > 0 the crossing of that
/// mode is used even when another mode is already unstable.
inline HopfData hopf_classify(const ModelParams& params, Param free, double lo, double hi, int modes = 8, int mode = 0)
{
    const HopfPoint hp = mode > 0 ? locate_mode_crossing(params, free, lo, hi, mode) : locate_hopf(params, free, lo, hi);
    const int ell = hp.mode.ell;
    if (ell < 1 || ell > 3)
        throw NumericalError(Failure::NoClosedForm, "no closed-form zeta for l = " + std::to_string(ell));

    HopfData hd;
    hd.ell = ell;
    hd.free = free;
    hd.value = hp.value;
    hd.params = with(params, free, hp.value);
    hd.lambda = hp.mode.lambda;
    hd.warnings = hp.warnings;

    const bool upper = twist_eigenvalue(hd.params, ell).imag() > 0.0;
    auto lam = [&](double v) {
        const cplx l = twist_eigenvalue(with(params, free, v), ell);
        return upper ? l : std::conj(l);
    };
    const double step = 1e-6;
    hd.dlambda_dparam = (lam(hp.value + step) - lam(hp.value - step)) / (2.0 * step);

    const cplx zc = zeta_closed_form(hd.params, ell);
    hd.zeta_closed_form = upper ? zc : std::conj(zc);
    hd.zeta = zeta_oracle(hd.params, ell, modes);

    hd.d2_dr2 = hd.zeta.real() / hd.dlambda_dparam.real();
    hd.drift_speed = hd.lambda.imag() / (two_pi * ell);
    hd.criticality = hd.zeta.real() > 0.0 ? Criticality::supercritical : Criticality::subcritical;
    return hd;
}

struct PredictedProfile {
    std::vector<double> x;
    std::vector<double> theta;
    double s = 0.0;
};

/// theta(x) = 2 pi x - 2 r cos(2 pi l x) at t = 0, drifting with speed s.
inline PredictedProfile predict_profile(const HopfData& hd, double r, std::size_t n)
{
    PredictedProfile out;
    out.s = hd.drift_speed;
    out.x.resize(n);
    out.theta.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
        const double x = static_cast<double>(j) / static_cast<double>(n);
        out.x[j] = x;
        out.theta[j] = two_pi * x - 2.0 * r * std::cos(two_pi * hd.ell * x);
    }
    return out;
}

} // namespace twistring
