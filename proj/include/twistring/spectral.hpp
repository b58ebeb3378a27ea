#pragma once

// Linear stability of the +-1 twisted states: closed-form eigenvalues, the
// 2x2 Ott-Antonsen spectral matrix, stability scans and Hopf root finding.

#include <cmath>
#include <complex>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "model.hpp"

namespace twistring {

struct SpectrumEntry {
    int k = 1;
    cplx lambda_plus;
    cplx lambda_minus;
};

struct Spectrum {
    std::vector<SpectrumEntry> entries;
    int q = 1;
    ModelParams params;
};

struct CriticalMode {
    int ell = 1;
    cplx lambda;
};

/// Closed-form lambda_k^+ of the 1-twisted state (eigenfunction w_k + i u_k).
inline cplx twist_eigenvalue(const ModelParams& p, int k)
{
    const double K2 = p.K2, K3 = p.K3, A = p.A, B = p.B;
    const double c2 = std::cos(p.alpha2), s2 = std::sin(p.alpha2);
    const double c3 = std::cos(p.alpha3), s3 = std::sin(p.alpha3);
    if (k < 1) throw NumericalError(Failure::InvalidArgument, "twist_eigenvalue: k must be >= 1");
    if (k == 1) {
        const double r2 = A * A + B * B;
        return K2 / 2.0 * cplx(c2 - A * c2 - B * s2, s2) + K3 / 4.0 * r2 * cplx(c3, s3);
    }
    if (k == 2) {
        return K2 / 4.0 * cplx(-A * c2 - 3.0 * B * s2, B * c2 + A * s2)
            + K3 / 4.0 * cplx(2.0 * A * c3 - 2.0 * B * s3, 2.0 * B * c3 + 2.0 * A * s3);
    }
    const double common = -K2 / 2.0 * (A * c2 + B * s2);
    if (k == 3) {
        const double d = A * A - B * B;
        return cplx(common + K3 / 4.0 * (d * c3 - 2.0 * A * B * s3), K3 / 4.0 * (d * s3 + 2.0 * A * B * c3));
    }
    return cplx(common, 0.0);
}

/// Eigenvalues of the q-twisted state, q = +-1. The -1 case is the +1 case with B -> -B.
inline Spectrum twist_spectrum(const ModelParams& params, int q = 1, int kmax = 8)
{
    require_analysis_params(params, "twist_spectrum");
    if (q != 1 && q != -1)
        throw NumericalError(Failure::InvalidArgument, "twist_spectrum: only q = +1 or -1 is supported");
    if (kmax < 1) throw NumericalError(Failure::InvalidArgument, "twist_spectrum: kmax must be >= 1");
    ModelParams p = params;
    if (q == -1) p.B = -p.B;
    Spectrum sp;
    sp.q = q;
    sp.params = params;
    for (int k = 1; k <= kmax; ++k) {
        const cplx lp = twist_eigenvalue(p, k);
        sp.entries.push_back({k, lp, std::conj(lp)});
    }
    return sp;
}

/// argmax_k Re lambda_k^+, smallest k on ties; reported eigenvalue has Im >= 0.
inline CriticalMode critical_mode(const Spectrum& sp)
{
    if (sp.entries.empty()) throw NumericalError(Failure::InvalidArgument, "critical_mode: empty spectrum");
    const SpectrumEntry* best = &sp.entries.front();
    for (const auto& e : sp.entries)
        if (e.lambda_plus.real() > best->lambda_plus.real()) best = &e;
    const cplx lam = best->lambda_plus.imag() > 0.0 ? best->lambda_plus : best->lambda_minus;
    return {best->k, lam};
}

inline double max_growth(const ModelParams& p, int q = 1)
{
    return critical_mode(twist_spectrum(p, q, 4)).lambda.real();
}

/// Eigenvalues of the 2x2 matrix B(k) obtained by linearising the
/// Ott-Antonsen equation about the 1-twisted state in the Fourier basis.
/// For k >= 4 both equal the common real value of the closed forms; the
/// union over +k and -k reproduces {lambda_k^+, lambda_k^-} plus that value.
inline std::pair<cplx, cplx> oa_spectrum(const ModelParams& p, int k)
{
    require_analysis_params(p, "oa_spectrum");
    const auto g = fourier_coefficients(p);
    const double Omega = twisted_frequency(p, 1);
    const cplx e2p = std::exp(I * p.alpha2), e2m = std::conj(e2p);
    const cplx e3p = std::exp(I * p.alpha3), e3m = std::conj(e3p);

    const cplx eta = I * Omega + p.K2 * e2m * g(-1) + p.K3 * e3m * g(-2) * g(1);
    const cplx pk = p.K2 / 2.0 * e2p * g(k + 1) + p.K3 * e3p * g(-1) * g(k + 2)
        - p.K3 / 2.0 * e3m * g(-2) * g(k + 1);
    const cplx qk = p.K2 / 2.0 * e2m * g(k - 1) + p.K3 * e3m * g(1) * g(k - 2)
        - p.K3 / 2.0 * e3p * g(2) * g(k - 1);

    const cplx m11 = -eta + pk, m12 = -qk, m21 = -pk, m22 = -std::conj(eta) + qk;
    const cplx tr = m11 + m22;
    const cplx det = m11 * m22 - m12 * m21;
    const cplx root = std::sqrt(tr * tr - 4.0 * det);
    return {(tr + root) / 2.0, (tr - root) / 2.0};
}

struct ScanPoint {
    double B = 0.0;
    double K3 = 0.0;
    double max_re = 0.0;
    int ell = 1;
    double abs_im = 0.0;
};

/// Max growth rate, critical index and |Im| of the critical eigenvalue over a
/// (B, K3) grid. Rows vary K3 slowest.
inline std::vector<ScanPoint> stability_scan(const ModelParams& base, const std::vector<double>& B_values,
                                             const std::vector<double>& K3_values, int q = 1)
{
    std::vector<ScanPoint> out;
    out.reserve(B_values.size() * K3_values.size());
    for (double K3 : K3_values) {
        for (double B : B_values) {
            ModelParams p = base;
            p.B = B;
            p.K3 = K3;
            if (!p.finite()) throw NumericalError(Failure::InvalidArgument, "stability_scan: non-finite grid value");
            const auto cm = critical_mode(twist_spectrum(p, q, 4));
            out.push_back({B, K3, cm.lambda.real(), cm.ell, std::abs(cm.lambda.imag())});
        }
    }
    return out;
}

inline std::vector<double> linspace(double lo, double hi, std::size_t n)
{
    std::vector<double> v(n);
    if (n == 1) {
        v[0] = lo;
        return v;
    }
    for (std::size_t i = 0; i < n; ++i)
        v[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
    return v;
}

struct HopfPoint {
    Param free = Param::B;
    double value = 0.0;
    CriticalMode mode;
    double dre_dparam = 0.0;
    /// Re lambda_k < 0 for every k != ell at the root (checked, not enforced).
    bool others_stable = true;
    std::vector<std::string> warnings;
};

namespace detail {

// Secant polish of Re lambda_ell near `root` and assembly of the result.
inline HopfPoint finish_hopf(const ModelParams& params, Param free, double root, double delta, int ell, int q)
{
    auto at = [&](double v) { return with(params, free, v); };
    auto re_ell = [&](double v) {
        ModelParams p = at(v);
        if (q == -1) p.B = -p.B;
        return twist_eigenvalue(p, ell).real();
    };
    double x0 = root - delta, x1 = root + delta;
    double f0 = re_ell(x0), f1 = re_ell(x1);
    for (int it = 0; it < 50 && std::abs(f1) > 1e-14 && f1 != f0; ++it) {
        const double x2 = x1 - f1 * (x1 - x0) / (f1 - f0);
        x0 = x1;
        f0 = f1;
        x1 = x2;
        f1 = re_ell(x1);
    }
    if (std::abs(f1) < std::abs(re_ell(root))) root = x1;
    if (!(std::abs(re_ell(root)) < 1e-12))
        throw NumericalError(Failure::NoConvergence, "locate_hopf: root refinement failed");

    HopfPoint hp;
    hp.free = free;
    hp.value = root;
    const auto sp = twist_spectrum(at(root), q, 4);
    const cplx lp = sp.entries[static_cast<std::size_t>(ell - 1)].lambda_plus;
    hp.mode = {ell, lp.imag() > 0.0 ? lp : std::conj(lp)};
    const double h = 1e-6 * std::max(1.0, std::abs(root));
    hp.dre_dparam = (re_ell(root + h) - re_ell(root - h)) / (2.0 * h);
    if (hp.dre_dparam == 0.0) hp.warnings.push_back("transversality fails: d Re lambda / d param = 0");
    if (hp.mode.lambda.imag() == 0.0) hp.warnings.push_back("Im lambda = 0 at the root");
    for (const auto& e : sp.entries) {
        if (e.k != ell && e.lambda_plus.real() >= 0.0) {
            hp.others_stable = false;
            hp.warnings.push_back("Re lambda_" + std::to_string(e.k) + " >= 0 at the root");
        }
    }
    return hp;
}

} // namespace detail

/// Root of the leading growth rate max_k Re lambda_k^+ in one parameter.
/// The critical index is the one attaining the maximum at the root; it may
/// differ from the index critical at the bracket ends.
inline HopfPoint locate_hopf(const ModelParams& params, Param free, double lo, double hi, int q = 1)
{
    require_analysis_params(params, "locate_hopf");
    if (!(std::isfinite(lo) && std::isfinite(hi)) || lo == hi)
        throw NumericalError(Failure::InvalidArgument, "locate_hopf: invalid bracket");
    if (lo > hi) std::swap(lo, hi);

    auto at = [&](double v) { return with(params, free, v); };
    auto growth = [&](double v) { return max_growth(at(v), q); };

    double flo = growth(lo), fhi = growth(hi);
    if (flo == 0.0) hi = lo;
    else if (fhi == 0.0) lo = hi;
    else if ((flo > 0.0) == (fhi > 0.0))
        throw NumericalError(Failure::NoSignChange, "no sign change of max Re lambda over ["
                                                        + std::to_string(lo) + ", " + std::to_string(hi) + "]");
    for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, std::abs(lo)); ++it) {
        const double mid = 0.5 * (lo + hi);
        const double fm = growth(mid);
        if (fm == 0.0) {
            lo = hi = mid;
            break;
        }
        if ((fm > 0.0) == (flo > 0.0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    double root = 0.5 * (lo + hi);

    const int ell = critical_mode(twist_spectrum(at(root), q, 4)).ell;
    const double delta = 1e-7 * std::max(1.0, std::abs(root));
    const int ell_lo = critical_mode(twist_spectrum(at(root - delta), q, 4)).ell;
    const int ell_hi = critical_mode(twist_spectrum(at(root + delta), q, 4)).ell;
    if (ell_lo != ell || ell_hi != ell)
        throw NumericalError(Failure::IndexSwitch, "critical index switches inside bracket (modes "
                                                       + std::to_string(ell_lo) + " and " + std::to_string(ell_hi)
                                                       + " at the crossing)");
    if (ell >= 4)
        throw NumericalError(Failure::Degenerate, "degenerate: Im lambda = 0 (critical modes k >= 4 are real)");

    return detail::finish_hopf(params, free, root, delta, ell, q);
}

/// Root of Re lambda_ell for a prescribed mode, whether or not it is the
/// leading one. Used to follow waves born from an already unstable state.
inline HopfPoint locate_mode_crossing(const ModelParams& params, Param free, double lo, double hi, int ell, int q = 1)
{
    require_analysis_params(params, "locate_mode_crossing");
    if (!(std::isfinite(lo) && std::isfinite(hi)) || lo == hi)
        throw NumericalError(Failure::InvalidArgument, "locate_mode_crossing: invalid bracket");
    if (ell < 1) throw NumericalError(Failure::InvalidArgument, "locate_mode_crossing: need ell >= 1");
    if (ell >= 4) throw NumericalError(Failure::Degenerate, "degenerate: Im lambda = 0 (modes k >= 4 are real)");
    if (lo > hi) std::swap(lo, hi);
    auto re_ell = [&](double v) {
        ModelParams p = with(params, free, v);
        if (q == -1) p.B = -p.B;
        return twist_eigenvalue(p, ell).real();
    };
    double flo = re_ell(lo);
    if ((flo > 0.0) == (re_ell(hi) > 0.0))
        throw NumericalError(Failure::NoSignChange, "no sign change of Re lambda_" + std::to_string(ell) + " over ["
                                                        + std::to_string(lo) + ", " + std::to_string(hi) + "]");
    for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, std::abs(lo)); ++it) {
        const double mid = 0.5 * (lo + hi);
        const double fm = re_ell(mid);
        if ((fm > 0.0) == (flo > 0.0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    const double root = 0.5 * (lo + hi);
    return detail::finish_hopf(params, free, root, 1e-7 * std::max(1.0, std::abs(root)), ell, q);
}

} // namespace twistring
