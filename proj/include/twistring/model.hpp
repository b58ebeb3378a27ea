#pragma once

#include <cmath>
#include <complex>
#include <map>
#include <numbers>

#include "errors.hpp"

namespace twistring {

using cplx = std::complex<double>;

inline constexpr double two_pi = 2.0 * std::numbers::pi;
inline constexpr cplx I{0.0, 1.0};

/// Parameters of the ring: pairwise/triplet strengths, the kernel
/// G(x) = 1 + A cos(2 pi x) + B sin(2 pi x), phase lags and the intrinsic
/// frequency.
struct ModelParams {
    double K2 = 1.0;
    double K3 = 0.0;
    double A = 0.0;
    double B = 0.0;
    double alpha2 = 0.0;
    double alpha3 = 0.0;
    double omega = 0.0;

    bool finite() const noexcept
    {
        return std::isfinite(K2) && std::isfinite(K3) && std::isfinite(A) && std::isfinite(B)
            && std::isfinite(alpha2) && std::isfinite(alpha3) && std::isfinite(omega);
    }

    bool operator==(const ModelParams&) const = default;
};

/// Continuation/bifurcation parameters that may be varied.
enum class Param { B, K3 };

inline double get(const ModelParams& p, Param which) { return which == Param::B ? p.B : p.K3; }

inline ModelParams with(ModelParams p, Param which, double value)
{
    (which == Param::B ? p.B : p.K3) = value;
    return p;
}

inline const char* name(Param which) { return which == Param::B ? "B" : "K3"; }

/// Analysis routines assume the intrinsic frequency has been removed by the
/// phase-shift symmetry.
inline void require_analysis_params(const ModelParams& p, const char* where)
{
    if (!p.finite())
        throw NumericalError(Failure::InvalidArgument, std::string(where) + ": non-finite parameter");
    if (p.omega != 0.0)
        throw NumericalError(Failure::InvalidArgument,
                             std::string(where) + ": omega must be 0 (remove it by a co-rotating frame)");
}

/// Complex Fourier coefficients g_k = int_0^1 G(x) exp(-2 pi i k x) dx.
/// Stored sparsely; absent indices are zero.
class KernelCoefficients {
public:
    KernelCoefficients() = default;
    explicit KernelCoefficients(std::map<int, cplx> coeffs) : coeffs_(std::move(coeffs)) {}

    cplx operator()(int k) const
    {
        auto it = coeffs_.find(k);
        return it == coeffs_.end() ? cplx{} : it->second;
    }

    const std::map<int, cplx>& nonzero() const noexcept { return coeffs_; }

private:
    std::map<int, cplx> coeffs_;
};

inline double kernel_eval(const ModelParams& p, double x)
{
    return 1.0 + p.A * std::cos(two_pi * x) + p.B * std::sin(two_pi * x);
}

inline KernelCoefficients fourier_coefficients(const ModelParams& p)
{
    return KernelCoefficients({{-1, cplx(p.A, p.B) / 2.0}, {0, cplx(1.0)}, {1, cplx(p.A, -p.B) / 2.0}});
}

/// Rotation frequency of the q-twisted state, from inserting exp(2 pi i q x)
/// into the Ott-Antonsen equation.
inline double twisted_frequency(const ModelParams& p, int q)
{
    require_analysis_params(p, "twisted_frequency");
    const auto g = fourier_coefficients(p);
    return p.K2 * std::imag(std::exp(I * p.alpha2) * g(q))
        + p.K3 * std::imag(std::exp(I * p.alpha3) * g(2 * q) * g(-q));
}

/// Theta(x, t) = 2 pi q x + Omega t + beta.
struct TwistedState {
    int q = 1;
    double beta = 0.0;
    double Omega = 0.0;

    double phase(double x, double t) const { return two_pi * q * x + Omega * t + beta; }
};

inline TwistedState make_twisted_state(const ModelParams& p, int q, double beta = 0.0)
{
    return {q, beta, twisted_frequency(p, q)};
}

} // namespace twistring
