#pragma once

// Self-consistency system for travelling waves and its pseudo-arclength
// continuation in B or K3.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "errors.hpp"
#include "hopf.hpp"
#include "model.hpp"
#include "riccati.hpp"
#include "ring.hpp"

namespace twistring {

/// Unknowns of the self-consistency system. Layout as a real 12-vector:
/// [s, Omega, Re w_1..w_5, Im w_1..w_5].
struct WaveState {
    double s = 0.0;
    double Omega = 0.0;
    MeanField w;

    using Vector = Eigen::Matrix<double, 12, 1>;

    Vector to_vector() const
    {
        Vector v;
        v[0] = s;
        v[1] = Omega;
        for (int k = 0; k < 5; ++k) {
            v[2 + k] = w.w_hat[k].real();
            v[7 + k] = w.w_hat[k].imag();
        }
        return v;
    }

    static WaveState from_vector(const Vector& v)
    {
        WaveState st;
        st.s = v[0];
        st.Omega = v[1];
        for (int k = 0; k < 5; ++k) st.w.w_hat[k] = cplx(v[2 + k], v[7 + k]);
        return st;
    }
};

using Residual = Eigen::Matrix<double, 12, 1>;

struct ResidualEval {
    Residual r;
    double margin = 0.0;
};

/// Ten real components of -2 s w_k - RHS_k (real parts then imaginary parts)
/// followed by the pinning conditions Im w_2 and Re w_3.
inline ResidualEval sc_residual_eval(const WaveState& st, const ModelParams& p)
{
    require_analysis_params(p, "sc_residual");
    if (st.s == 0.0 || !std::isfinite(st.s))
        throw NumericalError(Failure::InvalidArgument, "sc_residual: s must be finite and non-zero");
    if (!std::isfinite(st.Omega) || !st.w.finite())
        throw NumericalError(Failure::NonFinite, "sc_residual: non-finite state");

    const auto mom = wave_moments(st.w, st.Omega / st.s, st.s > 0.0 ? 1 : -1);
    const auto& P = mom.psi;
    const auto& Q = mom.phi;
    const double A = p.A, B = p.B;
    const cplx a1 = P[0], a2 = A * P[1] - B * P[2], a3 = A * P[2] + B * P[1];
    const cplx b1 = Q[0], b2 = A * Q[1] - B * Q[2], b3 = A * Q[2] + B * Q[1];
    const cplx e2 = std::exp(I * p.alpha2), e3 = std::exp(I * p.alpha3);
    auto c = [](cplx z) { return std::conj(z); };

    const std::array<cplx, 5> rhs{
        p.K2 * e2 * a1 + p.K3 * e3 * (c(a1) * b1 + 0.5 * (c(a2) * b2 + c(a3) * b3)),
        p.K2 * e2 * a2 + p.K3 * e3 * (c(a2) * b1 + c(a1) * b2),
        p.K2 * e2 * a3 + p.K3 * e3 * (c(a3) * b1 + c(a1) * b3),
        p.K3 / 2.0 * e3 * (c(a2) * b2 - c(a3) * b3),
        p.K3 / 2.0 * e3 * (c(a3) * b2 + c(a2) * b3),
    };
    ResidualEval out;
    for (int k = 0; k < 5; ++k) {
        const cplx e = -2.0 * st.s * st.w.w_hat[k] - rhs[k];
        out.r[k] = e.real();
        out.r[5 + k] = e.imag();
    }
    out.r[10] = st.w.w_hat[1].imag();
    out.r[11] = st.w.w_hat[2].real();
    out.margin = mom.map.margin();
    return out;
}

inline Residual sc_residual(const WaveState& st, const ModelParams& p) { return sc_residual_eval(st, p).r; }

/// Rotates the spatial-shift and phase gauges so that w_2 is real and w_3
/// imaginary (the e^{+-2 pi i x} components become positive reals).
inline MeanField pin_gauge(const MeanField& w)
{
    const auto& h = w.w_hat;
    cplx cp = (h[1] - I * h[2]) / 2.0, cm = (h[1] + I * h[2]) / 2.0;
    const double phi = -(std::arg(cp) + std::arg(cm)) / 2.0;
    const double d = (std::arg(cm) - std::arg(cp)) / 2.0;
    cp *= std::polar(1.0, phi + d);
    cm *= std::polar(1.0, phi - d);
    const cplx dp = (h[3] - I * h[4]) / 2.0 * std::polar(1.0, phi + 2.0 * d);
    const cplx dm = (h[3] + I * h[4]) / 2.0 * std::polar(1.0, phi - 2.0 * d);
    MeanField out;
    out.w_hat = {h[0] * std::polar(1.0, phi), cp + cm, I * (cp - cm), dp + dm, I * (dp - dm)};
    out.w_hat[1] = out.w_hat[1].real();
    out.w_hat[2] = cplx(0.0, out.w_hat[2].imag());
    return out;
}

/// w(x) -> e^{i phi} w(x + delta), the action of the two continuous symmetries.
inline MeanField apply_symmetry(const MeanField& w, double delta, double phi)
{
    const auto& h = w.w_hat;
    const cplx rot = std::polar(1.0, phi);
    const cplx e1 = std::polar(1.0, two_pi * delta), e2 = std::polar(1.0, 2.0 * two_pi * delta);
    const cplx cp = (h[1] - I * h[2]) / 2.0 * e1, cm = (h[1] + I * h[2]) / 2.0 / e1;
    const cplx dp = (h[3] - I * h[4]) / 2.0 * e2, dm = (h[3] + I * h[4]) / 2.0 / e2;
    MeanField out;
    out.w_hat = {rot * h[0], rot * (cp + cm), rot * I * (cp - cm), rot * (dp + dm), rot * I * (dp - dm)};
    return out;
}

struct NewtonOptions {
    double tol = 1e-10;
    int max_iter = 50;
    double fd_step = 1e-7;
    double max_condition = 1e12;
};

struct NewtonResult {
    WaveState state;
    int iterations = 0;
    double residual_norm = 0.0;
    double margin = 0.0;
};

namespace detail {

template <class F>
Eigen::MatrixXd fd_jacobian(F&& f, const Eigen::VectorXd& x, Eigen::Index rows, double step)
{
    Eigen::MatrixXd J(rows, x.size());
    for (Eigen::Index j = 0; j < x.size(); ++j) {
        // Relative step, capped at unit magnitude: large mean-field
        // coefficients come with exponentially sensitive profiles.
        const double h = step * std::clamp(std::abs(x[j]), 1e-2, 1.0);
        Eigen::VectorXd xp = x, xm = x;
        xp[j] += h;
        xm[j] -= h;
        J.col(j) = (f(xp) - f(xm)) / (2.0 * h);
    }
    return J;
}

// The Mobius parameters grow steeply sensitive as the margin closes, so the
// difference step shrinks with it.
inline double margin_scaled_step(double step, double margin)
{
    return step * std::clamp(std::sqrt(std::max(margin, 0.0) / 0.5), 1e-2, 1.0);
}

inline double condition_number(const Eigen::MatrixXd& J)
{
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(J);
    const auto& sv = svd.singularValues();
    return sv[sv.size() - 1] > 0.0 ? sv[0] / sv[sv.size() - 1] : std::numeric_limits<double>::infinity();
}

inline bool operator_failure(const NumericalError& e)
{
    return e.kind() == Failure::OperatorUndefined || e.kind() == Failure::BlowUp || e.kind() == Failure::NoConvergence
        || e.kind() == Failure::Degenerate || e.kind() == Failure::NonFinite;
}

} // namespace detail

/// Damped Newton with a central finite-difference Jacobian.
inline NewtonResult newton_solve(const WaveState& guess, const ModelParams& p, const NewtonOptions& opt = {})
{
    auto F = [&](const Eigen::VectorXd& x) -> Eigen::VectorXd {
        return sc_residual(WaveState::from_vector(x), p);
    };
    Eigen::VectorXd x = guess.to_vector();
    ResidualEval ev;
    try {
        ev = sc_residual_eval(guess, p);
    } catch (const NumericalError& e) {
        if (e.kind() == Failure::OperatorUndefined)
            throw NumericalError(Failure::LeftFeasibility, std::string("left feasibility region: ") + e.what());
        throw;
    }
    double norm = ev.r.lpNorm<Eigen::Infinity>();

    for (int it = 0; it <= opt.max_iter; ++it) {
        if (norm <= opt.tol) {
            WaveState st = WaveState::from_vector(x);
            st.w.w_hat[1] = st.w.w_hat[1].real();
            st.w.w_hat[2] = cplx(0.0, st.w.w_hat[2].imag());
            return {st, it, norm, ev.margin};
        }
        if (it == opt.max_iter) break;
        Eigen::MatrixXd J;
        try {
            J = detail::fd_jacobian(F, x, 12, detail::margin_scaled_step(opt.fd_step, ev.margin));
        } catch (const NumericalError& e) {
            if (e.kind() == Failure::OperatorUndefined)
                throw NumericalError(Failure::LeftFeasibility, std::string("left feasibility region: ") + e.what());
            throw;
        }
        if (detail::condition_number(J) > opt.max_condition)
            throw NumericalError(Failure::Singular, "Jacobian singular (condition estimate > 1e12)");
        const Eigen::VectorXd dx = J.partialPivLu().solve(Eigen::VectorXd(ev.r));

        double lambda = 1.0;
        bool accepted = false;
        for (int damp = 0; damp < 12 && !accepted; ++damp, lambda *= 0.5) {
            const Eigen::VectorXd xt = x - lambda * dx;
            try {
                const auto et = sc_residual_eval(WaveState::from_vector(xt), p);
                const double nt = et.r.lpNorm<Eigen::Infinity>();
                if (std::isfinite(nt) && (nt < norm || damp == 11 && nt < 10.0 * norm)) {
                    x = xt;
                    ev = et;
                    norm = nt;
                    accepted = true;
                }
            } catch (const NumericalError& e) {
                if (!detail::operator_failure(e)) throw;
            }
        }
        if (!accepted) throw NumericalError(Failure::LeftFeasibility, "left feasibility region during damped Newton");
    }
    throw NumericalError(Failure::NoConvergence, "no convergence: residual " + std::to_string(norm) + " after "
                                                     + std::to_string(opt.max_iter) + " iterations");
}

struct WaveSeed {
    WaveState state;
    ModelParams params;
};

/// First-order wave near the Hopf point: a(x) = exp(i(2 pi x - 2 r cos 2 pi l x)),
/// s = Im lambda / (2 pi l), Omega = Omega_tw + 2 pi s (the co-moving frame
/// frequency of the linear mode), parameter at p0 + d2p/dr2 r^2 / 2, and w
/// projected from its defining formula and pinned.
inline WaveSeed init_from_hopf(const HopfData& hd, double r, std::size_t grid = 1024)
{
    WaveSeed seed;
    seed.params = with(hd.params, hd.free, hd.value + 0.5 * hd.d2_dr2 * r * r);
    const ModelParams& p = seed.params;
    const double s = hd.drift_speed;
    seed.state.s = s;
    seed.state.Omega = twisted_frequency(p, 1) + two_pi * s;

    std::vector<cplx> a(grid), a2(grid), ac(grid);
    for (std::size_t j = 0; j < grid; ++j) {
        const double x = static_cast<double>(j) / static_cast<double>(grid);
        a[j] = std::polar(1.0, two_pi * x - 2.0 * r * std::cos(two_pi * hd.ell * x));
        a2[j] = a[j] * a[j];
        ac[j] = std::conj(a[j]);
    }
    const auto Ga = convolve(a, p), Ga2 = convolve(a2, p), Gac = convolve(ac, p);
    const cplx e2 = std::exp(I * p.alpha2), e3 = std::exp(I * p.alpha3);
    std::array<cplx, 5> proj{};
    for (std::size_t j = 0; j < grid; ++j) {
        const double x = static_cast<double>(j) / static_cast<double>(grid);
        const cplx w = -p.K2 / (2.0 * s) * e2 * Ga[j] - p.K3 / (2.0 * s) * e3 * Ga2[j] * Gac[j];
        const auto psi = basis(x);
        for (int k = 0; k < 5; ++k) proj[k] += w * psi[k];
    }
    MeanField w;
    for (int k = 0; k < 5; ++k) w.w_hat[k] = proj[k] / static_cast<double>(grid) * (k == 0 ? 1.0 : 2.0);
    seed.state.w = pin_gauge(w);
    return seed;
}

enum class Termination { param_limit, singularity, drift_vanishes, step_failure, max_points };

inline const char* name(Termination t)
{
    switch (t) {
    case Termination::param_limit: return "param_limit";
    case Termination::singularity: return "singularity";
    case Termination::drift_vanishes: return "drift_vanishes";
    case Termination::step_failure: return "step_failure";
    case Termination::max_points: return "max_points";
    }
    return "unknown";
}

struct BranchPoint {
    Param param = Param::B;
    double param_value = 0.0;
    WaveState state;
    double residual_norm = 0.0;
    double mobius_margin = 0.0;
    Eigen::Matrix<double, 13, 1> tangent = Eigen::Matrix<double, 13, 1>::Zero();
    bool is_fold = false;
};

struct Branch {
    std::vector<BranchPoint> points;
    std::vector<std::size_t> folds;
    Termination termination = Termination::max_points;
    std::string detail;
};

struct ContinuationControls {
    double ds_initial = 0.01;
    double ds_min = 1e-5;
    double ds_max = 0.05;
    double param_min = -1e300;
    double param_max = 1e300;
    double margin_stop = 1e-4;
    double s_stop = 1e-4;
    int max_points = 5000;
    int max_corrector_iter = 16;
    double tol = 1e-10;
};

namespace detail {

using Vec13 = Eigen::Matrix<double, 13, 1>;

inline Vec13 pack(const WaveState& st, double pv)
{
    Vec13 X;
    X.head<12>() = st.to_vector();
    X[12] = pv;
    return X;
}

inline WaveState unpack(const Vec13& X) { return WaveState::from_vector(X.head<12>()); }

struct Corrected {
    Vec13 X;
    double norm = 0.0;
    double margin = 0.0;
    int iterations = 0;
};

// Unknowns and equations kept by the corrector. Half-period symmetric waves
// (w_1 = w_4 = w_5 = 0) are continued inside that invariant subspace: there
// the remaining equations vanish identically, and a nearly neutral
// symmetry-breaking direction would otherwise amplify rounding noise.
struct Subspace {
    std::vector<int> cols, rows;

    static Subspace full()
    {
        Subspace s;
        for (int i = 0; i < 13; ++i) s.cols.push_back(i), s.rows.push_back(i);
        return s;
    }

    static Subspace half_period()
    {
        return {{0, 1, 3, 4, 8, 9, 12}, {1, 2, 6, 7, 10, 11, 12}};
    }

    Vec13 project(const Vec13& v) const
    {
        Vec13 out = Vec13::Zero();
        for (int i : cols) out[i] = v[i];
        return out;
    }
};

inline bool half_period_symmetric(const MeanField& w)
{
    const auto& h = w.w_hat;
    return std::max({std::abs(h[0]), std::abs(h[3]), std::abs(h[4])})
        <= 1e-8 * std::max(std::abs(h[1]), std::abs(h[2]));
}

// Newton on [F(X); t.(W (X - Xp))] = 0, W the diagonal arclength metric.
inline std::optional<Corrected> correct(const Vec13& Xp, const Vec13& t, const Vec13& weight, const ModelParams& base,
                                        Param param, const ContinuationControls& c, double fd_step,
                                        const Subspace& sub = Subspace::full())
{
    const auto n = static_cast<Eigen::Index>(sub.cols.size());
    auto eval = [&](const Vec13& X) { return sc_residual_eval(unpack(X), with(base, param, X[12])); };
    auto jacobian = [&](const Vec13& X, double step) {
        Eigen::MatrixXd Jf(n, n);
        for (Eigen::Index j = 0; j < n; ++j) {
            const int col = sub.cols[static_cast<std::size_t>(j)];
            const double h = step * std::clamp(std::abs(X[col]), 1e-2, 1.0);
            Vec13 xp = X, xm = X;
            xp[col] += h;
            xm[col] -= h;
            const Residual d = (eval(xp).r - eval(xm).r) / (2.0 * h);
            for (Eigen::Index i = 0; i + 1 < n; ++i) Jf(i, j) = d[sub.rows[static_cast<std::size_t>(i)]];
            Jf(n - 1, j) = t[col] * weight[col];
        }
        return Jf;
    };
    Vec13 X = Xp;
    Eigen::MatrixXd J(n, n);
    double prev = std::numeric_limits<double>::infinity();
    bool fresh = false;
    try {
        ResidualEval ev = eval(X);
        for (int it = 0; it <= c.max_corrector_iter; ++it) {
            const double arc = t.dot(weight.cwiseProduct(X - Xp));
            Eigen::VectorXd G(n);
            for (Eigen::Index i = 0; i + 1 < n; ++i) G[i] = ev.r[sub.rows[static_cast<std::size_t>(i)]];
            G[n - 1] = arc;
            const double norm = ev.r.lpNorm<Eigen::Infinity>();
            if (norm <= c.tol && std::abs(arc) <= 1e-9) return Corrected{X, norm, ev.margin, it};
            if (it == c.max_corrector_iter) break;
            // Near the margin singularity Newton degrades to linear convergence.
            if (norm > 0.8 * prev && fresh) return std::nullopt;
            if (it == 0 || norm > 0.6 * prev) {
                J = jacobian(X, margin_scaled_step(fd_step, ev.margin));
                fresh = true;
            } else {
                fresh = false;
            }
            prev = norm;
            const Eigen::VectorXd dx = J.partialPivLu().solve(G);
            if (!dx.allFinite()) return std::nullopt;
            Vec13 dX = Vec13::Zero();
            for (Eigen::Index j = 0; j < n; ++j) dX[sub.cols[static_cast<std::size_t>(j)]] = dx[j];
            // Back off steps that leave the feasible region.
            double lambda = 1.0;
            for (int k = 0;; ++k, lambda *= 0.5) {
                try {
                    ev = eval(X - lambda * dX);
                    break;
                } catch (const NumericalError& e) {
                    if (e.kind() != Failure::OperatorUndefined || k == 7) throw;
                }
            }
            X -= lambda * dX;
        }
    } catch (const NumericalError& e) {
        if (!operator_failure(e) && e.kind() != Failure::InvalidArgument) throw;
    }
    return std::nullopt;
}

} // namespace detail

/// Pseudo-arclength continuation from a converged point. `direction` (+-1)
/// selects the initial sense of the parameter.
inline Branch continue_branch(const BranchPoint& start, const ModelParams& base, Param param, int direction,
                              const ContinuationControls& c = {})
{
    using detail::Vec13;
    Branch br;
    const NewtonOptions nopt;

    // Metric weights from running magnitudes of each coordinate.
    const detail::Subspace sub = detail::half_period_symmetric(start.state.w) ? detail::Subspace::half_period()
                                                                                : detail::Subspace::full();
    Vec13 X = sub.project(detail::pack(start.state, start.param_value));
    Vec13 extent = X.cwiseAbs().cwiseMax(Vec13::Constant(1e-2));
    auto weights = [&]() { return Vec13(extent.cwiseInverse().cwiseAbs2()); };

    // Initial tangent: null vector of the 12x13 Jacobian.
    auto F = [&](const Eigen::VectorXd& Y) -> Eigen::VectorXd {
        return sc_residual(detail::unpack(Y), with(base, param, Y[12]));
    };
    const Eigen::MatrixXd J0 = detail::fd_jacobian(F, Eigen::VectorXd(X), 12, nopt.fd_step);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(J0 * extent.asDiagonal(), Eigen::ComputeFullV);
    Vec13 t = sub.project(extent.asDiagonal() * svd.matrixV().col(12));
    t /= std::sqrt(t.dot(weights().cwiseProduct(t)));
    if ((t[12] > 0.0) != (direction > 0)) t = -t;

    BranchPoint first = start;
    first.param = param;
    first.state = detail::unpack(X);
    first.tangent = t;
    br.points.push_back(first);

    double ds = c.ds_initial;
    int easy = 0;
    int failures_at_min = 0;
    while (true) {
        if (static_cast<int>(br.points.size()) >= c.max_points) {
            br.termination = Termination::max_points;
            break;
        }
        const Vec13 W = weights();
        const Vec13 Xp = X + ds * t;
        auto corr = detail::correct(Xp, t, W, base, param, c, nopt.fd_step, sub);
        if (corr && corr->margin <= 0.0) corr.reset();
        if (!corr) {
            easy = 0;
            if (ds <= c.ds_min * (1.0 + 1e-12)) {
                if (++failures_at_min >= 3) {
                    br.termination = Termination::step_failure;
                    br.detail = "corrector failed at minimum step";
                    break;
                }
            }
            ds = std::max(c.ds_min, 0.5 * ds);
            continue;
        }
        failures_at_min = 0;

        const Vec13 Xn = corr->X;
        Vec13 tn = Xn - X;
        tn /= std::sqrt(tn.dot(W.cwiseProduct(tn)));

        BranchPoint bp;
        bp.param = param;
        bp.param_value = Xn[12];
        bp.state = detail::unpack(Xn);
        bp.state.w.w_hat[1] = bp.state.w.w_hat[1].real();
        bp.state.w.w_hat[2] = cplx(0.0, bp.state.w.w_hat[2].imag());
        bp.residual_norm = corr->norm;
        bp.mobius_margin = corr->margin;
        bp.tangent = tn;

        const bool crossed_window = bp.param_value < c.param_min || bp.param_value > c.param_max;
        if (crossed_window) {
            // Land exactly on the window edge.
            const double edge = bp.param_value > c.param_max ? c.param_max : c.param_min;
            const double frac = (edge - X[12]) / (Xn[12] - X[12]);
            const Vec13 Xi = X + frac * (Xn - X);
            try {
                const auto nr = newton_solve(detail::unpack(Xi), with(base, param, edge), nopt);
                bp.param_value = edge;
                bp.state = nr.state;
                bp.residual_norm = nr.residual_norm;
                bp.mobius_margin = nr.margin;
            } catch (const NumericalError&) {
                br.termination = Termination::param_limit;
                br.detail = "parameter left the window";
                break;
            }
        }

        if (tn[12] * t[12] < 0.0 && br.points.size() >= 1) {
            br.points.back().is_fold = true;
            br.folds.push_back(br.points.size() - 1);
        }
        br.points.push_back(bp);
        X = Xn;
        t = tn;
        extent = extent.cwiseMax(X.cwiseAbs());

        if (crossed_window) {
            br.termination = Termination::param_limit;
            break;
        }
        if (bp.mobius_margin < c.margin_stop) {
            br.termination = Termination::singularity;
            break;
        }
        if (std::abs(bp.state.s) < c.s_stop) {
            br.termination = Termination::drift_vanishes;
            break;
        }
        if (corr->iterations <= 3 && ++easy >= 3) {
            ds = std::min(c.ds_max, 1.3 * ds);
            easy = 0;
        }
    }
    return br;
}

/// Profile of a branch point from the stable solution operator.
inline WaveProfile profile_at(const BranchPoint& bp, std::size_t M = 512)
{
    return solution_operator_U(bp.state.w, bp.state.Omega / bp.state.s, bp.state.s > 0.0 ? 1 : -1, M);
}

/// Lifted phases theta_k = arg a(k/N), usable as a ring initial condition.
inline PhaseVector ring_initial_condition(const WaveProfile& prof)
{
    PhaseVector th(prof.a.size());
    double prev = 0.0;
    for (std::size_t k = 0; k < prof.a.size(); ++k) {
        const double a = std::arg(prof.a[k]);
        th[k] = k == 0 ? a : prev + std::remainder(a - prev, two_pi);
        prev = th[k];
    }
    return th;
}

} // namespace twistring
