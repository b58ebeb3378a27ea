#pragma once

// Dormand-Prince 8(5,3) explicit Runge-Kutta with adaptive step control, for
// Eigen column vectors (real or complex). Integration may run backward
// (x_end < x).

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <string>

#include <Eigen/Core>

#include "errors.hpp"

namespace twistring {

namespace dop853_coeffs {
inline constexpr double c2 = 0.526001519587677318785587544488e-01;
inline constexpr double c3 = 0.789002279381515978178381316732e-01;
inline constexpr double c4 = 0.118350341907227396726757197510e+00;
inline constexpr double c5 = 0.281649658092772603273242802490e+00;
inline constexpr double c6 = 0.333333333333333333333333333333e+00;
inline constexpr double c7 = 0.25e+00;
inline constexpr double c8 = 0.307692307692307692307692307692e+00;
inline constexpr double c9 = 0.651282051282051282051282051282e+00;
inline constexpr double c10 = 0.6e+00;
inline constexpr double c11 = 0.857142857142857142857142857142e+00;

inline constexpr double a21 = 5.26001519587677318785587544488e-2;
inline constexpr double a31 = 1.97250569845378994544595329183e-2;
inline constexpr double a32 = 5.91751709536136983633785987549e-2;
inline constexpr double a41 = 2.95875854768068491816892993775e-2;
inline constexpr double a43 = 8.87627564304205475450678981324e-2;
inline constexpr double a51 = 2.41365134159266685502369798665e-1;
inline constexpr double a53 = -8.84549479328286085344864962717e-1;
inline constexpr double a54 = 9.24834003261792003115737966543e-1;
inline constexpr double a61 = 3.7037037037037037037037037037e-2;
inline constexpr double a64 = 1.70828608729473871279604482173e-1;
inline constexpr double a65 = 1.25467687566822425016691814123e-1;
inline constexpr double a71 = 3.7109375e-2;
inline constexpr double a74 = 1.70252211019544039314978060272e-1;
inline constexpr double a75 = 6.02165389804559606850219397283e-2;
inline constexpr double a76 = -1.7578125e-2;
inline constexpr double a81 = 3.70920001185047927108779319836e-2;
inline constexpr double a84 = 1.70383925712239993810214054705e-1;
inline constexpr double a85 = 1.07262030446373284651809199168e-1;
inline constexpr double a86 = -1.53194377486244017527936158236e-2;
inline constexpr double a87 = 8.27378916381402288758473766002e-3;
inline constexpr double a91 = 6.24110958716075717114429577812e-1;
inline constexpr double a94 = -3.36089262944694129406857109825e0;
inline constexpr double a95 = -8.68219346841726006818189891453e-1;
inline constexpr double a96 = 2.75920996994467083049415600797e1;
inline constexpr double a97 = 2.01540675504778934086186788979e1;
inline constexpr double a98 = -4.34898841810699588477366255144e1;
inline constexpr double a101 = 4.77662536438264365890433908527e-1;
inline constexpr double a104 = -2.48811461997166764192642586468e0;
inline constexpr double a105 = -5.90290826836842996371446475743e-1;
inline constexpr double a106 = 2.12300514481811942347288949897e1;
inline constexpr double a107 = 1.52792336328824235832596922938e1;
inline constexpr double a108 = -3.32882109689848629194453265587e1;
inline constexpr double a109 = -2.03312017085086261358222928593e-2;
inline constexpr double a111 = -9.3714243008598732571704021658e-1;
inline constexpr double a114 = 5.18637242884406370830023853209e0;
inline constexpr double a115 = 1.09143734899672957818500254654e0;
inline constexpr double a116 = -8.14978701074692612513997267357e0;
inline constexpr double a117 = -1.85200656599969598641566180701e1;
inline constexpr double a118 = 2.27394870993505042818970056734e1;
inline constexpr double a119 = 2.49360555267965238987089396762e0;
inline constexpr double a1110 = -3.0467644718982195003823669022e0;
inline constexpr double a121 = 2.27331014751653820792359768449e0;
inline constexpr double a124 = -1.05344954667372501984066689879e1;
inline constexpr double a125 = -2.00087205822486249909675718444e0;
inline constexpr double a126 = -1.79589318631187989172765950534e1;
inline constexpr double a127 = 2.79488845294199600508499808837e1;
inline constexpr double a128 = -2.85899827713502369474065508674e0;
inline constexpr double a129 = -8.87285693353062954433549289258e0;
inline constexpr double a1210 = 1.23605671757943030647266201528e1;
inline constexpr double a1211 = 6.43392746015763530355970484046e-1;

inline constexpr double b1 = 5.42937341165687622380535766363e-2;
inline constexpr double b6 = 4.45031289275240888144113950566e0;
inline constexpr double b7 = 1.89151789931450038304281599044e0;
inline constexpr double b8 = -5.8012039600105847814672114227e0;
inline constexpr double b9 = 3.1116436695781989440891606237e-1;
inline constexpr double b10 = -1.52160949662516078556178806805e-1;
inline constexpr double b11 = 2.01365400804030348374776537501e-1;
inline constexpr double b12 = 4.47106157277725905176885569043e-2;

inline constexpr double bhh1 = 0.244094488188976377952755905512e+00;
inline constexpr double bhh2 = 0.733846688281611857341361741547e+00;
inline constexpr double bhh3 = 0.220588235294117647058823529412e-01;

inline constexpr double er1 = 0.1312004499419488073250102996e-01;
inline constexpr double er6 = -0.1225156446376204440720569753e+01;
inline constexpr double er7 = -0.4957589496572501915214079952e+00;
inline constexpr double er8 = 0.1664377182454986536961530415e+01;
inline constexpr double er9 = -0.3503288487499736816886487290e+00;
inline constexpr double er10 = 0.3341791187130174790297318841e+00;
inline constexpr double er11 = 0.8192320648511571246570742613e-01;
inline constexpr double er12 = -0.2235530786388629525884427845e-01;
} // namespace dop853_coeffs

struct Dop853Options {
    double rtol = 1e-12;
    double atol = 1e-12;
    double h_max = 0.0; // 0: unbounded
    long max_steps = 200000;
};

/// Stateful stepper: the accepted step size carries over between calls to
/// advance(), so sampling a solution on a grid costs little more than one
/// long integration.
template <class Vec>
class Dop853 {
public:
    using Rhs = std::function<void(double, const Vec&, Vec&)>;

    Dop853(Rhs f, Dop853Options opt = {}) : f_(std::move(f)), opt_(opt) {}

    long steps() const noexcept { return accepted_ + rejected_; }
    long rejected() const noexcept { return rejected_; }

    /// Advances y from x to x_end. `guard` is called after each accepted step
    /// and may throw to abort.
    template <class Guard>
    void advance(double& x, Vec& y, double x_end, Guard&& guard)
    {
        using namespace dop853_coeffs;
        if (x == x_end) return;
        const double dir = x_end > x ? 1.0 : -1.0;
        const Eigen::Index n = y.size();

        Vec k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), k8(n), k9(n), k10(n), k11(n), k12(n);
        Vec yt(n), y_new(n);
        f_(x, y, k1);
        if (h_ <= 0.0) h_ = initial_step(x, y, k1, dir, std::abs(x_end - x));

        double err_old = 1e-4;
        bool last_rejected = false;
        long local = 0;
        while (dir * (x_end - x) > 0.0) {
            if (++local > opt_.max_steps)
                throw NumericalError(Failure::NoConvergence, "dop853: step budget exhausted");
            double h = std::min(h_, std::abs(x_end - x));
            if (opt_.h_max > 0.0) h = std::min(h, opt_.h_max);
            const bool hits_end = h >= std::abs(x_end - x);
            if (h < 1e3 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(x)))
                throw NumericalError(Failure::NoConvergence, "dop853: step size underflow at x = " + std::to_string(x));
            const double hs = dir * h;

            yt = y + hs * a21 * k1;
            f_(x + c2 * hs, yt, k2);
            yt = y + hs * (a31 * k1 + a32 * k2);
            f_(x + c3 * hs, yt, k3);
            yt = y + hs * (a41 * k1 + a43 * k3);
            f_(x + c4 * hs, yt, k4);
            yt = y + hs * (a51 * k1 + a53 * k3 + a54 * k4);
            f_(x + c5 * hs, yt, k5);
            yt = y + hs * (a61 * k1 + a64 * k4 + a65 * k5);
            f_(x + c6 * hs, yt, k6);
            yt = y + hs * (a71 * k1 + a74 * k4 + a75 * k5 + a76 * k6);
            f_(x + c7 * hs, yt, k7);
            yt = y + hs * (a81 * k1 + a84 * k4 + a85 * k5 + a86 * k6 + a87 * k7);
            f_(x + c8 * hs, yt, k8);
            yt = y + hs * (a91 * k1 + a94 * k4 + a95 * k5 + a96 * k6 + a97 * k7 + a98 * k8);
            f_(x + c9 * hs, yt, k9);
            yt = y + hs * (a101 * k1 + a104 * k4 + a105 * k5 + a106 * k6 + a107 * k7 + a108 * k8 + a109 * k9);
            f_(x + c10 * hs, yt, k10);
            yt = y + hs * (a111 * k1 + a114 * k4 + a115 * k5 + a116 * k6 + a117 * k7 + a118 * k8 + a119 * k9 + a1110 * k10);
            f_(x + c11 * hs, yt, k11);
            yt = y + hs * (a121 * k1 + a124 * k4 + a125 * k5 + a126 * k6 + a127 * k7 + a128 * k8 + a129 * k9 + a1210 * k10
                           + a1211 * k11);
            f_(x + hs, yt, k12);

            const Vec incr = b1 * k1 + b6 * k6 + b7 * k7 + b8 * k8 + b9 * k9 + b10 * k10 + b11 * k11 + b12 * k12;
            y_new = y + hs * incr;

            const Vec e3 = incr - bhh1 * k1 - bhh2 * k9 - bhh3 * k12;
            const Vec e5 = er1 * k1 + er6 * k6 + er7 * k7 + er8 * k8 + er9 * k9 + er10 * k10 + er11 * k11 + er12 * k12;
            double err3 = 0.0, err5 = 0.0;
            for (Eigen::Index i = 0; i < n; ++i) {
                const double sk = opt_.atol + opt_.rtol * std::max(std::abs(y[i]), std::abs(y_new[i]));
                err3 += std::norm(e3[i] / sk);
                err5 += std::norm(e5[i] / sk);
            }
            double deno = err5 + 0.01 * err3;
            if (deno <= 0.0) deno = 1.0;
            double err = h * err5 / std::sqrt(static_cast<double>(n) * deno);
            if (!std::isfinite(err)) err = 1e10;

            // Step-size controller with a light PI term.
            const double fac11 = std::pow(err, 0.125 - 0.04 * 0.2);
            double fac = fac11 / std::pow(err_old, 0.04) / 0.9;
            fac = std::clamp(fac, 1.0 / 6.0, 1.0 / 0.333);
            double h_new = h / fac;

            if (err <= 1.0) {
                err_old = std::max(err, 1e-4);
                x = hits_end ? x_end : x + hs;
                y = y_new;
                ++accepted_;
                guard(x, y);
                f_(x, y, k1);
                if (last_rejected) h_new = std::min(h_new, h);
                last_rejected = false;
                // Do not let a short final step to x_end shrink the carried step.
                h_ = hits_end ? std::max(h_new, h_) : h_new;
            } else {
                h_ = h / std::min(1.0 / 0.333, fac11 / 0.9);
                last_rejected = true;
                ++rejected_;
            }
        }
    }

    void advance(double& x, Vec& y, double x_end)
    {
        advance(x, y, x_end, [](double, const Vec&) {});
    }

private:
    double initial_step(double x, const Vec& y, const Vec& f0, double dir, double span)
    {
        const Eigen::Index n = y.size();
        double dnf = 0.0, dny = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            const double sk = opt_.atol + opt_.rtol * std::abs(y[i]);
            dnf += std::norm(f0[i] / sk);
            dny += std::norm(y[i] / sk);
        }
        double h = (dnf <= 1e-10 || dny <= 1e-10) ? 1e-6 : 0.01 * std::sqrt(dny / dnf);
        h = std::min(h, span);
        Vec y1 = y + dir * h * f0, f1(n);
        f_(x + dir * h, y1, f1);
        double der2 = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            const double sk = opt_.atol + opt_.rtol * std::abs(y[i]);
            der2 += std::norm((f1[i] - f0[i]) / sk);
        }
        der2 = std::sqrt(der2) / h;
        const double der12 = std::max(std::abs(der2), std::sqrt(dnf));
        const double h1 = der12 <= 1e-15 ? std::max(1e-6, h * 1e-3) : std::pow(0.01 / der12, 1.0 / 8.0);
        return std::min({100.0 * h, h1, span});
    }

    Rhs f_;
    Dop853Options opt_;
    double h_ = 0.0;
    long accepted_ = 0;
    long rejected_ = 0;
};

} // namespace twistring
