#pragma once

// CSV and JSON writers. Numbers use 17 significant digits so files round-trip.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

#include "config.hpp"
#include "continuation.hpp"
#include "hopf.hpp"
#include "ring.hpp"
#include "spectral.hpp"

namespace twistring {

inline std::string fmt17(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline json complex_json(cplx z) { return json{{"re", z.real()}, {"im", z.imag()}}; }

namespace detail {

inline std::ofstream open_out(const std::filesystem::path& path)
{
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    return out;
}

} // namespace detail

inline void write_json(const std::filesystem::path& path, const json& j)
{
    auto out = detail::open_out(path);
    out << j.dump(2) << '\n';
}

/// Columns t, theta_0..theta_{N-1}; phases reduced to [0, 2 pi). Keeps every
/// `every`-th snapshot and always the last one.
inline void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& tr, std::size_t every = 1)
{
    if (every == 0) every = 1;
    auto out = detail::open_out(path);
    const std::size_t n = tr.states.empty() ? 0 : tr.states.front().size();
    out << 't';
    for (std::size_t k = 0; k < n; ++k) out << ",theta_" << k;
    out << '\n';
    for (std::size_t i = 0; i < tr.times.size(); ++i) {
        if (i % every != 0 && i + 1 != tr.times.size()) continue;
        out << fmt17(tr.times[i]);
        for (double th : tr.states[i]) {
            double r = std::fmod(th, two_pi);
            if (r < 0.0) r += two_pi;
            out << ',' << fmt17(r);
        }
        out << '\n';
    }
}

inline json drift_json(const DriftEstimate& d)
{
    return json{{"s", d.s}, {"Omega", d.Omega}, {"peak_correlation", d.peak_correlation},
                {"coherent", d.coherent}, {"uniform", d.uniform}};
}

inline void write_scan_csv(const std::filesystem::path& path, const std::vector<ScanPoint>& pts)
{
    auto out = detail::open_out(path);
    out << "B,K3,max_re,argmax_ell,abs_im_critical\n";
    for (const auto& p : pts)
        out << fmt17(p.B) << ',' << fmt17(p.K3) << ',' << fmt17(p.max_re) << ',' << p.ell << ',' << fmt17(p.abs_im) << '\n';
}

inline json hopf_json(const HopfData& h)
{
    return json{{"ell", h.ell},
                {"free", name(h.free)},
                {"value", h.value},
                {"params", detail::params_json(h.params, 1)},
                {"lambda", complex_json(h.lambda)},
                {"dlambda_dparam", complex_json(h.dlambda_dparam)},
                {"zeta", complex_json(h.zeta)},
                {"zeta_closed_form", complex_json(h.zeta_closed_form)},
                {"d2_dr2", h.d2_dr2},
                {"drift_speed", h.drift_speed},
                {"criticality", name(h.criticality)},
                {"warnings", h.warnings}};
}

inline void write_branch_csv(const std::filesystem::path& path, const Branch& br)
{
    auto out = detail::open_out(path);
    out << "param_name,param_value,s,Omega";
    for (int k = 1; k <= 5; ++k) out << ",re_w" << k << ",im_w" << k;
    out << ",residual_norm,mobius_margin,is_fold\n";
    for (const auto& p : br.points) {
        out << name(p.param) << ',' << fmt17(p.param_value) << ',' << fmt17(p.state.s) << ',' << fmt17(p.state.Omega);
        for (const auto& w : p.state.w.w_hat) out << ',' << fmt17(w.real()) << ',' << fmt17(w.imag());
        out << ',' << fmt17(p.residual_norm) << ',' << fmt17(p.mobius_margin) << ',' << (p.is_fold ? 1 : 0) << '\n';
    }
}

/// Columns x, re_a, im_a, theta with theta = arg a in (-pi, pi].
inline void write_profile_csv(const std::filesystem::path& path, const WaveProfile& prof)
{
    auto out = detail::open_out(path);
    out << "x,re_a,im_a,theta\n";
    const std::size_t m = prof.a.size();
    for (std::size_t k = 0; k < m; ++k) {
        const cplx a = prof.a[k];
        out << fmt17(static_cast<double>(k) / static_cast<double>(m)) << ',' << fmt17(a.real()) << ','
            << fmt17(a.imag()) << ',' << fmt17(std::arg(a)) << '\n';
    }
}

inline json branch_point_json(const BranchPoint& p)
{
    json w = json::array();
    for (const auto& c : p.state.w.w_hat) w.push_back(complex_json(c));
    return json{{"param", name(p.param)}, {"param_value", p.param_value}, {"s", p.state.s}, {"Omega", p.state.Omega},
                {"w_hat", w}, {"residual_norm", p.residual_norm}, {"mobius_margin", p.mobius_margin}};
}

} // namespace twistring
