#pragma once

// JSON run configuration. Every object is checked for unknown keys, and the
// resolved form (defaults filled in) is kept for provenance.

#include <array>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "continuation.hpp"
#include "errors.hpp"
#include "model.hpp"

namespace twistring {

using json = nlohmann::json;

struct Range {
    double min = 0.0;
    double max = 0.0;
    std::size_t n = 1;
};

struct SimulateConfig {
    std::size_t N = 512;
    double T = 100.0;
    double dt = 1e-2;
    int sample_every = 100;
    int output_every = 1; // CSV keeps every n-th sample
    std::string init = "perturbed"; // twisted | perturbed | random
    int ell = 1;
    double r = 0.05;
    double drift_from = 0.0;
};

struct ScanConfig {
    Range B{0.0, 0.4, 201};
    Range K3{-0.5, 1.0, 151};
};

struct HopfConfig {
    Param free = Param::B;
    std::array<double, 2> bracket{0.0, 0.0};
    int modes = 8;
    int mode = 0; // 0: leading mode
};

struct ContinueRun {
    std::string label;
    ModelParams params;
};

struct ContinueConfig {
    Param param = Param::B;
    Param hopf_free = Param::B;
    std::array<double, 2> bracket{0.0, 0.0};
    int mode = 0;
    double r = 0.05;
    int direction = 0; // 0: follow the sign of d2/dr2
    ContinuationControls controls;
    std::size_t profile_M = 512;
    std::string profiles = "folds"; // none | folds | ends
    std::vector<ContinueRun> runs;
};

struct ProfileConfig {
    Param free = Param::B;
    std::array<double, 2> bracket{0.0, 0.0};
    int mode = 0;
    double r = 0.05;
    std::size_t M = 512;
};

struct RunConfig {
    ModelParams params;
    int q = 1;
    std::uint64_t seed = 0;
    std::optional<SimulateConfig> simulate;
    std::optional<ScanConfig> scan;
    std::optional<HopfConfig> hopf;
    std::optional<ContinueConfig> cont;
    std::optional<ProfileConfig> profile;
    json resolved;
};

namespace detail {

class ObjectReader {
public:
    ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path))
    {
        if (!j_.is_object()) throw ConfigError(path_ + ": expected an object");
    }

    bool has(const std::string& key) const { return j_.contains(key); }

    const json& raw(const std::string& key)
    {
        used_.insert(key);
        if (!j_.contains(key)) throw ConfigError(path_ + ": missing key '" + key + "'");
        return j_.at(key);
    }

    double number(const std::string& key)
    {
        const json& v = raw(key);
        if (!v.is_number()) throw ConfigError(where(key) + ": expected a number");
        const double x = v.get<double>();
        if (!std::isfinite(x)) throw ConfigError(where(key) + ": not finite");
        return x;
    }

    double number(const std::string& key, double fallback) { return has(key) ? number(key) : fallback; }

    long long integer(const std::string& key)
    {
        const json& v = raw(key);
        if (!v.is_number_integer()) throw ConfigError(where(key) + ": expected an integer");
        return v.get<long long>();
    }

    long long integer(const std::string& key, long long fallback) { return has(key) ? integer(key) : fallback; }

    std::string string(const std::string& key, const std::string& fallback, std::initializer_list<const char*> allowed)
    {
        if (!has(key)) return fallback;
        const json& v = raw(key);
        if (!v.is_string()) throw ConfigError(where(key) + ": expected a string");
        const auto s = v.get<std::string>();
        for (const char* a : allowed)
            if (s == a) return s;
        throw ConfigError(where(key) + ": unsupported value '" + s + "'");
    }

    Param param(const std::string& key, Param fallback)
    {
        const auto s = string(key, name(fallback), {"B", "K3"});
        return s == "B" ? Param::B : Param::K3;
    }

    std::array<double, 2> pair(const std::string& key)
    {
        const json& v = raw(key);
        if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
            throw ConfigError(where(key) + ": expected [lo, hi]");
        std::array<double, 2> out{v[0].get<double>(), v[1].get<double>()};
        if (!std::isfinite(out[0]) || !std::isfinite(out[1]) || !(out[0] < out[1]))
            throw ConfigError(where(key) + ": need finite lo < hi");
        return out;
    }

    std::string where(const std::string& key) const { return path_ + "." + key; }

    void finish() const
    {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!used_.count(it.key())) throw ConfigError(path_ + ": unknown key '" + it.key() + "'");
    }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> used_;
};

inline std::size_t positive_size(long long v, const std::string& where)
{
    if (v < 1) throw ConfigError(where + ": must be positive");
    return static_cast<std::size_t>(v);
}

inline double positive(double v, const std::string& where)
{
    if (!(v > 0.0)) throw ConfigError(where + ": must be positive");
    return v;
}

inline ModelParams read_params(const json& j, const std::string& path, int* q, const ModelParams* base)
{
    ObjectReader rd(j, path);
    ModelParams p;
    if (base) {
        p = *base;
        p.K2 = rd.number("K2", p.K2);
        p.K3 = rd.number("K3", p.K3);
        p.A = rd.number("A", p.A);
        p.B = rd.number("B", p.B);
        p.alpha2 = rd.number("alpha2", p.alpha2);
        p.alpha3 = rd.number("alpha3", p.alpha3);
        p.omega = rd.number("omega", p.omega);
        if (rd.has("q") && rd.integer("q") != *q) throw ConfigError(path + ".q: runs may not change q");
    } else {
        p.K2 = rd.number("K2");
        p.K3 = rd.number("K3");
        p.A = rd.number("A");
        p.B = rd.number("B");
        p.alpha2 = rd.number("alpha2");
        p.alpha3 = rd.number("alpha3");
        p.omega = rd.number("omega");
        *q = static_cast<int>(rd.integer("q"));
    }
    rd.finish();
    return p;
}

inline Range read_range(const json& j, const std::string& path, Range fallback)
{
    ObjectReader rd(j, path);
    Range r{rd.number("min", fallback.min), rd.number("max", fallback.max),
            positive_size(rd.integer("n", static_cast<long long>(fallback.n)), path + ".n")};
    rd.finish();
    if (r.n > 1 && !(r.min < r.max)) throw ConfigError(path + ": need min < max");
    return r;
}

inline ContinuationControls read_controls(const json& j, const std::string& path)
{
    ObjectReader rd(j, path);
    ContinuationControls c;
    c.ds_initial = positive(rd.number("ds_initial", c.ds_initial), path + ".ds_initial");
    c.ds_min = positive(rd.number("ds_min", c.ds_min), path + ".ds_min");
    c.ds_max = positive(rd.number("ds_max", c.ds_max), path + ".ds_max");
    c.param_min = rd.number("param_min", -10.0);
    c.param_max = rd.number("param_max", 10.0);
    c.margin_stop = positive(rd.number("margin_stop", c.margin_stop), path + ".margin_stop");
    c.s_stop = positive(rd.number("s_stop", c.s_stop), path + ".s_stop");
    c.max_points = static_cast<int>(positive_size(rd.integer("max_points", c.max_points), path + ".max_points"));
    c.max_corrector_iter
        = static_cast<int>(positive_size(rd.integer("max_corrector_iter", c.max_corrector_iter), path + ".max_corrector_iter"));
    c.tol = positive(rd.number("tol", c.tol), path + ".tol");
    rd.finish();
    if (!(c.ds_min <= c.ds_initial && c.ds_initial <= c.ds_max)) throw ConfigError(path + ": need ds_min <= ds_initial <= ds_max");
    if (!(c.param_min < c.param_max)) throw ConfigError(path + ": need param_min < param_max");
    return c;
}

inline int read_mode(ObjectReader& rd, const std::string& where)
{
    const long long m = rd.integer("mode", 0);
    if (m < 0 || m > 3) throw ConfigError(where + ": must be 0 (leading) or 1..3");
    return static_cast<int>(m);
}

inline json params_json(const ModelParams& p, int q)
{
    return json{{"K2", p.K2}, {"K3", p.K3}, {"A", p.A}, {"B", p.B}, {"alpha2", p.alpha2},
                {"alpha3", p.alpha3}, {"omega", p.omega}, {"q", q}};
}

inline json range_json(const Range& r) { return json{{"min", r.min}, {"max", r.max}, {"n", r.n}}; }

inline json controls_json(const ContinuationControls& c)
{
    return json{{"ds_initial", c.ds_initial}, {"ds_min", c.ds_min}, {"ds_max", c.ds_max},
                {"param_min", c.param_min}, {"param_max", c.param_max}, {"margin_stop", c.margin_stop},
                {"s_stop", c.s_stop}, {"max_points", c.max_points}, {"max_corrector_iter", c.max_corrector_iter},
                {"tol", c.tol}};
}

} // namespace detail

inline json resolved_json(const RunConfig& rc)
{
    using namespace detail;
    json out{{"params", params_json(rc.params, rc.q)}, {"seed", rc.seed}};
    if (rc.simulate) {
        const auto& s = *rc.simulate;
        out["simulate"] = {{"N", s.N}, {"T", s.T}, {"dt", s.dt}, {"sample_every", s.sample_every},
                           {"output_every", s.output_every},
                           {"init", s.init}, {"ell", s.ell}, {"r", s.r}, {"drift_from", s.drift_from}};
    }
    if (rc.scan) out["scan"] = {{"B", range_json(rc.scan->B)}, {"K3", range_json(rc.scan->K3)}};
    if (rc.hopf)
        out["hopf"] = {{"free", name(rc.hopf->free)}, {"bracket", rc.hopf->bracket}, {"modes", rc.hopf->modes},
                         {"mode", rc.hopf->mode}};
    if (rc.cont) {
        const auto& c = *rc.cont;
        json runs = json::array();
        for (const auto& r : c.runs) runs.push_back({{"label", r.label}, {"params", params_json(r.params, rc.q)}});
        out["continue"] = {{"param", name(c.param)}, {"hopf_free", name(c.hopf_free)}, {"bracket", c.bracket},
                           {"mode", c.mode}, {"r", c.r}, {"direction", c.direction}, {"controls", controls_json(c.controls)},
                           {"profile_M", c.profile_M}, {"profiles", c.profiles}, {"runs", runs}};
    }
    if (rc.profile)
        out["profile"] = {{"free", name(rc.profile->free)}, {"bracket", rc.profile->bracket},
                          {"mode", rc.profile->mode}, {"r", rc.profile->r},
                          {"M", rc.profile->M}};
    return out;
}

inline RunConfig parse_config(const json& j)
{
    using namespace detail;
    ObjectReader top(j, "config");
    RunConfig rc;
    rc.params = read_params(top.raw("params"), "config.params", &rc.q, nullptr);
    if (!rc.params.finite()) throw ConfigError("config.params: non-finite value");
    const long long seed = top.integer("seed", 0);
    if (seed < 0) throw ConfigError("config.seed: must be non-negative");
    rc.seed = static_cast<std::uint64_t>(seed);

    if (top.has("simulate")) {
        ObjectReader rd(top.raw("simulate"), "config.simulate");
        SimulateConfig s;
        s.N = positive_size(rd.integer("N", static_cast<long long>(s.N)), "config.simulate.N");
        if (s.N < 3) throw ConfigError("config.simulate.N: need at least 3 oscillators");
        s.T = positive(rd.number("T", s.T), "config.simulate.T");
        s.dt = positive(rd.number("dt", s.dt), "config.simulate.dt");
        s.sample_every = static_cast<int>(positive_size(rd.integer("sample_every", s.sample_every), "config.simulate.sample_every"));
        s.output_every = static_cast<int>(positive_size(rd.integer("output_every", s.output_every), "config.simulate.output_every"));
        s.init = rd.string("init", s.init, {"twisted", "perturbed", "random"});
        s.ell = static_cast<int>(positive_size(rd.integer("ell", s.ell), "config.simulate.ell"));
        s.r = rd.number("r", s.r);
        s.drift_from = rd.number("drift_from", s.drift_from);
        if (s.drift_from < 0.0 || s.drift_from >= s.T) throw ConfigError("config.simulate.drift_from: need 0 <= drift_from < T");
        rd.finish();
        rc.simulate = s;
    }
    if (top.has("scan")) {
        ObjectReader rd(top.raw("scan"), "config.scan");
        ScanConfig s;
        if (rd.has("B")) s.B = read_range(rd.raw("B"), "config.scan.B", s.B);
        if (rd.has("K3")) s.K3 = read_range(rd.raw("K3"), "config.scan.K3", s.K3);
        rd.finish();
        rc.scan = s;
    }
    if (top.has("hopf")) {
        ObjectReader rd(top.raw("hopf"), "config.hopf");
        HopfConfig h;
        h.free = rd.param("free", h.free);
        h.bracket = rd.pair("bracket");
        h.modes = static_cast<int>(positive_size(rd.integer("modes", h.modes), "config.hopf.modes"));
        h.mode = read_mode(rd, "config.hopf.mode");
        rd.finish();
        rc.hopf = h;
    }
    if (top.has("continue")) {
        ObjectReader rd(top.raw("continue"), "config.continue");
        ContinueConfig c;
        c.param = rd.param("param", c.param);
        c.hopf_free = rd.param("hopf_free", c.param);
        c.bracket = rd.pair("bracket");
        c.mode = read_mode(rd, "config.continue.mode");
        c.r = positive(rd.number("r", c.r), "config.continue.r");
        c.direction = static_cast<int>(rd.integer("direction", 0));
        if (c.direction < -1 || c.direction > 1) throw ConfigError("config.continue.direction: must be -1, 0 or 1");
        if (rd.has("controls")) c.controls = read_controls(rd.raw("controls"), "config.continue.controls");
        else c.controls = read_controls(json::object(), "config.continue.controls");
        c.profile_M = positive_size(rd.integer("profile_M", static_cast<long long>(c.profile_M)), "config.continue.profile_M");
        c.profiles = rd.string("profiles", c.profiles, {"none", "folds", "ends"});
        if (rd.has("runs")) {
            const json& runs = rd.raw("runs");
            if (!runs.is_array() || runs.empty()) throw ConfigError("config.continue.runs: expected a non-empty array");
            std::set<std::string> labels;
            for (std::size_t i = 0; i < runs.size(); ++i) {
                const std::string path = "config.continue.runs[" + std::to_string(i) + "]";
                ObjectReader rr(runs[i], path);
                ContinueRun run;
                const json& lab = rr.raw("label");
                if (!lab.is_string() || lab.get<std::string>().empty()) throw ConfigError(path + ".label: expected a non-empty string");
                run.label = lab.get<std::string>();
                for (char ch : run.label)
                    if (!(std::isalnum(static_cast<unsigned char>(ch)) || ch == '_' || ch == '-' || ch == '.'))
                        throw ConfigError(path + ".label: use letters, digits, '_', '-' or '.'");
                if (!labels.insert(run.label).second) throw ConfigError(path + ".label: duplicate");
                run.params = rr.has("params") ? read_params(rr.raw("params"), path + ".params", &rc.q, &rc.params) : rc.params;
                rr.finish();
                c.runs.push_back(run);
            }
        } else {
            c.runs.push_back({"branch", rc.params});
        }
        rd.finish();
        rc.cont = c;
    }
    if (top.has("profile")) {
        ObjectReader rd(top.raw("profile"), "config.profile");
        ProfileConfig pc;
        pc.free = rd.param("free", pc.free);
        pc.bracket = rd.pair("bracket");
        pc.mode = read_mode(rd, "config.profile.mode");
        pc.r = positive(rd.number("r", pc.r), "config.profile.r");
        pc.M = positive_size(rd.integer("M", static_cast<long long>(pc.M)), "config.profile.M");
        rd.finish();
        rc.profile = pc;
    }
    top.finish();
    rc.resolved = resolved_json(rc);
    return rc;
}

inline RunConfig load_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("invalid JSON in '" + path + "': " + e.what());
    }
    return parse_config(j);
}

} // namespace twistring
