// twistring <simulate|scan|hopf|continue|profile> --config <path> --out <dir>
// Exit codes: 0 success, 2 configuration error, 3 numerical failure.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <random>
#include <string>

#include <CLI11.hpp>

#include <twistring/twistring.hpp>

namespace fs = std::filesystem;
using namespace twistring;

namespace {

struct Outputs {
    fs::path dir;
    json files = json::array();

    fs::path add(const std::string& name)
    {
        files.push_back(name);
        return dir / name;
    }
};

void write_manifest(const std::string& command, const RunConfig& rc, Outputs& out, json extra)
{
    json m{{"command", command}, {"config", rc.resolved}, {"outputs", out.files}};
    for (auto it = extra.begin(); it != extra.end(); ++it) m[it.key()] = it.value();
    write_json(out.dir / "manifest.json", m);
}

void require_q1(const RunConfig& rc, const char* command)
{
    if (rc.q != 1) throw ConfigError(std::string(command) + ": only q = 1 is supported");
}

template <class T>
const T& section(const std::optional<T>& s, const char* key)
{
    if (!s) throw ConfigError(std::string("config: missing section '") + key + "'");
    return *s;
}

void cmd_simulate(const RunConfig& rc, Outputs& out)
{
    const auto& sc = section(rc.simulate, "simulate");
    PhaseVector theta0;
    if (sc.init == "random") {
        std::mt19937_64 rng(rc.seed);
        std::uniform_real_distribution<double> u(0.0, two_pi);
        theta0.resize(sc.N);
        for (auto& th : theta0) th = u(rng);
    } else {
        theta0 = perturb_twisted(rc.q, sc.ell, sc.init == "twisted" ? 0.0 : sc.r, sc.N);
    }
    const auto traj = integrate(theta0, rc.params, sc.T, sc.dt, sc.sample_every);
    write_trajectory_csv(out.add("trajectory.csv"), traj, static_cast<std::size_t>(sc.output_every));
    const auto drift = estimate_drift(traj, sc.drift_from);
    write_json(out.add("drift.json"), drift_json(drift));
    write_manifest("simulate", rc, out, {{"drift", drift_json(drift)}, {"snapshots", traj.times.size()}});
}

void cmd_scan(const RunConfig& rc, Outputs& out)
{
    const auto& sc = section(rc.scan, "scan");
    if (rc.params.omega != 0.0) throw ConfigError("scan: omega must be 0");
    if (rc.q != 1 && rc.q != -1) throw ConfigError("scan: q must be 1 or -1");
    const auto pts = stability_scan(rc.params, linspace(sc.B.min, sc.B.max, sc.B.n),
                                    linspace(sc.K3.min, sc.K3.max, sc.K3.n), rc.q);
    write_scan_csv(out.add("scan.csv"), pts);
    write_manifest("scan", rc, out, {{"rows", pts.size()}});
}

void cmd_hopf(const RunConfig& rc, Outputs& out)
{
    const auto& hc = section(rc.hopf, "hopf");
    require_q1(rc, "hopf");
    const auto hd = hopf_classify(rc.params, hc.free, hc.bracket[0], hc.bracket[1], hc.modes, hc.mode);
    write_json(out.add("hopf.json"), hopf_json(hd));
    write_manifest("hopf", rc, out, {{"hopf", hopf_json(hd)}});
}

BranchPoint seed_point(const HopfData& hd, double r, Param param)
{
    const auto seed = init_from_hopf(hd, r);
    const auto nr = newton_solve(seed.state, seed.params);
    BranchPoint bp;
    bp.param = param;
    bp.param_value = get(seed.params, param);
    bp.state = nr.state;
    bp.residual_norm = nr.residual_norm;
    bp.mobius_margin = nr.margin;
    return bp;
}

void cmd_continue(const RunConfig& rc, Outputs& out)
{
    const auto& cc = section(rc.cont, "continue");
    require_q1(rc, "continue");
    if (cc.direction == 0 && cc.hopf_free != cc.param)
        throw ConfigError("continue: set 'direction' when hopf_free differs from param");
    json runs = json::array();
    for (const auto& run : cc.runs) {
        const auto hd = hopf_classify(run.params, cc.hopf_free, cc.bracket[0], cc.bracket[1], 8, cc.mode);
        const auto start = seed_point(hd, cc.r, cc.param);
        const int dir = cc.direction != 0 ? cc.direction : (hd.d2_dr2 > 0.0 ? 1 : -1);
        const auto br = continue_branch(start, with(run.params, cc.hopf_free, hd.value), cc.param, dir, cc.controls);
        write_branch_csv(out.add("branch_" + run.label + ".csv"), br);

        json folds = json::array();
        for (auto i : br.folds) folds.push_back({{"index", i}, {"param_value", br.points[i].param_value}, {"s", br.points[i].state.s}});
        json profiles = json::array();
        auto emit = [&](std::size_t i, const std::string& tag) {
            const std::string file = "profile_" + run.label + "_" + tag + ".csv";
            write_profile_csv(out.add(file), profile_at(br.points[i], cc.profile_M));
            profiles.push_back({{"index", i}, {"file", file}, {"point", branch_point_json(br.points[i])}});
        };
        if (cc.profiles == "folds") {
            for (std::size_t f = 0; f < br.folds.size(); ++f) emit(br.folds[f], "fold" + std::to_string(f + 1));
        } else if (cc.profiles == "ends") {
            emit(0, "start");
            emit(br.points.size() - 1, "end");
        }
        runs.push_back({{"label", run.label},
                        {"hopf", hopf_json(hd)},
                        {"direction", dir},
                        {"points", br.points.size()},
                        {"folds", folds},
                        {"termination", name(br.termination)},
                        {"termination_detail", br.detail},
                        {"first", branch_point_json(br.points.front())},
                        {"last", branch_point_json(br.points.back())},
                        {"profiles", profiles}});
        std::fprintf(stderr, "%s: %zu points, %zu folds, termination %s\n", run.label.c_str(), br.points.size(),
                     br.folds.size(), name(br.termination));
    }
    write_manifest("continue", rc, out, {{"runs", runs}});
}

void cmd_profile(const RunConfig& rc, Outputs& out)
{
    const auto& pc = section(rc.profile, "profile");
    require_q1(rc, "profile");
    const auto hd = hopf_classify(rc.params, pc.free, pc.bracket[0], pc.bracket[1], 8, pc.mode);
    const auto bp = seed_point(hd, pc.r, pc.free);
    write_profile_csv(out.add("profile.csv"), profile_at(bp, pc.M));
    write_manifest("profile", rc, out, {{"hopf", hopf_json(hd)}, {"point", branch_point_json(bp)}});
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Twisted states and traveling waves in rings with triplet coupling"};
    app.require_subcommand(1, 1);
    std::string config_path, out_dir;
    const std::pair<const char*, void (*)(const RunConfig&, Outputs&)> commands[] = {
        {"simulate", cmd_simulate}, {"scan", cmd_scan}, {"hopf", cmd_hopf}, {"continue", cmd_continue}, {"profile", cmd_profile}};
    for (const auto& [name, fn] : commands) {
        auto* sub = app.add_subcommand(name);
        sub->add_option("--config", config_path, "JSON configuration")->required();
        sub->add_option("--out", out_dir, "output directory")->required();
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }
    const std::string command = app.get_subcommands().front()->get_name();

    Outputs out{out_dir};
    try {
        const auto rc = load_config(config_path);
        fs::create_directories(out.dir);
        for (const auto& [name, fn] : commands)
            if (command == name) fn(rc, out);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure (" << name(e.kind()) << "): " << e.what() << '\n';
        try {
            fs::create_directories(out.dir);
            write_json(out.dir / "error.json", {{"command", command}, {"kind", name(e.kind())}, {"message", e.what()}});
        } catch (...) {
        }
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
