#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include <twistring/io.hpp>

using namespace twistring;
namespace fs = std::filesystem;

namespace {

json base()
{
    return json::parse(R"({"params": {"K2": 1, "K3": 0.1, "A": 0.9, "B": 0.05,
                                      "alpha2": 1.4707963267948966, "alpha3": 0, "omega": 0, "q": 1}})");
}

void expect_config_error(const json& j, const std::string& fragment)
{
    try {
        parse_config(j);
        ADD_FAILURE() << "accepted: " << j.dump();
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find(fragment), std::string::npos) << e.what();
    }
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

TEST(Config, ShippedFigureConfigsParse)
{
    int n = 0;
    for (const auto& entry : fs::directory_iterator(FIGS_DIR)) {
        if (entry.path().extension() != ".json") continue;
        const auto rc = load_config(entry.path().string());
        EXPECT_TRUE(rc.simulate || rc.scan || rc.hopf || rc.cont || rc.profile) << entry.path();
        EXPECT_EQ(rc.q, 1);
        ++n;
    }
    EXPECT_GE(n, 7);
}

TEST(Config, ParamsAndDefaults)
{
    json j = base();
    j["simulate"] = json::object();
    j["continue"] = {{"param", "B"}, {"bracket", {0.0, 0.2}}};
    const auto rc = parse_config(j);
    EXPECT_EQ(rc.params.K3, 0.1);
    EXPECT_EQ(rc.params.B, 0.05);
    EXPECT_EQ(rc.seed, 0u);
    ASSERT_TRUE(rc.simulate);
    EXPECT_EQ(rc.simulate->N, 512u);
    EXPECT_EQ(rc.simulate->output_every, 1);
    EXPECT_EQ(rc.simulate->init, "perturbed");
    ASSERT_TRUE(rc.cont);
    EXPECT_EQ(rc.cont->hopf_free, Param::B);
    ASSERT_EQ(rc.cont->runs.size(), 1u);
    EXPECT_EQ(rc.cont->runs[0].label, "branch");
    EXPECT_EQ(rc.cont->controls.param_min, -10.0);
    EXPECT_EQ(rc.cont->controls.param_max, 10.0);
    EXPECT_FALSE(rc.scan);
}

TEST(Config, ResolvedEchoesEveryField)
{
    json j = base();
    j["simulate"] = {{"N", 64}};
    const auto rc = parse_config(j);
    EXPECT_EQ(rc.resolved["simulate"]["N"], 64);
    EXPECT_EQ(rc.resolved["simulate"]["T"], 100.0);
    EXPECT_EQ(rc.resolved["params"]["q"], 1);
    // Resolved output is itself a valid config describing the same run.
    EXPECT_EQ(parse_config(rc.resolved).resolved, rc.resolved);
}

TEST(Config, RunOverrides)
{
    json j = base();
    j["continue"] = {{"param", "B"},
                     {"bracket", {0.0, 1.5}},
                     {"mode", 2},
                     {"runs", {{{"label", "a"}, {"params", {{"K3", 1.4}}}}, {{"label", "b"}}}}};
    const auto rc = parse_config(j);
    ASSERT_EQ(rc.cont->runs.size(), 2u);
    EXPECT_EQ(rc.cont->runs[0].params.K3, 1.4);
    EXPECT_EQ(rc.cont->runs[0].params.A, 0.9);
    EXPECT_EQ(rc.cont->runs[1].params.K3, 0.1);
    EXPECT_EQ(rc.cont->mode, 2);
}

TEST(Config, Rejections)
{
    {
        json j = base();
        j["params"].erase("alpha3");
        expect_config_error(j, "missing key 'alpha3'");
    }
    {
        json j = base();
        j["params"]["K4"] = 1;
        expect_config_error(j, "unknown key 'K4'");
    }
    {
        json j = base();
        j["extra"] = 1;
        expect_config_error(j, "unknown key 'extra'");
    }
    {
        json j = base();
        j["params"]["B"] = "0.1";
        expect_config_error(j, "expected a number");
    }
    {
        json j = base();
        j["simulate"] = {{"N", 2}};
        expect_config_error(j, "N");
    }
    {
        json j = base();
        j["simulate"] = {{"init", "spiral"}};
        expect_config_error(j, "unsupported value");
    }
    {
        json j = base();
        j["simulate"] = {{"T", 10}, {"drift_from", 10}};
        expect_config_error(j, "drift_from");
    }
    {
        json j = base();
        j["hopf"] = {{"free", "B"}, {"bracket", {0.2, 0.1}}};
        expect_config_error(j, "lo < hi");
    }
    {
        json j = base();
        j["hopf"] = {{"free", "alpha2"}, {"bracket", {0.0, 0.1}}};
        expect_config_error(j, "unsupported value");
    }
    {
        json j = base();
        j["continue"] = {{"param", "B"}, {"bracket", {0.0, 0.2}}, {"mode", 4}};
        expect_config_error(j, "mode");
    }
    {
        json j = base();
        j["continue"] = {{"param", "B"}, {"bracket", {0.0, 0.2}}, {"runs", {{{"label", "a"}}, {{"label", "a"}}}}};
        expect_config_error(j, "duplicate");
    }
    {
        json j = base();
        j["continue"] = {{"param", "B"}, {"bracket", {0.0, 0.2}}, {"runs", {{{"label", "x/y"}}}}};
        expect_config_error(j, "label");
    }
    {
        json j = base();
        j["continue"] = {{"param", "B"}, {"bracket", {0.0, 0.2}}, {"runs", {{{"label", "a"}, {"params", {{"q", -1}}}}}}};
        expect_config_error(j, "may not change q");
    }
    {
        json j = base();
        j["continue"] = {{"param", "B"}, {"bracket", {0.0, 0.2}}, {"controls", {{"ds_min", 0.1}, {"ds_initial", 0.01}}}};
        expect_config_error(j, "ds_min");
    }
    EXPECT_THROW(load_config("/nonexistent/config.json"), ConfigError);
}

TEST(Config, InvalidJsonFile)
{
    const fs::path p = fs::temp_directory_path() / "twistring_bad_config.json";
    std::ofstream(p) << "{\"params\": ";
    EXPECT_THROW(load_config(p.string()), ConfigError);
    fs::remove(p);
}

TEST(Io, NumbersRoundTrip)
{
    for (double v : {0.1, 1.0 / 3.0, -2.5e-17, 12345.678901234567})
        EXPECT_EQ(std::stod(fmt17(v)), v);
    EXPECT_EQ(fmt17(0.5), "0.5");
}

TEST(Io, CsvLayouts)
{
    const fs::path dir = fs::temp_directory_path() / "twistring_io_test";
    fs::remove_all(dir);

    Trajectory tr;
    for (int i = 0; i < 5; ++i) {
        tr.times.push_back(i);
        tr.states.push_back({-0.5, 7.0, 1.0});
    }
    write_trajectory_csv(dir / "t.csv", tr, 2);
    const std::string t = slurp(dir / "t.csv");
    EXPECT_EQ(t.substr(0, t.find('\n')), "t,theta_0,theta_1,theta_2");
    EXPECT_EQ(std::count(t.begin(), t.end(), '\n'), 4); // header + samples 0, 2, 4
    EXPECT_NE(t.find("\n0," + fmt17(two_pi - 0.5) + "," + fmt17(7.0 - two_pi) + ",1\n"), std::string::npos);

    write_scan_csv(dir / "s.csv", {{0.1, 0.2, -0.3, 2, 0.4}});
    EXPECT_EQ(slurp(dir / "s.csv"), "B,K3,max_re,argmax_ell,abs_im_critical\n0.10000000000000001,0.20000000000000001,"
                                    "-0.29999999999999999,2,0.40000000000000002\n");

    Branch br;
    BranchPoint bp;
    bp.param_value = 0.25;
    bp.state.s = 0.5;
    bp.is_fold = true;
    br.points.push_back(bp);
    write_branch_csv(dir / "b.csv", br);
    const std::string b = slurp(dir / "b.csv");
    EXPECT_EQ(b.substr(0, b.find('\n')),
              "param_name,param_value,s,Omega,re_w1,im_w1,re_w2,im_w2,re_w3,im_w3,re_w4,im_w4,re_w5,im_w5,"
              "residual_norm,mobius_margin,is_fold");
    EXPECT_EQ(b.substr(b.find('\n') + 1), "B,0.25,0.5,0,0,0,0,0,0,0,0,0,0,0,0,0,1\n");

    WaveProfile prof;
    prof.a = {cplx(1.0, 0.0), cplx(0.0, 1.0)};
    write_profile_csv(dir / "p.csv", prof);
    EXPECT_EQ(slurp(dir / "p.csv"), "x,re_a,im_a,theta\n0,1,0,0\n0.5,0,1," + fmt17(std::numbers::pi / 2) + "\n");

    write_json(dir / "nested" / "j.json", json{{"k", 1}});
    EXPECT_EQ(slurp(dir / "nested" / "j.json"), "{\n  \"k\": 1\n}\n");
    fs::remove_all(dir);
}

TEST(Io, HopfJsonFields)
{
    HopfData hd;
    hd.ell = 2;
    hd.lambda = cplx(0.0, 0.3);
    const auto j = hopf_json(hd);
    for (const char* key : {"ell", "free", "value", "params", "lambda", "dlambda_dparam", "zeta", "zeta_closed_form",
                            "d2_dr2", "drift_speed", "criticality", "warnings"})
        EXPECT_TRUE(j.contains(key)) << key;
    EXPECT_EQ(j["lambda"]["im"], 0.3);
    EXPECT_EQ(j["criticality"], "supercritical");
}
