#include "spikelearn/config.hpp"

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

using namespace spikelearn;
namespace fs = std::filesystem;

namespace {

std::string dump(const ExperimentConfig& c)
{
    std::ostringstream out;
    write_config(out, c);
    return out.str();
}

ExperimentConfig parse(const std::string& text)
{
    ExperimentConfig c;
    std::istringstream in(text);
    load_config(in, c, "test");
    return c;
}

int run(const std::string& args)
{
    const std::string cmd = std::string(SPIKELEARN_CLI) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path scratch(const std::string& name)
{
    const auto p = fs::temp_directory_path() / ("spikelearn_cli_" + name);
    fs::remove_all(p);
    return p;
}

} // namespace

TEST_CASE("config text round trips")
{
    ExperimentConfig c;
    c.network.p_ee = 0.3;
    c.network.plastic.jump_up = 0.125;
    c.stimulus.presentations = 12;
    c.etf.fractions = {0.1, 0.9};
    const auto text = dump(c);
    const auto back = parse(text);
    CHECK(dump(back) == text);
    CHECK(back.network.p_ee == 0.3);
    CHECK(back.etf.fractions.size() == 2);
}

TEST_CASE("config files: comments, layering, errors")
{
    const auto c = parse("# comment\n[network]\np_ee = 0.2  # trailing\n\n[synapse]\nv_gate=0.7\n");
    CHECK(c.network.p_ee == 0.2);
    CHECK(c.network.plastic.v_gate == 0.7);
    CHECK(c.network.p_ie == ExperimentConfig{}.network.p_ie);
    CHECK_THROWS_AS(parse("[network]\nnot_a_key = 1\n"), ConfigError);
    CHECK_THROWS_AS(parse("[nowhere]\np_ee = 1\n"), ConfigError);
    CHECK_THROWS_AS(parse("[network]\np_ee = abc\n"), ConfigError);
    CHECK_THROWS_AS(parse("p_ee = 0.1\n"), ConfigError);
    try {
        parse("[network]\n\nbogus = 1\n");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("test:3") != std::string::npos);
    }
}

TEST_CASE("overrides and validation")
{
    ExperimentConfig c;
    apply_override(c, "seeds.topology=9");
    CHECK(c.network.seeds.topology == 9);
    CHECK_THROWS_AS(apply_override(c, "seeds.nothing=1"), ConfigError);
    CHECK_THROWS_AS(apply_override(c, "no_equals_sign"), ConfigError);
    apply_override(c, "network.p_ee=2");
    CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("patterns and schedule from config")
{
    ExperimentConfig c;
    c.stimulus.patterns = "disjoint";
    c.stimulus.n_patterns = 3;
    const auto pats = resolve_patterns(c);
    CHECK(pats.size() == 3);
    const auto sched = resolve_schedule(c, pats);
    CHECK(sched.items.size() == static_cast<std::size_t>(c.stimulus.presentations));
    c.stimulus.schedule_file = "/nonexistent/schedule.csv";
    CHECK_THROWS_AS(resolve_schedule(c, pats), ConfigError);
}

TEST_CASE("cli: exit codes and no partial outputs on config errors")
{
    const auto out = scratch("errors");
    CHECK(run("recall --removal 1.5 -o " + out.string()) == 2);
    CHECK_FALSE(fs::exists(out));
    CHECK(run("learn -c /nonexistent/file.ini -o " + out.string()) == 2);
    CHECK_FALSE(fs::exists(out));
    CHECK(run("learn -s network.unknown=1 -o " + out.string()) == 2);
    CHECK_FALSE(fs::exists(out));
    CHECK(run("etf --population 1,2,999 -o " + out.string()) == 2);
    CHECK_FALSE(fs::exists(out));
    CHECK(run("no-such-command") == 2);
}

TEST_CASE("cli: neuron gain curve, write-once output")
{
    const auto out = scratch("tf");
    REQUIRE(run("neuron-tf --rates 0 -o " + out.string()) == 0);
    std::ifstream in(out / "gain.csv");
    std::string header, row, extra;
    std::getline(in, header);
    std::getline(in, row);
    CHECK(header == "input_rate_hz,output_rate_hz,stderr_hz");
    CHECK(row.rfind("0,0,", 0) == 0);
    CHECK_FALSE(std::getline(in, extra));
    CHECK(fs::exists(out / "config.ini"));
    CHECK(run("neuron-tf --rates 0 -o " + out.string()) == 2);
    fs::remove_all(out);
}

TEST_CASE("cli: echoed config reloads to the same config")
{
    const auto out = scratch("echo");
    REQUIRE(run("neuron-tf --rates 10 -s network.p_ee=0.21 -o " + out.string()) == 0);
    const auto again = scratch("echo2");
    REQUIRE(run("neuron-tf -c " + (out / "config.ini").string() + " -o " + again.string()) == 0);
    std::ifstream a(out / "config.ini"), b(again / "config.ini");
    std::stringstream sa, sb;
    sa << a.rdbuf();
    sb << b.rdbuf();
    CHECK(sa.str() == sb.str());
    CHECK(sa.str().find("p_ee = 0.21") != std::string::npos);
    fs::remove_all(out);
    fs::remove_all(again);
}

TEST_CASE("cli: recall on an untrained matrix reports no attractor")
{
    const auto out = scratch("recall");
    REQUIRE(run("recall --trials 1 --pattern-free -o " + out.string()) == 2);
    REQUIRE(run("recall --trials 1 -o " + out.string()) == 0);
    std::ifstream in(out / "report.txt");
    std::stringstream s;
    s << in.rdbuf();
    CHECK(s.str().find("no attractor") != std::string::npos);
    fs::remove_all(out);
}
