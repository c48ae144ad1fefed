#include "spikelearn/learning.hpp"
#include "spikelearn/network.hpp"
#include "spikelearn/stimulus.hpp"

#include <doctest.h>

#include <cmath>
#include <set>
#include <sstream>

using namespace spikelearn;

namespace {

// |observed - expected| within 4 binomial sigmas
bool binomial_ok(std::size_t k, double n, double p)
{
    return std::abs(static_cast<double>(k) - n * p) <= 4.0 * std::sqrt(n * p * (1.0 - p));
}

} // namespace

TEST_CASE("macro-pixel map partitions the retina")
{
    const auto map = build_macro_pixel_map();
    std::vector<int> hits(grid_cells, 0);
    for (int y = 0; y < retina_side; ++y) {
        for (int x = 0; x < retina_side; ++x) {
            const int c = map.cell_of_pixel(x, y);
            REQUIRE(c >= 0);
            REQUIRE(c < grid_cells);
            ++hits[c];
        }
    }
    int total = 0;
    for (int c = 0; c < grid_cells; ++c) {
        CHECK(hits[c] == map.pixel_count(c));
        CHECK(hits[c] >= 81);
        CHECK(hits[c] <= 100);
        total += hits[c];
    }
    CHECK(total == retina_side * retina_side);
    for (int k = 0; k < grid_side; ++k) {
        CHECK((map.rows[k].size() == 9 || map.rows[k].size() == 10));
        if (k > 0) CHECK(map.rows[k].begin == map.rows[k - 1].end);
    }
    CHECK(map.rows.back().end == retina_side);
}

TEST_CASE("built network has the configured sizes and densities")
{
    NetworkConfig c;
    const auto net = build(c);
    CHECK(net.topology.n_exc == 196);
    CHECK(net.topology.n_inh == 43);
    CHECK(binomial_ok(net.topology.count(Projection::EE), 196.0 * 195.0, c.p_ee));
    CHECK(binomial_ok(net.topology.count(Projection::EI), 196.0 * 43.0, c.p_ei));
    CHECK(binomial_ok(net.topology.count(Projection::IE), 43.0 * 196.0, c.p_ie));
    std::size_t pot = 0, ee = 0;
    for (const auto& e : net.topology.edges) {
        if (e.projection != Projection::EE) continue;
        CHECK(e.pre != e.post);
        ++ee;
        pot += e.state.x > 0.5;
    }
    CHECK(binomial_ok(pot, static_cast<double>(ee), c.initial_potentiated_fraction));
}

TEST_CASE("topology depends only on its own seed")
{
    NetworkConfig a, b;
    b.seeds.stimulus = 999;
    b.seeds.plasticity = 998;
    std::ostringstream sa, sb;
    write_topology(sa, build(a).topology);
    write_topology(sb, build(b).topology);
    CHECK(sa.str() == sb.str());
    b.seeds.topology = 77;
    std::ostringstream sc;
    write_topology(sc, build(b).topology);
    CHECK(sa.str() != sc.str());
}

TEST_CASE("topology text round trip")
{
    NetworkConfig c;
    const auto net = build(c);
    std::ostringstream out;
    write_topology(out, net.topology);
    std::istringstream in(out.str());
    const auto back = read_topology(in, c.n_exc, c.n_inh);
    REQUIRE(back.edges.size() == net.topology.edges.size());
    std::ostringstream again;
    write_topology(again, back);
    CHECK(again.str() == out.str());
}

TEST_CASE("invalid network configs are rejected")
{
    NetworkConfig c;
    c.p_ee = 1.5;
    CHECK_THROWS(build(c));
    c = NetworkConfig{};
    c.delay_s = -1.0;
    CHECK_THROWS(build(c));
}

TEST_CASE("unstimulated network stays silent")
{
    NetworkConfig c;
    auto net = build(c);
    Simulation sim(c, net.topology, net.map);
    CHECK(sim.run_until(Time::from_seconds(2.0)).empty());
}

TEST_CASE("stimulated population fires and the rest stays low")
{
    NetworkConfig c;
    auto net = build(c);
    Simulation sim(c, net.topology, net.map);
    sim.set_plasticity(false);
    const auto pats = builtin_patterns();
    for (auto& src : encode(pats[0], Time{}, Time::from_seconds(1.0), 200.0, 0.0, RandomStream(1, "enc"))) {
        sim.add_drive(src.drive, std::move(src.stream));
    }
    const auto log = sim.run_until(Time::from_seconds(1.0));
    const auto labels = label_neurons(pats);
    const double own = population_rate(log, members_of(labels, 0), Time{}, Time::from_seconds(1.0));
    const double other = population_rate(log, members_of(labels, 1), Time{}, Time::from_seconds(1.0));
    const double bkg = population_rate(log, members_of(labels, background_label), Time{}, Time::from_seconds(1.0));
    CHECK(own > 10.0);
    CHECK(other < 0.2 * own);
    CHECK(bkg < 0.2 * own);
    CHECK(sim.potentials_in_bounds());
}

TEST_CASE("identical seeds replay byte for byte")
{
    auto run = [] {
        NetworkConfig c;
        auto net = build(c);
        Simulation sim(c, net.topology, net.map);
        for (auto& src : encode(builtin_patterns()[1], Time{}, Time::from_seconds(0.5), 200.0, 0.0,
                                RandomStream(c.seeds.stimulus, "enc"))) {
            sim.add_drive(src.drive, std::move(src.stream));
        }
        const auto log = sim.run_until(Time::from_seconds(1.0));
        std::ostringstream snap;
        write_snapshot(snap, sim.snapshot());
        return event_log_text(log) + snap.str();
    };
    const auto a = run();
    CHECK(a.size() > 1000);
    CHECK(a == run());
}

TEST_CASE("severed edges stop transmitting")
{
    NetworkConfig c;
    c.delay_jitter_s = 0.0;
    c.delay_s = 0.0;
    auto net = build(c);
    Simulation sim(c, net.topology, net.map);
    for (std::size_t k = 0; k < net.topology.edges.size(); ++k) sim.sever(k);
    ExternalDrive d;
    d.rate_hz = 300.0;
    d.t1 = Time::from_seconds(1.0);
    d.extra_targets = {{Address{Population::Excitatory, 0}, 1.0}};
    sim.add_drive(d, RandomStream(1, "d"));
    const auto log = sim.run_until(Time::from_seconds(1.0));
    for (const auto& e : log.events) {
        if (e.address.population == Population::Excitatory) CHECK(e.address.index == 0);
        CHECK(e.address.population != Population::Inhibitory);
    }
}

TEST_CASE("builtin patterns")
{
    const auto p = builtin_patterns();
    REQUIRE(p.size() == 2);
    CHECK(p[0].name == "happy");
    CHECK(p[1].name == "sad");
    CHECK(p[0].active_count() == 65);
    CHECK(p[1].active_count() == 65);
    CHECK(overlap(p[0], p[1]) == 0);
    CHECK(p[0].coding_level() == doctest::Approx(1.0 / 3.0).epsilon(0.02));
}

TEST_CASE("disjoint patterns")
{
    const auto p = disjoint_patterns(3, 65, RandomStream(1, "d"));
    REQUIRE(p.size() == 3);
    for (std::size_t i = 0; i < p.size(); ++i) {
        CHECK(p[i].active_count() == 65);
        for (std::size_t j = i + 1; j < p.size(); ++j) CHECK(overlap(p[i], p[j]) == 0);
    }
    CHECK_THROWS(disjoint_patterns(4, 65, RandomStream(1, "d")));
}

TEST_CASE("degrade removes a subset of the active cells")
{
    const auto p = builtin_patterns()[0];
    RandomStream r(3, "deg");
    const auto d = degrade(p, 0.2, r);
    CHECK(d.active_count() == 65 - 13);
    for (int c = 0; c < grid_cells; ++c) {
        if (d.cells[c]) CHECK(p.cells[c]);
    }
    CHECK(degrade(p, 0.0, r).active_count() == 65);
    CHECK(degrade(p, 1.0, r).active_count() == 0);
    CHECK_THROWS(degrade(p, 1.5, r));
    CHECK_THROWS(degrade(p, -0.1, r));
}

TEST_CASE("encoding rate")
{
    const auto p = builtin_patterns()[0];
    EventQueue q;
    for (auto& src : encode(p, Time{}, Time::from_seconds(1.0), 200.0, 0.0, RandomStream(4, "enc"))) {
        q.poisson_source(src.drive.rate_hz, Address{}, src.drive.t0, src.drive.t1, src.stream);
    }
    const double n = static_cast<double>(q.run_until(Time::from_seconds(1.0)).size());
    CHECK(std::abs(n - 13000.0) <= 3.0 * std::sqrt(13000.0));
    CHECK(encode(p, Time{}, Time::from_seconds(1.0), 0.0, 0.0, RandomStream(4, "enc")).empty());
}

TEST_CASE("pattern and schedule files round trip")
{
    const auto p = builtin_patterns()[1];
    std::ostringstream out;
    write_pattern(out, p);
    std::istringstream in(out.str());
    const auto back = read_pattern(in, "sad");
    CHECK(back.cells == p.cells);
    std::istringstream bad("0101\n");
    CHECK_THROWS(read_pattern(bad, "x"));

    const auto s = alternating_schedule({"happy", "sad"}, 6, 1.0, 6.5);
    REQUIRE(s.items.size() == 6);
    CHECK(s.items[3].pattern == "sad");
    CHECK(s.items[3].onset_s == doctest::Approx(3 * 7.5));
    std::ostringstream so;
    write_schedule(so, s);
    std::istringstream si(so.str());
    const auto s2 = read_schedule(si);
    REQUIRE(s2.items.size() == 6);
    CHECK(s2.items[5].onset_s == doctest::Approx(s.items[5].onset_s));
}
