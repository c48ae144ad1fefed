#include "oracle.hpp"

#include "spikelearn/neuron.hpp"
#include "spikelearn/synapse.hpp"

#include <doctest.h>

using namespace spikelearn;

TEST_CASE("leak is linear and stops at the floor")
{
    NeuronParams p;
    NeuronState s;
    s.v = 0.5;
    auto a = integrate_to(s, p, Time::from_seconds(0.01));
    CHECK(a.v == doctest::Approx(0.5 - 20.0 * 0.01));
    auto b = integrate_to(s, p, Time::from_seconds(1.0));
    CHECK(b.v == 0.0);
    CHECK_THROWS_AS(integrate_to(a, p, Time{0}), std::logic_error);
}

TEST_CASE("threshold crossing emits a spike and starts refractoriness")
{
    NeuronParams p;
    NeuronState s;
    auto r = receive(s, p, 0.6, Time{1000});
    CHECK_FALSE(r.spiked);
    r = receive(r.state, p, 0.6, Time{1000});
    CHECK(r.spiked);
    CHECK(r.state.v == p.v_reset);
    CHECK(r.state.refractory_until == Time{1000 + 2000});
    // input during refractoriness is discarded
    auto st = integrate_to(r.state, p, Time{2000});
    auto q = receive(st, p, 0.9, Time{2000});
    CHECK_FALSE(q.spiked);
    CHECK(q.state.v == p.v_reset);
    // leak resumes from the end of the refractory period
    auto later = integrate_to(q.state, p, Time{5000});
    CHECK(later.v == p.v_reset);
}

TEST_CASE("potential stays within [floor, theta]")
{
    NeuronParams p;
    RandomStream r(8, "bounds");
    NeuronState s;
    std::int64_t t = 0;
    for (int i = 0; i < 20000; ++i) {
        t += 1 + static_cast<std::int64_t>(r.below(3000));
        s = integrate_to(s, p, Time{t});
        s = receive(s, p, -0.5 + r.uniform(), Time{t}).state;
        REQUIRE(s.v >= p.floor);
        REQUIRE(s.v <= p.theta);
    }
}

TEST_CASE("transfer function: silent without input, grows with input")
{
    NeuronParams p;
    CHECK(transfer_function(p, PoissonDrive{64, 0.0, 0.05}, 5.0, RandomStream(1, "tf")).rate_hz == 0.0);
    const auto curve = gain_curve(p, PoissonDrive{64, 0.0, 0.05}, {5, 20, 60, 150}, 5.0, RandomStream(1, "tf"));
    REQUIRE(curve.size() == 4);
    for (std::size_t i = 1; i < curve.size(); ++i) CHECK(curve[i].output.rate_hz > curve[i - 1].output.rate_hz);
    CHECK(curve.back().output.rate_hz <= 1.0 / p.tau_arp);
}

TEST_CASE("synapse jumps follow the postsynaptic gate")
{
    SynapseParams p;
    SynapseState s;
    s.x = 0.3;
    CHECK(on_presynaptic_spike(s, p, p.v_gate + 0.01, Time{}).x == doctest::Approx(0.3 + p.jump_up));
    CHECK(on_presynaptic_spike(s, p, p.v_gate - 0.01, Time{}).x == doctest::Approx(0.3 - p.jump_down));
    s.x = 0.99;
    CHECK(on_presynaptic_spike(s, p, 0.99, Time{}).x == 1.0);
    s.x = 0.001;
    CHECK(on_presynaptic_spike(s, p, 0.0, Time{}).x == 0.0);
    s.is_plastic = false;
    CHECK(on_presynaptic_spike(s, p, 0.99, Time{}).x == 0.001);
}

TEST_CASE("drift pulls toward the nearer stable state")
{
    SynapseParams p;
    SynapseState up;
    up.x = 0.6;
    SynapseState down;
    down.x = 0.4;
    CHECK(drift_to(up, p, Time::from_seconds(0.1)).x == doctest::Approx(0.6 + p.drift_up * 0.1));
    CHECK(drift_to(up, p, Time::from_seconds(10.0)).x == 1.0);
    CHECK(drift_to(down, p, Time::from_seconds(0.1)).x == doctest::Approx(0.4 - p.drift_down * 0.1));
    CHECK(drift_to(down, p, Time::from_seconds(10.0)).x == 0.0);
    SynapseState edge;
    edge.x = p.x_theta;
    CHECK(drift_to(edge, p, Time::from_seconds(1.0)).x == p.x_theta);
}

TEST_CASE("efficacy is binary")
{
    SynapseParams p;
    SynapseState s;
    s.x = 0.49;
    CHECK(efficacy(s, p) == p.j_dep);
    s.x = 0.51;
    CHECK(efficacy(s, p) == p.j_pot);
    s.is_excitatory = false;
    CHECK(efficacy(s, p) == -p.j_pot);
}

TEST_CASE("parameter validation")
{
    NeuronParams n;
    n.theta = 0.0;
    CHECK_THROWS(n.validate());
    SynapseParams s;
    s.v_gate = 1.5;
    CHECK_THROWS(s.validate(1.0, 0.0));
    s = SynapseParams{};
    s.j_dep = s.j_pot;
    CHECK_THROWS(s.validate(1.0, 0.0));
}

TEST_CASE("event-driven integration matches the 1 us clock-driven reference")
{
    RandomStream rng(2024, "oracle");
    for (int i = 0; i < 100; ++i) {
        const auto sc = oracle::random_scenario(rng);
        const double d = oracle::max_deviation(oracle::run_clock(sc), oracle::run_event(sc));
        CAPTURE(i);
        REQUIRE(d <= 1e-9);
    }
}
