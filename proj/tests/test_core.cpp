#include "spikelearn/event_core.hpp"
#include "spikelearn/random_stream.hpp"

#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <set>

using namespace spikelearn;

TEST_CASE("random streams replay and separate by label")
{
    RandomStream a(42, "stimulus"), b(42, "stimulus"), c(42, "topology");
    bool differs = false;
    for (int i = 0; i < 100; ++i) {
        const auto x = a.next_u64();
        CHECK(x == b.next_u64());
        differs |= x != c.next_u64();
    }
    CHECK(differs);
    RandomStream p(7, "x");
    CHECK(p.derive("a").next_u64() == RandomStream(7, "x").derive("a").next_u64());
    CHECK(p.derive(1).next_u64() != p.derive(2).next_u64());
}

TEST_CASE("uniform and exponential draws")
{
    RandomStream r(1, "u");
    double sum = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double u = r.uniform();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
        sum += r.exponential(4.0);
    }
    CHECK(sum / n == doctest::Approx(0.25).epsilon(0.01));
    for (int i = 0; i < 1000; ++i) CHECK(r.below(7) < 7);
}

TEST_CASE("delivery order is time, then address, then insertion")
{
    EventQueue q;
    q.schedule(SpikeEvent{Time{20}, Address{Population::Excitatory, 1}});
    q.schedule(SpikeEvent{Time{10}, Address{Population::Inhibitory, 0}});
    q.schedule(SpikeEvent{Time{10}, Address{Population::Excitatory, 5}});
    q.schedule(SpikeEvent{Time{10}, Address{Population::Excitatory, 2}});
    std::vector<SpikeEvent> seen;
    q.set_spike_handler([&](const SpikeEvent& e) { seen.push_back(e); });
    const auto log = q.run_until(Time{100});
    REQUIRE(seen.size() == 4);
    CHECK(seen[0].address == Address{Population::Excitatory, 2});
    CHECK(seen[1].address == Address{Population::Excitatory, 5});
    CHECK(seen[2].address == Address{Population::Inhibitory, 0});
    CHECK(seen[3].time == Time{20});
    CHECK(log.size() == 4);
    CHECK(q.now() == Time{100});
}

TEST_CASE("log is non-decreasing in time")
{
    EventQueue q;
    RandomStream r(3, "q");
    for (int i = 0; i < 5; ++i) {
        q.poisson_source(300.0, Address{Population::Excitatory, static_cast<std::uint32_t>(i)}, Time{}, Time{1000000},
                         r.derive(static_cast<std::uint64_t>(i)));
    }
    const auto log = q.run_until(Time{1000000});
    for (std::size_t i = 1; i < log.size(); ++i) CHECK(log.events[i - 1].time <= log.events[i].time);
}

TEST_CASE("scheduling in the past is rejected")
{
    EventQueue q;
    q.run_until(Time{50});
    CHECK_THROWS_AS(q.schedule(SpikeEvent{Time{10}, Address{}}), std::logic_error);
    CHECK_THROWS_AS(q.run_until(Time{10}), std::logic_error);
    CHECK_THROWS(q.poisson_source(-1.0, Address{}, Time{50}, Time{60}, RandomStream(1, "x")));
}

TEST_CASE("callbacks run at their time and are not logged")
{
    EventQueue q;
    Time fired{-1};
    q.schedule(Time{30}, [&](Time t) { fired = t; });
    const auto log = q.run_until(Time{100});
    CHECK(fired == Time{30});
    CHECK(log.empty());
}

namespace {

std::size_t external_count(double rate, double seconds, std::uint64_t seed)
{
    EventQueue q;
    q.poisson_source(rate, Address{Population::Excitatory, 0}, Time{}, Time::from_seconds(seconds),
                     RandomStream(seed, "poisson"));
    return q.run_until(Time::from_seconds(seconds)).size();
}

} // namespace

TEST_CASE("poisson counts")
{
    const auto n100 = external_count(100.0, 10.0, 11);
    CHECK(std::abs(static_cast<double>(n100) - 1000.0) <= 95.0);
    const auto n50 = external_count(50.0, 20.0, 12);
    CHECK(std::abs(static_cast<double>(n50) - 1000.0) <= 3.0 * std::sqrt(1000.0));
    CHECK(external_count(0.0, 5.0, 13) == 0);
}

TEST_CASE("poisson calibration over 100 s")
{
    for (double rate : {1.0, 10.0, 100.0, 1000.0}) {
        const double n = static_cast<double>(external_count(rate, 100.0, 99));
        const double expected = rate * 100.0;
        CAPTURE(rate);
        CHECK(std::abs(n - expected) <= 3.0 * std::sqrt(expected));
    }
}

TEST_CASE("poisson source respects its window")
{
    EventQueue q;
    q.poisson_source(500.0, Address{}, Time{200000}, Time{300000}, RandomStream(5, "w"));
    const auto log = q.run_until(Time{1000000});
    CHECK(!log.empty());
    for (const auto& e : log.events) {
        CHECK(e.time >= Time{200000});
        CHECK(e.time < Time{300000});
    }
}

TEST_CASE("event log files round trip")
{
    EventLog log;
    log.events = {{Time{0}, {Population::Excitatory, 3}},
                  {Time{17}, {Population::Inhibitory, 42}},
                  {Time{123456789}, {Population::External, 65535}}};
    const auto dir = std::filesystem::temp_directory_path() / "spikelearn_test_log";
    std::filesystem::create_directories(dir);
    for (const char* name : {"log.txt", "log.bin"}) {
        const auto path = (dir / name).string();
        write_event_log(path, log);
        CHECK(read_event_log(path).events == log.events);
    }
    std::filesystem::remove_all(dir);
    CHECK(event_log_text(log).rfind("17\tI\t42\n") != std::string::npos);
    CHECK(event_log_binary(log).size() == 33);
}

TEST_CASE("time conversion")
{
    CHECK(Time::from_seconds(1.5).us == 1500000);
    CHECK(Time::from_seconds(1e-6).us == 1);
    CHECK(Time{2500}.seconds() == doctest::Approx(0.0025));
    CHECK_THROWS(Time::from_seconds(NAN));
}
