#pragma once

#include "spikelearn/random_stream.hpp"

#include <compare>
#include <cstdint>
#include <functional>
#include <queue>
#include <string>
#include <vector>

namespace spikelearn {

// Simulated time as an integer count of microseconds.
struct Time {
    std::int64_t us = 0;

    static Time from_seconds(double s);
    static constexpr Time from_us(std::int64_t us) { return Time{us}; }
    double seconds() const noexcept { return static_cast<double>(us) * 1e-6; }

    auto operator<=>(const Time&) const = default;
};

enum class Population : std::uint8_t {
    Excitatory = 0,
    Inhibitory = 1,
    External = 2,
    Transmission = 3, // delayed arrival at one synapse; index is the edge
    Control = 255, // scheduled callbacks; never logged
};

char population_tag(Population p);
Population population_from_tag(char c);

struct Address {
    Population population = Population::Excitatory;
    std::uint32_t index = 0;

    auto operator<=>(const Address&) const = default;
};

struct SpikeEvent {
    Time time;
    Address address;

    bool operator==(const SpikeEvent&) const = default;
};

struct EventLog {
    std::vector<SpikeEvent> events;

    std::size_t size() const noexcept { return events.size(); }
    bool empty() const noexcept { return events.empty(); }
    void append(const EventLog& other);
};

struct PoissonSource {
    double rate_hz = 0.0;
    Address target;
    Time t0;
    Time t1;
    RandomStream stream;
    double next_s = 0.0; // continuous-time position of the next spike
};

// Single-threaded time-ordered scheduler. Delivery order is (time, address,
// insertion sequence), which makes any run bit-identical on replay.
class EventQueue {
public:
    using SpikeHandler = std::function<void(const SpikeEvent&)>;
    using Callback = std::function<void(Time)>;

    EventQueue();

    Time now() const noexcept { return now_; }
    std::size_t pending() const noexcept { return heap_.size(); }

    void set_spike_handler(SpikeHandler handler) { handler_ = std::move(handler); }
    // Which populations are written to the log returned by run_until.
    void set_recorded(Population p, bool on);
    bool recorded(Population p) const noexcept;

    void schedule(const SpikeEvent& event);
    void schedule(Time at, Callback callback);

    // Registers a Poisson train delivering events addressed to the returned
    // external address within [t0, t1). A rate of zero schedules nothing.
    Address poisson_source(double rate_hz, Address target, Time t0, Time t1, RandomStream stream);
    const PoissonSource& source(std::uint32_t index) const { return sources_.at(index); }
    std::size_t source_count() const noexcept { return sources_.size(); }

    // Delivers every pending event with time <= t_end, leaves the clock at t_end.
    EventLog run_until(Time t_end);

private:
    struct Entry {
        Time time;
        Address address;
        std::uint64_t seq;
        std::uint32_t callback_slot;

        bool operator>(const Entry& o) const noexcept
        {
            if (time != o.time) return time > o.time;
            if (address != o.address) return address > o.address;
            return seq > o.seq;
        }
    };
    static constexpr std::uint32_t no_callback = 0xffffffffU;

    void push(Time at, Address address, std::uint32_t slot);
    void schedule_next_from(std::uint32_t source_index);

    Time now_{};
    std::uint64_t next_seq_ = 0;
    std::priority_queue<Entry, std::vector<Entry>, std::greater<Entry>> heap_;
    std::vector<Callback> callbacks_;
    std::vector<std::uint32_t> free_slots_;
    std::vector<PoissonSource> sources_;
    SpikeHandler handler_;
    std::uint8_t recorded_mask_ = 0x7;
};

// Event-log files. A ".bin" extension selects the packed little-endian form
// (u64 time_us, u8 population code, u16 index); anything else is text,
// one `time_us<TAB>population<TAB>index` record per line.
void write_event_log(const std::string& path, const EventLog& log);
EventLog read_event_log(const std::string& path);
std::string event_log_text(const EventLog& log);
std::vector<std::uint8_t> event_log_binary(const EventLog& log);

} // namespace spikelearn
