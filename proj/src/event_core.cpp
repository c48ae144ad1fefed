#include "spikelearn/event_core.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace spikelearn {

Time Time::from_seconds(double s)
{
    if (!std::isfinite(s)) {
        throw std::invalid_argument("time must be finite");
    }
    return Time{std::llround(s * 1e6)};
}

char population_tag(Population p)
{
    switch (p) {
    case Population::Excitatory: return 'E';
    case Population::Inhibitory: return 'I';
    case Population::External: return 'X';
    case Population::Transmission: return 'T';
    case Population::Control: return 'C';
    }
    return '?';
}

Population population_from_tag(char c)
{
    switch (c) {
    case 'E': return Population::Excitatory;
    case 'I': return Population::Inhibitory;
    case 'X': return Population::External;
    case 'T': return Population::Transmission;
    default: break;
    }
    throw std::runtime_error(std::string("unknown population tag '") + c + "'");
}

void EventLog::append(const EventLog& other)
{
    events.insert(events.end(), other.events.begin(), other.events.end());
}

EventQueue::EventQueue() = default;

void EventQueue::set_recorded(Population p, bool on)
{
    if (p == Population::Control) {
        return;
    }
    const auto bit = static_cast<std::uint8_t>(1U << static_cast<unsigned>(p));
    recorded_mask_ = on ? (recorded_mask_ | bit) : (recorded_mask_ & ~bit);
}

bool EventQueue::recorded(Population p) const noexcept
{
    if (p == Population::Control) {
        return false;
    }
    return (recorded_mask_ >> static_cast<unsigned>(p)) & 1U;
}

void EventQueue::push(Time at, Address address, std::uint32_t slot)
{
    if (at < now_) {
        std::ostringstream msg;
        msg << "cannot schedule in the past: now=" << now_.us << "us, requested=" << at.us << "us";
        throw std::logic_error(msg.str());
    }
    heap_.push(Entry{at, address, next_seq_++, slot});
}

void EventQueue::schedule(const SpikeEvent& event)
{
    if (event.address.population == Population::Control) {
        throw std::invalid_argument("spike events cannot use the control address space");
    }
    push(event.time, event.address, no_callback);
}

void EventQueue::schedule(Time at, Callback callback)
{
    std::uint32_t slot;
    if (!free_slots_.empty()) {
        slot = free_slots_.back();
        free_slots_.pop_back();
        callbacks_[slot] = std::move(callback);
    } else {
        slot = static_cast<std::uint32_t>(callbacks_.size());
        callbacks_.push_back(std::move(callback));
    }
    push(at, Address{Population::Control, 0}, slot);
}

Address EventQueue::poisson_source(double rate_hz, Address target, Time t0, Time t1, RandomStream stream)
{
    if (!(rate_hz >= 0.0) || !std::isfinite(rate_hz)) {
        throw std::invalid_argument("poisson_source: rate must be a non-negative finite number");
    }
    if (t1 < t0) {
        throw std::invalid_argument("poisson_source: window end precedes window start");
    }
    if (t0 < now_) {
        throw std::logic_error("poisson_source: window starts before the current time");
    }
    const auto index = static_cast<std::uint32_t>(sources_.size());
    sources_.push_back(PoissonSource{rate_hz, target, t0, t1, std::move(stream), t0.seconds()});
    schedule_next_from(index);
    return Address{Population::External, index};
}

void EventQueue::schedule_next_from(std::uint32_t source_index)
{
    PoissonSource& src = sources_[source_index];
    if (src.rate_hz <= 0.0) {
        return;
    }
    src.next_s += src.stream.exponential(src.rate_hz);
    const Time at = Time::from_seconds(src.next_s);
    if (at >= src.t1) {
        return;
    }
    push(at, Address{Population::External, source_index}, no_callback);
}

EventLog EventQueue::run_until(Time t_end)
{
    if (t_end < now_) {
        std::ostringstream msg;
        msg << "run_until: end time " << t_end.us << "us precedes current time " << now_.us << "us";
        throw std::logic_error(msg.str());
    }
    EventLog log;
    while (!heap_.empty() && heap_.top().time <= t_end) {
        const Entry entry = heap_.top();
        heap_.pop();
        now_ = entry.time;
        if (entry.callback_slot != no_callback) {
            Callback cb = std::move(callbacks_[entry.callback_slot]);
            callbacks_[entry.callback_slot] = nullptr;
            free_slots_.push_back(entry.callback_slot);
            cb(now_);
            continue;
        }
        const SpikeEvent event{entry.time, entry.address};
        if (recorded(event.address.population)) {
            log.events.push_back(event);
        }
        if (event.address.population == Population::External) {
            schedule_next_from(event.address.index);
        }
        if (handler_) {
            handler_(event);
        }
    }
    now_ = t_end;
    return log;
}

std::string event_log_text(const EventLog& log)
{
    std::string out;
    out.reserve(log.size() * 16);
    for (const auto& e : log.events) {
        out += std::to_string(e.time.us);
        out += '\t';
        out += population_tag(e.address.population);
        out += '\t';
        out += std::to_string(e.address.index);
        out += '\n';
    }
    return out;
}

std::vector<std::uint8_t> event_log_binary(const EventLog& log)
{
    std::vector<std::uint8_t> out;
    out.reserve(log.size() * 11);
    for (const auto& e : log.events) {
        if (e.address.index > 0xffffU) {
            throw std::runtime_error("binary event log: index exceeds 16 bits");
        }
        const auto t = static_cast<std::uint64_t>(e.time.us);
        for (int b = 0; b < 8; ++b) {
            out.push_back(static_cast<std::uint8_t>(t >> (8 * b)));
        }
        out.push_back(static_cast<std::uint8_t>(e.address.population));
        out.push_back(static_cast<std::uint8_t>(e.address.index & 0xffU));
        out.push_back(static_cast<std::uint8_t>(e.address.index >> 8));
    }
    return out;
}

namespace {

bool is_binary_path(const std::string& path)
{
    return path.size() >= 4 && path.compare(path.size() - 4, 4, ".bin") == 0;
}

} // namespace

void write_event_log(const std::string& path, const EventLog& log)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot open event log for writing: " + path);
    }
    if (is_binary_path(path)) {
        const auto bytes = event_log_binary(log);
        out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    } else {
        out << event_log_text(log);
    }
}

EventLog read_event_log(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot open event log: " + path);
    }
    EventLog log;
    if (is_binary_path(path)) {
        std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        if (bytes.size() % 11 != 0) {
            throw std::runtime_error("binary event log has a truncated record: " + path);
        }
        for (std::size_t off = 0; off < bytes.size(); off += 11) {
            std::uint64_t t = 0;
            for (int b = 0; b < 8; ++b) {
                t |= static_cast<std::uint64_t>(static_cast<std::uint8_t>(bytes[off + b])) << (8 * b);
            }
            const auto pop = static_cast<Population>(static_cast<std::uint8_t>(bytes[off + 8]));
            const auto idx = static_cast<std::uint32_t>(static_cast<std::uint8_t>(bytes[off + 9]))
                | (static_cast<std::uint32_t>(static_cast<std::uint8_t>(bytes[off + 10])) << 8);
            log.events.push_back(SpikeEvent{Time{static_cast<std::int64_t>(t)}, Address{pop, idx}});
        }
        return log;
    }
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') {
            continue;
        }
        std::istringstream row(line);
        std::int64_t t = 0;
        char tag = 0;
        std::uint32_t idx = 0;
        if (!(row >> t >> tag >> idx)) {
            throw std::runtime_error("malformed event log line: " + line);
        }
        log.events.push_back(SpikeEvent{Time{t}, Address{population_from_tag(tag), idx}});
    }
    return log;
}

} // namespace spikelearn
