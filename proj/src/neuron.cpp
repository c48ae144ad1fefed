#include "spikelearn/neuron.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace spikelearn {

void NeuronParams::validate() const
{
    if (!(theta > floor)) {
        throw std::invalid_argument("neuron: theta must exceed floor");
    }
    if (!(v_reset >= floor && v_reset < theta)) {
        throw std::invalid_argument("neuron: v_reset must lie in [floor, theta)");
    }
    if (!(leak >= 0.0)) {
        throw std::invalid_argument("neuron: leak must be non-negative");
    }
    if (!(tau_arp >= 0.0)) {
        throw std::invalid_argument("neuron: tau_arp must be non-negative");
    }
}

NeuronState integrate_to(const NeuronState& state, const NeuronParams& params, Time t)
{
    if (t < state.last_update) {
        std::ostringstream msg;
        msg << "neuron integrate_to: time reversal (last update " << state.last_update.us << "us, requested "
            << t.us << "us)";
        throw std::logic_error(msg.str());
    }
    NeuronState next = state;
    next.last_update = t;
    if (t <= state.refractory_until) {
        next.v = params.v_reset;
        return next;
    }
    const Time leak_from = std::max(state.last_update, state.refractory_until);
    const double dt = static_cast<double>(t.us - leak_from.us) * 1e-6;
    const double v0 = state.last_update < state.refractory_until ? params.v_reset : state.v;
    next.v = std::max(params.floor, v0 - params.leak * dt);
    return next;
}

ReceiveResult receive(const NeuronState& state, const NeuronParams& params, double efficacy, Time t)
{
    ReceiveResult result{state, false};
    if (is_refractory(state, t)) {
        return result;
    }
    double v = std::clamp(state.v + efficacy, params.floor, params.theta);
    if (v >= params.theta) {
        result.spiked = true;
        v = params.v_reset;
        result.state.refractory_until = Time{t.us + std::llround(params.tau_arp * 1e6)};
    }
    result.state.v = v;
    return result;
}

NeuronParams with_mismatch(const NeuronParams& nominal, double cv, RandomStream& stream)
{
    if (cv < 0.0) {
        throw std::invalid_argument("mismatch cv must be non-negative");
    }
    NeuronParams p = nominal;
    if (cv == 0.0) {
        return p;
    }
    const double g_theta = std::max(0.2, 1.0 + cv * stream.gaussian());
    const double g_leak = std::max(0.0, 1.0 + cv * stream.gaussian());
    p.theta = p.floor + (nominal.theta - nominal.floor) * g_theta;
    p.v_reset = std::min(p.v_reset, p.floor + 0.5 * (p.theta - p.floor));
    p.leak = nominal.leak * g_leak;
    return p;
}

RateEstimate transfer_function(const NeuronParams& params, const PoissonDrive& drive, double duration_s,
                               RandomStream stream)
{
    params.validate();
    if (duration_s < 1.0) {
        throw std::invalid_argument("transfer_function: duration must be at least 1 s");
    }
    if (drive.n_sources < 0 || drive.rate_each < 0.0) {
        throw std::invalid_argument("transfer_function: drive must be non-negative");
    }
    EventQueue queue;
    NeuronState state;
    std::size_t spikes = 0;
    queue.set_recorded(Population::External, false);
    const Time t_end = Time::from_seconds(duration_s);
    for (int s = 0; s < drive.n_sources; ++s) {
        queue.poisson_source(drive.rate_each, Address{Population::Excitatory, 0}, Time{}, t_end,
                             stream.derive(static_cast<std::uint64_t>(s)));
    }
    queue.set_spike_handler([&](const SpikeEvent& ev) {
        state = integrate_to(state, params, ev.time);
        auto r = receive(state, params, drive.efficacy_each, ev.time);
        state = r.state;
        if (r.spiked) {
            ++spikes;
        }
    });
    queue.run_until(t_end);
    const auto n = static_cast<double>(spikes);
    return RateEstimate{n / duration_s, std::sqrt(n) / duration_s};
}

std::vector<GainPoint> gain_curve(const NeuronParams& params, const PoissonDrive& drive,
                                  const std::vector<double>& input_rates, double duration_s,
                                  const RandomStream& stream)
{
    std::vector<GainPoint> curve;
    curve.reserve(input_rates.size());
    for (std::size_t i = 0; i < input_rates.size(); ++i) {
        PoissonDrive d = drive;
        d.rate_each = input_rates[i];
        curve.push_back(GainPoint{input_rates[i], transfer_function(params, d, duration_s, stream.derive(i))});
    }
    return curve;
}

void write_gain_csv(std::ostream& out, const std::vector<GainPoint>& curve)
{
    out << "input_rate_hz,output_rate_hz,stderr_hz\n";
    for (const auto& p : curve) {
        out << p.input_rate_hz << ',' << p.output.rate_hz << ',' << p.output.stderr_hz << '\n';
    }
}

} // namespace spikelearn
