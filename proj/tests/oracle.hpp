// Clock-driven reference for one neuron and one plastic synapse onto it,
// stepped at 1 us. Used against the event-driven integrators.
#pragma once

#include "spikelearn/neuron.hpp"
#include "spikelearn/random_stream.hpp"
#include "spikelearn/synapse.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

namespace oracle {

using namespace spikelearn;

struct Input {
    std::int64_t t_us = 0;
    bool plastic = false; // presynaptic spike through the probe synapse
    double efficacy = 0.0; // used when !plastic
};

struct Scenario {
    NeuronParams neuron;
    SynapseParams synapse;
    double x0 = 0.0;
    std::int64_t t_end_us = 0;
    std::vector<Input> inputs; // time ordered
};

// v and x seen right after each input, then at t_end.
struct Trace {
    std::vector<double> v;
    std::vector<double> x;
    std::vector<std::int64_t> spikes;
};

inline Scenario random_scenario(RandomStream& rng)
{
    Scenario s;
    s.neuron.leak = 100.0 * rng.uniform();
    s.neuron.tau_arp = 0.004 * rng.uniform();
    s.neuron.v_reset = 0.3 * rng.uniform();
    s.synapse.jump_up = 0.05 + 0.3 * rng.uniform();
    s.synapse.jump_down = 0.05 + 0.3 * rng.uniform();
    s.synapse.drift_up = 0.5 + 5.0 * rng.uniform();
    s.synapse.drift_down = 0.5 + 5.0 * rng.uniform();
    s.synapse.v_gate = 0.2 + 0.6 * rng.uniform();
    s.x0 = rng.uniform();
    s.t_end_us = 50000 + static_cast<std::int64_t>(rng.below(50000));
    const int n = 20 + static_cast<int>(rng.below(80));
    for (int i = 0; i < n; ++i) {
        Input in;
        in.t_us = static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(s.t_end_us)));
        in.plastic = rng.bernoulli(0.3);
        in.efficacy = -0.2 + 0.6 * rng.uniform();
        s.inputs.push_back(in);
    }
    std::stable_sort(s.inputs.begin(), s.inputs.end(), [](const Input& a, const Input& b) { return a.t_us < b.t_us; });
    return s;
}

inline Trace run_clock(const Scenario& s)
{
    Trace tr;
    const NeuronParams& np = s.neuron;
    const SynapseParams& sp = s.synapse;
    const double dt = 1e-6;
    double v = 0.0;
    double x = s.x0;
    std::int64_t refractory_until = 0;
    std::size_t k = 0;
    for (std::int64_t t = 0; t <= s.t_end_us; ++t) {
        if (t > 0) {
            if (t <= refractory_until) {
                v = np.v_reset;
            } else {
                v = std::max(np.floor, v - np.leak * dt);
            }
            if (x > sp.x_theta) x = std::min(1.0, x + sp.drift_up * dt);
            else if (x < sp.x_theta) x = std::max(0.0, x - sp.drift_down * dt);
        }
        for (; k < s.inputs.size() && s.inputs[k].t_us == t; ++k) {
            const Input& in = s.inputs[k];
            if (in.plastic) {
                x = v > sp.v_gate ? std::min(1.0, x + sp.jump_up) : std::max(0.0, x - sp.jump_down);
            } else if (t >= refractory_until) {
                v = std::clamp(v + in.efficacy, np.floor, np.theta);
                if (v >= np.theta) {
                    v = np.v_reset;
                    refractory_until = t + std::llround(np.tau_arp * 1e6);
                    tr.spikes.push_back(t);
                }
            }
            tr.v.push_back(v);
            tr.x.push_back(x);
        }
    }
    tr.v.push_back(v);
    tr.x.push_back(x);
    return tr;
}

inline Trace run_event(const Scenario& s)
{
    Trace tr;
    NeuronState n;
    SynapseState syn;
    syn.x = s.x0;
    for (const Input& in : s.inputs) {
        const Time t{in.t_us};
        n = integrate_to(n, s.neuron, t);
        syn = drift_to(syn, s.synapse, t);
        if (in.plastic) {
            syn = on_presynaptic_spike(syn, s.synapse, n.v, t);
        } else {
            const auto r = receive(n, s.neuron, in.efficacy, t);
            n = r.state;
            if (r.spiked) tr.spikes.push_back(in.t_us);
        }
        tr.v.push_back(n.v);
        tr.x.push_back(syn.x);
    }
    n = integrate_to(n, s.neuron, Time{s.t_end_us});
    syn = drift_to(syn, s.synapse, Time{s.t_end_us});
    tr.v.push_back(n.v);
    tr.x.push_back(syn.x);
    return tr;
}

// Largest |difference| over the traces; infinity if the spike trains differ.
inline double max_deviation(const Trace& a, const Trace& b)
{
    if (a.spikes != b.spikes || a.v.size() != b.v.size()) return INFINITY;
    double d = 0.0;
    for (std::size_t i = 0; i < a.v.size(); ++i) {
        d = std::max(d, std::abs(a.v[i] - b.v[i]));
        d = std::max(d, std::abs(a.x[i] - b.x[i]));
    }
    return d;
}

} // namespace oracle
