#pragma once

#include "spikelearn/event_core.hpp"

namespace spikelearn {

// Bistable spike-driven synapse. The internal variable x in [0, 1] jumps on
// every presynaptic spike (up when the postsynaptic potential exceeds
// v_gate, down otherwise) and between spikes drifts toward whichever
// extreme is on its side of x_theta. The efficacy is binary: j_pot when
// x > x_theta, j_dep otherwise.
struct SynapseParams {
    double j_pot = 0.2;
    double j_dep = 0.02;
    double x_theta = 0.5;
    double jump_up = 0.12;
    double jump_down = 0.0096;
    double drift_up = 0.3;   // per second, toward 1 above x_theta
    double drift_down = 1.0; // per second, toward 0 below x_theta
    double v_gate = 0.6;

    // theta and floor are those of the postsynaptic neuron.
    void validate(double theta, double floor) const;
};

struct SynapseState {
    double x = 0.0;
    Time last_update{};
    bool is_plastic = true;
    bool is_excitatory = true;
};

inline bool is_potentiated(const SynapseState& s, const SynapseParams& p) noexcept { return s.x > p.x_theta; }

SynapseState drift_to(const SynapseState& s, const SynapseParams& p, Time t);

// Applies the spike-triggered jump. Non-plastic synapses are returned unchanged.
SynapseState on_presynaptic_spike(const SynapseState& s, const SynapseParams& p, double v_post, Time t);

// Signed efficacy; inhibitory synapses carry their magnitude in j_pot.
double efficacy(const SynapseState& s, const SynapseParams& p) noexcept;

// Multiplicative Gaussian jitter on the jump sizes and drift rates.
SynapseParams with_mismatch(const SynapseParams& nominal, double cv, RandomStream& stream);

} // namespace spikelearn
