#pragma once

#include "spikelearn/event_core.hpp"

#include <ostream>
#include <vector>

namespace spikelearn {

// Linear integrate-and-fire unit: constant leak, reflecting barrier at
// `floor`, absolute refractory period. Potentials are dimensionless.
struct NeuronParams {
    double theta = 1.0;
    double v_reset = 0.0;
    double leak = 20.0;    // potential units per second
    double tau_arp = 0.002; // seconds
    double floor = 0.0;

    void validate() const;
};

struct NeuronState {
    double v = 0.0;
    Time refractory_until{};
    Time last_update{};
};

// Advances the leak to time t. Leak alone never crosses threshold.
// While refractory the potential is held at v_reset.
NeuronState integrate_to(const NeuronState& state, const NeuronParams& params, Time t);

struct ReceiveResult {
    NeuronState state;
    bool spiked = false;
};

// Applies one synaptic input at t; the caller integrates to t first.
ReceiveResult receive(const NeuronState& state, const NeuronParams& params, double efficacy, Time t);

inline bool is_refractory(const NeuronState& state, Time t) noexcept { return t < state.refractory_until; }

// Multiplicative Gaussian jitter on theta and leak with coefficient of
// variation `cv`. Draws are clipped so the jittered unit stays valid.
NeuronParams with_mismatch(const NeuronParams& nominal, double cv, RandomStream& stream);

struct PoissonDrive {
    int n_sources = 0;
    double rate_each = 0.0;
    double efficacy_each = 0.0;
};

struct RateEstimate {
    double rate_hz = 0.0;
    double stderr_hz = 0.0;
};

// Mean output rate of one unit driven by independent Poisson trains.
// The standard error uses the Poisson approximation sqrt(count)/duration.
RateEstimate transfer_function(const NeuronParams& params, const PoissonDrive& drive, double duration_s,
                               RandomStream stream);

struct GainPoint {
    double input_rate_hz = 0.0;
    RateEstimate output;
};

std::vector<GainPoint> gain_curve(const NeuronParams& params, const PoissonDrive& drive,
                                  const std::vector<double>& input_rates, double duration_s,
                                  const RandomStream& stream);

void write_gain_csv(std::ostream& out, const std::vector<GainPoint>& curve);

} // namespace spikelearn
