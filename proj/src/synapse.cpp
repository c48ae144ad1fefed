#include "spikelearn/synapse.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

namespace spikelearn {

void SynapseParams::validate(double theta, double floor) const
{
    if (!(j_pot > j_dep && j_dep >= 0.0)) {
        throw std::invalid_argument("synapse: require j_pot > j_dep >= 0");
    }
    if (!(x_theta > 0.0 && x_theta < 1.0)) {
        throw std::invalid_argument("synapse: x_theta must lie in (0, 1)");
    }
    if (!(jump_up > 0.0 && jump_down > 0.0 && drift_up > 0.0 && drift_down > 0.0)) {
        throw std::invalid_argument("synapse: jumps and drift rates must be positive");
    }
    if (!(v_gate > floor && v_gate < theta)) {
        throw std::invalid_argument("synapse: v_gate must lie strictly between floor and theta");
    }
}

SynapseState drift_to(const SynapseState& s, const SynapseParams& p, Time t)
{
    if (t < s.last_update) {
        std::ostringstream msg;
        msg << "synapse drift_to: time reversal (last update " << s.last_update.us << "us, requested " << t.us
            << "us)";
        throw std::logic_error(msg.str());
    }
    SynapseState next = s;
    next.last_update = t;
    if (!s.is_plastic) {
        return next;
    }
    const double dt = static_cast<double>(t.us - s.last_update.us) * 1e-6;
    if (s.x > p.x_theta) {
        next.x = std::min(1.0, s.x + p.drift_up * dt);
    } else if (s.x < p.x_theta) {
        next.x = std::max(0.0, s.x - p.drift_down * dt);
    }
    return next;
}

SynapseState on_presynaptic_spike(const SynapseState& s, const SynapseParams& p, double v_post, Time t)
{
    SynapseState next = s;
    if (!s.is_plastic) {
        return next;
    }
    next.last_update = t;
    if (v_post > p.v_gate) {
        next.x = std::min(1.0, s.x + p.jump_up);
    } else {
        next.x = std::max(0.0, s.x - p.jump_down);
    }
    return next;
}

double efficacy(const SynapseState& s, const SynapseParams& p) noexcept
{
    const double j = s.x > p.x_theta ? p.j_pot : p.j_dep;
    return s.is_excitatory ? j : -j;
}

SynapseParams with_mismatch(const SynapseParams& nominal, double cv, RandomStream& stream)
{
    if (cv < 0.0) {
        throw std::invalid_argument("mismatch cv must be non-negative");
    }
    SynapseParams p = nominal;
    if (cv == 0.0) {
        return p;
    }
    auto jitter = [&](double v) { return v * std::max(0.05, 1.0 + cv * stream.gaussian()); };
    p.jump_up = jitter(p.jump_up);
    p.jump_down = jitter(p.jump_down);
    p.drift_up = jitter(p.drift_up);
    p.drift_down = jitter(p.drift_down);
    return p;
}

} // namespace spikelearn
