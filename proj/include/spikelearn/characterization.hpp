#pragma once

#include "spikelearn/network.hpp"
#include "spikelearn/neuron.hpp"
#include "spikelearn/synapse.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace spikelearn {

// ---------------------------------------------------------------------------
// LTP/LTD probability map
// ---------------------------------------------------------------------------

struct PlasticityProtocol {
    int n_neurons = 64;
    int n_nonplastic = 16;
    double j_nonplastic = 0.35;
    int n_plastic = 64;
    double window_s = 1.0;
    int n_trials = 1;
    double calibration_s = 10.0;    // per bisection probe
    double calibration_tolerance = 0.1; // relative error on nu_post
    double max_drive_hz = 2000.0;
};

struct ProbabilityEstimate {
    double p = 0.0;
    double se = 0.0;
};

struct PlasticityCell {
    double nu_pre = 0.0;
    double nu_post = 0.0;
    double drive_hz = 0.0;       // calibrated non-plastic input rate
    double measured_post = 0.0;  // realized post rate during the probe runs
    ProbabilityEstimate ltp;
    ProbabilityEstimate ltd;
    int n = 0;                   // probes per estimate
};

struct PlasticityMap {
    std::vector<double> nu_pre;  // columns
    std::vector<double> nu_post; // rows
    std::vector<PlasticityCell> cells; // row-major: nu_post outer, nu_pre inner
    PlasticityProtocol protocol;

    const PlasticityCell& at(std::size_t post_index, std::size_t pre_index) const
    {
        return cells.at(post_index * nu_pre.size() + pre_index);
    }
};

// Drive rate on `n_nonplastic` synapses of efficacy `j_nonplastic` that makes
// the neuron fire at target_hz within the relative tolerance. Throws naming
// the achievable range when the target cannot be reached.
double calibrate_drive(const NeuronParams& neuron, const PlasticityProtocol& protocol, double target_hz,
                       const RandomStream& stream);

PlasticityMap measure_plasticity_map(const std::vector<double>& nu_pre, const std::vector<double>& nu_post,
                                     const NeuronParams& neuron, const SynapseParams& synapse,
                                     const PlasticityProtocol& protocol, const RandomStream& stream,
                                     int workers = 1);

void write_plasticity_csv(std::ostream& out, const PlasticityMap& map);

struct MonotonicityReport {
    int pairs = 0;
    int violations = 0;
    double violation_fraction() const noexcept { return pairs ? static_cast<double>(violations) / pairs : 0.0; }
};

// Adjacent-pair check of the Hebbian structure: P_LTP non-decreasing along
// both axes, P_LTD non-decreasing in nu_pre and non-increasing in nu_post.
// A violation is a step against the trend larger than `z` combined stderrs.
MonotonicityReport check_map_monotonicity(const PlasticityMap& map, double z = 2.0);

// ---------------------------------------------------------------------------
// Effective Transfer Function
// ---------------------------------------------------------------------------

enum class Stability { Stable, Unstable };

struct FixedPoint {
    double rate_hz = 0.0;
    Stability stability = Stability::Stable;
    double slope = 0.0;
};

struct EtfSample {
    double nu_in = 0.0;
    double nu_out = 0.0;
    double stderr_hz = 0.0;
    bool stationary = true;
};

struct EtfCurve {
    std::string population;
    double potentiated_fraction = 0.0;
    std::vector<EtfSample> samples;
    std::vector<FixedPoint> fixed_points;
};

struct EtfProtocol {
    double duration_s = 3.0;
    double discard_s = 0.5;
};

// Severs the subpopulation's internal recurrence and replaces each severed
// presynaptic train with an independent Poisson train at nu_in through the
// same efficacy. Plasticity is frozen and inhibition stays live. The
// internal E->E matrix is forced to `potentiated_fraction` first.
EtfCurve measure_etf(const NetworkConfig& config, const BuiltNetwork& net, const std::vector<int>& subpopulation,
                     const std::vector<double>& nu_in_grid, double potentiated_fraction,
                     const EtfProtocol& protocol, const RandomStream& stream, int workers = 1);

// Forces exactly round(f * n) of the E->E edges inside `members` to the
// potentiated state, the rest depressed; assignment drawn from `stream`.
void force_potentiated_fraction(Topology& topology, const std::vector<int>& members, double fraction,
                                RandomStream stream);

// Crossings of nu_out(nu) with the identity, located by linear interpolation
// between samples. A zero-input sample with zero output is reported as a
// boundary fixed point. Stability uses the two-point secant slope (< 1).
std::vector<FixedPoint> find_fixed_points(const std::vector<EtfSample>& samples, double zero_tolerance = 1e-9);

int count_stable(const std::vector<FixedPoint>& fps) noexcept;

void write_etf_csv(std::ostream& out, const EtfCurve& curve);

} // namespace spikelearn
