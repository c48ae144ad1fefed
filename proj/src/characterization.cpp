#include "spikelearn/characterization.hpp"

#include "parallel.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace spikelearn {

namespace {

double measure_rate(const NeuronParams& neuron, const PlasticityProtocol& protocol, double drive_hz,
                    const RandomStream& stream)
{
    if (drive_hz <= 0.0) {
        return 0.0;
    }
    return transfer_function(neuron, PoissonDrive{protocol.n_nonplastic, drive_hz, protocol.j_nonplastic},
                             protocol.calibration_s, stream)
        .rate_hz;
}

struct ProbeResult {
    int transitions = 0;
    int probes = 0;
    std::size_t post_spikes = 0;
};

// One protocol run: every probe neuron gets n_nonplastic drive trains and
// n_plastic zero-efficacy plastic synapses, all starting at x0.
ProbeResult run_probes(const NeuronParams& neuron, const SynapseParams& synapse, const PlasticityProtocol& protocol,
                       double drive_hz, double nu_pre, double x0, const RandomStream& stream)
{
    EventQueue queue;
    queue.set_recorded(Population::External, false);
    const Time t_end = Time::from_seconds(protocol.window_s);
    const int n_neurons = protocol.n_neurons;
    std::vector<NeuronState> neurons(static_cast<std::size_t>(n_neurons));
    std::vector<SynapseState> synapses(static_cast<std::size_t>(n_neurons * protocol.n_plastic));
    for (auto& s : synapses) {
        s.x = x0;
    }
    // Source index -> synapse index, or -1 for a non-plastic drive train.
    std::vector<int> plastic_of_source;
    std::vector<int> neuron_of_source;
    RandomStream drive_stream = stream.derive("drive");
    RandomStream pre_stream = stream.derive("pre");
    for (int k = 0; k < n_neurons; ++k) {
        const Address target{Population::Excitatory, static_cast<std::uint32_t>(k)};
        for (int m = 0; m < protocol.n_nonplastic; ++m) {
            queue.poisson_source(drive_hz, target, Time{}, t_end,
                                 drive_stream.derive(static_cast<std::uint64_t>(k * protocol.n_nonplastic + m)));
            plastic_of_source.push_back(-1);
            neuron_of_source.push_back(k);
        }
        for (int m = 0; m < protocol.n_plastic; ++m) {
            const int syn = k * protocol.n_plastic + m;
            queue.poisson_source(nu_pre, target, Time{}, t_end, pre_stream.derive(static_cast<std::uint64_t>(syn)));
            plastic_of_source.push_back(syn);
            neuron_of_source.push_back(k);
        }
    }
    std::size_t post_spikes = 0;
    queue.set_spike_handler([&](const SpikeEvent& ev) {
        const auto src = ev.address.index;
        const int k = neuron_of_source[src];
        NeuronState& st = neurons[static_cast<std::size_t>(k)];
        st = integrate_to(st, neuron, ev.time);
        const int syn = plastic_of_source[src];
        if (syn < 0) {
            const auto r = receive(st, neuron, protocol.j_nonplastic, ev.time);
            st = r.state;
            post_spikes += r.spiked ? 1 : 0;
            return;
        }
        SynapseState& s = synapses[static_cast<std::size_t>(syn)];
        s = drift_to(s, synapse, ev.time);
        s = on_presynaptic_spike(s, synapse, st.v, ev.time);
    });
    queue.run_until(t_end);

    ProbeResult result;
    const bool start_potentiated = x0 > synapse.x_theta;
    for (auto& s : synapses) {
        s = drift_to(s, synapse, t_end);
        result.transitions += (is_potentiated(s, synapse) != start_potentiated) ? 1 : 0;
    }
    result.probes = static_cast<int>(synapses.size());
    result.post_spikes = post_spikes;
    return result;
}

ProbabilityEstimate binomial(int k, int n)
{
    if (n <= 0) return {};
    const double p = static_cast<double>(k) / n;
    return ProbabilityEstimate{p, std::sqrt(p * (1.0 - p) / n)};
}

} // namespace

double calibrate_drive(const NeuronParams& neuron, const PlasticityProtocol& protocol, double target_hz,
                       const RandomStream& stream)
{
    if (!(target_hz >= 0.0)) {
        throw std::invalid_argument("calibrate_drive: target rate must be non-negative");
    }
    if (target_hz == 0.0) {
        return 0.0;
    }
    const RandomStream cal = stream.derive("calibration");
    double lo = 0.0;
    double hi = protocol.max_drive_hz;
    const double max_rate = measure_rate(neuron, protocol, hi, cal);
    if (max_rate < target_hz * (1.0 - protocol.calibration_tolerance)) {
        std::ostringstream msg;
        msg << "calibrate_drive: nu_post=" << target_hz << " Hz unreachable; achievable range is [0, " << max_rate
            << "] Hz";
        throw std::runtime_error(msg.str());
    }
    // Bisection on the measured (monotone) gain; the common stream makes the
    // estimate a deterministic function of the drive rate.
    double best = hi;
    double best_err = std::abs(max_rate - target_hz);
    for (int iter = 0; iter < 40; ++iter) {
        const double mid = 0.5 * (lo + hi);
        const double rate = measure_rate(neuron, protocol, mid, cal);
        const double err = std::abs(rate - target_hz);
        if (err < best_err) {
            best = mid;
            best_err = err;
        }
        if (err <= protocol.calibration_tolerance * target_hz * 0.25) {
            break;
        }
        (rate < target_hz ? lo : hi) = mid;
    }
    if (best_err > protocol.calibration_tolerance * target_hz) {
        std::ostringstream msg;
        msg << "calibrate_drive: could not reach nu_post=" << target_hz << " Hz within tolerance; achievable range is [0, "
            << max_rate << "] Hz";
        throw std::runtime_error(msg.str());
    }
    return best;
}

PlasticityMap measure_plasticity_map(const std::vector<double>& nu_pre, const std::vector<double>& nu_post,
                                     const NeuronParams& neuron, const SynapseParams& synapse,
                                     const PlasticityProtocol& protocol, const RandomStream& stream, int workers)
{
    neuron.validate();
    synapse.validate(neuron.theta, neuron.floor);
    for (double r : nu_pre) {
        if (!(r >= 0.0)) throw std::invalid_argument("plasticity map: rates must be non-negative");
    }
    for (double r : nu_post) {
        if (!(r >= 0.0)) throw std::invalid_argument("plasticity map: rates must be non-negative");
    }
    if (protocol.n_neurons <= 0 || protocol.n_plastic <= 0 || protocol.n_trials <= 0 || protocol.window_s <= 0.0) {
        throw std::invalid_argument("plasticity map: protocol sizes must be positive");
    }

    PlasticityMap map;
    map.nu_pre = nu_pre;
    map.nu_post = nu_post;
    map.protocol = protocol;
    map.cells.resize(nu_pre.size() * nu_post.size());

    std::vector<double> drive(nu_post.size(), 0.0);
    detail::parallel_for(nu_post.size(), workers, [&](std::size_t r) {
        drive[r] = calibrate_drive(neuron, protocol, nu_post[r], stream.derive("row").derive(r));
    });

    detail::parallel_for(map.cells.size(), workers, [&](std::size_t idx) {
        const std::size_t r = idx / nu_pre.size();
        const std::size_t c = idx % nu_pre.size();
        PlasticityCell cell;
        cell.nu_pre = nu_pre[c];
        cell.nu_post = nu_post[r];
        cell.drive_hz = drive[r];
        int ltp = 0, ltd = 0, n = 0;
        std::size_t post_spikes = 0;
        const RandomStream point = stream.derive("point").derive(idx);
        for (int trial = 0; trial < protocol.n_trials; ++trial) {
            const RandomStream ts = point.derive(static_cast<std::uint64_t>(trial));
            const auto up = run_probes(neuron, synapse, protocol, drive[r], nu_pre[c], 0.0, ts.derive("ltp"));
            const auto down = run_probes(neuron, synapse, protocol, drive[r], nu_pre[c], 1.0, ts.derive("ltd"));
            ltp += up.transitions;
            ltd += down.transitions;
            n += up.probes;
            post_spikes += up.post_spikes + down.post_spikes;
        }
        cell.n = n;
        cell.ltp = binomial(ltp, n);
        cell.ltd = binomial(ltd, n);
        cell.measured_post = static_cast<double>(post_spikes)
            / (2.0 * protocol.n_trials * protocol.n_neurons * protocol.window_s);
        map.cells[idx] = cell;
    });
    return map;
}

void write_plasticity_csv(std::ostream& out, const PlasticityMap& map)
{
    out << "nu_pre,nu_post,p_ltp,p_ltp_se,p_ltd,p_ltd_se,n\n";
    out << std::setprecision(10);
    for (const auto& c : map.cells) {
        out << c.nu_pre << ',' << c.nu_post << ',' << c.ltp.p << ',' << c.ltp.se << ',' << c.ltd.p << ','
            << c.ltd.se << ',' << c.n << '\n';
    }
}

MonotonicityReport check_map_monotonicity(const PlasticityMap& map, double z)
{
    MonotonicityReport rep;
    // sign = +1: expected non-decreasing from a to b; -1: non-increasing.
    auto check = [&](const ProbabilityEstimate& a, const ProbabilityEstimate& b, int sign) {
        ++rep.pairs;
        const double step = sign * (b.p - a.p);
        const double se = std::sqrt(a.se * a.se + b.se * b.se);
        if (step < 0.0 && -step > z * se) {
            ++rep.violations;
        }
    };
    const std::size_t rows = map.nu_post.size();
    const std::size_t cols = map.nu_pre.size();
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c + 1 < cols; ++c) {
            check(map.at(r, c).ltp, map.at(r, c + 1).ltp, +1);
            check(map.at(r, c).ltd, map.at(r, c + 1).ltd, +1);
        }
    }
    for (std::size_t c = 0; c < cols; ++c) {
        for (std::size_t r = 0; r + 1 < rows; ++r) {
            check(map.at(r, c).ltp, map.at(r + 1, c).ltp, +1);
            check(map.at(r, c).ltd, map.at(r + 1, c).ltd, -1);
        }
    }
    return rep;
}

// ---------------------------------------------------------------------------

void force_potentiated_fraction(Topology& topology, const std::vector<int>& members, double fraction,
                                RandomStream stream)
{
    if (!(fraction >= 0.0 && fraction <= 1.0)) {
        throw std::invalid_argument("potentiated fraction must lie in [0, 1]");
    }
    std::vector<std::uint8_t> in(static_cast<std::size_t>(topology.n_exc), 0);
    for (int m : members) {
        if (m < 0 || m >= topology.n_exc) throw std::out_of_range("subpopulation index outside E");
        in[static_cast<std::size_t>(m)] = 1;
    }
    std::vector<std::size_t> internal;
    for (std::size_t k = 0; k < topology.edges.size(); ++k) {
        const Edge& e = topology.edges[k];
        if (e.projection == Projection::EE && in[e.pre] && in[e.post]) {
            internal.push_back(k);
        }
    }
    const auto n_pot = static_cast<std::size_t>(std::lround(fraction * static_cast<double>(internal.size())));
    for (std::size_t i = 0; i < n_pot; ++i) {
        const auto j = i + static_cast<std::size_t>(stream.below(internal.size() - i));
        std::swap(internal[i], internal[j]);
    }
    for (std::size_t i = 0; i < internal.size(); ++i) {
        topology.edges[internal[i]].state.x = i < n_pot ? 1.0 : 0.0;
    }
}

EtfCurve measure_etf(const NetworkConfig& config, const BuiltNetwork& net, const std::vector<int>& subpopulation,
                     const std::vector<double>& nu_in_grid, double potentiated_fraction,
                     const EtfProtocol& protocol, const RandomStream& stream, int workers)
{
    if (subpopulation.empty()) {
        throw std::invalid_argument("measure_etf: empty subpopulation");
    }
    if (!(protocol.duration_s > protocol.discard_s) || protocol.discard_s < 0.0) {
        throw std::invalid_argument("measure_etf: duration must exceed the discarded transient");
    }
    for (double r : nu_in_grid) {
        if (!(r >= 0.0)) throw std::invalid_argument("measure_etf: input rates must be non-negative");
    }
    Topology topo = net.topology;
    force_potentiated_fraction(topo, subpopulation, potentiated_fraction,
                               RandomStream(config.seeds.topology, "topology").derive("etf_force"));

    std::vector<std::uint8_t> in(static_cast<std::size_t>(topo.n_exc), 0);
    for (int m : subpopulation) in[static_cast<std::size_t>(m)] = 1;
    const auto members = excitatory(subpopulation);

    EtfCurve curve;
    curve.potentiated_fraction = potentiated_fraction;
    curve.samples.resize(nu_in_grid.size());
    detail::parallel_for(nu_in_grid.size(), workers, [&](std::size_t i) {
        const double nu_in = nu_in_grid[i];
        Simulation sim(config, topo, net.map);
        sim.set_plasticity(false);
        const Time t_end = Time::from_seconds(protocol.duration_s);
        const RandomStream point = stream.derive("nu_in").derive(i);
        for (std::size_t k = 0; k < topo.edges.size(); ++k) {
            const Edge& e = topo.edges[k];
            if (e.projection != Projection::EE || !in[e.pre] || !in[e.post]) {
                continue;
            }
            sim.sever(k);
            ExternalDrive d;
            d.rate_hz = nu_in;
            d.t0 = Time{};
            d.t1 = t_end;
            d.extra_targets.emplace_back(Address{Population::Excitatory, e.post}, sim.efficacy_of(k));
            sim.add_drive(d, point.derive(k));
        }
        const EventLog log = sim.run_until(t_end);
        const Time t0 = Time::from_seconds(protocol.discard_s);
        const Time mid = Time{(t0.us + t_end.us) / 2};
        const double n = static_cast<double>(members.size());
        const double r1 = population_rate(log, members, t0, mid);
        const double r2 = population_rate(log, members, mid, t_end);
        const double half = mid.seconds() - t0.seconds();
        const double se1 = std::sqrt(r1 * n * half) / (n * half);
        const double se2 = std::sqrt(r2 * n * half) / (n * half);
        const double rate = population_rate(log, members, t0, t_end);
        const double total = t_end.seconds() - t0.seconds();
        EtfSample s;
        s.nu_in = nu_in;
        s.nu_out = rate;
        s.stderr_hz = std::sqrt(rate * n * total) / (n * total);
        s.stationary = std::abs(r1 - r2) <= 2.0 * std::sqrt(se1 * se1 + se2 * se2);
        curve.samples[i] = s;
    });
    curve.fixed_points = find_fixed_points(curve.samples);
    return curve;
}

std::vector<FixedPoint> find_fixed_points(const std::vector<EtfSample>& input, double zero_tolerance)
{
    if (input.size() < 3) {
        throw std::invalid_argument("find_fixed_points: need at least 3 samples");
    }
    std::vector<EtfSample> s = input;
    std::stable_sort(s.begin(), s.end(), [](const EtfSample& a, const EtfSample& b) { return a.nu_in < b.nu_in; });
    const std::size_t n = s.size();
    std::vector<double> d(n);
    for (std::size_t i = 0; i < n; ++i) {
        d[i] = s[i].nu_out - s[i].nu_in;
        if (std::abs(d[i]) <= zero_tolerance) d[i] = 0.0;
    }
    auto secant = [&](std::size_t a, std::size_t b) {
        return (s[b].nu_out - s[a].nu_out) / (s[b].nu_in - s[a].nu_in);
    };
    auto make = [](double rate, double slope) {
        return FixedPoint{rate, slope < 1.0 ? Stability::Stable : Stability::Unstable, slope};
    };

    std::vector<FixedPoint> out;
    for (std::size_t i = 0; i < n; ++i) {
        if (d[i] == 0.0) {
            const std::size_t a = i == 0 ? 0 : i - 1;
            const std::size_t b = i + 1 < n ? i + 1 : i;
            out.push_back(make(s[i].nu_in, secant(a, b == a ? a + 1 : b)));
            continue;
        }
        if (i + 1 < n && d[i + 1] != 0.0 && ((d[i] > 0.0) != (d[i + 1] > 0.0))) {
            const double w = d[i] / (d[i] - d[i + 1]);
            const double rate = s[i].nu_in + w * (s[i + 1].nu_in - s[i].nu_in);
            out.push_back(make(rate, secant(i, i + 1)));
        }
    }
    return out;
}

int count_stable(const std::vector<FixedPoint>& fps) noexcept
{
    return static_cast<int>(
        std::count_if(fps.begin(), fps.end(), [](const FixedPoint& f) { return f.stability == Stability::Stable; }));
}

void write_etf_csv(std::ostream& out, const EtfCurve& curve)
{
    out << "nu_in,nu_out,stderr,potentiated_fraction\n";
    out << std::setprecision(10);
    for (const auto& s : curve.samples) {
        out << s.nu_in << ',' << s.nu_out << ',' << s.stderr_hz << ',' << curve.potentiated_fraction << '\n';
    }
    for (const auto& fp : curve.fixed_points) {
        out << "# fixed_point rate_hz=" << fp.rate_hz << " slope=" << fp.slope << " stability="
            << (fp.stability == Stability::Stable ? "stable" : "unstable") << '\n';
    }
    for (const auto& s : curve.samples) {
        if (!s.stationary) {
            out << "# nonstationary nu_in=" << s.nu_in << '\n';
        }
    }
}

} // namespace spikelearn
