#pragma once

#include "spikelearn/event_core.hpp"
#include "spikelearn/neuron.hpp"
#include "spikelearn/synapse.hpp"

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace spikelearn {

inline constexpr int grid_side = 14;
inline constexpr int grid_cells = grid_side * grid_side;
inline constexpr int retina_side = 128;

enum class Projection : std::uint8_t {
    EE, // plastic excitatory recurrence
    EI,
    IE,
    XI, // retina macro-pixel to inhibitory neuron
};

const char* projection_name(Projection p);
Projection projection_from_name(const std::string& name);

struct Efficacies {
    double j_inh = 0.12;        // I -> E, magnitude
    double j_ei = 0.05;         // E -> I
    double j_stim = 0.7;        // macro-pixel -> its E neuron
    double j_retina_inh = 0.15; // macro-pixel -> I
};

struct Seeds {
    std::uint64_t topology = 3;
    std::uint64_t stimulus = 4;
    std::uint64_t plasticity = 5;
    std::uint64_t mismatch = 6;
};

struct NetworkConfig {
    int n_exc = grid_cells;
    int n_inh = 43;
    double p_ee = 0.25;
    double p_ie = 0.5;
    double p_ei = 0.3;
    double p_retina_inh = 0.02;
    double initial_potentiated_fraction = 0.05;
    Efficacies efficacies;
    NeuronParams exc_neuron;
    NeuronParams inh_neuron{.leak = 50.0};
    SynapseParams plastic;
    double neuron_mismatch_cv = 0.0;
    double synapse_mismatch_cv = 0.0;
    double delay_s = 0.0005;     // fixed part of every E/I transmission delay
    double delay_jitter_s = 0.005; // per-edge extra delay, uniform in [0, jitter)
    Seeds seeds;

    void validate() const;
};

struct Edge {
    Projection projection = Projection::EE;
    std::uint32_t pre = 0;
    std::uint32_t post = 0;
    SynapseState state;
};

struct Topology {
    int n_exc = 0;
    int n_inh = 0;
    std::vector<Edge> edges; // grouped by projection in enum order

    std::size_t count(Projection p) const;
};

struct PixelRange {
    int begin = 0;
    int end = 0; // exclusive
    int size() const noexcept { return end - begin; }
};

// 14x14 partition of the 128x128 retina; cell (r, c) feeds E neuron 14r + c.
struct MacroPixelMap {
    std::array<PixelRange, grid_side> rows;
    std::array<PixelRange, grid_side> cols;

    static int cell_index(int row, int col) noexcept { return row * grid_side + col; }
    int neuron_of(int cell) const noexcept { return cell; }
    int cell_of_neuron(int neuron) const noexcept { return neuron; }
    int pixel_count(int cell) const;
    // Cell containing retina pixel (x = column, y = row).
    int cell_of_pixel(int x, int y) const;
};

MacroPixelMap build_macro_pixel_map();

struct BuiltNetwork {
    Topology topology;
    MacroPixelMap map;
};

BuiltNetwork build(const NetworkConfig& config);

// Topology text format, one edge per line: projection,pre,post,plastic_flag,x0
void write_topology(std::ostream& out, const Topology& topology);
Topology read_topology(std::istream& in, int n_exc, int n_inh);

// One Poisson train fanned out to fixed targets. For stimulus drive the
// cell field selects the macro-pixel whose retina->I edges are included.
struct ExternalDrive {
    double rate_hz = 0.0;
    Time t0;
    Time t1;
    std::optional<int> cell;
    std::vector<std::pair<Address, double>> extra_targets; // (post, efficacy)
};

struct SynapticSnapshot {
    double time_s = 0.0;
    std::vector<std::uint32_t> pre;
    std::vector<std::uint32_t> post;
    std::vector<std::uint8_t> potentiated;

    std::size_t size() const noexcept { return potentiated.size(); }
};

// Event-driven run of one built network. Owns its neuron and synapse state;
// strictly single-threaded.
class Simulation {
public:
    Simulation(const NetworkConfig& config, Topology topology, MacroPixelMap map);

    const NetworkConfig& config() const noexcept { return config_; }
    const Topology& topology() const noexcept { return topology_; }
    const MacroPixelMap& map() const noexcept { return map_; }
    Time now() const noexcept { return queue_.now(); }

    void set_plasticity(bool on) noexcept { plasticity_on_ = on; }
    bool plasticity() const noexcept { return plasticity_on_; }

    // Registers a Poisson drive; the stream is consumed by the new source only.
    void add_drive(const ExternalDrive& drive, RandomStream stream);
    // Stops edge e from transmitting presynaptic spikes (its synapse still exists).
    void sever(std::size_t edge_index);
    void schedule(Time at, EventQueue::Callback cb) { queue_.schedule(at, std::move(cb)); }
    // Overwrites the internal variable of an E->E edge (ETF forcing, state import).
    void set_plastic_state(std::size_t edge_index, double x);

    EventLog run_until(Time t_end);

    double potential(Address neuron) const;
    // x of every edge brought up to date with drift at the current time.
    void settle_synapses();
    SynapticSnapshot snapshot() const;
    double efficacy_of(std::size_t edge_index) const;
    const NeuronParams& neuron_params(Address neuron) const;

    // Debug check: every potential within [floor, theta]. Returns false on violation.
    bool potentials_in_bounds() const;

private:
    struct OutEdge {
        std::uint32_t edge;
        Address post;
    };

    void on_spike(const SpikeEvent& ev);
    void transmit(std::uint32_t edge, Address post, Time t);
    void deliver(Address post, double eff, Time t);
    NeuronState& state_of(Address a);
    const SynapseParams& syn_params(std::size_t edge) const
    {
        return syn_params_.size() == 1 ? syn_params_[0] : syn_params_[edge];
    }

    NetworkConfig config_;
    Topology topology_;
    MacroPixelMap map_;
    EventQueue queue_;
    bool plasticity_on_ = true;
    std::vector<NeuronState> exc_state_;
    std::vector<NeuronState> inh_state_;
    std::vector<NeuronParams> exc_params_;
    std::vector<NeuronParams> inh_params_;
    std::vector<SynapseParams> syn_params_; // size 1 without mismatch
    std::vector<double> fixed_efficacy_;
    std::vector<std::uint8_t> severed_;
    std::vector<std::int64_t> delay_us_;
    std::vector<Address> edge_post_;
    std::vector<std::vector<OutEdge>> exc_out_;
    std::vector<std::vector<OutEdge>> inh_out_;
    std::vector<std::vector<std::uint32_t>> cell_to_inh_;
    std::vector<std::vector<std::pair<Address, double>>> drive_targets_;
};

// Mean rate of `members` (E or I addresses) over [t0, t1).
double population_rate(const EventLog& log, const std::vector<Address>& members, Time t0, Time t1);

// Per-bin population rate, bins of width `bin` starting at t0.
std::vector<double> rate_trace(const EventLog& log, const std::vector<Address>& members, Time t0, Time t1,
                               Time bin);

std::vector<Address> excitatory(const std::vector<int>& indices);

} // namespace spikelearn
