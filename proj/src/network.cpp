#include "spikelearn/network.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace spikelearn {

const char* projection_name(Projection p)
{
    switch (p) {
    case Projection::EE: return "EE";
    case Projection::EI: return "EI";
    case Projection::IE: return "IE";
    case Projection::XI: return "XI";
    }
    return "??";
}

Projection projection_from_name(const std::string& name)
{
    if (name == "EE") return Projection::EE;
    if (name == "EI") return Projection::EI;
    if (name == "IE") return Projection::IE;
    if (name == "XI") return Projection::XI;
    throw std::runtime_error("unknown projection '" + name + "'");
}

void NetworkConfig::validate() const
{
    auto check_p = [](double p, const char* name) {
        if (!(p >= 0.0 && p <= 1.0)) {
            throw std::invalid_argument(std::string("network: ") + name + " must lie in [0, 1]");
        }
    };
    check_p(p_ee, "p_ee");
    check_p(p_ie, "p_ie");
    check_p(p_ei, "p_ei");
    check_p(p_retina_inh, "p_retina_inh");
    check_p(initial_potentiated_fraction, "initial_potentiated_fraction");
    if (n_exc != grid_cells) {
        throw std::invalid_argument("network: n_exc must equal the 14x14 macro-pixel count (196)");
    }
    if (n_inh <= 0 || n_inh > 0xffff) {
        throw std::invalid_argument("network: n_inh must be positive");
    }
    if (neuron_mismatch_cv < 0.0 || synapse_mismatch_cv < 0.0) {
        throw std::invalid_argument("network: mismatch cv must be non-negative");
    }
    if (!(delay_s >= 0.0) || !(delay_jitter_s >= 0.0)) {
        throw std::invalid_argument("network: delays must be non-negative");
    }
    const auto& e = efficacies;
    if (e.j_inh < 0.0 || e.j_ei < 0.0 || e.j_stim < 0.0 || e.j_retina_inh < 0.0) {
        throw std::invalid_argument("network: efficacies are magnitudes and must be non-negative");
    }
    exc_neuron.validate();
    inh_neuron.validate();
    plastic.validate(exc_neuron.theta, exc_neuron.floor);
}

std::size_t Topology::count(Projection p) const
{
    return static_cast<std::size_t>(
        std::count_if(edges.begin(), edges.end(), [p](const Edge& e) { return e.projection == p; }));
}

int MacroPixelMap::pixel_count(int cell) const
{
    return rows[cell / grid_side].size() * cols[cell % grid_side].size();
}

int MacroPixelMap::cell_of_pixel(int x, int y) const
{
    auto find = [](const std::array<PixelRange, grid_side>& stripes, int p) {
        for (int k = 0; k < grid_side; ++k) {
            if (p >= stripes[k].begin && p < stripes[k].end) {
                return k;
            }
        }
        throw std::out_of_range("pixel outside the retina");
    };
    return cell_index(find(rows, y), find(cols, x));
}

MacroPixelMap build_macro_pixel_map()
{
    // Stripe k covers [floor(k*128/14), floor((k+1)*128/14)): twelve stripes
    // of 9 pixels and two of 10, spread evenly.
    MacroPixelMap map;
    for (int k = 0; k < grid_side; ++k) {
        const PixelRange r{k * retina_side / grid_side, (k + 1) * retina_side / grid_side};
        map.rows[k] = r;
        map.cols[k] = r;
    }
    return map;
}

BuiltNetwork build(const NetworkConfig& config)
{
    config.validate();
    RandomStream topo(config.seeds.topology, "topology");
    RandomStream init = topo.derive("initial_state");
    BuiltNetwork net{Topology{config.n_exc, config.n_inh, {}}, build_macro_pixel_map()};
    auto& edges = net.topology.edges;
    edges.reserve(static_cast<std::size_t>(config.n_exc * config.n_exc * config.p_ee * 1.2) + 1024);

    for (int pre = 0; pre < config.n_exc; ++pre) {
        for (int post = 0; post < config.n_exc; ++post) {
            if (pre == post || !topo.bernoulli(config.p_ee)) {
                continue;
            }
            Edge e{Projection::EE, static_cast<std::uint32_t>(pre), static_cast<std::uint32_t>(post), {}};
            e.state.is_plastic = true;
            e.state.is_excitatory = true;
            e.state.x = init.bernoulli(config.initial_potentiated_fraction) ? 1.0 : 0.0;
            edges.push_back(e);
        }
    }
    auto add_fixed = [&](Projection proj, int n_pre, int n_post, double p, bool excitatory) {
        for (int pre = 0; pre < n_pre; ++pre) {
            for (int post = 0; post < n_post; ++post) {
                if (!topo.bernoulli(p)) {
                    continue;
                }
                Edge e{proj, static_cast<std::uint32_t>(pre), static_cast<std::uint32_t>(post), {}};
                e.state.is_plastic = false;
                e.state.is_excitatory = excitatory;
                e.state.x = 1.0;
                edges.push_back(e);
            }
        }
    };
    add_fixed(Projection::EI, config.n_exc, config.n_inh, config.p_ei, true);
    add_fixed(Projection::IE, config.n_inh, config.n_exc, config.p_ie, false);
    add_fixed(Projection::XI, grid_cells, config.n_inh, config.p_retina_inh, true);
    return net;
}

void write_topology(std::ostream& out, const Topology& topology)
{
    out << std::setprecision(17);
    for (const auto& e : topology.edges) {
        out << projection_name(e.projection) << ',' << e.pre << ',' << e.post << ',' << (e.state.is_plastic ? 1 : 0)
            << ',' << e.state.x << '\n';
    }
}

Topology read_topology(std::istream& in, int n_exc, int n_inh)
{
    Topology topo{n_exc, n_inh, {}};
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') {
            continue;
        }
        std::istringstream row(line);
        std::string proj, pre, post, plastic, x0;
        if (!std::getline(row, proj, ',') || !std::getline(row, pre, ',') || !std::getline(row, post, ',')
            || !std::getline(row, plastic, ',') || !std::getline(row, x0)) {
            throw std::runtime_error("topology line " + std::to_string(line_no) + ": expected 5 fields");
        }
        Edge e;
        e.projection = projection_from_name(proj);
        e.pre = static_cast<std::uint32_t>(std::stoul(pre));
        e.post = static_cast<std::uint32_t>(std::stoul(post));
        e.state.is_plastic = plastic == "1";
        e.state.is_excitatory = e.projection != Projection::IE;
        e.state.x = std::stod(x0);
        const int n_pre = e.projection == Projection::IE ? n_inh : (e.projection == Projection::XI ? grid_cells : n_exc);
        const int n_post = (e.projection == Projection::EI || e.projection == Projection::XI) ? n_inh : n_exc;
        if (static_cast<int>(e.pre) >= n_pre || static_cast<int>(e.post) >= n_post) {
            throw std::runtime_error("topology line " + std::to_string(line_no) + ": index out of range");
        }
        if (e.projection == Projection::EE && e.pre == e.post) {
            throw std::runtime_error("topology line " + std::to_string(line_no) + ": E->E self-connection");
        }
        if (!(e.state.x >= 0.0 && e.state.x <= 1.0)) {
            throw std::runtime_error("topology line " + std::to_string(line_no) + ": x0 outside [0, 1]");
        }
        topo.edges.push_back(e);
    }
    return topo;
}

Simulation::Simulation(const NetworkConfig& config, Topology topology, MacroPixelMap map)
    : config_(config), topology_(std::move(topology)), map_(map)
{
    config_.validate();
    if (topology_.n_exc != config_.n_exc || topology_.n_inh != config_.n_inh) {
        throw std::invalid_argument("simulation: topology population sizes disagree with the config");
    }
    RandomStream mismatch(config_.seeds.mismatch, "mismatch");
    RandomStream neuron_jitter = mismatch.derive("neurons");
    RandomStream synapse_jitter = mismatch.derive("synapses");

    exc_state_.assign(config_.n_exc, NeuronState{});
    inh_state_.assign(config_.n_inh, NeuronState{});
    for (int i = 0; i < config_.n_exc; ++i) {
        exc_params_.push_back(with_mismatch(config_.exc_neuron, config_.neuron_mismatch_cv, neuron_jitter));
        exc_state_[i].v = exc_params_.back().floor;
    }
    for (int i = 0; i < config_.n_inh; ++i) {
        inh_params_.push_back(with_mismatch(config_.inh_neuron, config_.neuron_mismatch_cv, neuron_jitter));
        inh_state_[i].v = inh_params_.back().floor;
    }

    const auto n_edges = topology_.edges.size();
    if (config_.synapse_mismatch_cv > 0.0) {
        syn_params_.reserve(n_edges);
        for (std::size_t k = 0; k < n_edges; ++k) {
            syn_params_.push_back(with_mismatch(config_.plastic, config_.synapse_mismatch_cv, synapse_jitter));
        }
    } else {
        syn_params_.push_back(config_.plastic);
    }

    fixed_efficacy_.assign(n_edges, 0.0);
    severed_.assign(n_edges, 0);
    delay_us_.assign(n_edges, 0);
    edge_post_.assign(n_edges, Address{});
    RandomStream delays(config_.seeds.topology, "delays");
    for (std::size_t k = 0; k < n_edges; ++k) {
        const double jitter = config_.delay_jitter_s > 0.0 ? delays.uniform() * config_.delay_jitter_s : 0.0;
        delay_us_[k] = Time::from_seconds(config_.delay_s + jitter).us;
    }
    exc_out_.resize(config_.n_exc);
    inh_out_.resize(config_.n_inh);
    cell_to_inh_.resize(grid_cells);
    const auto& eff = config_.efficacies;
    for (std::size_t k = 0; k < n_edges; ++k) {
        const Edge& e = topology_.edges[k];
        const auto idx = static_cast<std::uint32_t>(k);
        switch (e.projection) {
        case Projection::EE:
            edge_post_[k] = Address{Population::Excitatory, e.post};
            exc_out_[e.pre].push_back({idx, edge_post_[k]});
            break;
        case Projection::EI:
            fixed_efficacy_[k] = eff.j_ei;
            edge_post_[k] = Address{Population::Inhibitory, e.post};
            exc_out_[e.pre].push_back({idx, edge_post_[k]});
            break;
        case Projection::IE:
            fixed_efficacy_[k] = -eff.j_inh;
            edge_post_[k] = Address{Population::Excitatory, e.post};
            inh_out_[e.pre].push_back({idx, edge_post_[k]});
            break;
        case Projection::XI:
            fixed_efficacy_[k] = eff.j_retina_inh;
            cell_to_inh_[e.pre].push_back(e.post);
            break;
        }
    }

    queue_.set_recorded(Population::External, false);
    queue_.set_recorded(Population::Transmission, false);
    queue_.set_spike_handler([this](const SpikeEvent& ev) { on_spike(ev); });
}

void Simulation::add_drive(const ExternalDrive& drive, RandomStream stream)
{
    std::vector<std::pair<Address, double>> targets = drive.extra_targets;
    if (drive.cell) {
        const int cell = *drive.cell;
        if (cell < 0 || cell >= grid_cells) {
            throw std::out_of_range("drive cell outside the macro-pixel grid");
        }
        targets.emplace_back(Address{Population::Excitatory, static_cast<std::uint32_t>(map_.neuron_of(cell))},
                             config_.efficacies.j_stim);
        for (auto inh : cell_to_inh_[cell]) {
            targets.emplace_back(Address{Population::Inhibitory, inh}, config_.efficacies.j_retina_inh);
        }
    }
    const Address src = queue_.poisson_source(drive.rate_hz, targets.empty() ? Address{} : targets.front().first,
                                              drive.t0, drive.t1, std::move(stream));
    if (drive_targets_.size() <= src.index) {
        drive_targets_.resize(src.index + 1);
    }
    drive_targets_[src.index] = std::move(targets);
}

void Simulation::sever(std::size_t edge_index)
{
    severed_.at(edge_index) = 1;
}

void Simulation::set_plastic_state(std::size_t edge_index, double x)
{
    Edge& e = topology_.edges.at(edge_index);
    if (!e.state.is_plastic) {
        throw std::invalid_argument("set_plastic_state: edge is not plastic");
    }
    if (!(x >= 0.0 && x <= 1.0)) {
        throw std::invalid_argument("set_plastic_state: x outside [0, 1]");
    }
    e.state.x = x;
    e.state.last_update = queue_.now();
}

NeuronState& Simulation::state_of(Address a)
{
    return a.population == Population::Excitatory ? exc_state_[a.index] : inh_state_[a.index];
}

const NeuronParams& Simulation::neuron_params(Address a) const
{
    return a.population == Population::Excitatory ? exc_params_.at(a.index) : inh_params_.at(a.index);
}

void Simulation::deliver(Address post, double eff, Time t)
{
    const NeuronParams& np = neuron_params(post);
    NeuronState& st = state_of(post);
    st = integrate_to(st, np, t);
    const auto r = receive(st, np, eff, t);
    st = r.state;
    if (r.spiked) {
        queue_.schedule(SpikeEvent{t, post});
    }
}

void Simulation::transmit(std::uint32_t edge, Address post, Time t)
{
    Edge& e = topology_.edges[edge];
    if (e.projection != Projection::EE) {
        deliver(post, fixed_efficacy_[edge], t);
        return;
    }
    const SynapseParams& sp = syn_params(edge);
    if (plasticity_on_) {
        NeuronState& ps = exc_state_[post.index];
        ps = integrate_to(ps, exc_params_[post.index], t);
        e.state = drift_to(e.state, sp, t);
        e.state = on_presynaptic_spike(e.state, sp, ps.v, t);
    }
    deliver(post, efficacy(e.state, sp), t);
}

void Simulation::on_spike(const SpikeEvent& ev)
{
    const Time t = ev.time;
    switch (ev.address.population) {
    case Population::External: {
        if (ev.address.index < drive_targets_.size()) {
            for (const auto& [post, eff] : drive_targets_[ev.address.index]) {
                deliver(post, eff, t);
            }
        }
        return;
    }
    case Population::Transmission:
        transmit(ev.address.index, edge_post_[ev.address.index], t);
        return;
    case Population::Excitatory:
    case Population::Inhibitory: {
        const auto& out = ev.address.population == Population::Excitatory ? exc_out_[ev.address.index]
                                                                          : inh_out_[ev.address.index];
        for (const auto& o : out) {
            if (severed_[o.edge]) {
                continue;
            }
            if (delay_us_[o.edge] == 0) {
                transmit(o.edge, o.post, t);
            } else {
                queue_.schedule(SpikeEvent{Time{t.us + delay_us_[o.edge]}, Address{Population::Transmission, o.edge}});
            }
        }
        return;
    }
    case Population::Control: return;
    }
}

EventLog Simulation::run_until(Time t_end)
{
    return queue_.run_until(t_end);
}

double Simulation::potential(Address a) const
{
    const NeuronState& st = a.population == Population::Excitatory ? exc_state_.at(a.index) : inh_state_.at(a.index);
    return integrate_to(st, neuron_params(a), std::max(st.last_update, queue_.now())).v;
}

void Simulation::settle_synapses()
{
    if (!plasticity_on_) {
        return;
    }
    for (std::size_t k = 0; k < topology_.edges.size(); ++k) {
        Edge& e = topology_.edges[k];
        if (e.state.is_plastic) {
            e.state = drift_to(e.state, syn_params(k), queue_.now());
        }
    }
}

SynapticSnapshot Simulation::snapshot() const
{
    SynapticSnapshot snap;
    snap.time_s = queue_.now().seconds();
    for (std::size_t k = 0; k < topology_.edges.size(); ++k) {
        const Edge& e = topology_.edges[k];
        if (e.projection != Projection::EE) {
            continue;
        }
        snap.pre.push_back(e.pre);
        snap.post.push_back(e.post);
        snap.potentiated.push_back(is_potentiated(e.state, syn_params(k)) ? 1 : 0);
    }
    return snap;
}

double Simulation::efficacy_of(std::size_t edge_index) const
{
    const Edge& e = topology_.edges.at(edge_index);
    if (e.projection == Projection::EE) {
        return efficacy(e.state, syn_params(edge_index));
    }
    return fixed_efficacy_[edge_index];
}

bool Simulation::potentials_in_bounds() const
{
    for (std::size_t i = 0; i < exc_state_.size(); ++i) {
        if (exc_state_[i].v < exc_params_[i].floor || exc_state_[i].v > exc_params_[i].theta) return false;
    }
    for (std::size_t i = 0; i < inh_state_.size(); ++i) {
        if (inh_state_[i].v < inh_params_[i].floor || inh_state_[i].v > inh_params_[i].theta) return false;
    }
    return true;
}

namespace {

struct MemberMask {
    std::vector<std::uint8_t> exc;
    std::vector<std::uint8_t> inh;

    explicit MemberMask(const std::vector<Address>& members)
    {
        for (const auto& a : members) {
            auto& v = a.population == Population::Excitatory ? exc : inh;
            if (a.population != Population::Excitatory && a.population != Population::Inhibitory) {
                throw std::invalid_argument("population_rate: members must be neurons");
            }
            if (v.size() <= a.index) v.resize(a.index + 1, 0);
            v[a.index] = 1;
        }
    }
    bool contains(const Address& a) const
    {
        const auto& v = a.population == Population::Excitatory ? exc
            : a.population == Population::Inhibitory          ? inh
                                                              : exc;
        if (a.population != Population::Excitatory && a.population != Population::Inhibitory) return false;
        return a.index < v.size() && v[a.index];
    }
};

} // namespace

double population_rate(const EventLog& log, const std::vector<Address>& members, Time t0, Time t1)
{
    if (members.empty()) {
        throw std::invalid_argument("population_rate: empty member set");
    }
    if (!(t1 > t0)) {
        throw std::invalid_argument("population_rate: window must have positive length");
    }
    const MemberMask mask(members);
    std::size_t n = 0;
    for (const auto& e : log.events) {
        if (e.time >= t0 && e.time < t1 && mask.contains(e.address)) {
            ++n;
        }
    }
    return static_cast<double>(n) / (static_cast<double>(members.size()) * (t1.seconds() - t0.seconds()));
}

std::vector<double> rate_trace(const EventLog& log, const std::vector<Address>& members, Time t0, Time t1,
                               Time bin)
{
    if (members.empty()) {
        throw std::invalid_argument("rate_trace: empty member set");
    }
    if (bin.us <= 0 || !(t1 > t0)) {
        throw std::invalid_argument("rate_trace: bad window or bin");
    }
    const MemberMask mask(members);
    const auto n_bins = static_cast<std::size_t>((t1.us - t0.us + bin.us - 1) / bin.us);
    std::vector<double> counts(n_bins, 0.0);
    for (const auto& e : log.events) {
        if (e.time >= t0 && e.time < t1 && mask.contains(e.address)) {
            counts[static_cast<std::size_t>((e.time.us - t0.us) / bin.us)] += 1.0;
        }
    }
    const double norm = static_cast<double>(members.size()) * bin.seconds();
    for (auto& c : counts) c /= norm;
    return counts;
}

std::vector<Address> excitatory(const std::vector<int>& indices)
{
    std::vector<Address> out;
    out.reserve(indices.size());
    for (int i : indices) {
        out.push_back(Address{Population::Excitatory, static_cast<std::uint32_t>(i)});
    }
    return out;
}

} // namespace spikelearn
