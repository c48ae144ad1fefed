#include "spikelearn/learning.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace spikelearn {

std::vector<int> label_neurons(const std::vector<StimulusPattern>& patterns)
{
    std::vector<int> labels(grid_cells, background_label);
    for (std::size_t p = 0; p < patterns.size(); ++p) {
        for (int c : patterns[p].active_cells()) {
            if (labels[c] != background_label) {
                throw std::invalid_argument("label_neurons: patterns '" + patterns[labels[c]].name + "' and '"
                                            + patterns[p].name + "' overlap");
            }
            labels[c] = static_cast<int>(p);
        }
    }
    return labels;
}

std::vector<Address> members_of(const std::vector<int>& labels, int label)
{
    std::vector<Address> out;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] == label) out.push_back(Address{Population::Excitatory, static_cast<std::uint32_t>(i)});
    }
    return out;
}

namespace {

std::vector<Address> all_inhibitory(int n)
{
    std::vector<Address> out;
    for (int i = 0; i < n; ++i) out.push_back(Address{Population::Inhibitory, static_cast<std::uint32_t>(i)});
    return out;
}

std::size_t find_pattern(const std::vector<StimulusPattern>& patterns, const std::string& name)
{
    for (std::size_t p = 0; p < patterns.size(); ++p) {
        if (patterns[p].name == name) return p;
    }
    throw std::invalid_argument("schedule names unknown pattern '" + name + "'");
}

} // namespace

LearningResult run_learning(Simulation& sim, const std::vector<StimulusPattern>& patterns,
                            const PresentationSchedule& schedule, const LearningOptions& options,
                            const RandomStream& stream, const LearningHooks& hooks)
{
    schedule.validate();
    if (options.snapshot_every < 1 || !(options.trace_bin_s > 0.0) || !(options.chunk_s > 0.0)
        || !(options.tail_s >= 0.0)) {
        throw std::invalid_argument("learning: snapshot_every, trace bin and chunk must be positive");
    }
    const auto labels = label_neurons(patterns);
    const Time base = sim.now();
    sim.set_plasticity(true);

    RandomStream pres_streams = stream.derive("presentation");
    for (std::size_t k = 0; k < schedule.items.size(); ++k) {
        const auto& item = schedule.items[k];
        const auto& pat = patterns[find_pattern(patterns, item.pattern)];
        const Time t0{base.us + Time::from_seconds(item.onset_s).us};
        const Time t1{base.us + Time::from_seconds(item.offset_s()).us};
        for (auto& src : encode(pat, t0, t1, options.rate_on, options.rate_off, pres_streams.derive(k))) {
            sim.add_drive(src.drive, std::move(src.stream));
        }
    }

    const Time end{base.us + Time::from_seconds(schedule.end_s() + options.tail_s).us};
    std::vector<std::pair<Time, int>> snap_at{{base, 0}};
    const std::size_t period = static_cast<std::size_t>(options.snapshot_every) * std::max<std::size_t>(1, patterns.size());
    for (std::size_t k = 0; k < schedule.items.size(); ++k) {
        if ((k + 1) % period != 0) continue;
        const double off = schedule.items[k].offset_s();
        const double next = k + 1 < schedule.items.size() ? schedule.items[k + 1].onset_s : off + options.tail_s;
        const Time t{base.us + Time::from_seconds(0.5 * (off + next)).us};
        if (t <= end) snap_at.emplace_back(t, static_cast<int>(k + 1));
    }

    LearningResult result;
    const Time chunk = Time::from_seconds(options.chunk_s);
    std::size_t next_snap = 0;
    Time t = base;
    for (;;) {
        while (next_snap < snap_at.size() && snap_at[next_snap].first <= t) {
            sim.settle_synapses();
            result.snapshots.push_back(sim.snapshot());
            result.snapshot_after.push_back(snap_at[next_snap].second);
            ++next_snap;
        }
        if (t >= end) break;
        if (hooks.stop && hooks.stop->load()) {
            result.truncated = true;
            break;
        }
        Time stop_at{std::min(end.us, t.us + chunk.us)};
        if (next_snap < snap_at.size()) stop_at = std::min(stop_at, snap_at[next_snap].first);
        EventLog part = sim.run_until(stop_at);
        if (hooks.on_chunk) hooks.on_chunk(part);
        result.log.events.insert(result.log.events.end(), part.events.begin(), part.events.end());
        t = stop_at;
    }
    result.end_s = (t.us - base.us) * 1e-6;

    auto& tr = result.traces;
    std::vector<std::vector<Address>> groups;
    for (std::size_t p = 0; p < patterns.size(); ++p) {
        tr.columns.push_back(patterns[p].name);
        groups.push_back(members_of(labels, static_cast<int>(p)));
    }
    tr.columns.emplace_back("bkg");
    groups.push_back(members_of(labels, background_label));
    tr.columns.emplace_back("inh");
    groups.push_back(all_inhibitory(sim.config().n_inh));
    if (t > base) {
        const Time bin = Time::from_seconds(options.trace_bin_s);
        for (const auto& g : groups) {
            tr.rates.push_back(g.empty() ? std::vector<double>() : rate_trace(result.log, g, base, t, bin));
        }
        std::size_t n_bins = 0;
        for (const auto& r : tr.rates) n_bins = std::max(n_bins, r.size());
        for (auto& r : tr.rates) r.resize(n_bins, 0.0);
        for (std::size_t b = 0; b < n_bins; ++b) tr.t_bin_s.push_back((base.us + b * bin.us) * 1e-6);
    } else {
        tr.rates.assign(groups.size(), {});
    }
    return result;
}

// ---------------------------------------------------------------------------

double GroupFractions::of(const std::string& name) const
{
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (names[i] == name) return fraction[i];
    }
    throw std::out_of_range("no synapse group '" + name + "'");
}

GroupFractions group_fractions(const SynapticSnapshot& snapshot, const std::vector<int>& labels,
                               const std::vector<std::string>& pattern_names)
{
    const std::size_t np = pattern_names.size();
    GroupFractions g;
    for (const auto& n : pattern_names) g.names.push_back(n + "->" + n);
    g.names.insert(g.names.end(), {"inter-selective", "selective->bkg", "bkg->selective", "bkg->bkg"});
    std::vector<std::size_t> pot(g.names.size(), 0);
    g.edges.assign(g.names.size(), 0);
    for (std::size_t k = 0; k < snapshot.size(); ++k) {
        const int a = labels.at(snapshot.pre[k]);
        const int b = labels.at(snapshot.post[k]);
        if (a >= static_cast<int>(np) || b >= static_cast<int>(np)) {
            throw std::invalid_argument("group_fractions: label without a pattern name");
        }
        std::size_t slot;
        if (a >= 0 && b >= 0) slot = a == b ? static_cast<std::size_t>(a) : np;
        else if (a >= 0) slot = np + 1;
        else if (b >= 0) slot = np + 2;
        else slot = np + 3;
        ++g.edges[slot];
        pot[slot] += snapshot.potentiated[k];
    }
    for (std::size_t i = 0; i < g.names.size(); ++i) {
        g.fraction.push_back(g.edges[i] ? static_cast<double>(pot[i]) / static_cast<double>(g.edges[i]) : 0.0);
    }
    return g;
}

std::vector<std::size_t> hamming_series(const std::vector<SynapticSnapshot>& snapshots)
{
    std::vector<std::size_t> out;
    for (std::size_t s = 1; s < snapshots.size(); ++s) {
        const auto& a = snapshots[s - 1];
        const auto& b = snapshots[s];
        if (a.pre != b.pre || a.post != b.post) {
            throw std::invalid_argument("hamming_series: snapshots cover different synapses");
        }
        std::size_t d = 0;
        for (std::size_t k = 0; k < a.size(); ++k) d += a.potentiated[k] != b.potentiated[k];
        out.push_back(d);
    }
    return out;
}

DelayImage delay_output_image(const EventLog& log, Time t0, Time t1, const MacroPixelMap& map,
                              double rate_threshold_hz)
{
    if (!(t1 > t0)) throw std::invalid_argument("delay_output_image: empty window");
    std::array<std::size_t, grid_cells> counts{};
    for (const auto& e : log.events) {
        if (e.address.population == Population::Excitatory && e.time >= t0 && e.time < t1
            && e.address.index < static_cast<std::uint32_t>(grid_cells)) {
            ++counts[map.cell_of_neuron(static_cast<int>(e.address.index))];
        }
    }
    DelayImage img;
    const double span = t1.seconds() - t0.seconds();
    for (int c = 0; c < grid_cells; ++c) {
        img.rate[c] = static_cast<double>(counts[c]) / span;
        img.active[c] = img.rate[c] >= rate_threshold_hz ? 1 : 0;
    }
    return img;
}

double image_overlap(const DelayImage& image, const StimulusPattern& p)
{
    const int n = p.active_count();
    if (n == 0) return 0.0;
    int hit = 0;
    for (int c = 0; c < grid_cells; ++c) hit += (p.cells[c] && image.active[c]) ? 1 : 0;
    return static_cast<double>(hit) / n;
}

double activity_threshold(const EventLog& log, const std::vector<int>& labels, Time t0, Time t1, double factor,
                          double floor_hz)
{
    const auto bkg = members_of(labels, background_label);
    if (bkg.empty()) return floor_hz;
    return std::max(floor_hz, factor * population_rate(log, bkg, t0, t1));
}

CompletionScore recall_test(Simulation& sim, const StimulusPattern& pattern, const std::vector<int>& labels,
                            double removal_fraction, const RecallOptions& options, RandomStream stream)
{
    if (!(options.duration_s > 0.0) || !(options.score_to_s > options.score_from_s) || options.score_from_s < 0.0
        || options.settle_s < 0.0) {
        throw std::invalid_argument("recall: bad timing options");
    }
    const bool was_plastic = sim.plasticity();
    sim.set_plasticity(!options.frozen);
    const Time start{sim.now().us + Time::from_seconds(options.settle_s).us};
    const Time off{start.us + Time::from_seconds(options.duration_s).us};
    RandomStream cue_stream = stream.derive("cue");
    const StimulusPattern cue = degrade(pattern, removal_fraction, cue_stream);
    for (auto& src : encode(cue, start, off, options.rate_on, 0.0, stream.derive("drive"))) {
        sim.add_drive(src.drive, std::move(src.stream));
    }
    const Time w0{off.us + Time::from_seconds(options.score_from_s).us};
    const Time w1{off.us + Time::from_seconds(options.score_to_s).us};
    const EventLog log = sim.run_until(w1);
    sim.set_plasticity(was_plastic);

    CompletionScore s;
    s.threshold_hz = activity_threshold(log, labels, w0, w1);
    const DelayImage img = delay_output_image(log, w0, w1, sim.map(), s.threshold_hz);
    int in_hit = 0, in_n = 0, out_hit = 0, out_n = 0;
    double in_rate = 0.0;
    for (int c = 0; c < grid_cells; ++c) {
        if (pattern.cells[c]) {
            ++in_n;
            in_hit += img.active[c];
            in_rate += img.rate[c];
        } else {
            ++out_n;
            out_hit += img.active[c];
        }
    }
    s.recall_coverage = in_n ? static_cast<double>(in_hit) / in_n : 0.0;
    s.intrusion = out_n ? static_cast<double>(out_hit) / out_n : 0.0;
    s.pattern_rate_hz = in_n ? in_rate / in_n : 0.0;
    return s;
}

DelayWindowStats delay_persistence(const EventLog& log, const std::vector<int>& labels,
                                   const std::vector<StimulusPattern>& patterns,
                                   const PresentationSchedule& schedule, int first_presentation)
{
    DelayWindowStats st;
    std::vector<std::vector<Address>> groups;
    for (std::size_t p = 0; p < patterns.size(); ++p) groups.push_back(members_of(labels, static_cast<int>(p)));
    for (std::size_t k = static_cast<std::size_t>(std::max(0, first_presentation)); k < schedule.items.size(); ++k) {
        const std::size_t p = find_pattern(patterns, schedule.items[k].pattern);
        if (groups[p].empty()) continue;
        const double off = schedule.items[k].offset_s();
        const Time w0 = Time::from_seconds(off + 0.25);
        const Time w1 = Time::from_seconds(off + 1.25);
        if (k + 1 < schedule.items.size() && w1 > Time::from_seconds(schedule.items[k + 1].onset_s)) continue;
        ++st.windows;
        const double thr = activity_threshold(log, labels, w0, w1);
        const auto bins = rate_trace(log, groups[p], w0, w1, Time::from_seconds(0.25));
        const bool persistent = std::all_of(bins.begin(), bins.end(), [thr](double r) { return r >= thr; });
        if (!persistent) continue;
        ++st.persistent;
        const double own = population_rate(log, groups[p], w0, w1);
        bool others_low = true;
        for (std::size_t q = 0; q < groups.size(); ++q) {
            if (q != p && !groups[q].empty() && population_rate(log, groups[q], w0, w1) >= 0.2 * own) {
                others_low = false;
            }
        }
        st.selective += others_low ? 1 : 0;
    }
    return st;
}

void write_snapshot(std::ostream& out, const SynapticSnapshot& snapshot)
{
    out << "# time_s " << std::setprecision(9) << snapshot.time_s << '\n' << "pre,post,flag\n";
    for (std::size_t k = 0; k < snapshot.size(); ++k) {
        out << snapshot.pre[k] << ',' << snapshot.post[k] << ',' << int(snapshot.potentiated[k]) << '\n';
    }
}

SynapticSnapshot read_snapshot(std::istream& in)
{
    SynapticSnapshot s;
    std::string line;
    bool header = false;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line[0] == '#') {
            std::istringstream h(line.substr(1));
            std::string key;
            if (h >> key && key == "time_s") h >> s.time_s;
            continue;
        }
        if (!header) {
            if (line != "pre,post,flag") throw std::runtime_error("snapshot: expected header pre,post,flag");
            header = true;
            continue;
        }
        std::istringstream row(line);
        std::uint32_t pre = 0, post = 0;
        int flag = 0;
        char c1 = 0, c2 = 0;
        if (!(row >> pre >> c1 >> post >> c2 >> flag) || c1 != ',' || c2 != ',' || (flag != 0 && flag != 1)) {
            throw std::runtime_error("snapshot: malformed line '" + line + "'");
        }
        s.pre.push_back(pre);
        s.post.push_back(post);
        s.potentiated.push_back(static_cast<std::uint8_t>(flag));
    }
    if (!header) throw std::runtime_error("snapshot: empty file");
    return s;
}

void load_snapshot(Topology& topology, const SynapticSnapshot& snapshot)
{
    std::size_t k = 0;
    for (auto& e : topology.edges) {
        if (e.projection != Projection::EE) continue;
        if (k >= snapshot.size() || snapshot.pre[k] != e.pre || snapshot.post[k] != e.post) {
            throw std::runtime_error("snapshot does not match the network's E->E edges");
        }
        e.state.x = snapshot.potentiated[k] ? 1.0 : 0.0;
        ++k;
    }
    if (k != snapshot.size()) throw std::runtime_error("snapshot does not match the network's E->E edges");
}

void write_traces_csv(std::ostream& out, const RateTraces& traces)
{
    out << "t_bin_s";
    for (const auto& c : traces.columns) out << ',' << c << "_hz";
    out << '\n' << std::setprecision(9);
    for (std::size_t b = 0; b < traces.t_bin_s.size(); ++b) {
        out << traces.t_bin_s[b];
        for (const auto& r : traces.rates) out << ',' << (b < r.size() ? r[b] : 0.0);
        out << '\n';
    }
}

void write_delay_image(std::ostream& out, const DelayImage& image, bool binary)
{
    out << std::setprecision(6);
    for (int r = 0; r < grid_side; ++r) {
        for (int c = 0; c < grid_side; ++c) {
            const int cell = MacroPixelMap::cell_index(r, c);
            out << (c ? " " : "");
            if (binary) {
                out << (image.active[cell] ? 1 : 0);
            } else {
                out << image.rate[cell];
            }
        }
        out << '\n';
    }
}

} // namespace spikelearn
