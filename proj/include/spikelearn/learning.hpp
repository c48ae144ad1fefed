#pragma once

#include "spikelearn/network.hpp"
#include "spikelearn/stimulus.hpp"

#include <array>
#include <atomic>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace spikelearn {

inline constexpr int background_label = -1;

// Per-E-neuron label: index of the (unique) pattern activating it, or
// background_label. Patterns must be disjoint.
std::vector<int> label_neurons(const std::vector<StimulusPattern>& patterns);

std::vector<Address> members_of(const std::vector<int>& labels, int label);

struct LearningOptions {
    double rate_on = 200.0;
    double rate_off = 0.0;
    int snapshot_every = 2; // presentations of the same stimulus between snapshots
    double trace_bin_s = 0.1;
    double tail_s = 6.5;    // simulated time after the last presentation
    double chunk_s = 0.5;   // granularity of progress callbacks and stop checks
};

struct RateTraces {
    std::vector<std::string> columns; // one per pattern, then "bkg", "inh"
    std::vector<double> t_bin_s;
    std::vector<std::vector<double>> rates; // rates[column][bin]
};

struct LearningResult {
    EventLog log;
    std::vector<SynapticSnapshot> snapshots;
    std::vector<int> snapshot_after; // presentations completed at each snapshot
    RateTraces traces;
    bool truncated = false;
    double end_s = 0.0;
};

struct LearningHooks {
    // Called with the spikes of each completed chunk, in order.
    std::function<void(const EventLog&)> on_chunk;
    const std::atomic<bool>* stop = nullptr;
};

// Runs the schedule with plasticity on. Snapshots: one before the first
// presentation, then at the midpoint of the gap following every
// (snapshot_every * n_patterns)-th presentation.
LearningResult run_learning(Simulation& sim, const std::vector<StimulusPattern>& patterns,
                            const PresentationSchedule& schedule, const LearningOptions& options,
                            const RandomStream& stream, const LearningHooks& hooks = {});

// ---------------------------------------------------------------------------

struct GroupFractions {
    std::vector<std::string> names;
    std::vector<double> fraction;
    std::vector<std::size_t> edges;

    double of(const std::string& name) const;
};

// Groups: "<p>-><p>" per pattern, "inter-selective", "selective->bkg",
// "bkg->selective", "bkg->bkg". Every E->E edge lands in exactly one group.
GroupFractions group_fractions(const SynapticSnapshot& snapshot, const std::vector<int>& labels,
                               const std::vector<std::string>& pattern_names);

std::vector<std::size_t> hamming_series(const std::vector<SynapticSnapshot>& snapshots);

struct DelayImage {
    std::array<double, grid_cells> rate{};
    std::array<std::uint8_t, grid_cells> active{};
};

DelayImage delay_output_image(const EventLog& log, Time t0, Time t1, const MacroPixelMap& map,
                              double rate_threshold_hz);

// Fraction of the active cells of `p` that are on in the image.
double image_overlap(const DelayImage& image, const StimulusPattern& p);

// max(floor_hz, factor * background rate over the window).
double activity_threshold(const EventLog& log, const std::vector<int>& labels, Time t0, Time t1,
                          double factor = 5.0, double floor_hz = 5.0);

struct CompletionScore {
    double recall_coverage = 0.0;
    double intrusion = 0.0;
    double threshold_hz = 0.0;
    double pattern_rate_hz = 0.0;
};

struct RecallOptions {
    double duration_s = 1.0;
    double score_from_s = 0.5; // after stimulus offset
    double score_to_s = 1.5;
    bool frozen = false;
    double rate_on = 200.0;
    double settle_s = 1.0;     // quiet time before the probe
};

// Presents a degraded copy of `pattern` once and scores the following delay
// window against the full pattern.
CompletionScore recall_test(Simulation& sim, const StimulusPattern& pattern, const std::vector<int>& labels,
                            double removal_fraction, const RecallOptions& options, RandomStream stream);

struct DelayWindowStats {
    int windows = 0;
    int persistent = 0;
    int selective = 0; // persistent and the other selective populations below 20%
};

// For every presentation index >= first_presentation: does the stimulated
// population stay above threshold in every 250 ms bin of
// [offset + 0.25 s, offset + 1.25 s], with the other patterns below 20% of it?
DelayWindowStats delay_persistence(const EventLog& log, const std::vector<int>& labels,
                                   const std::vector<StimulusPattern>& patterns,
                                   const PresentationSchedule& schedule, int first_presentation);

void write_snapshot(std::ostream& out, const SynapticSnapshot& snapshot);
SynapticSnapshot read_snapshot(std::istream& in);
// Sets every E->E edge to x = 1 (flag 1) or 0; the edge list must match.
void load_snapshot(Topology& topology, const SynapticSnapshot& snapshot);
void write_traces_csv(std::ostream& out, const RateTraces& traces);
void write_delay_image(std::ostream& out, const DelayImage& image, bool binary);

} // namespace spikelearn
