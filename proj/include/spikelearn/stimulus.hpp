#pragma once

#include "spikelearn/network.hpp"

#include <array>
#include <iosfwd>
#include <string>
#include <vector>

namespace spikelearn {

struct StimulusPattern {
    std::string name;
    std::array<std::uint8_t, grid_cells> cells{};

    int active_count() const noexcept;
    double coding_level() const noexcept { return static_cast<double>(active_count()) / grid_cells; }
    std::vector<int> active_cells() const;
    bool active(int cell) const { return cells.at(cell) != 0; }
};

int overlap(const StimulusPattern& a, const StimulusPattern& b) noexcept;

// "happy" and "sad" faces, 65 cells each, zero overlap.
std::vector<StimulusPattern> builtin_patterns();

// n mutually disjoint patterns of `cells_each` cells drawn from a seeded
// permutation of the grid.
std::vector<StimulusPattern> disjoint_patterns(int n, int cells_each, RandomStream stream);

// Switches off round(removal_fraction * active) active cells chosen uniformly.
StimulusPattern degrade(const StimulusPattern& p, double removal_fraction, RandomStream& stream);

struct EncodedSource {
    ExternalDrive drive;
    RandomStream stream;
};

// One Poisson train per cell over [t0, t1): rate_on for active cells,
// rate_off for the others (no source when the rate is zero).
std::vector<EncodedSource> encode(const StimulusPattern& p, Time t0, Time t1, double rate_on, double rate_off,
                                  const RandomStream& stream);

struct Presentation {
    std::string pattern;
    double onset_s = 0.0;
    double duration_s = 1.0;

    double offset_s() const noexcept { return onset_s + duration_s; }
};

struct PresentationSchedule {
    std::vector<Presentation> items;

    void validate() const;
    double end_s() const noexcept { return items.empty() ? 0.0 : items.back().offset_s(); }
};

// Cycles through `names` in order; presentation k starts at k * (duration + gap).
PresentationSchedule alternating_schedule(const std::vector<std::string>& names, int n_presentations,
                                          double duration_s, double gap_s);

// Pattern file: 14 lines of 14 '0'/'1' characters.
StimulusPattern read_pattern(std::istream& in, const std::string& name);
void write_pattern(std::ostream& out, const StimulusPattern& p);

// Schedule file: `pattern_name,onset_s,duration_s` per line.
PresentationSchedule read_schedule(std::istream& in);
void write_schedule(std::ostream& out, const PresentationSchedule& schedule);

} // namespace spikelearn
