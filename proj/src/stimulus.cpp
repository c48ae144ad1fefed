#include "spikelearn/stimulus.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace spikelearn {

int StimulusPattern::active_count() const noexcept
{
    return static_cast<int>(std::count(cells.begin(), cells.end(), std::uint8_t{1}));
}

std::vector<int> StimulusPattern::active_cells() const
{
    std::vector<int> out;
    for (int c = 0; c < grid_cells; ++c) {
        if (cells[c]) out.push_back(c);
    }
    return out;
}

int overlap(const StimulusPattern& a, const StimulusPattern& b) noexcept
{
    int n = 0;
    for (int c = 0; c < grid_cells; ++c) {
        n += (a.cells[c] && b.cells[c]) ? 1 : 0;
    }
    return n;
}

namespace {

// Each face fills one half of the grid; the other half is blank.
constexpr std::array<const char*, grid_side> happy_half = {
    "..###..", ".#####.", ".#####.", "#######", "#..#..#", "#..#..#", "#######",
    "#######", "#.###.#", "##...##", ".#####.", ".#####.", "..###..", "..###..",
};
constexpr std::array<const char*, grid_side> sad_half = {
    "..###..", ".#####.", ".#####.", "#######", "#..#..#", "#..#..#", "#######",
    "#######", "##...##", "#.###.#", ".#####.", ".#####.", "..###..", "..###..",
};

StimulusPattern from_half(const std::string& name, const std::array<const char*, grid_side>& half, int col0)
{
    StimulusPattern p{name, {}};
    for (int r = 0; r < grid_side; ++r) {
        for (int c = 0; c < grid_side / 2; ++c) {
            if (half[r][c] == '#') {
                p.cells[MacroPixelMap::cell_index(r, col0 + c)] = 1;
            }
        }
    }
    return p;
}

} // namespace

std::vector<StimulusPattern> builtin_patterns()
{
    return {from_half("happy", happy_half, 0), from_half("sad", sad_half, grid_side / 2)};
}

std::vector<StimulusPattern> disjoint_patterns(int n, int cells_each, RandomStream stream)
{
    if (n < 0 || cells_each < 0 || n * cells_each > grid_cells) {
        throw std::invalid_argument("disjoint_patterns: not enough cells for the requested patterns");
    }
    std::vector<int> order(grid_cells);
    std::iota(order.begin(), order.end(), 0);
    for (int i = grid_cells - 1; i > 0; --i) {
        const auto j = static_cast<int>(stream.below(static_cast<std::uint64_t>(i) + 1));
        std::swap(order[i], order[j]);
    }
    std::vector<StimulusPattern> out;
    for (int k = 0; k < n; ++k) {
        StimulusPattern p{"pattern" + std::to_string(k), {}};
        for (int m = 0; m < cells_each; ++m) {
            p.cells[order[k * cells_each + m]] = 1;
        }
        out.push_back(std::move(p));
    }
    return out;
}

StimulusPattern degrade(const StimulusPattern& p, double removal_fraction, RandomStream& stream)
{
    if (!(removal_fraction >= 0.0 && removal_fraction <= 1.0)) {
        throw std::invalid_argument("degrade: removal fraction must lie in [0, 1]");
    }
    std::vector<int> active = p.active_cells();
    const auto n_remove = static_cast<std::size_t>(std::lround(removal_fraction * static_cast<double>(active.size())));
    // Partial Fisher-Yates: the first n_remove entries become the removed set.
    for (std::size_t i = 0; i < n_remove; ++i) {
        const auto j = i + static_cast<std::size_t>(stream.below(active.size() - i));
        std::swap(active[i], active[j]);
    }
    StimulusPattern out = p;
    for (std::size_t i = 0; i < n_remove; ++i) {
        out.cells[active[i]] = 0;
    }
    return out;
}

std::vector<EncodedSource> encode(const StimulusPattern& p, Time t0, Time t1, double rate_on, double rate_off,
                                  const RandomStream& stream)
{
    if (!(rate_on >= 0.0) || !(rate_off >= 0.0)) {
        throw std::invalid_argument("encode: rates must be non-negative");
    }
    if (t1 < t0) {
        throw std::invalid_argument("encode: window end precedes start");
    }
    std::vector<EncodedSource> out;
    for (int c = 0; c < grid_cells; ++c) {
        const double rate = p.cells[c] ? rate_on : rate_off;
        if (rate <= 0.0) {
            continue;
        }
        ExternalDrive d;
        d.rate_hz = rate;
        d.t0 = t0;
        d.t1 = t1;
        d.cell = c;
        out.push_back(EncodedSource{std::move(d), stream.derive(static_cast<std::uint64_t>(c))});
    }
    return out;
}

void PresentationSchedule::validate() const
{
    double last_end = -INFINITY;
    for (const auto& item : items) {
        if (!(item.duration_s > 0.0)) {
            throw std::invalid_argument("schedule: presentation durations must be positive");
        }
        if (!(item.onset_s >= 0.0)) {
            throw std::invalid_argument("schedule: onsets must be non-negative");
        }
        if (item.onset_s < last_end) {
            throw std::invalid_argument("schedule: presentations overlap or are out of order");
        }
        last_end = item.offset_s();
    }
}

PresentationSchedule alternating_schedule(const std::vector<std::string>& names, int n_presentations,
                                          double duration_s, double gap_s)
{
    if (names.empty() || n_presentations < 0) {
        throw std::invalid_argument("alternating_schedule: need at least one pattern");
    }
    PresentationSchedule s;
    for (int k = 0; k < n_presentations; ++k) {
        s.items.push_back(Presentation{names[static_cast<std::size_t>(k) % names.size()],
                                       k * (duration_s + gap_s), duration_s});
    }
    s.validate();
    return s;
}

StimulusPattern read_pattern(std::istream& in, const std::string& name)
{
    StimulusPattern p{name, {}};
    std::string line;
    int row = 0;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (row >= grid_side || static_cast<int>(line.size()) != grid_side) {
            throw std::runtime_error("pattern '" + name + "': expected 14 lines of 14 characters");
        }
        for (int c = 0; c < grid_side; ++c) {
            if (line[c] != '0' && line[c] != '1') {
                throw std::runtime_error("pattern '" + name + "': cells must be '0' or '1'");
            }
            p.cells[MacroPixelMap::cell_index(row, c)] = line[c] == '1' ? 1 : 0;
        }
        ++row;
    }
    if (row != grid_side) {
        throw std::runtime_error("pattern '" + name + "': expected 14 lines of 14 characters");
    }
    return p;
}

void write_pattern(std::ostream& out, const StimulusPattern& p)
{
    for (int r = 0; r < grid_side; ++r) {
        for (int c = 0; c < grid_side; ++c) {
            out << (p.cells[MacroPixelMap::cell_index(r, c)] ? '1' : '0');
        }
        out << '\n';
    }
}

PresentationSchedule read_schedule(std::istream& in)
{
    PresentationSchedule s;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream row(line);
        std::string name, onset, duration;
        if (!std::getline(row, name, ',') || !std::getline(row, onset, ',') || !std::getline(row, duration)) {
            throw std::runtime_error("schedule line malformed: " + line);
        }
        s.items.push_back(Presentation{name, std::stod(onset), std::stod(duration)});
    }
    s.validate();
    return s;
}

void write_schedule(std::ostream& out, const PresentationSchedule& schedule)
{
    for (const auto& p : schedule.items) {
        out << p.pattern << ',' << p.onset_s << ',' << p.duration_s << '\n';
    }
}

} // namespace spikelearn
