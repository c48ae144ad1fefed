#pragma once

#include "spikelearn/characterization.hpp"
#include "spikelearn/learning.hpp"
#include "spikelearn/network.hpp"
#include "spikelearn/stimulus.hpp"

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace spikelearn {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct StimulusSettings {
    std::string patterns = "builtin";     // builtin | disjoint
    int n_patterns = 3;                   // disjoint only
    int cells_each = 65;                  // disjoint only
    std::vector<std::string> pattern_files; // overrides `patterns` when set
    std::string schedule_file;            // overrides the alternating schedule
    double rate_on = 200.0;
    double rate_off = 0.0;
    int presentations = 40;
    double duration_s = 1.0;
    double gap_s = 6.5;
};

struct NeuronTfSettings {
    int n_sources = 64;
    double efficacy = 0.05;
    std::vector<double> rates{0, 5, 10, 20, 30, 40, 50, 60, 80, 100, 150, 200};
    double duration_s = 10.0;
};

struct EtfSettings {
    std::string population; // pattern name, empty = first pattern
    std::vector<double> fractions{0.05, 0.2, 0.35, 0.5, 0.65, 0.8, 0.95};
    std::vector<double> nu_in;
    EtfProtocol protocol;
};

struct RecallSettings {
    std::string pattern;    // empty = every pattern in turn
    std::string matrix;     // snapshot file to load; empty = untrained network
    double removal = 0.2;
    int trials = 10;
    RecallOptions options;
};

struct ExperimentConfig {
    NetworkConfig network;
    StimulusSettings stimulus;
    LearningOptions learning;
    NeuronTfSettings neuron_tf;
    std::vector<double> map_nu_pre{0, 10, 20, 40, 80, 120};
    std::vector<double> map_nu_post{0, 10, 20, 40, 80, 120};
    PlasticityProtocol map_protocol;
    EtfSettings etf;
    RecallSettings recall;
    int workers = 1;

    ExperimentConfig();

    // Throws ConfigError naming the offending key.
    void validate() const;
};

// Reads `[section]` headers and `key = value` lines; '#' starts a comment.
// Unknown sections or keys are errors. Values not mentioned keep their
// current setting, so files can be layered.
void load_config(std::istream& in, ExperimentConfig& config, const std::string& source = "config");

// `section.key=value`
void apply_override(ExperimentConfig& config, const std::string& assignment);

// Every key in canonical order; reading it back reproduces the config.
void write_config(std::ostream& out, const ExperimentConfig& config);

std::vector<StimulusPattern> resolve_patterns(const ExperimentConfig& config);
PresentationSchedule resolve_schedule(const ExperimentConfig& config, const std::vector<StimulusPattern>& patterns);

} // namespace spikelearn
