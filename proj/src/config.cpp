#include "spikelearn/config.hpp"

#include <charconv>
#include <cstdlib>
#include <cstdio>
#include <fstream>
#include <functional>
#include <istream>
#include <ostream>
#include <sstream>

namespace spikelearn {

namespace {

struct Field {
    std::string section;
    std::string key;
    std::function<void(ExperimentConfig&, const std::string&)> set;
    std::function<std::string(const ExperimentConfig&)> get;
};

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::string fmt(double v)
{
    char buf[32];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

double to_double(const std::string& v)
{
    double out = 0.0;
    const auto* end = v.data() + v.size();
    auto [p, ec] = std::from_chars(v.data(), end, out);
    if (ec != std::errc{} || p != end) throw ConfigError("not a number: '" + v + "'");
    return out;
}

template <typename Int>
Int to_int(const std::string& v)
{
    Int out{};
    const auto* end = v.data() + v.size();
    auto [p, ec] = std::from_chars(v.data(), end, out);
    if (ec != std::errc{} || p != end) throw ConfigError("not an integer: '" + v + "'");
    return out;
}

bool to_bool(const std::string& v)
{
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError("not a boolean: '" + v + "'");
}

std::vector<std::string> split_list(const std::string& v)
{
    std::vector<std::string> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

std::vector<double> to_doubles(const std::string& v)
{
    std::vector<double> out;
    for (const auto& s : split_list(v)) out.push_back(to_double(s));
    return out;
}

std::string join(const std::vector<double>& xs)
{
    std::string s;
    for (std::size_t i = 0; i < xs.size(); ++i) s += (i ? "," : "") + fmt(xs[i]);
    return s;
}

std::string join(const std::vector<std::string>& xs)
{
    std::string s;
    for (std::size_t i = 0; i < xs.size(); ++i) s += (i ? "," : "") + xs[i];
    return s;
}

template <typename Get>
Field real(std::string section, std::string key, Get get)
{
    return {std::move(section), std::move(key),
            [get](ExperimentConfig& c, const std::string& v) { get(c) = to_double(v); },
            [get](const ExperimentConfig& c) { return fmt(get(const_cast<ExperimentConfig&>(c))); }};
}

template <typename Get>
Field integer(std::string section, std::string key, Get get)
{
    using T = std::remove_reference_t<decltype(get(std::declval<ExperimentConfig&>()))>;
    return {std::move(section), std::move(key),
            [get](ExperimentConfig& c, const std::string& v) { get(c) = to_int<T>(v); },
            [get](const ExperimentConfig& c) { return std::to_string(get(const_cast<ExperimentConfig&>(c))); }};
}

template <typename Get>
Field boolean(std::string section, std::string key, Get get)
{
    return {std::move(section), std::move(key),
            [get](ExperimentConfig& c, const std::string& v) { get(c) = to_bool(v); },
            [get](const ExperimentConfig& c) {
                return std::string(get(const_cast<ExperimentConfig&>(c)) ? "true" : "false");
            }};
}

template <typename Get>
Field text(std::string section, std::string key, Get get)
{
    return {std::move(section), std::move(key), [get](ExperimentConfig& c, const std::string& v) { get(c) = v; },
            [get](const ExperimentConfig& c) { return get(const_cast<ExperimentConfig&>(c)); }};
}

template <typename Get>
Field reals(std::string section, std::string key, Get get)
{
    return {std::move(section), std::move(key),
            [get](ExperimentConfig& c, const std::string& v) { get(c) = to_doubles(v); },
            [get](const ExperimentConfig& c) { return join(get(const_cast<ExperimentConfig&>(c))); }};
}

template <typename Get>
Field texts(std::string section, std::string key, Get get)
{
    return {std::move(section), std::move(key),
            [get](ExperimentConfig& c, const std::string& v) { get(c) = split_list(v); },
            [get](const ExperimentConfig& c) { return join(get(const_cast<ExperimentConfig&>(c))); }};
}

void neuron_fields(std::vector<Field>& f, const std::string& sec, NeuronParams NetworkConfig::*which)
{
    f.push_back(real(sec, "theta", [which](ExperimentConfig& c) -> double& { return (c.network.*which).theta; }));
    f.push_back(real(sec, "v_reset", [which](ExperimentConfig& c) -> double& { return (c.network.*which).v_reset; }));
    f.push_back(real(sec, "leak", [which](ExperimentConfig& c) -> double& { return (c.network.*which).leak; }));
    f.push_back(real(sec, "tau_arp", [which](ExperimentConfig& c) -> double& { return (c.network.*which).tau_arp; }));
    f.push_back(real(sec, "floor", [which](ExperimentConfig& c) -> double& { return (c.network.*which).floor; }));
}

const std::vector<Field>& fields()
{
    static const std::vector<Field> table = [] {
        std::vector<Field> f;
#define NET(key, member) f.push_back(real("network", key, [](ExperimentConfig& c) -> double& { return c.network.member; }))
        f.push_back(integer("network", "n_exc", [](ExperimentConfig& c) -> int& { return c.network.n_exc; }));
        f.push_back(integer("network", "n_inh", [](ExperimentConfig& c) -> int& { return c.network.n_inh; }));
        NET("p_ee", p_ee);
        NET("p_ie", p_ie);
        NET("p_ei", p_ei);
        NET("p_retina_inh", p_retina_inh);
        NET("initial_potentiated_fraction", initial_potentiated_fraction);
        NET("neuron_mismatch_cv", neuron_mismatch_cv);
        NET("synapse_mismatch_cv", synapse_mismatch_cv);
        NET("delay_s", delay_s);
        NET("delay_jitter_s", delay_jitter_s);
        NET("j_inh", efficacies.j_inh);
        NET("j_ei", efficacies.j_ei);
        NET("j_stim", efficacies.j_stim);
        NET("j_retina_inh", efficacies.j_retina_inh);
#undef NET
        neuron_fields(f, "exc_neuron", &NetworkConfig::exc_neuron);
        neuron_fields(f, "inh_neuron", &NetworkConfig::inh_neuron);
#define SYN(key) f.push_back(real("synapse", #key, [](ExperimentConfig& c) -> double& { return c.network.plastic.key; }))
        SYN(j_pot);
        SYN(j_dep);
        SYN(x_theta);
        SYN(jump_up);
        SYN(jump_down);
        SYN(drift_up);
        SYN(drift_down);
        SYN(v_gate);
#undef SYN
#define SEED(key) f.push_back(integer("seeds", #key, [](ExperimentConfig& c) -> std::uint64_t& { return c.network.seeds.key; }))
        SEED(topology);
        SEED(stimulus);
        SEED(plasticity);
        SEED(mismatch);
#undef SEED
        f.push_back(text("stimulus", "patterns", [](ExperimentConfig& c) -> std::string& { return c.stimulus.patterns; }));
        f.push_back(integer("stimulus", "n_patterns", [](ExperimentConfig& c) -> int& { return c.stimulus.n_patterns; }));
        f.push_back(integer("stimulus", "cells_each", [](ExperimentConfig& c) -> int& { return c.stimulus.cells_each; }));
        f.push_back(texts("stimulus", "pattern_files",
                          [](ExperimentConfig& c) -> std::vector<std::string>& { return c.stimulus.pattern_files; }));
        f.push_back(text("stimulus", "schedule_file", [](ExperimentConfig& c) -> std::string& { return c.stimulus.schedule_file; }));
        f.push_back(real("stimulus", "rate_on", [](ExperimentConfig& c) -> double& { return c.stimulus.rate_on; }));
        f.push_back(real("stimulus", "rate_off", [](ExperimentConfig& c) -> double& { return c.stimulus.rate_off; }));
        f.push_back(integer("stimulus", "presentations", [](ExperimentConfig& c) -> int& { return c.stimulus.presentations; }));
        f.push_back(real("stimulus", "duration_s", [](ExperimentConfig& c) -> double& { return c.stimulus.duration_s; }));
        f.push_back(real("stimulus", "gap_s", [](ExperimentConfig& c) -> double& { return c.stimulus.gap_s; }));

        f.push_back(integer("learning", "snapshot_every", [](ExperimentConfig& c) -> int& { return c.learning.snapshot_every; }));
        f.push_back(real("learning", "trace_bin_s", [](ExperimentConfig& c) -> double& { return c.learning.trace_bin_s; }));
        f.push_back(real("learning", "tail_s", [](ExperimentConfig& c) -> double& { return c.learning.tail_s; }));
        f.push_back(real("learning", "chunk_s", [](ExperimentConfig& c) -> double& { return c.learning.chunk_s; }));

        f.push_back(integer("neuron_tf", "n_sources", [](ExperimentConfig& c) -> int& { return c.neuron_tf.n_sources; }));
        f.push_back(real("neuron_tf", "efficacy", [](ExperimentConfig& c) -> double& { return c.neuron_tf.efficacy; }));
        f.push_back(reals("neuron_tf", "rates", [](ExperimentConfig& c) -> std::vector<double>& { return c.neuron_tf.rates; }));
        f.push_back(real("neuron_tf", "duration_s", [](ExperimentConfig& c) -> double& { return c.neuron_tf.duration_s; }));

        f.push_back(reals("plasticity_map", "nu_pre", [](ExperimentConfig& c) -> std::vector<double>& { return c.map_nu_pre; }));
        f.push_back(reals("plasticity_map", "nu_post", [](ExperimentConfig& c) -> std::vector<double>& { return c.map_nu_post; }));
#define MAPI(key) f.push_back(integer("plasticity_map", #key, [](ExperimentConfig& c) -> int& { return c.map_protocol.key; }))
#define MAPR(key) f.push_back(real("plasticity_map", #key, [](ExperimentConfig& c) -> double& { return c.map_protocol.key; }))
        MAPI(n_neurons);
        MAPI(n_nonplastic);
        MAPR(j_nonplastic);
        MAPI(n_plastic);
        MAPR(window_s);
        MAPI(n_trials);
        MAPR(calibration_s);
        MAPR(calibration_tolerance);
        MAPR(max_drive_hz);
#undef MAPI
#undef MAPR

        f.push_back(text("etf", "population", [](ExperimentConfig& c) -> std::string& { return c.etf.population; }));
        f.push_back(reals("etf", "fractions", [](ExperimentConfig& c) -> std::vector<double>& { return c.etf.fractions; }));
        f.push_back(reals("etf", "nu_in", [](ExperimentConfig& c) -> std::vector<double>& { return c.etf.nu_in; }));
        f.push_back(real("etf", "duration_s", [](ExperimentConfig& c) -> double& { return c.etf.protocol.duration_s; }));
        f.push_back(real("etf", "discard_s", [](ExperimentConfig& c) -> double& { return c.etf.protocol.discard_s; }));

        f.push_back(text("recall", "pattern", [](ExperimentConfig& c) -> std::string& { return c.recall.pattern; }));
        f.push_back(text("recall", "matrix", [](ExperimentConfig& c) -> std::string& { return c.recall.matrix; }));
        f.push_back(real("recall", "removal", [](ExperimentConfig& c) -> double& { return c.recall.removal; }));
        f.push_back(integer("recall", "trials", [](ExperimentConfig& c) -> int& { return c.recall.trials; }));
        f.push_back(boolean("recall", "frozen", [](ExperimentConfig& c) -> bool& { return c.recall.options.frozen; }));
        f.push_back(real("recall", "duration_s", [](ExperimentConfig& c) -> double& { return c.recall.options.duration_s; }));
        f.push_back(real("recall", "score_from_s", [](ExperimentConfig& c) -> double& { return c.recall.options.score_from_s; }));
        f.push_back(real("recall", "score_to_s", [](ExperimentConfig& c) -> double& { return c.recall.options.score_to_s; }));
        f.push_back(real("recall", "settle_s", [](ExperimentConfig& c) -> double& { return c.recall.options.settle_s; }));

        f.push_back(integer("run", "workers", [](ExperimentConfig& c) -> int& { return c.workers; }));
        return f;
    }();
    return table;
}

const Field* find_field(const std::string& section, const std::string& key)
{
    for (const auto& f : fields()) {
        if (f.section == section && f.key == key) return &f;
    }
    return nullptr;
}

bool known_section(const std::string& section)
{
    for (const auto& f : fields()) {
        if (f.section == section) return true;
    }
    return false;
}

void assign(ExperimentConfig& config, const std::string& section, const std::string& key, const std::string& value,
            const std::string& where)
{
    const Field* f = find_field(section, key);
    if (!f) throw ConfigError(where + ": unknown key '" + section + "." + key + "'");
    try {
        f->set(config, value);
    } catch (const ConfigError& e) {
        throw ConfigError(where + ": " + section + "." + key + ": " + e.what());
    }
}

void check(bool ok, const std::string& what)
{
    if (!ok) throw ConfigError(what);
}

} // namespace

ExperimentConfig::ExperimentConfig()
{
    // dense near zero, where the low fixed point and the unstable branch sit
    etf.nu_in = {0, 1, 2, 3, 4, 5, 6, 8, 10, 12, 15, 20, 30, 40, 60, 80, 100, 120, 140, 160, 180, 200, 220, 240, 260, 280, 300};
    recall.options.rate_on = stimulus.rate_on;
}

void ExperimentConfig::validate() const
{
    try {
        network.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    check(stimulus.patterns == "builtin" || stimulus.patterns == "disjoint",
          "stimulus.patterns must be 'builtin' or 'disjoint'");
    check(stimulus.n_patterns >= 1, "stimulus.n_patterns must be >= 1");
    check(stimulus.cells_each >= 1 && stimulus.cells_each * stimulus.n_patterns <= grid_cells,
          "stimulus.cells_each * stimulus.n_patterns must fit in the 196-cell grid");
    check(stimulus.rate_on >= 0.0 && stimulus.rate_off >= 0.0, "stimulus rates must be non-negative");
    check(stimulus.presentations >= 0, "stimulus.presentations must be >= 0");
    check(stimulus.duration_s > 0.0 && stimulus.gap_s >= 0.0, "stimulus.duration_s > 0 and gap_s >= 0 required");
    check(learning.snapshot_every >= 1, "learning.snapshot_every must be >= 1");
    check(learning.trace_bin_s > 0.0 && learning.chunk_s > 0.0 && learning.tail_s >= 0.0,
          "learning bins and chunks must be positive");
    check(neuron_tf.n_sources >= 1 && neuron_tf.duration_s > 0.0, "neuron_tf needs sources and a duration");
    for (double r : neuron_tf.rates) check(r >= 0.0, "neuron_tf.rates must be non-negative");
    check(!map_nu_pre.empty() && !map_nu_post.empty(), "plasticity_map grids must be non-empty");
    for (double r : map_nu_pre) check(r >= 0.0, "plasticity_map.nu_pre must be non-negative");
    for (double r : map_nu_post) check(r >= 0.0, "plasticity_map.nu_post must be non-negative");
    check(map_protocol.n_neurons >= 1 && map_protocol.n_plastic >= 1 && map_protocol.n_trials >= 1,
          "plasticity_map counts must be >= 1");
    check(map_protocol.window_s > 0.0 && map_protocol.calibration_s > 0.0, "plasticity_map windows must be positive");
    check(!etf.fractions.empty() && !etf.nu_in.empty(), "etf grids must be non-empty");
    for (double f : etf.fractions) check(f >= 0.0 && f <= 1.0, "etf.fractions must lie in [0, 1]");
    for (double r : etf.nu_in) check(r >= 0.0, "etf.nu_in must be non-negative");
    check(etf.protocol.duration_s > etf.protocol.discard_s && etf.protocol.discard_s >= 0.0,
          "etf.duration_s must exceed etf.discard_s");
    check(recall.removal >= 0.0 && recall.removal <= 1.0, "recall.removal must lie in [0, 1]");
    check(recall.trials >= 1, "recall.trials must be >= 1");
    check(recall.options.duration_s > 0.0 && recall.options.score_to_s > recall.options.score_from_s &&
              recall.options.score_from_s >= 0.0 && recall.options.settle_s >= 0.0,
          "recall windows are inconsistent");
    check(workers >= 1, "run.workers must be >= 1");
}

void load_config(std::istream& in, ExperimentConfig& config, const std::string& source)
{
    std::string line;
    std::string section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const std::string where = source + ":" + std::to_string(lineno);
        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError(where + ": malformed section header");
            section = trim(line.substr(1, line.size() - 2));
            if (!known_section(section)) throw ConfigError(where + ": unknown section '" + section + "'");
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError(where + ": expected key = value");
        if (section.empty()) throw ConfigError(where + ": key outside any section");
        assign(config, section, trim(line.substr(0, eq)), trim(line.substr(eq + 1)), where);
    }
}

void apply_override(ExperimentConfig& config, const std::string& assignment)
{
    const auto eq = assignment.find('=');
    const auto dot = assignment.find('.');
    if (eq == std::string::npos || dot == std::string::npos || dot > eq) {
        throw ConfigError("override '" + assignment + "': expected section.key=value");
    }
    assign(config, trim(assignment.substr(0, dot)), trim(assignment.substr(dot + 1, eq - dot - 1)),
           trim(assignment.substr(eq + 1)), "override");
}

void write_config(std::ostream& out, const ExperimentConfig& config)
{
    std::string section;
    for (const auto& f : fields()) {
        if (f.section != section) {
            out << (section.empty() ? "" : "\n") << '[' << f.section << "]\n";
            section = f.section;
        }
        out << f.key << " = " << f.get(config) << '\n';
    }
}

std::vector<StimulusPattern> resolve_patterns(const ExperimentConfig& config)
{
    const auto& s = config.stimulus;
    if (!s.pattern_files.empty()) {
        std::vector<StimulusPattern> out;
        for (const auto& path : s.pattern_files) {
            std::ifstream in(path);
            if (!in) throw ConfigError("cannot open pattern file '" + path + "'");
            auto name = path;
            const auto slash = name.find_last_of('/');
            if (slash != std::string::npos) name.erase(0, slash + 1);
            const auto dot = name.find('.');
            if (dot != std::string::npos) name.erase(dot);
            try {
                out.push_back(read_pattern(in, name));
            } catch (const std::runtime_error& e) {
                throw ConfigError(e.what());
            }
        }
        return out;
    }
    if (s.patterns == "disjoint") {
        return disjoint_patterns(s.n_patterns, s.cells_each, RandomStream(config.network.seeds.stimulus, "patterns"));
    }
    return builtin_patterns();
}

PresentationSchedule resolve_schedule(const ExperimentConfig& config, const std::vector<StimulusPattern>& patterns)
{
    const auto& s = config.stimulus;
    if (!s.schedule_file.empty()) {
        std::ifstream in(s.schedule_file);
        if (!in) throw ConfigError("cannot open schedule file '" + s.schedule_file + "'");
        PresentationSchedule sched;
        try {
            sched = read_schedule(in);
        } catch (const std::exception& e) {
            throw ConfigError(std::string("schedule: ") + e.what());
        }
        for (const auto& item : sched.items) {
            bool known = false;
            for (const auto& p : patterns) known = known || p.name == item.pattern;
            if (!known) throw ConfigError("schedule names unknown pattern '" + item.pattern + "'");
        }
        return sched;
    }
    std::vector<std::string> names;
    for (const auto& p : patterns) names.push_back(p.name);
    return alternating_schedule(names, s.presentations, s.duration_s, s.gap_s);
}

} // namespace spikelearn
