// spikelearn command line: one subcommand per experiment.
#include "spikelearn/characterization.hpp"
#include "spikelearn/config.hpp"
#include "spikelearn/learning.hpp"

#include <CLI11.hpp>

#include <atomic>
#include <csignal>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>

namespace fs = std::filesystem;
using namespace spikelearn;

namespace {

constexpr int exit_config = 2;
constexpr int exit_runtime = 3;

std::atomic<bool> g_stop{false};

extern "C" void on_sigint(int) { g_stop.store(true); }

struct RuntimeFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Common {
    std::string config_file;
    std::vector<std::string> overrides;
    std::string out_dir;
};

// Write-once run directory.
class RunDir {
public:
    RunDir(const std::string& requested, const std::string& command)
    {
        if (!requested.empty()) {
            path_ = requested;
            if (fs::exists(path_) && !fs::is_empty(path_)) {
                throw ConfigError("output directory '" + requested + "' exists and is not empty");
            }
        } else {
            const char* env = std::getenv("SPIKELEARN_OUT");
            const fs::path root = env && *env ? env : "runs";
            for (int n = 1;; ++n) {
                std::ostringstream name;
                name << command << '-' << std::setw(3) << std::setfill('0') << n;
                path_ = root / name.str();
                if (!fs::exists(path_)) break;
            }
        }
    }

    void create() { fs::create_directories(path_); }
    const fs::path& path() const noexcept { return path_; }

    std::ofstream open(const std::string& name) const
    {
        const fs::path p = path_ / name;
        if (fs::exists(p)) throw RuntimeFailure("refusing to overwrite " + p.string());
        fs::create_directories(p.parent_path());
        std::ofstream out(p);
        if (!out) throw RuntimeFailure("cannot write " + p.string());
        return out;
    }

private:
    fs::path path_;
};

ExperimentConfig load(const Common& c)
{
    ExperimentConfig cfg;
    if (!c.config_file.empty()) {
        std::ifstream in(c.config_file);
        if (!in) throw ConfigError("cannot open config file '" + c.config_file + "'");
        load_config(in, cfg, c.config_file);
    }
    for (const auto& o : c.overrides) apply_override(cfg, o);
    return cfg;
}

void finish_config(ExperimentConfig& cfg)
{
    cfg.recall.options.rate_on = cfg.stimulus.rate_on;
    cfg.validate();
}

void echo_config(const RunDir& dir, const ExperimentConfig& cfg)
{
    auto out = dir.open("config.ini");
    write_config(out, cfg);
}

std::vector<double> parse_list(const std::string& s, const std::string& what)
{
    std::vector<double> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw ConfigError(what + ": not a number list: '" + s + "'");
        }
    }
    if (out.empty()) throw ConfigError(what + ": empty list");
    return out;
}

std::size_t pattern_index(const std::vector<StimulusPattern>& pats, const std::string& name)
{
    for (std::size_t i = 0; i < pats.size(); ++i) {
        if (pats[i].name == name) return i;
    }
    throw ConfigError("unknown pattern '" + name + "'");
}

// --------------------------------------------------------------------------

int cmd_neuron_tf(const Common& common, const std::string& rates, const std::string& population)
{
    auto cfg = load(common);
    if (!rates.empty()) cfg.neuron_tf.rates = parse_list(rates, "--rates");
    finish_config(cfg);
    if (population != "exc" && population != "inh") throw ConfigError("--population must be exc or inh");
    const NeuronParams& np = population == "exc" ? cfg.network.exc_neuron : cfg.network.inh_neuron;
    RunDir dir(common.out_dir, "neuron-tf");
    dir.create();
    echo_config(dir, cfg);
    const PoissonDrive drive{cfg.neuron_tf.n_sources, 0.0, cfg.neuron_tf.efficacy};
    const auto curve = gain_curve(np, drive, cfg.neuron_tf.rates, cfg.neuron_tf.duration_s,
                                  RandomStream(cfg.network.seeds.stimulus, "neuron-tf"));
    auto out = dir.open("gain.csv");
    write_gain_csv(out, curve);
    std::cout << "wrote " << (dir.path() / "gain.csv").string() << " (" << curve.size() << " rows)\n";
    return 0;
}

int cmd_ltp_ltd(const Common& common)
{
    auto cfg = load(common);
    finish_config(cfg);
    RunDir dir(common.out_dir, "ltp-ltd");
    dir.create();
    echo_config(dir, cfg);
    const auto map = measure_plasticity_map(cfg.map_nu_pre, cfg.map_nu_post, cfg.network.exc_neuron, cfg.network.plastic,
                                            cfg.map_protocol, RandomStream(cfg.network.seeds.plasticity, "ltp-ltd"),
                                            cfg.workers);
    {
        auto out = dir.open("plasticity_map.csv");
        write_plasticity_csv(out, map);
    }
    const auto mono = check_map_monotonicity(map);
    auto rep = dir.open("report.txt");
    rep << "adjacent_pairs " << mono.pairs << "\nviolations " << mono.violations << "\nviolation_fraction "
        << mono.violation_fraction() << '\n';
    double max_ltd_high = 0.0;
    for (const auto& cell : map.cells) {
        if (cell.nu_post >= 80.0) max_ltd_high = std::max(max_ltd_high, cell.ltd.p);
    }
    rep << "max_p_ltd_nu_post_ge_80 " << max_ltd_high << '\n';
    std::cout << "plasticity map: " << map.cells.size() << " points, " << mono.violations << '/' << mono.pairs
              << " monotonicity violations; wrote " << dir.path().string() << '\n';
    return 0;
}

std::vector<int> parse_population(const std::string& text, const std::vector<StimulusPattern>& pats)
{
    std::vector<int> out;
    if (text.empty() || std::isalpha(static_cast<unsigned char>(text[0]))) {
        const auto labels = label_neurons(pats);
        const int p = static_cast<int>(text.empty() ? 0 : pattern_index(pats, text));
        for (int i = 0; i < grid_cells; ++i) {
            if (labels[i] == p) out.push_back(i);
        }
        return out;
    }
    for (double v : parse_list(text, "etf.population")) {
        if (v < 0 || v >= grid_cells || v != static_cast<int>(v)) {
            throw ConfigError("etf.population: neuron index out of range: " + text);
        }
        out.push_back(static_cast<int>(v));
    }
    std::sort(out.begin(), out.end());
    if (std::adjacent_find(out.begin(), out.end()) != out.end()) {
        throw ConfigError("etf.population: duplicate neuron index");
    }
    return out;
}

int cmd_etf(const Common& common, const std::string& population, const std::string& fractions)
{
    auto cfg = load(common);
    if (!population.empty()) cfg.etf.population = population;
    if (!fractions.empty()) cfg.etf.fractions = parse_list(fractions, "--fractions");
    finish_config(cfg);
    const auto pats = resolve_patterns(cfg);
    const auto members = parse_population(cfg.etf.population, pats);
    if (members.empty()) throw ConfigError("etf.population is empty");
    RunDir dir(common.out_dir, "etf");
    dir.create();
    echo_config(dir, cfg);
    const auto net = build(cfg.network);
    auto rep = dir.open("fixed_points.txt");
    rep << "# f n_stable fixed_points(rate_hz:stability:slope)\n";
    for (double f : cfg.etf.fractions) {
        const auto curve = measure_etf(cfg.network, net, members, cfg.etf.nu_in, f, cfg.etf.protocol,
                                       RandomStream(cfg.network.seeds.stimulus, "etf"), cfg.workers);
        std::ostringstream name;
        name << "etf_f" << std::fixed << std::setprecision(2) << f << ".csv";
        {
            auto out = dir.open(name.str());
            write_etf_csv(out, curve);
        }
        rep << f << ' ' << count_stable(curve.fixed_points);
        for (const auto& fp : curve.fixed_points) {
            rep << ' ' << fp.rate_hz << ':' << (fp.stability == Stability::Stable ? "stable" : "unstable") << ':'
                << fp.slope;
        }
        rep << '\n';
        std::cout << "f=" << f << ": " << count_stable(curve.fixed_points) << " stable fixed point(s)\n";
    }
    return 0;
}

int cmd_learn(const Common& common, int snapshot_every, int presentations)
{
    auto cfg = load(common);
    if (snapshot_every > 0) cfg.learning.snapshot_every = snapshot_every;
    if (presentations >= 0) cfg.stimulus.presentations = presentations;
    finish_config(cfg);
    const auto pats = resolve_patterns(cfg);
    const auto sched = resolve_schedule(cfg, pats);
    const auto labels = label_neurons(pats);
    RunDir dir(common.out_dir, "learn");
    dir.create();
    echo_config(dir, cfg);
    for (const auto& p : pats) {
        auto out = dir.open("patterns/" + p.name + ".txt");
        write_pattern(out, p);
    }
    {
        auto out = dir.open("schedule.csv");
        write_schedule(out, sched);
    }
    auto net = build(cfg.network);
    {
        auto out = dir.open("topology.csv");
        write_topology(out, net.topology);
    }
    Simulation sim(cfg.network, net.topology, net.map);
    auto events = dir.open("events.tsv");
    events << "# time_us\tpopulation\tindex\n";
    LearningHooks hooks;
    hooks.on_chunk = [&](const EventLog& chunk) { events << event_log_text(chunk) << std::flush; };
    hooks.stop = &g_stop;
    LearningOptions opt = cfg.learning;
    opt.rate_on = cfg.stimulus.rate_on;
    opt.rate_off = cfg.stimulus.rate_off;
    const auto res = run_learning(sim, pats, sched, opt, RandomStream(cfg.network.seeds.stimulus, "stimulus"), hooks);
    if (res.truncated) {
        events << "# truncated at t_us=" << Time::from_seconds(res.end_s).us << '\n';
    }
    events.close();

    std::vector<std::string> names;
    for (const auto& p : pats) names.push_back(p.name);
    for (std::size_t i = 0; i < res.snapshots.size(); ++i) {
        std::ostringstream name;
        name << "snapshots/snapshot_" << std::setw(3) << std::setfill('0') << i << ".csv";
        auto out = dir.open(name.str());
        write_snapshot(out, res.snapshots[i]);
    }
    {
        auto out = dir.open("traces.csv");
        write_traces_csv(out, res.traces);
    }
    for (std::size_t k = 0; k < sched.items.size(); ++k) {
        const double t0 = sched.items[k].offset_s() + 0.25;
        double t1 = k + 1 < sched.items.size() ? sched.items[k + 1].onset_s : sched.items[k].offset_s() + cfg.learning.tail_s;
        t1 = std::min(t1, res.end_s);
        if (t1 <= t0) continue;
        const Time w0 = Time::from_seconds(t0), w1 = Time::from_seconds(t1);
        const double thr = activity_threshold(res.log, labels, w0, w1);
        const auto img = delay_output_image(res.log, w0, w1, net.map, thr);
        std::ostringstream base;
        base << "delay_images/after_" << std::setw(3) << std::setfill('0') << k << '_' << sched.items[k].pattern;
        {
            auto out = dir.open(base.str() + ".txt");
            write_delay_image(out, img, false);
        }
        auto out = dir.open(base.str() + ".bin.txt");
        write_delay_image(out, img, true);
    }

    auto rep = dir.open("report.txt");
    rep << std::setprecision(4);
    if (res.truncated) rep << "TRUNCATED at t=" << res.end_s << " s\n";
    rep << "presentations " << sched.items.size() << "\nsimulated_s " << res.end_s << "\nspikes " << res.log.size()
        << '\n';
    auto nearest = [&](double t) {
        std::size_t best = 0;
        for (std::size_t i = 0; i < res.snapshots.size(); ++i) {
            if (std::abs(res.snapshots[i].time_s - t) < std::abs(res.snapshots[best].time_s - t)) best = i;
        }
        return best;
    };
    rep << "\n# group fractions at start / ~30 s / ~300 s / final\n";
    for (double t : {0.0, 30.0, 300.0, 1e300}) {
        if (res.snapshots.empty()) break;
        const auto i = t > 1e299 ? res.snapshots.size() - 1 : nearest(t);
        const auto g = group_fractions(res.snapshots[i], labels, names);
        rep << "t=" << res.snapshots[i].time_s;
        for (std::size_t j = 0; j < g.names.size(); ++j) rep << ' ' << g.names[j] << '=' << g.fraction[j];
        rep << '\n';
    }
    rep << "\n# hamming distance between consecutive snapshots\n";
    for (auto h : res.snapshots.size() >= 2 ? hamming_series(res.snapshots) : std::vector<std::size_t>{}) rep << h << ' ';
    const int mature = static_cast<int>(sched.items.size()) / 2;
    const auto dp = delay_persistence(res.log, labels, pats, sched, mature);
    rep << "\n\n# delay windows from presentation " << mature << "\nwindows " << dp.windows << "\npersistent "
        << dp.persistent << "\nselective " << dp.selective << '\n';
    std::cout << (res.truncated ? "interrupted; partial results in " : "wrote ") << dir.path().string() << '\n';
    return res.truncated ? 130 : 0;
}

int cmd_recall(const Common& common, double removal, const std::string& matrix, int trials, bool frozen)
{
    auto cfg = load(common);
    if (removal >= -0.5) cfg.recall.removal = removal;
    if (!matrix.empty()) cfg.recall.matrix = matrix;
    if (trials > 0) cfg.recall.trials = trials;
    if (frozen) cfg.recall.options.frozen = true;
    finish_config(cfg);
    const auto pats = resolve_patterns(cfg);
    const auto labels = label_neurons(pats);
    auto net = build(cfg.network);
    if (!cfg.recall.matrix.empty()) {
        std::ifstream in(cfg.recall.matrix);
        if (!in) throw ConfigError("cannot open matrix '" + cfg.recall.matrix + "'");
        SynapticSnapshot snap;
        try {
            snap = read_snapshot(in);
            load_snapshot(net.topology, snap);
        } catch (const std::runtime_error& e) {
            throw ConfigError(e.what());
        }
    }
    std::vector<std::size_t> which;
    if (cfg.recall.pattern.empty()) {
        for (std::size_t i = 0; i < pats.size(); ++i) which.push_back(i);
    } else {
        which.push_back(pattern_index(pats, cfg.recall.pattern));
    }
    RunDir dir(common.out_dir, "recall");
    dir.create();
    echo_config(dir, cfg);
    auto csv = dir.open("recall.csv");
    csv << "pattern,trial,removal,recall_coverage,intrusion,threshold_hz,pattern_rate_hz\n" << std::setprecision(6);
    const RandomStream base(cfg.network.seeds.stimulus, "recall");
    double cov_sum = 0.0;
    int n = 0, passed = 0;
    for (std::size_t p : which) {
        for (int t = 0; t < cfg.recall.trials; ++t) {
            Simulation sim(cfg.network, net.topology, net.map);
            const auto s = recall_test(sim, pats[p], labels, cfg.recall.removal, cfg.recall.options,
                                       base.derive(pats[p].name).derive(static_cast<std::uint64_t>(t)));
            csv << pats[p].name << ',' << t << ',' << cfg.recall.removal << ',' << s.recall_coverage << ','
                << s.intrusion << ',' << s.threshold_hz << ',' << s.pattern_rate_hz << '\n';
            cov_sum += s.recall_coverage;
            ++n;
            passed += s.recall_coverage >= 0.9 && s.intrusion <= 0.1;
        }
    }
    const double mean_cov = n ? cov_sum / n : 0.0;
    auto rep = dir.open("report.txt");
    rep << "trials " << n << "\nmean_recall_coverage " << mean_cov << "\ntrials_meeting_0.9_coverage_0.1_intrusion "
        << passed << '\n';
    if (mean_cov < 0.5) rep << "no attractor\n";
    std::cout << "recall: mean coverage " << mean_cov << ", " << passed << '/' << n << " trials complete"
              << (mean_cov < 0.5 ? " (no attractor)" : "") << '\n';
    return 0;
}

int cmd_config(const Common& common)
{
    auto cfg = load(common);
    finish_config(cfg);
    write_config(std::cout, cfg);
    return 0;
}

void add_common(CLI::App* sub, Common& c)
{
    sub->add_option("-c,--config", c.config_file, "key=value configuration file");
    sub->add_option("-s,--set", c.overrides, "override, section.key=value (repeatable)");
    sub->add_option("-o,--out", c.out_dir, "output directory (default: $SPIKELEARN_OUT/<command>-NNN)");
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Event-driven simulator of a plastic spiking attractor network"};
    app.require_subcommand(1);
    Common common;

    std::string tf_rates, tf_pop = "exc";
    auto* tf = app.add_subcommand("neuron-tf", "single-neuron gain curve");
    add_common(tf, common);
    tf->add_option("--rates", tf_rates, "comma-separated input rates (Hz)");
    tf->add_option("--population", tf_pop, "exc or inh neuron parameters");

    auto* map = app.add_subcommand("ltp-ltd", "LTP/LTD probability map");
    add_common(map, common);

    std::string etf_pop, etf_fractions;
    auto* etf = app.add_subcommand("etf", "effective transfer function and fixed points");
    add_common(etf, common);
    etf->add_option("--population", etf_pop, "pattern name or comma-separated neuron indices");
    etf->add_option("--fractions", etf_fractions, "comma-separated potentiated fractions");

    int snap_every = 0, presentations = -1;
    auto* learn = app.add_subcommand("learn", "unsupervised learning run");
    add_common(learn, common);
    learn->add_option("--snapshot-every", snap_every, "presentations of the same stimulus between snapshots");
    learn->add_option("--presentations", presentations, "number of stimulus presentations");

    double removal = -1.0;
    std::string matrix;
    int trials = 0;
    bool frozen = false;
    auto* recall = app.add_subcommand("recall", "pattern completion from a degraded cue");
    add_common(recall, common);
    recall->add_option("--removal", removal, "fraction of active cells removed from the cue");
    recall->add_option("--matrix", matrix, "synaptic snapshot to load");
    recall->add_option("--trials", trials, "trials per pattern");
    recall->add_flag("--frozen", frozen, "freeze plasticity during the probe");

    auto* show = app.add_subcommand("config", "print the effective configuration");
    add_common(show, common);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return exit_config;
    }

    std::signal(SIGINT, on_sigint);
    try {
        if (*tf) return cmd_neuron_tf(common, tf_rates, tf_pop);
        if (*map) return cmd_ltp_ltd(common);
        if (*etf) return cmd_etf(common, etf_pop, etf_fractions);
        if (*learn) return cmd_learn(common, snap_every, presentations);
        if (*recall) {
            if (removal != -1.0 && !(removal >= 0.0 && removal <= 1.0)) {
                throw ConfigError("--removal must lie in [0, 1]");
            }
            return cmd_recall(common, removal, matrix, trials, frozen);
        }
        if (*show) return cmd_config(common);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return exit_config;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_runtime;
    }
    return 0;
}
