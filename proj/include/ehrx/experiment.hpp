#pragma once

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "ehrx/channel.hpp"
#include "ehrx/collision_stats.hpp"
#include "ehrx/controller.hpp"
#include "ehrx/policies.hpp"
#include "ehrx/random.hpp"
#include "ehrx/simulation.hpp"

namespace ehrx {

inline constexpr int kCsvSchemaVersion = 1;

struct ConfigError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct RunControls {
    std::uint64_t horizon = 1'000'000;
    std::uint64_t warmup = 10'000;
    std::uint64_t seeds = 10;
    std::uint64_t master_seed = 1;
    PolicyKind policy = PolicyKind::lyapunov;
    bool fast_ps = false;
    unsigned jobs = 1;  // does not influence any result
};

/// Axis values. sweep-v walks v_values, sweep-q walks q_values (one common q
/// for every transmitter); both repeat the walk for each c in c_values.
struct SweepSpec {
    std::vector<double> v_values{25, 50, 100, 200, 400};
    std::vector<double> q_values = default_q_grid();
    std::vector<double> c_values{0.5, 1, 2};

    static std::vector<double> default_q_grid() {
        std::vector<double> q;
        for (int k = 1; k <= 20; ++k) q.push_back(0.02 * k);
        return q;
    }
};

struct LemmaSpec {
    std::uint64_t n_samples = 10'000'000;
    std::size_t bins = 25;
    std::optional<double> gamma_hi;  // default: 0.999 quantile of a pilot sample
    std::vector<double> bin_edges;   // overrides bins/gamma_hi when non-empty
    std::uint64_t min_count = 1000;
    double tolerance = 0.02;
};

struct ExperimentConfig {
    ChannelParams channel = ChannelParams::uniform(10, 1.0, 0.1);
    EnergyConfig energy;
    bool gamma_max_auto = true;  // gamma_max follows channel.default_gamma_max()
    RunControls run;
    SweepSpec sweep;
    LemmaSpec lemma;
    std::string output_path;

    /// Energy constants with gamma_max resolved.
    EnergyConfig resolved_energy() const {
        EnergyConfig e = energy;
        if (gamma_max_auto) e.gamma_max = channel.default_gamma_max();
        return e;
    }

    void validate() const;
};

namespace detail {

inline void require_increasing(const std::vector<double>& v, const char* name) {
    if (v.empty()) throw ConfigError(std::string("config: ") + name + " must not be empty");
    for (std::size_t i = 1; i < v.size(); ++i)
        if (!(v[i] > v[i - 1])) throw ConfigError(std::string("config: ") + name + " must be strictly increasing");
}

inline void reject_unknown_keys(const nlohmann::json& j, const char* section,
                                std::initializer_list<const char*> known) {
    if (!j.is_object()) throw ConfigError(std::string("config: section '") + section + "' must be an object");
    for (const auto& [key, _] : j.items()) {
        const bool ok = std::any_of(known.begin(), known.end(), [&](const char* k) { return key == k; });
        if (!ok) throw ConfigError(std::string("config: unknown key '") + key + "' in '" + section + "'");
    }
}

template <class T>
void read_if(const nlohmann::json& j, const char* key, T& out) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config: bad value for '") + key + "': " + e.what());
    }
}

/// A per-transmitter list given either as an array or as one scalar.
inline std::vector<double> read_per_transmitter(const nlohmann::json& j, const char* key, std::size_t n) {
    const auto& v = j.at(key);
    if (v.is_number()) return std::vector<double>(n, v.get<double>());
    if (!v.is_array()) throw ConfigError(std::string("config: '") + key + "' must be a number or an array");
    auto out = v.get<std::vector<double>>();
    if (out.size() != n) throw ConfigError(std::string("config: '") + key + "' length differs from n");
    return out;
}

}  // namespace detail

inline void ExperimentConfig::validate() const {
    try {
        channel.validate();
        resolved_energy().validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    if (run.horizon < 1) throw ConfigError("config: horizon must be >= 1");
    if (run.warmup >= run.horizon) throw ConfigError("config: warmup must be smaller than horizon");
    if (run.seeds < 1) throw ConfigError("config: seeds must be >= 1");
    if (run.jobs < 1) throw ConfigError("config: jobs must be >= 1");
    detail::require_increasing(sweep.v_values, "sweep.v_values");
    detail::require_increasing(sweep.q_values, "sweep.q_values");
    detail::require_increasing(sweep.c_values, "sweep.c_values");
    for (double v : sweep.v_values)
        if (!(v > 0.0)) throw ConfigError("config: sweep.v_values must be positive");
    for (double q : sweep.q_values)
        if (!(q >= 0.0 && q <= 1.0)) throw ConfigError("config: sweep.q_values must lie in [0,1]");
    for (double c : sweep.c_values)
        if (!(c >= 0.0)) throw ConfigError("config: sweep.c_values must be non-negative");
    if (lemma.n_samples < 100'000) throw ConfigError("config: lemma.n_samples must be >= 1e5");
    if (lemma.bin_edges.empty()) {
        if (lemma.bins < 1) throw ConfigError("config: lemma.bins must be >= 1");
        if (lemma.gamma_hi && !(*lemma.gamma_hi > 0.0)) throw ConfigError("config: lemma.gamma_hi must be positive");
    } else {
        if (lemma.bin_edges.size() < 2) throw ConfigError("config: lemma.bin_edges needs at least two edges");
        detail::require_increasing(lemma.bin_edges, "lemma.bin_edges");
        if (lemma.bin_edges.front() < 0.0) throw ConfigError("config: lemma.bin_edges must be non-negative");
    }
    if (!(lemma.tolerance > 0.0)) throw ConfigError("config: lemma.tolerance must be positive");
}

/// Builds a config from JSON, starting from the built-in defaults (ten
/// transmitters, mu = 1, q = 0.1, P = 1, tau = 0.01, phi_se = phi_pi = 0.01,
/// eta = 0.7, phi_de = log2(1 + gamma) + 0.5, V = 200).
inline ExperimentConfig config_from_json(const nlohmann::json& root) {
    using detail::read_if;
    ExperimentConfig cfg;
    detail::reject_unknown_keys(root, "root", {"channel", "energy", "run", "sweep", "lemma", "output_path"});

    if (root.contains("channel")) {
        const auto& j = root.at("channel");
        detail::reject_unknown_keys(j, "channel", {"n", "means", "access_probs", "power", "gain_quantile_eps"});
        std::size_t n = cfg.channel.size();
        if (j.contains("n")) {
            read_if(j, "n", n);
        } else if (j.contains("means") && j.at("means").is_array()) {
            n = j.at("means").size();
        } else if (j.contains("access_probs") && j.at("access_probs").is_array()) {
            n = j.at("access_probs").size();
        }
        if (n < 1 || n > kMaxTransmitters)
            throw ConfigError("config: channel.n must lie in [1, " + std::to_string(kMaxTransmitters) + "]");
        const double mean0 = cfg.channel.means.front();
        const double q0 = cfg.channel.access_probs.front();
        cfg.channel.means = j.contains("means") ? detail::read_per_transmitter(j, "means", n)
                                                : std::vector<double>(n, mean0);
        cfg.channel.access_probs = j.contains("access_probs") ? detail::read_per_transmitter(j, "access_probs", n)
                                                              : std::vector<double>(n, q0);
        read_if(j, "power", cfg.channel.power);
        read_if(j, "gain_quantile_eps", cfg.channel.gain_quantile_eps);
    }

    if (root.contains("energy")) {
        const auto& j = root.at("energy");
        detail::reject_unknown_keys(j, "energy", {"tau", "eta", "phi_se", "phi_pi", "decode_cost_c",
                                                  "decode_cost_offset", "gamma_max", "v", "log_base"});
        auto& e = cfg.energy;
        read_if(j, "tau", e.tau);
        read_if(j, "eta", e.eta);
        read_if(j, "phi_se", e.phi_se);
        read_if(j, "phi_pi", e.phi_pi);
        read_if(j, "decode_cost_c", e.decode_cost_c);
        read_if(j, "decode_cost_offset", e.decode_cost_offset);
        read_if(j, "v", e.v);
        if (j.contains("gamma_max")) {
            const auto& g = j.at("gamma_max");
            if (g.is_string() && g.get<std::string>() == "auto") {
                cfg.gamma_max_auto = true;
            } else if (g.is_number()) {
                cfg.gamma_max_auto = false;
                e.gamma_max = g.get<double>();
            } else {
                throw ConfigError("config: energy.gamma_max must be a number or \"auto\"");
            }
        }
        if (j.contains("log_base")) {
            const auto base = j.at("log_base").is_string() ? j.at("log_base").get<std::string>()
                                                           : j.at("log_base").dump();
            if (base == "2") e.log_base = LogBase::two;
            else if (base == "e") e.log_base = LogBase::natural;
            else throw ConfigError("config: energy.log_base must be \"2\" or \"e\"");
        }
    }

    if (root.contains("run")) {
        const auto& j = root.at("run");
        detail::reject_unknown_keys(j, "run", {"horizon", "warmup", "seeds", "master_seed", "policy", "fast_ps", "jobs"});
        read_if(j, "horizon", cfg.run.horizon);
        read_if(j, "warmup", cfg.run.warmup);
        read_if(j, "seeds", cfg.run.seeds);
        read_if(j, "master_seed", cfg.run.master_seed);
        read_if(j, "fast_ps", cfg.run.fast_ps);
        read_if(j, "jobs", cfg.run.jobs);
        if (j.contains("policy")) {
            try {
                cfg.run.policy = parse_policy(j.at("policy").get<std::string>());
            } catch (const std::exception& e) {
                throw ConfigError(std::string("config: run.policy: ") + e.what());
            }
        }
    }

    if (root.contains("sweep")) {
        const auto& j = root.at("sweep");
        detail::reject_unknown_keys(j, "sweep", {"v_values", "q_values", "c_values"});
        read_if(j, "v_values", cfg.sweep.v_values);
        read_if(j, "q_values", cfg.sweep.q_values);
        read_if(j, "c_values", cfg.sweep.c_values);
    }

    if (root.contains("lemma")) {
        const auto& j = root.at("lemma");
        detail::reject_unknown_keys(j, "lemma", {"n_samples", "bins", "gamma_hi", "bin_edges", "min_count", "tolerance"});
        read_if(j, "n_samples", cfg.lemma.n_samples);
        read_if(j, "bins", cfg.lemma.bins);
        read_if(j, "bin_edges", cfg.lemma.bin_edges);
        read_if(j, "min_count", cfg.lemma.min_count);
        read_if(j, "tolerance", cfg.lemma.tolerance);
        if (j.contains("gamma_hi")) {
            const auto& g = j.at("gamma_hi");
            if (g.is_number()) cfg.lemma.gamma_hi = g.get<double>();
            else if (!(g.is_string() && g.get<std::string>() == "auto"))
                throw ConfigError("config: lemma.gamma_hi must be a number or \"auto\"");
        }
    }

    read_if(root, "output_path", cfg.output_path);
    return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file '" + path + "'");
    nlohmann::json root;
    try {
        root = nlohmann::json::parse(in, nullptr, true, /*ignore_comments=*/true);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("config: " + path + ": " + e.what());
    }
    return config_from_json(root);
}

/// Fully resolved config. Execution-only settings (jobs, output path) are
/// left out so that they never change emitted files.
inline nlohmann::json to_json(const ExperimentConfig& cfg) {
    const auto e = cfg.resolved_energy();
    nlohmann::json j;
    j["channel"] = {{"n", cfg.channel.size()},
                    {"means", cfg.channel.means},
                    {"access_probs", cfg.channel.access_probs},
                    {"power", cfg.channel.power},
                    {"gain_quantile_eps", cfg.channel.gain_quantile_eps}};
    j["energy"] = {{"tau", e.tau},
                   {"eta", e.eta},
                   {"phi_se", e.phi_se},
                   {"phi_pi", e.phi_pi},
                   {"decode_cost_c", e.decode_cost_c},
                   {"decode_cost_offset", e.decode_cost_offset},
                   {"gamma_max", e.gamma_max},
                   {"v", e.v},
                   {"log_base", e.log_base == LogBase::two ? "2" : "e"}};
    j["run"] = {{"horizon", cfg.run.horizon},
                {"warmup", cfg.run.warmup},
                {"seeds", cfg.run.seeds},
                {"master_seed", cfg.run.master_seed},
                {"policy", std::string(to_string(cfg.run.policy))},
                {"fast_ps", cfg.run.fast_ps}};
    j["sweep"] = {{"v_values", cfg.sweep.v_values}, {"q_values", cfg.sweep.q_values}, {"c_values", cfg.sweep.c_values}};
    nlohmann::json lemma = {{"n_samples", cfg.lemma.n_samples},
                            {"bins", cfg.lemma.bins},
                            {"min_count", cfg.lemma.min_count},
                            {"tolerance", cfg.lemma.tolerance},
                            {"bin_edges", cfg.lemma.bin_edges}};
    if (cfg.lemma.gamma_hi) lemma["gamma_hi"] = *cfg.lemma.gamma_hi;
    else lemma["gamma_hi"] = "auto";
    j["lemma"] = lemma;
    return j;
}

/// Runs fn(0..count-1) on up to `jobs` threads. Callers store results by
/// index, so completion order never shows in the output.
inline void parallel_for(std::size_t count, unsigned jobs, const std::function<void(std::size_t)>& fn) {
    const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(std::max(1U, jobs), count));
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (std::size_t i = next++; i < count; i = next++) fn(i);
            } catch (...) {
                errors[w] = std::current_exception();
                next = count;
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

struct SeedSummary {
    double mean = 0.0;
    double std_error = 0.0;
};

/// Sample mean and standard error (n - 1 denominator; zero for one value).
inline SeedSummary summarize(const std::vector<double>& values) {
    SeedSummary s;
    if (values.empty()) return s;
    double sum = 0.0;
    for (double v : values) sum += v;
    s.mean = sum / static_cast<double>(values.size());
    if (values.size() > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - s.mean) * (v - s.mean);
        s.std_error = std::sqrt(ss / static_cast<double>(values.size() - 1) / static_cast<double>(values.size()));
    }
    return s;
}

struct SweepRow {
    double c = 0.0;
    double x = 0.0;  // V for sweep-v, q for sweep-q
    double mean = 0.0;
    double std_error = 0.0;
    double b_over_v = 0.0;
    std::vector<double> per_seed;  // throughput of replicate i, seed derive_seed(master, i)
};

struct SweepResult {
    std::vector<SweepRow> rows;                      // sorted by (c, x)
    std::vector<std::pair<double, double>> argmax;  // (c, x maximising mean throughput), sweep-q only
};

namespace detail {

enum class SweepAxis { v, q };

inline SweepResult run_sweep(const ExperimentConfig& cfg, SweepAxis axis) {
    cfg.validate();
    const auto& xs = axis == SweepAxis::v ? cfg.sweep.v_values : cfg.sweep.q_values;
    const auto& cs = cfg.sweep.c_values;
    const std::size_t seeds = cfg.run.seeds;

    SweepResult result;
    result.rows.resize(cs.size() * xs.size());
    for (std::size_t ci = 0; ci < cs.size(); ++ci)
        for (std::size_t xi = 0; xi < xs.size(); ++xi) {
            auto& row = result.rows[ci * xs.size() + xi];
            row.c = cs[ci];
            row.x = xs[xi];
            row.per_seed.assign(seeds, 0.0);
        }

    parallel_for(result.rows.size() * seeds, cfg.run.jobs, [&](std::size_t task) {
        auto& row = result.rows[task / seeds];
        const std::size_t replicate = task % seeds;
        ChannelParams channel = cfg.channel;
        EnergyConfig energy = cfg.energy;
        energy.decode_cost_c = row.c;
        if (axis == SweepAxis::v) energy.v = row.x;
        else std::fill(channel.access_probs.begin(), channel.access_probs.end(), row.x);
        if (cfg.gamma_max_auto) energy.gamma_max = channel.default_gamma_max();
        const auto m = run(cfg.run.policy, channel, energy, cfg.run.horizon,
                           derive_seed(cfg.run.master_seed, replicate), cfg.run.warmup, cfg.run.fast_ps);
        row.per_seed[replicate] = m.throughput();
        if (replicate == 0) row.b_over_v = m.theorem_bound;
    });

    for (auto& row : result.rows) {
        const auto s = summarize(row.per_seed);
        row.mean = s.mean;
        row.std_error = s.std_error;
    }
    if (axis == SweepAxis::q) {
        for (std::size_t ci = 0; ci < cs.size(); ++ci) {
            const SweepRow* best = &result.rows[ci * xs.size()];
            for (std::size_t xi = 1; xi < xs.size(); ++xi) {
                const auto& r = result.rows[ci * xs.size() + xi];
                if (r.mean > best->mean) best = &r;
            }
            result.argmax.emplace_back(cs[ci], best->x);
        }
    }
    return result;
}

}  // namespace detail

/// Mean throughput over `seeds` replicates for every (c, V) pair.
inline SweepResult sweep_v(const ExperimentConfig& cfg) { return detail::run_sweep(cfg, detail::SweepAxis::v); }

/// Mean throughput over `seeds` replicates for every (c, q) pair at fixed V,
/// plus the maximising q for each c.
inline SweepResult sweep_q(const ExperimentConfig& cfg) { return detail::run_sweep(cfg, detail::SweepAxis::q); }

/// One run per replicate with the config's policy and energy constants.
inline std::vector<SimMetrics> run_replicates(const ExperimentConfig& cfg) {
    cfg.validate();
    std::vector<SimMetrics> out(cfg.run.seeds);
    const auto energy = cfg.resolved_energy();
    parallel_for(out.size(), cfg.run.jobs, [&](std::size_t i) {
        out[i] = run(cfg.run.policy, cfg.channel, energy, cfg.run.horizon, derive_seed(cfg.run.master_seed, i),
                     cfg.run.warmup, cfg.run.fast_ps);
    });
    return out;
}

struct LemmaBinRow {
    BinEstimate bin;
    double closed_form = 0.0;  // success_prob at the bin midpoint
    bool checked = false;      // count >= min_count
    std::optional<double> abs_dev;
    bool pass = true;
};

struct LemmaReport {
    std::vector<LemmaBinRow> rows;
    double max_abs_dev = 0.0;  // over checked bins
    std::size_t checked_bins = 0;
    bool pass = true;
};

/// Run index reserved for the pilot sample that sets the default bin range.
inline constexpr std::uint64_t kPilotRunIndex = 0xB1B1B1B1ULL;

/// Bin edges for validate-lemma: explicit edges, or `bins` equal bins over
/// [0, gamma_hi] with gamma_hi defaulting to the 0.999 quantile of 1e5
/// pilot non-idle slots.
inline std::vector<double> lemma_bin_edges(const ExperimentConfig& cfg) {
    if (!cfg.lemma.bin_edges.empty()) return cfg.lemma.bin_edges;
    double hi = 0.0;
    if (cfg.lemma.gamma_hi) {
        hi = *cfg.lemma.gamma_hi;
    } else {
        Engine rng(derive_seed(cfg.run.master_seed, kPilotRunIndex));
        const double gmax = cfg.channel.default_gamma_max();
        std::vector<double> pilot;
        pilot.reserve(100'000);
        while (pilot.size() < 100'000) {
            const auto slot = sample_slot(cfg.channel, gmax, rng);
            if (!slot.idle()) pilot.push_back(slot.gamma);
        }
        const auto k = static_cast<std::size_t>(0.999 * static_cast<double>(pilot.size()));
        std::nth_element(pilot.begin(), pilot.begin() + static_cast<std::ptrdiff_t>(k), pilot.end());
        hi = pilot[k];
    }
    std::vector<double> edges(cfg.lemma.bins + 1);
    for (std::size_t b = 0; b <= cfg.lemma.bins; ++b)
        edges[b] = hi * static_cast<double>(b) / static_cast<double>(cfg.lemma.bins);
    return edges;
}

/// Compares the closed-form success probability at bin midpoints with the
/// binned Monte Carlo estimate. Bins with at least min_count samples are
/// checked against the absolute tolerance.
inline LemmaReport validate_lemma(const ExperimentConfig& cfg) {
    cfg.validate();
    if (std::all_of(cfg.channel.access_probs.begin(), cfg.channel.access_probs.end(),
                    [](double q) { return q == 0.0; }))
        throw ConfigError("config: validate-lemma needs at least one positive access probability");
    const auto edges = lemma_bin_edges(cfg);
    Engine rng(derive_seed(cfg.run.master_seed, 0));
    const auto bins = estimate_success_prob_mc(cfg.channel, edges, cfg.lemma.n_samples, rng);
    const SubsetDensityTable table(cfg.channel);

    LemmaReport report;
    for (const auto& bin : bins) {
        LemmaBinRow row;
        row.bin = bin;
        row.closed_form = table.success_prob(bin.midpoint());
        if (const auto est = bin.estimate()) row.abs_dev = std::abs(*est - row.closed_form);
        row.checked = bin.count >= cfg.lemma.min_count;
        if (row.checked) {
            ++report.checked_bins;
            report.max_abs_dev = std::max(report.max_abs_dev, *row.abs_dev);
            row.pass = *row.abs_dev <= cfg.lemma.tolerance;
            report.pass = report.pass && row.pass;
        }
        report.rows.push_back(row);
    }
    return report;
}

// --- CSV output -------------------------------------------------------------

/// Shortest round-trip decimal form.
inline std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

inline void write_csv_header(std::ostream& out, const char* kind, const ExperimentConfig& cfg) {
    out << "# ehrx-csv schema=" << kCsvSchemaVersion << " kind=" << kind << " config=" << to_json(cfg).dump()
        << '\n';
}

inline void write_sweep_v_csv(std::ostream& out, const ExperimentConfig& cfg, const SweepResult& res) {
    write_csv_header(out, "sweep-v", cfg);
    out << "c,V,throughput_mean,throughput_stderr,B_over_V\n";
    for (const auto& r : res.rows)
        out << format_double(r.c) << ',' << format_double(r.x) << ',' << format_double(r.mean) << ','
            << format_double(r.std_error) << ',' << format_double(r.b_over_v) << '\n';
}

inline void write_sweep_q_csv(std::ostream& out, const ExperimentConfig& cfg, const SweepResult& res) {
    write_csv_header(out, "sweep-q", cfg);
    out << "c,q,throughput_mean,throughput_stderr\n";
    for (const auto& r : res.rows)
        out << format_double(r.c) << ',' << format_double(r.x) << ',' << format_double(r.mean) << ','
            << format_double(r.std_error) << '\n';
    for (const auto& [c, q] : res.argmax) out << "# argmax c=" << format_double(c) << " q=" << format_double(q) << '\n';
}

inline void write_run_csv(std::ostream& out, const ExperimentConfig& cfg, const std::vector<SimMetrics>& runs) {
    write_csv_header(out, "run", cfg);
    out << "replicate,seed,policy,horizon,warmup,throughput,throughput_eq1,throughput_full,decode_count,"
           "harvest_count,idle_count,collision_count,wasted_decodes,energy_min,energy_max,energy_mean,"
           "violations,battery_bound_breaches,low_energy_decodes,theta,gamma_max,B_over_V\n";
    for (std::size_t i = 0; i < runs.size(); ++i) {
        const auto& m = runs[i];
        const auto& w = m.measured;
        out << i << ',' << m.seed << ',' << to_string(m.policy) << ',' << m.horizon << ',' << m.warmup << ','
            << format_double(w.throughput) << ',' << format_double(w.throughput_eq1) << ','
            << format_double(m.full.throughput) << ',' << w.decode_count << ',' << w.harvest_count << ','
            << w.idle_count << ',' << w.collision_count << ',' << w.wasted_decodes << ','
            << format_double(w.energy_min) << ',' << format_double(w.energy_max) << ','
            << format_double(w.energy_mean) << ',' << m.violations << ',' << m.battery_bound_breaches << ','
            << m.low_energy_decodes << ',' << format_double(m.theta) << ',' << format_double(m.gamma_max) << ','
            << format_double(m.theorem_bound) << '\n';
    }
}

inline void write_lemma_csv(std::ostream& out, const ExperimentConfig& cfg, const LemmaReport& rep) {
    write_csv_header(out, "validate-lemma", cfg);
    out << "bin_lo,bin_hi,midpoint,count,empirical,closed_form,abs_dev,checked,pass\n";
    for (const auto& r : rep.rows) {
        const auto est = r.bin.estimate();
        out << format_double(r.bin.lo) << ',' << format_double(r.bin.hi) << ',' << format_double(r.bin.midpoint())
            << ',' << r.bin.count << ',' << (est ? format_double(*est) : "") << ',' << format_double(r.closed_form)
            << ',' << (r.abs_dev ? format_double(*r.abs_dev) : "") << ',' << (r.checked ? 1 : 0) << ','
            << (r.pass ? 1 : 0) << '\n';
    }
    out << "# max_abs_dev=" << format_double(rep.max_abs_dev) << " checked_bins=" << rep.checked_bins
        << " tolerance=" << format_double(cfg.lemma.tolerance) << " result=" << (rep.pass ? "pass" : "fail") << '\n';
}

/// Opens `path` for writing; failures surface before any simulation runs.
inline std::ofstream open_output(const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open output file '" + path + "' for writing");
    return out;
}

}  // namespace ehrx
