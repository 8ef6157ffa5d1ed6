// Command-line harness: single runs, the two parameter sweeps and the
// closed-form vs Monte Carlo check of the success probability.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "ehrx/experiment.hpp"

namespace {

struct Overrides {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::uint64_t> horizon;
    std::optional<std::uint64_t> warmup;
    std::optional<std::uint64_t> seeds;
    std::optional<unsigned> jobs;
    std::optional<double> tolerance;
    std::optional<std::uint64_t> samples;
    std::optional<std::size_t> bins;
    std::optional<std::string> policy;
    std::string out;
    bool fast_ps = false;
};

void add_common(CLI::App* cmd, Overrides& o) {
    cmd->add_option("--config", o.config_path, "JSON experiment config (defaults built in)");
    cmd->add_option("--seed", o.seed, "master seed");
    cmd->add_option("--horizon", o.horizon, "slots per run");
    cmd->add_option("--warmup", o.warmup, "slots excluded from headline metrics");
    cmd->add_option("--seeds", o.seeds, "replicates per point");
    cmd->add_option("--jobs", o.jobs, "parallel runs")->check(CLI::PositiveNumber);
    cmd->add_option("--out", o.out, "CSV destination (stdout when omitted)");
    cmd->add_flag("--fast-ps", o.fast_ps, "interpolate P_s on a 1e4-point grid");
}

ehrx::ExperimentConfig resolve(const Overrides& o) {
    auto cfg = o.config_path.empty() ? ehrx::ExperimentConfig{} : ehrx::load_config(o.config_path);
    if (o.seed) cfg.run.master_seed = *o.seed;
    if (o.horizon) cfg.run.horizon = *o.horizon;
    if (o.warmup) cfg.run.warmup = *o.warmup;
    if (o.seeds) cfg.run.seeds = *o.seeds;
    if (o.jobs) cfg.run.jobs = *o.jobs;
    if (o.tolerance) cfg.lemma.tolerance = *o.tolerance;
    if (o.samples) cfg.lemma.n_samples = *o.samples;
    if (o.bins) {
        cfg.lemma.bins = *o.bins;
        cfg.lemma.bin_edges.clear();
    }
    if (o.policy) {
        try {
            cfg.run.policy = ehrx::parse_policy(*o.policy);
        } catch (const std::invalid_argument& e) {
            throw ehrx::ConfigError(e.what());
        }
    }
    if (o.fast_ps) cfg.run.fast_ps = true;
    if (!o.out.empty()) cfg.output_path = o.out;
    cfg.validate();
    return cfg;
}

// Writes through `emit` to the configured path, or stdout. The file is opened
// before `compute` so an unwritable path fails fast.
template <class Compute, class Emit>
void with_output(const ehrx::ExperimentConfig& cfg, Compute compute, Emit emit) {
    if (cfg.output_path.empty()) {
        auto result = compute();
        emit(std::cout, result);
        std::cout.flush();
        return;
    }
    auto file = ehrx::open_output(cfg.output_path);
    auto result = compute();
    emit(file, result);
    file.close();
    if (!file) throw ehrx::IoError("failed writing '" + cfg.output_path + "'");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Energy-harvesting receiver simulator for slotted random-access channels"};
    app.require_subcommand(1);

    Overrides o;
    auto* run_cmd = app.add_subcommand("run", "simulate one policy for `seeds` replicates");
    add_common(run_cmd, o);
    run_cmd->add_option("--policy", o.policy, "lyapunov | genie | greedy | always_harvest");

    auto* sweep_v_cmd = app.add_subcommand("sweep-v", "throughput versus V for each decode-cost slope c");
    add_common(sweep_v_cmd, o);
    sweep_v_cmd->add_option("--policy", o.policy, "lyapunov | genie | greedy | always_harvest");

    auto* sweep_q_cmd = app.add_subcommand("sweep-q", "throughput versus common access probability q");
    add_common(sweep_q_cmd, o);
    sweep_q_cmd->add_option("--policy", o.policy, "lyapunov | genie | greedy | always_harvest");

    auto* lemma_cmd = app.add_subcommand("validate-lemma", "closed-form P_s against binned Monte Carlo");
    add_common(lemma_cmd, o);
    lemma_cmd->add_option("--tolerance", o.tolerance, "absolute tolerance on checked bins");
    lemma_cmd->add_option("--samples", o.samples, "non-idle slots to sample");
    lemma_cmd->add_option("--bins", o.bins, "equal-width bins");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    try {
        const auto cfg = resolve(o);
        if (run_cmd->parsed()) {
            with_output(cfg, [&] { return ehrx::run_replicates(cfg); },
                        [&](std::ostream& out, const auto& runs) { ehrx::write_run_csv(out, cfg, runs); });
        } else if (sweep_v_cmd->parsed()) {
            with_output(cfg, [&] { return ehrx::sweep_v(cfg); },
                        [&](std::ostream& out, const auto& res) { ehrx::write_sweep_v_csv(out, cfg, res); });
        } else if (sweep_q_cmd->parsed()) {
            with_output(cfg, [&] { return ehrx::sweep_q(cfg); },
                        [&](std::ostream& out, const auto& res) {
                            ehrx::write_sweep_q_csv(out, cfg, res);
                            for (const auto& [c, q] : res.argmax)
                                std::cerr << "argmax q for c=" << ehrx::format_double(c) << ": "
                                          << ehrx::format_double(q) << '\n';
                        });
        } else if (lemma_cmd->parsed()) {
            bool pass = true;
            with_output(cfg, [&] { return ehrx::validate_lemma(cfg); },
                        [&](std::ostream& out, const auto& rep) {
                            ehrx::write_lemma_csv(out, cfg, rep);
                            pass = rep.pass;
                            std::cerr << "validate-lemma: " << rep.checked_bins << " bins checked, max |dev| "
                                      << ehrx::format_double(rep.max_abs_dev) << ", tolerance "
                                      << ehrx::format_double(cfg.lemma.tolerance) << ": "
                                      << (rep.pass ? "pass" : "FAIL") << '\n';
                            for (const auto& r : rep.rows)
                                if (!r.pass)
                                    std::cerr << "  bin [" << ehrx::format_double(r.bin.lo) << ", "
                                              << ehrx::format_double(r.bin.hi) << ") n=" << r.bin.count
                                              << " |dev|=" << ehrx::format_double(*r.abs_dev) << '\n';
                        });
            return pass ? 0 : 1;
        }
    } catch (const ehrx::IoError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
