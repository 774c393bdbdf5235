// pnrsim: run one experiment described by a config file and write a CSV.
//
//   pnrsim outcomes --config outcomes.cfg --out outcomes.csv
//   pnrsim validate --config response.cfg

#include "config.hpp"
#include "experiment.hpp"

#include <pnr/errors.hpp>

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

namespace {

struct Flags {
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::optional<int> trajectories;
    int threads = 0;
};

void add_flags(CLI::App* sub, Flags& f, bool run_flags) {
    sub->add_option("--config", f.config, "experiment config file")->required();
    if (!run_flags) return;
    sub->add_option("--out", f.out, "output CSV (default: output.path, else stdout)");
    sub->add_option("--seed", f.seed, "base seed, overrides ensemble.seed");
    sub->add_option("--trajectories", f.trajectories, "ensemble size, overrides ensemble.trajectories");
    sub->add_option("--threads", f.threads, "worker threads (default PNR_THREADS or all cores)");
}

int report(const std::vector<pnrsim::Diagnostic>& diags) {
    for (const auto& d : diags) std::cerr << "config error: " << d.str() << '\n';
    return diags.empty() ? 0 : 2;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Cascaded-emitter photon-number-resolving detector simulations"};
    app.require_subcommand(1);
    Flags flags;
    std::vector<std::pair<CLI::App*, pnrsim::Experiment>> subs;
    for (auto e : {pnrsim::Experiment::linear, pnrsim::Experiment::outcomes, pnrsim::Experiment::correlate,
                   pnrsim::Experiment::trajectory, pnrsim::Experiment::response, pnrsim::Experiment::compare}) {
        auto* sub = app.add_subcommand(pnrsim::to_string(e), "run the " + pnrsim::to_string(e) + " experiment");
        add_flags(sub, flags, true);
        subs.emplace_back(sub, e);
    }
    auto* validate = app.add_subcommand("validate", "check a config and list its problems");
    add_flags(validate, flags, false);
    CLI11_PARSE(app, argc, argv);

    auto parsed = pnrsim::load_config(flags.config);
    if (!parsed.diagnostics.empty()) return report(parsed.diagnostics);
    auto cfg = parsed.config;

    if (validate->parsed()) {
        if (!parsed.seen.count("experiment")) return report({{0, "experiment", "missing"}});
        const auto diags = pnrsim::validate(cfg);
        for (const auto& d : diags) std::cout << d.str() << '\n';
        return diags.empty() ? 0 : 1;
    }

    for (const auto& [sub, e] : subs) {
        if (!sub->parsed()) continue;
        if (parsed.seen.count("experiment") && cfg.experiment != e)
            return report({{parsed.seen["experiment"], "experiment",
                            "config says " + pnrsim::to_string(cfg.experiment) + " but the subcommand is " +
                                pnrsim::to_string(e)}});
        cfg.experiment = e;
    }
    if (flags.seed) cfg.seed = flags.seed;
    if (flags.trajectories) cfg.trajectories = flags.trajectories;
    cfg.threads = flags.threads;
    if (!flags.out.empty()) cfg.output = flags.out;
    if (int rc = report(pnrsim::validate(cfg))) return rc;

    pnrsim::ResultTable table;
    try {
        table = pnrsim::run(cfg);
    } catch (const pnr::Error& err) {
        std::cerr << "error: " << pnrsim::to_string(cfg.experiment) << ": " << err.what() << '\n';
        return 3;
    }
    if (cfg.output.empty()) {
        pnrsim::write_csv(std::cout, table);
    } else {
        std::ofstream f(cfg.output, std::ios::binary);
        if (!f) {
            std::cerr << "error: cannot write `" << cfg.output << "`\n";
            return 4;
        }
        pnrsim::write_csv(f, table);
    }
    return 0;
}
