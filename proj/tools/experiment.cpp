#include "experiment.hpp"

#include <pnr/conventional.hpp>
#include <pnr/linear_model.hpp>
#include <pnr/nonlinear_model.hpp>
#include <pnr/slh.hpp>
#include <pnr/trajectory.hpp>

#include <charconv>
#include <cmath>
#include <cstdio>
#include <numeric>

namespace pnrsim {

namespace {

using pnr::pulses::PulseSpec;

PulseSpec spec_at(const ExperimentConfig& c, double delta_gamma, int n_photons) {
    PulseSpec s = c.pulse;
    s.delta = delta_gamma; // gamma_g = 1
    s.n_photons = n_photons;
    s.separation = c.separation_over_delta * s.delta;
    return s;
}

std::vector<int> outcome_list(const ExperimentConfig& c) {
    if (!c.outcomes.empty()) return c.outcomes;
    std::vector<int> js(c.pulse.n_photons + 1);
    std::iota(js.begin(), js.end(), 0);
    return js;
}

void run_linear(const ExperimentConfig& c, ResultTable& t) {
    for (double dg : c.delta_gamma)
        for (int n : c.n_photons) {
            pnr::linear_model::LinearConfig lc;
            lc.delta_gamma = dg;
            lc.detuning = c.pulse.detuning;
            lc.n_emitters = c.n_emitters;
            t.add_row({dg, long(n), pnr::linear_model::avg_error(n, lc)});
        }
}

void run_outcomes(const ExperimentConfig& c, ResultTable& t) {
    for (double dg : c.delta_gamma) {
        const auto spec = spec_at(c, dg, c.pulse.n_photons);
        for (int j : outcome_list(c))
            t.add_row({dg, long(spec.n_photons), long(j), pnr::nonlinear_model::p_outcome(spec, j)});
    }
}

void run_correlate(const ExperimentConfig& c, ResultTable& t) {
    const std::vector<int> js = c.outcomes.empty() ? std::vector<int>{0} : c.outcomes;
    for (double dg : c.delta_gamma) {
        const auto spec = spec_at(c, dg, c.pulse.n_photons);
        const auto centers = pnr::pulses::pulse_centers(spec);
        const double mid = 0.5 * (centers.front() + centers.back());
        const double hw = c.correlate_half_width * spec.delta;
        const pnr::numerics::TimeGrid grid(mid - hw, mid + hw, c.correlate_points);
        for (int j : js) {
            const auto g = pnr::nonlinear_model::sample_G2(spec, j, grid);
            for (int a = 0; a < grid.n_points(); ++a)
                for (int b = 0; b < grid.n_points(); ++b)
                    t.add_row({dg, long(spec.n_photons), long(j), grid.at(a), grid.at(b), g(a, b)});
        }
    }
}

pnr::numerics::TimeGrid trajectory_grid(const ExperimentConfig& c, const PulseSpec& spec) {
    auto grid = pnr::trajectory::default_grid(spec);
    if (c.max_dt > 0.0 && grid.dt() > c.max_dt)
        grid = pnr::numerics::TimeGrid::with_max_step(grid.t_start(), grid.t_end(), c.max_dt);
    return grid;
}

void run_trajectory(const ExperimentConfig& c, ResultTable& t) {
    const int m = c.ensemble_size();
    std::uint64_t seed = *c.seed;
    for (double dg : c.delta_gamma) {
        const auto spec = spec_at(c, dg, c.pulse.n_photons);
        const auto net = pnr::slh::full_network(spec, 1, 1.0);
        const auto grid = trajectory_grid(c, spec);
        const pnr::trajectory::Propagator prop(net, grid);
        const auto ens = pnr::trajectory::run_ensemble(prop, m, seed, c.threads);
        seed += static_cast<std::uint64_t>(m);
        const auto est = pnr::trajectory::estimate_outcomes(ens, spec.n_photons, grid.dt());
        for (int j : outcome_list(c))
            t.add_row({dg, long(spec.n_photons), long(j), est.probability[j], est.sigma[j], est.counts[j]});
    }
}

pnr::trajectory::ResponseCurve curve_at(const ExperimentConfig& c, double dg, std::uint64_t seed) {
    pnr::trajectory::ResponseOptions opts;
    opts.threads = c.threads;
    opts.max_dt = c.max_dt;
    return pnr::trajectory::response_curve(c.n_emitters, dg, c.n_photons, c.ensemble_size(), seed, opts);
}

void run_response(const ExperimentConfig& c, ResultTable& t) {
    std::uint64_t seed = *c.seed;
    const auto block = static_cast<std::uint64_t>(c.ensemble_size()) * c.n_photons.size();
    for (double dg : c.delta_gamma) {
        const auto curve = curve_at(c, dg, seed);
        seed += block;
        for (const auto& p : curve.points)
            t.add_row({dg, long(p.n_photons), p.mean_clicks, p.stderr_clicks, p.mean_abs_error, p.stderr_abs_error});
    }
}

void run_compare(const ExperimentConfig& c, ResultTable& t) {
    namespace cv = pnr::conventional;
    std::uint64_t seed = *c.seed;
    const auto block = static_cast<std::uint64_t>(c.ensemble_size()) * c.n_photons.size();
    const auto tree = cv::routing_probs(cv::balanced_tree(c.n_emitters));
    for (double dg : c.delta_gamma) {
        const auto curve = curve_at(c, dg, seed);
        seed += block;
        for (const auto& p : curve.points)
            t.add_row({dg, long(p.n_photons), std::string("cascade"), p.mean_clicks, p.stderr_clicks, p.mean_abs_error});
        for (int n : c.n_photons) {
            const double clicks = cv::avg_clicks(tree, n);
            t.add_row({dg, long(n), std::string("balanced_tree"), clicks, 0.0, n - clicks});
        }
        for (int n : c.n_photons) {
            const auto best = cv::optimize_equal_reflectivity(c.n_emitters, n);
            t.add_row({dg, long(n), std::string("equal_reflectivity"), best.clicks, 0.0, n - best.clicks});
        }
    }
}

} // namespace

void ResultTable::add_row(std::vector<Cell> row) {
    if (row.size() != columns.size()) throw pnr::DimensionError("ResultTable: row width differs from header");
    rows.push_back(std::move(row));
}

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    return h;
}

std::vector<std::string> columns_of(Experiment e) {
    switch (e) {
    case Experiment::linear: return {"delta_gamma", "N", "avg_error"};
    case Experiment::outcomes: return {"delta_gamma", "N", "j", "probability"};
    case Experiment::correlate: return {"delta_gamma", "N", "j", "t1", "t2", "G2"};
    case Experiment::trajectory: return {"delta_gamma", "N", "j", "probability", "stderr", "count"};
    case Experiment::response:
        return {"delta_gamma", "N", "mean_clicks", "stderr", "mean_abs_error", "stderr_abs_error"};
    case Experiment::compare: return {"delta_gamma", "N", "scheme", "mean_clicks", "stderr", "mean_abs_error"};
    }
    return {};
}

ResultTable run(const ExperimentConfig& cfg) {
    ResultTable t;
    t.columns = columns_of(cfg.experiment);
    const auto echo = cfg.echo();
    std::string canon;
    for (const auto& l : echo) canon += l + "\n";
    char hash[17];
    std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(fnv1a(canon)));
    t.metadata.push_back(std::string("pnrsim ") + kVersion + " (libpnr " + kVersion + ")");
    t.metadata.push_back("config_hash fnv1a64 " + std::string(hash));
    t.metadata.push_back("seed " + (cfg.seed ? std::to_string(*cfg.seed) : std::string("none")));
    for (const auto& l : echo) t.metadata.push_back("config " + l);

    switch (cfg.experiment) {
    case Experiment::linear: run_linear(cfg, t); break;
    case Experiment::outcomes: run_outcomes(cfg, t); break;
    case Experiment::correlate: run_correlate(cfg, t); break;
    case Experiment::trajectory: run_trajectory(cfg, t); break;
    case Experiment::response: run_response(cfg, t); break;
    case Experiment::compare: run_compare(cfg, t); break;
    }
    return t;
}

std::string format_cell(const Cell& c) {
    if (const auto* s = std::get_if<std::string>(&c)) return *s;
    char buf[64];
    std::to_chars_result r;
    if (const auto* l = std::get_if<long>(&c))
        r = std::to_chars(buf, buf + sizeof buf, *l);
    else
        r = std::to_chars(buf, buf + sizeof buf, std::get<double>(c));
    return std::string(buf, r.ptr);
}

void write_csv(std::ostream& out, const ResultTable& table) {
    for (const auto& m : table.metadata) out << "# " << m << '\n';
    for (std::size_t i = 0; i < table.columns.size(); ++i) out << (i ? "," : "") << table.columns[i];
    out << '\n';
    for (const auto& row : table.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << format_cell(row[i]);
        out << '\n';
    }
}

} // namespace pnrsim
