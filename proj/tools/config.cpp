#include "config.hpp"

#include <pnr/errors.hpp>
#include <pnr/slh.hpp>

#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

namespace pnrsim {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& v) {
    std::vector<std::string> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(trim(item));
    return out;
}

template <class T>
bool parse_number(const std::string& s, T& out) {
    if (s.empty()) return false;
    const char* end = s.data() + s.size();
    auto [p, ec] = std::from_chars(s.data(), end, out);
    return ec == std::errc() && p == end;
}

std::string fmt(double x) {
    char buf[64];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, p);
}

template <class T>
std::string join(const std::vector<T>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) s += ", ";
        if constexpr (std::is_floating_point_v<T>)
            s += fmt(v[i]);
        else
            s += std::to_string(v[i]);
    }
    return s;
}

const std::set<std::string> kKeys = {
    "experiment",        "pulse.family",      "pulse.n_photons",    "pulse.detuning",
    "pulse.separation",  "pulse.sign",        "detector.n_emitters", "sweep.delta_gamma",
    "sweep.n_photons",   "sweep.outcomes",    "ensemble.trajectories", "ensemble.seed",
    "output.path",       "grid.max_dt",       "correlate.points",   "correlate.half_width",
};

} // namespace

std::string to_string(Experiment e) {
    switch (e) {
    case Experiment::linear: return "linear";
    case Experiment::outcomes: return "outcomes";
    case Experiment::correlate: return "correlate";
    case Experiment::trajectory: return "trajectory";
    case Experiment::response: return "response";
    case Experiment::compare: return "compare";
    }
    return "?";
}

std::optional<Experiment> parse_experiment(const std::string& s) {
    for (auto e : {Experiment::linear, Experiment::outcomes, Experiment::correlate, Experiment::trajectory,
                   Experiment::response, Experiment::compare})
        if (to_string(e) == s) return e;
    return std::nullopt;
}

bool runs_trajectories(Experiment e) {
    return e == Experiment::trajectory || e == Experiment::response || e == Experiment::compare;
}

std::string Diagnostic::str() const {
    std::string s;
    if (line > 0) s += "line " + std::to_string(line) + ": ";
    if (!field.empty()) s += field + ": ";
    return s + message;
}

int ExperimentConfig::ensemble_size() const {
    if (trajectories) return *trajectories;
    return experiment == Experiment::trajectory ? 2000 : 5000;
}

std::vector<std::string> ExperimentConfig::echo() const {
    std::vector<std::string> lines;
    auto add = [&](const std::string& k, const std::string& v) { lines.push_back(k + " = " + v); };
    add("experiment", to_string(experiment));
    add("pulse.family", pnr::pulses::to_string(pulse.family));
    add("pulse.n_photons", std::to_string(pulse.n_photons));
    add("pulse.detuning", fmt(pulse.detuning));
    if (pulse.family == pnr::pulses::PulseFamily::SeparatedGaussians) add("pulse.separation", fmt(separation_over_delta));
    if (pulse.family == pnr::pulses::PulseFamily::HermiteGaussPair) add("pulse.sign", std::to_string(pulse.sign));
    add("detector.n_emitters", std::to_string(n_emitters));
    add("sweep.delta_gamma", join(delta_gamma));
    if (!n_photons.empty()) add("sweep.n_photons", join(n_photons));
    if (!outcomes.empty()) add("sweep.outcomes", join(outcomes));
    if (runs_trajectories(experiment)) {
        add("ensemble.trajectories", std::to_string(ensemble_size()));
        add("ensemble.seed", seed ? std::to_string(*seed) : "none");
        if (max_dt > 0.0) add("grid.max_dt", fmt(max_dt));
    }
    if (experiment == Experiment::correlate) {
        add("correlate.points", std::to_string(correlate_points));
        add("correlate.half_width", fmt(correlate_half_width));
    }
    return lines;
}

ParseResult parse_config(const std::string& text) {
    ParseResult r;
    auto& c = r.config;
    std::stringstream in(text);
    std::string raw;
    int lineno = 0;
    auto bad = [&](const std::string& key, const std::string& msg) { r.diagnostics.push_back({lineno, key, msg}); };
    while (std::getline(in, raw)) {
        ++lineno;
        const auto hash = raw.find('#');
        const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            bad("", "expected `key = value`");
            continue;
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        if (!kKeys.count(key)) {
            bad(key, "unknown key");
            continue;
        }
        if (r.seen.count(key)) {
            bad(key, "duplicate key (first on line " + std::to_string(r.seen[key]) + ")");
            continue;
        }
        r.seen[key] = lineno;
        auto real = [&](double& out) {
            if (!parse_number(val, out)) bad(key, "expected a number, got `" + val + "`");
        };
        auto integer = [&](int& out) {
            if (!parse_number(val, out)) bad(key, "expected an integer, got `" + val + "`");
        };
        auto int_list = [&](std::vector<int>& out) {
            for (const auto& item : split_list(val)) {
                int v;
                if (!parse_number(item, v)) {
                    bad(key, "expected integers, got `" + item + "`");
                    return;
                }
                out.push_back(v);
            }
        };
        if (key == "experiment") {
            if (auto e = parse_experiment(val))
                c.experiment = *e;
            else
                bad(key, "unknown experiment `" + val + "`");
        } else if (key == "pulse.family") {
            try {
                c.pulse.family = pnr::pulses::parse_family(val);
            } catch (const pnr::Error&) {
                bad(key, "unknown pulse family `" + val + "`");
            }
        } else if (key == "pulse.n_photons") {
            integer(c.pulse.n_photons);
        } else if (key == "pulse.detuning") {
            real(c.pulse.detuning);
        } else if (key == "pulse.separation") {
            real(c.separation_over_delta);
        } else if (key == "pulse.sign") {
            integer(c.pulse.sign);
        } else if (key == "detector.n_emitters") {
            integer(c.n_emitters);
        } else if (key == "sweep.delta_gamma") {
            for (const auto& item : split_list(val)) {
                double v;
                if (!parse_number(item, v)) {
                    bad(key, "expected numbers, got `" + item + "`");
                    break;
                }
                c.delta_gamma.push_back(v);
            }
        } else if (key == "sweep.n_photons") {
            int_list(c.n_photons);
        } else if (key == "sweep.outcomes") {
            int_list(c.outcomes);
        } else if (key == "ensemble.trajectories") {
            int m;
            integer(m);
            c.trajectories = m;
        } else if (key == "ensemble.seed") {
            std::uint64_t s;
            if (parse_number(val, s))
                c.seed = s;
            else
                bad(key, "expected an unsigned 64-bit integer, got `" + val + "`");
        } else if (key == "output.path") {
            c.output = val;
        } else if (key == "grid.max_dt") {
            real(c.max_dt);
        } else if (key == "correlate.points") {
            integer(c.correlate_points);
        } else if (key == "correlate.half_width") {
            real(c.correlate_half_width);
        }
    }
    return r;
}

ParseResult load_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) {
        ParseResult r;
        r.diagnostics.push_back({0, "", "cannot read config file `" + path + "`"});
        return r;
    }
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_config(ss.str());
}

std::vector<Diagnostic> validate(const ExperimentConfig& c) {
    using pnr::pulses::PulseFamily;
    std::vector<Diagnostic> d;
    auto bad = [&](const std::string& field, const std::string& msg) { d.push_back({0, field, msg}); };
    const Experiment e = c.experiment;

    if (c.delta_gamma.empty()) bad("sweep.delta_gamma", "sweep list is empty");
    for (double x : c.delta_gamma)
        if (!(x > 0.0)) bad("sweep.delta_gamma", "values must be positive");
    if (c.n_emitters < 1) bad("detector.n_emitters", "need at least one emitter");
    if (c.pulse.n_photons < 1) bad("pulse.n_photons", "need at least one photon");
    if (c.pulse.family == PulseFamily::HermiteGaussPair && c.pulse.n_photons != 2)
        bad("pulse.n_photons", "HermiteGaussPair carries exactly two photons");
    if (c.pulse.family == PulseFamily::HermiteGaussPair && c.pulse.sign != 1 && c.pulse.sign != -1)
        bad("pulse.sign", "must be +1 or -1");
    if (c.pulse.family == PulseFamily::SeparatedGaussians && c.separation_over_delta < 0.0)
        bad("pulse.separation", "must be non-negative");

    const bool sweeps_n = e == Experiment::linear || e == Experiment::response || e == Experiment::compare;
    if (sweeps_n && c.n_photons.empty()) bad("sweep.n_photons", "sweep list is empty");
    if (!sweeps_n && !c.n_photons.empty()) bad("sweep.n_photons", "not used by experiment " + to_string(e));
    for (int n : c.n_photons)
        if (n < 1) bad("sweep.n_photons", "values must be at least 1");

    if (e == Experiment::outcomes || e == Experiment::correlate) {
        if (c.pulse.n_photons > 3) bad("pulse.n_photons", "analytic outcomes cover N <= 3");
        if (c.n_emitters != 1) bad("detector.n_emitters", "analytic outcomes model a single emitter");
        for (int j : c.outcomes)
            if (j < 0 || j > c.pulse.n_photons) bad("sweep.outcomes", "outcome outside 0..N");
    } else if (e != Experiment::trajectory && !c.outcomes.empty()) {
        bad("sweep.outcomes", "not used by experiment " + to_string(e));
    }
    if (e == Experiment::correlate) {
        const int n = c.pulse.n_photons;
        if (n < 2) bad("pulse.n_photons", "correlate needs N >= 2");
        std::vector<int> js = c.outcomes.empty() ? std::vector<int>{0} : c.outcomes;
        for (int j : js)
            if (!((n == 2 && j == 0) || (n == 3 && (j == 0 || j == 3))))
                bad("sweep.outcomes", "G2 is provided for (N, j) in {(2,0), (3,0), (3,3)}");
        if (c.correlate_points < 2) bad("correlate.points", "need at least 2 points");
        if (!(c.correlate_half_width > 0.0)) bad("correlate.half_width", "must be positive");
    }

    if (runs_trajectories(e)) {
        if (!c.seed) bad("ensemble.seed", "trajectory experiments need a seed (config or --seed)");
        if (c.ensemble_size() < 2) bad("ensemble.trajectories", "need at least 2 trajectories");
        if (c.max_dt < 0.0) bad("grid.max_dt", "must be positive");
        if (c.pulse.family == PulseFamily::HermiteGaussPair)
            bad("pulse.family", "HermiteGaussPair has no cavity source, so trajectories cannot run it");
    }
    if (e == Experiment::trajectory) {
        if (c.n_emitters != 1) bad("detector.n_emitters", "outcome classification needs a single emitter");
        for (int j : c.outcomes)
            if (j < 0 || j > c.pulse.n_photons) bad("sweep.outcomes", "outcome outside 0..N");
        if (c.pulse.family == PulseFamily::SeparatedGaussians) {
            if (c.pulse.n_photons > 4) bad("pulse.n_photons", "SeparatedGaussians covers N <= 4");
            if (c.separation_over_delta < 4.0)
                bad("pulse.separation", "the cavity source needs a separation of at least 4 delta");
        }
    }
    if (e == Experiment::response || e == Experiment::compare) {
        if (c.n_emitters > 5) bad("detector.n_emitters", "response curves cover n <= 5");
        for (int n : c.n_photons)
            if (n > 7) bad("sweep.n_photons", "response curves cover N <= 7");
        if (c.pulse.family != PulseFamily::GaussianFock)
            bad("pulse.family", "response curves use GaussianFock pulses");
    }
    if (e == Experiment::trajectory) {
        auto spec = c.pulse;
        spec.delta = c.delta_gamma.empty() ? 1.0 : c.delta_gamma.front();
        spec.separation = c.separation_over_delta * spec.delta;
        try {
            const auto dims = pnr::slh::source_cavity_dims(spec);
            long dim = 1;
            for (int k = 0; k < c.n_emitters; ++k) dim *= 3;
            for (int x : dims) dim *= x;
            if (dim > pnr::slh::kMaxDimension) bad("pulse.n_photons", "network dimension above the cap");
        } catch (const pnr::Error&) {
        }
    }
    return d;
}

} // namespace pnrsim
