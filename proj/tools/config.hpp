#pragma once

// Experiment configuration: a flat `key = value` text format.
//
//   # comment
//   experiment = outcomes
//   pulse.family = GaussianFock
//   sweep.delta_gamma = 0.3, 1, 3
//
// Keys are dotted, values are scalars or comma-separated lists. Blank lines
// and everything after '#' are ignored. Each key may appear once.

#include <pnr/pulses.hpp>

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace pnrsim {

enum class Experiment { linear, outcomes, correlate, trajectory, response, compare };

std::string to_string(Experiment e);
std::optional<Experiment> parse_experiment(const std::string& s);
bool runs_trajectories(Experiment e);

struct Diagnostic {
    int line = 0; // 0 when not tied to a line
    std::string field;
    std::string message;
    std::string str() const;
};

struct ExperimentConfig {
    Experiment experiment = Experiment::linear;
    pnr::pulses::PulseSpec pulse;        // delta is replaced by each sweep point
    double separation_over_delta = 0.0; // SeparatedGaussians spacing in units of delta
    int n_emitters = 1;
    std::vector<double> delta_gamma;
    std::vector<int> n_photons;  // linear, response, compare
    std::vector<int> outcomes;   // outcomes, correlate; empty means all
    std::optional<int> trajectories; // default 2000 for trajectory, 5000 otherwise
    std::optional<std::uint64_t> seed;
    std::string output;
    double max_dt = 0.0;      // 0 keeps the default spacing
    int correlate_points = 41;
    double correlate_half_width = 3.0; // units of delta around the pulse centre
    int threads = 0; // not part of the echo: results do not depend on it

    int ensemble_size() const;
    /// Canonical `key = value` lines, enough to rebuild the config.
    std::vector<std::string> echo() const;
};

struct ParseResult {
    ExperimentConfig config;
    std::vector<Diagnostic> diagnostics;
    std::map<std::string, int> seen; // key -> line
};

ParseResult parse_config(const std::string& text);
ParseResult load_config(const std::string& path);

/// Problems that would make run() fail on configuration grounds.
std::vector<Diagnostic> validate(const ExperimentConfig& cfg);

} // namespace pnrsim
