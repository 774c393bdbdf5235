#pragma once

// Beamsplitter-cascade PNR baseline: routing probabilities and click
// statistics of N photons spread over n+1 click detectors.

#include <pnr/errors.hpp>

#include <utility>
#include <vector>

namespace pnr::conventional {

/// Splitter i reflects into detector i with probability R_i; what is
/// transmitted through the last splitter lands on detector n+1.
struct SplitterConfig {
    std::vector<double> reflectivities;
    void validate() const;
};

std::vector<double> routing_probs(const SplitterConfig& cfg);

/// Largest photon count avg_clicks enumerates.
inline constexpr int kMaxCompositionPhotons = 12;

/// Mean number of clicking detectors, summed over weak compositions of N
/// into len(P) parts grouped by the number k of occupied detectors.
double avg_clicks(const std::vector<double>& probs, int n_photons);

/// sum_i 1 - (1 - P_i)^N
double avg_clicks_occupancy(const std::vector<double>& probs, int n_photons);

/// Enumerates every assignment of N distinguishable photons; (n+1)^N <= 1e7.
double avg_clicks_bruteforce(const std::vector<double>& probs, int n_photons);

/// R_i = 1/(n + 2 - i): every detector receives 1/(n+1).
SplitterConfig balanced_tree(int n_splitters);

struct EqualReflectivity {
    double reflectivity;
    double clicks;
};

/// Golden-section maximisation of avg_clicks over a common R in (0, 1).
/// The objective is first sampled on 200 points; the search brackets the
/// best sample, so a multimodal objective still returns the global grid
/// maximum refined locally.
EqualReflectivity optimize_equal_reflectivity(int n_splitters, int n_photons);

} // namespace pnr::conventional
